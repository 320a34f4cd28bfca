#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fedhin/graph.hpp"

namespace fedhin {

/// Maps single-character type initials ('A') to node type names ("Author").
using TypeAlphabet = std::map<char, std::string>;

TypeAlphabet default_alphabet();

struct MetaPathSpec {
  std::string name;
  std::vector<std::string> type_sequence;
};

/// Resolves "APVPA" against the alphabet. Throws config error on an unknown
/// initial or a name shorter than two types.
MetaPathSpec parse_metapath(std::string_view name,
                            const TypeAlphabet& alphabet = default_alphabet());

enum class AdjacencyMode { counts, binary };

/// Path-instance matrix of a meta path: rows index the first type, columns
/// the last type (both in type-local order). When first and last type agree
/// the diagonal is zero.
struct MetaPathAdjacency {
  MetaPathSpec metapath;
  SparseCounts matrix;
  AdjacencyMode mode = AdjacencyMode::counts;

  std::size_t rows() const { return static_cast<std::size_t>(matrix.rows()); }
};

MetaPathAdjacency metapath_adjacency(const HeterogeneousGraph& g,
                                     const MetaPathSpec& spec,
                                     AdjacencyMode mode = AdjacencyMode::counts);

/// Support of row i, ascending.
std::vector<std::size_t> neighbors_along(const MetaPathAdjacency& adj,
                                         std::size_t i);

}  // namespace fedhin
