#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fedhin/graph.hpp"

namespace fedhin {

enum class PartitionStrategy { uniform, label_skewed };

std::string_view to_string(PartitionStrategy s);
PartitionStrategy parse_partition_strategy(std::string_view name);

/// Disjoint per-client subsets of the labeled target nodes (target-local
/// indices, ascending). The node vocabulary and structure stay shared; only
/// label ownership is split.
struct Partition {
  std::vector<std::vector<std::size_t>> client_nodes;

  std::size_t clients() const { return client_nodes.size(); }
  /// Owning client per target node, -1 when unowned.
  std::vector<int> owners(std::size_t target_count) const;
};

/// uniform: shuffled round-robin deal (sizes differ by at most one).
/// label_skewed: per class, Dirichlet(concentration) shares over clients.
/// Throws config error when C exceeds the labeled-node count.
Partition partition(std::span<const int> labels, std::size_t clients,
                    PartitionStrategy strategy, std::uint64_t seed,
                    double concentration = 0.5);

Partition partition(const HeterogeneousGraph& g, std::size_t clients,
                    PartitionStrategy strategy, std::uint64_t seed,
                    double concentration = 0.5);

/// `node_id,client` rows using global node ids.
void write_partition(std::ostream& out, const HeterogeneousGraph& g,
                     const Partition& p);

}  // namespace fedhin
