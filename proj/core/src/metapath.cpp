#include "fedhin/metapath.hpp"

#include "fedhin/error.hpp"

namespace fedhin {

TypeAlphabet default_alphabet() {
  return {{'A', "Author"}, {'P', "Paper"}, {'V', "Venue"}, {'T', "Term"}};
}

MetaPathSpec parse_metapath(std::string_view name,
                            const TypeAlphabet& alphabet) {
  if (name.size() < 2) {
    throw Error(ErrorKind::config,
                "meta path '" + std::string(name) + "' needs at least two types");
  }
  MetaPathSpec spec{std::string(name), {}};
  for (char c : name) {
    auto it = alphabet.find(c);
    if (it == alphabet.end()) {
      throw Error(ErrorKind::config, "meta path '" + std::string(name) +
                                         "' uses undeclared type initial '" +
                                         std::string(1, c) + "'");
    }
    spec.type_sequence.push_back(it->second);
  }
  return spec;
}

MetaPathAdjacency metapath_adjacency(const HeterogeneousGraph& g,
                                     const MetaPathSpec& spec,
                                     AdjacencyMode mode) {
  const auto& types = spec.type_sequence;
  if (types.size() < 2) {
    throw Error(ErrorKind::validation,
                "meta path '" + spec.name + "' needs at least two types");
  }
  auto declared = g.schema_types();
  for (const auto& t : types) {
    if (!declared.contains(t)) {
      throw Error(ErrorKind::empty_type, "meta path '" + spec.name +
                                             "' uses type " + t +
                                             " absent from the graph schema");
    }
  }
  for (const auto& t : {types.front(), types.back()}) {
    if (g.nodes_of_type(t).empty()) {
      throw Error(ErrorKind::empty_type, "meta path '" + spec.name +
                                             "' endpoint type " + t +
                                             " has no nodes");
    }
  }
  for (std::size_t k = 0; k + 1 < types.size(); ++k) {
    if (!g.has_relation(types[k], types[k + 1])) {
      throw Error(ErrorKind::validation,
                  "meta path '" + spec.name + "': no schema relation " +
                      types[k] + " -> " + types[k + 1]);
    }
  }

  SparseCounts product = g.typed_biadjacency(types[0], types[1]);
  for (std::size_t k = 1; k + 1 < types.size(); ++k) {
    SparseCounts next = product * g.typed_biadjacency(types[k], types[k + 1]);
    product = std::move(next);
  }
  if (types.front() == types.back()) {
    product.prune([](Eigen::Index r, Eigen::Index c, double) { return r != c; });
  }
  product.prune(0.0);
  if (mode == AdjacencyMode::binary) {
    for (Eigen::Index r = 0; r < product.outerSize(); ++r) {
      for (SparseCounts::InnerIterator it(product, r); it; ++it) {
        it.valueRef() = 1.0;
      }
    }
  }
  product.makeCompressed();
  return {spec, std::move(product), mode};
}

std::vector<std::size_t> neighbors_along(const MetaPathAdjacency& adj,
                                         std::size_t i) {
  if (i >= adj.rows()) {
    throw Error(ErrorKind::index, "row " + std::to_string(i) +
                                      " out of range for meta path '" +
                                      adj.metapath.name + "' (" +
                                      std::to_string(adj.rows()) + " rows)");
  }
  std::vector<std::size_t> out;
  for (SparseCounts::InnerIterator it(adj.matrix, static_cast<Eigen::Index>(i));
       it; ++it) {
    if (it.value() > 0) out.push_back(static_cast<std::size_t>(it.col()));
  }
  return out;
}

}  // namespace fedhin
