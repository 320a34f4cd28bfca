#include "fedhin/partition.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "fedhin/error.hpp"

namespace fedhin {

std::string_view to_string(PartitionStrategy s) {
  return s == PartitionStrategy::uniform ? "uniform" : "label_skewed";
}

PartitionStrategy parse_partition_strategy(std::string_view name) {
  if (name == "uniform") return PartitionStrategy::uniform;
  if (name == "label_skewed") return PartitionStrategy::label_skewed;
  throw Error(ErrorKind::config, "unknown partition strategy '" +
                                     std::string(name) +
                                     "' (expected uniform or label_skewed)");
}

std::vector<int> Partition::owners(std::size_t target_count) const {
  std::vector<int> out(target_count, -1);
  for (std::size_t c = 0; c < client_nodes.size(); ++c) {
    for (auto i : client_nodes[c]) out[i] = static_cast<int>(c);
  }
  return out;
}

Partition partition(std::span<const int> labels, std::size_t clients,
                    PartitionStrategy strategy, std::uint64_t seed,
                    double concentration) {
  std::vector<std::size_t> labeled;
  int max_label = -1;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) {
      labeled.push_back(i);
      max_label = std::max(max_label, labels[i]);
    }
  }
  if (clients == 0) throw Error(ErrorKind::config, "client count must be >= 1");
  if (clients > labeled.size()) {
    throw Error(ErrorKind::config,
                "cannot split " + std::to_string(labeled.size()) +
                    " labeled nodes across " + std::to_string(clients) +
                    " clients");
  }
  std::mt19937_64 rng(seed);
  Partition p;
  p.client_nodes.resize(clients);

  if (strategy == PartitionStrategy::uniform) {
    std::shuffle(labeled.begin(), labeled.end(), rng);
    for (std::size_t k = 0; k < labeled.size(); ++k) {
      p.client_nodes[k % clients].push_back(labeled[k]);
    }
  } else {
    if (!(concentration > 0.0)) {
      throw Error(ErrorKind::config, "dirichlet_concentration must be > 0");
    }
    std::gamma_distribution<double> gamma(concentration, 1.0);
    for (int cls = 0; cls <= max_label; ++cls) {
      std::vector<std::size_t> members;
      for (auto i : labeled) {
        if (labels[i] == cls) members.push_back(i);
      }
      std::shuffle(members.begin(), members.end(), rng);
      std::vector<double> share(clients);
      for (auto& s : share) s = gamma(rng);
      const double total = std::accumulate(share.begin(), share.end(), 0.0);
      double cumulative = 0.0;
      std::size_t start = 0;
      for (std::size_t c = 0; c < clients; ++c) {
        cumulative += total > 0 ? share[c] / total : 1.0 / clients;
        std::size_t end = c + 1 == clients
                              ? members.size()
                              : static_cast<std::size_t>(
                                    cumulative * members.size() + 0.5);
        end = std::clamp(end, start, members.size());
        for (std::size_t k = start; k < end; ++k) {
          p.client_nodes[c].push_back(members[k]);
        }
        start = end;
      }
    }
    // Every client needs at least one node: take from the largest.
    for (auto& nodes : p.client_nodes) {
      if (!nodes.empty()) continue;
      auto largest = std::max_element(
          p.client_nodes.begin(), p.client_nodes.end(),
          [](const auto& a, const auto& b) { return a.size() < b.size(); });
      nodes.push_back(largest->back());
      largest->pop_back();
    }
  }
  for (auto& nodes : p.client_nodes) std::sort(nodes.begin(), nodes.end());
  return p;
}

Partition partition(const HeterogeneousGraph& g, std::size_t clients,
                    PartitionStrategy strategy, std::uint64_t seed,
                    double concentration) {
  const auto labels = g.target_labels();
  return partition(std::span<const int>(labels), clients, strategy, seed,
                   concentration);
}

void write_partition(std::ostream& out, const HeterogeneousGraph& g,
                     const Partition& p) {
  const auto& targets = g.target_nodes();
  out << "node_id,client\n";
  for (std::size_t c = 0; c < p.client_nodes.size(); ++c) {
    for (auto i : p.client_nodes[c]) out << targets[i] << ',' << c << '\n';
  }
}

}  // namespace fedhin
