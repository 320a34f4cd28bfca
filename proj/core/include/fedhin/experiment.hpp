#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fedhin/client.hpp"
#include "fedhin/federation.hpp"
#include "fedhin/metrics.hpp"
#include "fedhin/partition.hpp"
#include "fedhin/synthetic.hpp"

namespace fedhin {

enum class Granularity { per_round, per_batch };
enum class Scheduling { deterministic, concurrent };

/// Where the graph comes from: node/edge/schema files when nodes_file is set,
/// otherwise the synthetic generator (seeded with the experiment seed).
struct DataSource {
  std::string nodes_file;
  std::string edges_file;
  std::string schema_file;
  SyntheticConfig synthetic;

  bool from_files() const { return !nodes_file.empty(); }
};

struct ExperimentConfig {
  std::size_t clients = 3;
  std::size_t local_epochs = 1;
  std::size_t batch_size = 256;
  std::size_t embedding_dim = 128;
  std::size_t preference_dim = 16;
  double learning_rate = 0.001;
  std::vector<std::string> metapaths{"APA", "APPA"};
  std::string target_type = "Author";
  TypeAlphabet alphabet = default_alphabet();
  ServerConfig server;
  /// Integer slowdown per client; a speed-s client submits every s ticks.
  /// Empty means all 1.
  std::vector<std::size_t> speeds;
  std::uint64_t seed = 1;
  std::size_t rounds = 100;
  Granularity granularity = Granularity::per_round;
  Scheduling scheduling = Scheduling::deterministic;
  AdjacencyMode adjacency_mode = AdjacencyMode::counts;
  Activation activation = Activation::elu;
  std::size_t sample_size = 16;
  PartitionStrategy partition = PartitionStrategy::uniform;
  double dirichlet_concentration = 0.5;
  double test_fraction = 0.2;
  DataSource data;

  /// Throws config error naming the offending field and its bounds.
  void validate() const;
  std::size_t speed(std::size_t client) const {
    return speeds.empty() ? 1 : speeds[client];
  }
};

/// One server-side aggregation, for the JSON-lines decision log.
struct ServerEvent {
  std::size_t round = 0;
  ClientId uploader = 0;
  std::uint64_t version = 0;
  DispatchMode mode = DispatchMode::targeted;
  std::uint64_t max_version_gap = 0;
  std::vector<double> coefficients;  // FedDWA weights, record-key order
};

struct ExperimentHooks {
  std::function<void(const RoundMetrics&)> on_round;
  std::function<void(const ServerEvent&)> on_server_event;
  /// When set, a non-finite loss writes checkpoint files here before the
  /// numeric error propagates.
  std::string diagnostic_dir;
};

struct ExperimentResult {
  std::vector<RoundMetrics> metrics;
  /// Final server weights with each node's preference vector taken from its
  /// owning client.
  ModelParams model;
  EvalSplit split;
  Partition partition;
};

/// The graph view and split an experiment trains on; rebuilt identically by
/// `eval` and `export-embeddings` from the same config.
struct PreparedData {
  std::shared_ptr<const TrainingData> data;
  EvalSplit split;
};

PreparedData prepare_data(const ExperimentConfig& config,
                          const HeterogeneousGraph& graph);

ModelDims model_dims(const ExperimentConfig& config, const TrainingData& data);
ModelOptions model_options(const ExperimentConfig& config);

/// Loads files or generates the synthetic graph named by config.data.
HeterogeneousGraph load_experiment_graph(const ExperimentConfig& config);

/// Runs `config.rounds` scheduler rounds. Round 0 is the untrained
/// evaluation. In deterministic mode each round is one virtual tick: clients
/// whose period ends submit (in id order), the server records every
/// submission of the tick and then aggregates and dispatches once per
/// uploader. `elapsed` is virtual time (ticks) in deterministic mode and
/// wall-clock seconds in concurrent mode.
ExperimentResult run_experiment(const ExperimentConfig& config,
                                const HeterogeneousGraph& graph,
                                const ExperimentHooks& hooks = {});

}  // namespace fedhin
