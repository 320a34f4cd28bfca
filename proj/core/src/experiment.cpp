#include "fedhin/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <thread>

#include "fedhin/error.hpp"
#include "fedhin/rng.hpp"
#include "fedhin/wire.hpp"

namespace fedhin {
namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw Error(ErrorKind::config, message);
}

std::vector<std::size_t> intersect(const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b) {
  std::vector<std::size_t> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

void write_diagnostic(const std::string& dir, const ModelParams& params,
                      const std::string& tag) {
  if (dir.empty()) return;
  std::filesystem::create_directories(dir);
  std::ofstream ck(std::filesystem::path(dir) / (tag + ".ckpt"),
                   std::ios::binary);
  save_checkpoint(ck, params);
  std::ofstream pf(std::filesystem::path(dir) / (tag + ".pref"),
                   std::ios::binary);
  save_preferences(pf, params);
}

// Scores a shared weight vector: loss over all training nodes (mean per node)
// and F1 on the test split. Each node uses its owner's preference vector.
class Evaluator {
 public:
  Evaluator(const TrainingData& data, const EvalSplit& split,
            std::vector<int> owners, ModelOptions options, ModelDims dims)
      : data_(data),
        split_(split),
        owners_(std::move(owners)),
        options_(options),
        dims_(dims) {
    options_.sample_size = 0;
  }

  ModelParams assemble(std::span<const double> shared,
                       const std::vector<const Matrix*>& preferences) const {
    ModelParams p = ModelParams::zeros(dims_, data_.metapath_names());
    p.set_shared_flat(shared);
    for (std::size_t i = 0; i < owners_.size(); ++i) {
      const auto owner = static_cast<std::size_t>(std::max(owners_[i], 0));
      p.preference.row(static_cast<Eigen::Index>(i)) =
          preferences[owner]->row(static_cast<Eigen::Index>(i));
    }
    return p;
  }

  RoundMetrics score(const ModelParams& model, std::size_t round,
                     std::string_view aggregator) const {
    RoundMetrics m;
    m.round = round;
    m.aggregator = std::string(aggregator);
    ForwardTrace trace = forward(model, data_, split_.train, options_, nullptr, true);
    m.loss = split_.train.empty()
                 ? 0.0
                 : trace.loss / static_cast<double>(split_.train.size());
    if (!split_.test.empty()) {
      auto e = evaluate(model, data_, split_.test, options_);
      m.micro_f1 = e.scores.micro;
      m.macro_f1 = e.scores.macro;
    }
    return m;
  }

 private:
  const TrainingData& data_;
  const EvalSplit& split_;
  std::vector<int> owners_;
  ModelOptions options_;
  ModelDims dims_;
};

struct Setup {
  PreparedData prepared;
  ModelParams initial;
  Partition partition;
  std::vector<Client> clients;
};

Setup build(const ExperimentConfig& config, const HeterogeneousGraph& graph) {
  Setup s;
  s.prepared = prepare_data(config, graph);
  const TrainingData& data = *s.prepared.data;
  Rng init_rng(derive_seed(config.seed, kInitStream));
  s.initial = ModelParams::initialize(model_dims(config, data),
                                      data.metapath_names(), init_rng);
  s.partition = partition(std::span<const int>(data.labels), config.clients,
                          config.partition,
                          derive_seed(config.seed, kPartitionStream),
                          config.dirichlet_concentration);
  ClientOptions opts;
  opts.local_epochs = config.local_epochs;
  opts.batch_size = config.batch_size;
  opts.adam.learning_rate = config.learning_rate;
  opts.model = model_options(config);
  s.clients.reserve(config.clients);
  for (std::size_t c = 0; c < config.clients; ++c) {
    auto train = intersect(s.partition.client_nodes[c], s.prepared.split.train);
    if (train.empty()) {
      throw Error(ErrorKind::empty, "client " + std::to_string(c) +
                                        " owns no training nodes");
    }
    s.clients.emplace_back(static_cast<ClientId>(c), s.prepared.data,
                           std::move(train), s.initial, opts,
                           derive_seed(config.seed, kClientStream + c));
  }
  return s;
}

std::vector<ClientId> client_ids(std::size_t n) {
  std::vector<ClientId> ids(n);
  for (std::size_t c = 0; c < n; ++c) ids[c] = static_cast<ClientId>(c);
  return ids;
}

ServerEvent make_event(const ServerState& server, std::size_t round,
                       const ClientUpdate& u, DispatchMode mode) {
  ServerEvent e;
  e.round = round;
  e.uploader = u.client_id;
  e.version = u.version;
  e.mode = mode;
  e.max_version_gap = server.max_version_gap();
  if (server.config().aggregator == AggregatorKind::feddwa) {
    e.coefficients = feddwa_coefficients(server, u.client_id);
  }
  return e;
}

ClientUpdate train_period(Client& client, Granularity g,
                          const std::string& diagnostic_dir) {
  try {
    return g == Granularity::per_round ? client.train_round()
                                       : client.train_batch();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::numeric) {
      write_diagnostic(diagnostic_dir, client.params(),
                       "client" + std::to_string(client.id()));
    }
    throw;
  }
}

void check_finite(const RoundMetrics& m, const ModelParams& model,
                  const std::string& diagnostic_dir) {
  if (!std::isfinite(m.loss)) {
    write_diagnostic(diagnostic_dir, model, "global");
    throw Error(ErrorKind::numeric,
                "non-finite loss at round " + std::to_string(m.round));
  }
}

ExperimentResult run_deterministic(const ExperimentConfig& config,
                                   Setup& s, const ExperimentHooks& hooks) {
  const TrainingData& data = *s.prepared.data;
  const std::size_t n = config.clients;
  const auto aggregator = to_string(config.server.aggregator);
  Evaluator evaluator(data, s.prepared.split, s.partition.owners(data.target_count()),
                      model_options(config), s.initial.dims());
  auto preferences = [&] {
    std::vector<const Matrix*> p;
    for (const auto& c : s.clients) p.push_back(&c.params().preference);
    return p;
  };

  ServerState server(client_ids(n), s.initial.shared_manifest(), config.server,
                     s.initial.shared_flat());
  FlatVector global = s.initial.shared_flat();
  std::vector<FlatVector> held(n, global);
  std::vector<std::optional<ClientUpdate>> pending(n);

  ExperimentResult result;
  auto emit = [&](RoundMetrics m, const ModelParams& model) {
    check_finite(m, model, hooks.diagnostic_dir);
    if (hooks.on_round) hooks.on_round(m);
    result.metrics.push_back(std::move(m));
  };
  {
    ModelParams model = evaluator.assemble(global, preferences());
    auto m = evaluator.score(model, 0, aggregator);
    emit(m, model);
  }

  for (std::size_t tick = 1; tick <= config.rounds; ++tick) {
    for (std::size_t c = 0; c < n; ++c) {
      if ((tick - 1) % config.speed(c) != 0) continue;
      s.clients[c].install(held[c]);
      pending[c] = train_period(s.clients[c], config.granularity,
                                hooks.diagnostic_dir);
    }
    std::vector<std::size_t> due;
    for (std::size_t c = 0; c < n; ++c) {
      if (tick % config.speed(c) == 0) due.push_back(c);
    }
    for (auto c : due) submit(server, *pending[c]);
    for (auto c : due) {
      FlatVector agg = aggregate(server, *pending[c]);
      DispatchDecision d = dispatch(server, std::move(agg), static_cast<ClientId>(c));
      if (hooks.on_server_event) {
        hooks.on_server_event(make_event(server, tick, *pending[c], d.mode));
      }
      if (d.mode == DispatchMode::broadcast) {
        for (auto& h : held) h = d.payload;
      } else {
        held[c] = d.payload;
      }
      global = std::move(d.payload);
      pending[c].reset();
    }
    ModelParams model = evaluator.assemble(global, preferences());
    RoundMetrics m = evaluator.score(model, tick, aggregator);
    m.max_version_gap = server.max_version_gap();
    m.elapsed = static_cast<double>(tick);
    emit(m, model);
  }

  result.model = evaluator.assemble(global, preferences());
  return result;
}

// Free-running workers. A speed-s client stretches each training period to s
// times its measured compute time. A round closes after every C submissions.
ExperimentResult run_concurrent(const ExperimentConfig& config, Setup& s,
                                const ExperimentHooks& hooks) {
  const TrainingData& data = *s.prepared.data;
  const std::size_t n = config.clients;
  const auto aggregator = to_string(config.server.aggregator);
  Evaluator evaluator(data, s.prepared.split, s.partition.owners(data.target_count()),
                      model_options(config), s.initial.dims());

  std::mutex mu;
  ServerState server(client_ids(n), s.initial.shared_manifest(), config.server,
                     s.initial.shared_flat());
  FlatVector global = s.initial.shared_flat();
  std::vector<FlatVector> held(n, global);
  std::vector<Matrix> published(n, s.initial.preference);
  std::size_t submissions = 0;
  const std::size_t budget = config.rounds * n;
  std::exception_ptr failure;
  ExperimentResult result;
  const auto start = std::chrono::steady_clock::now();

  auto snapshot = [&] {
    std::vector<const Matrix*> p;
    for (const auto& m : published) p.push_back(&m);
    return evaluator.assemble(global, p);
  };
  auto emit = [&](std::size_t round) {
    ModelParams model = snapshot();
    RoundMetrics m = evaluator.score(model, round, aggregator);
    m.max_version_gap = server.max_version_gap();
    m.elapsed = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - start)
                    .count();
    check_finite(m, model, hooks.diagnostic_dir);
    if (hooks.on_round) hooks.on_round(m);
    result.metrics.push_back(std::move(m));
  };
  emit(0);

  auto worker = [&](std::size_t c) {
    try {
      Client& client = s.clients[c];
      while (true) {
        {
          std::lock_guard lock(mu);
          if (submissions >= budget || failure) return;
          client.install(held[c]);
        }
        const auto t0 = std::chrono::steady_clock::now();
        ClientUpdate u = train_period(client, config.granularity,
                                      hooks.diagnostic_dir);
        const auto spent = std::chrono::steady_clock::now() - t0;
        if (config.speed(c) > 1) {
          std::this_thread::sleep_for(spent * (config.speed(c) - 1));
        }
        std::lock_guard lock(mu);
        if (submissions >= budget || failure) return;
        submit(server, u);
        published[c] = client.params().preference;
        FlatVector agg = aggregate(server, u);
        DispatchDecision d = dispatch(server, std::move(agg), u.client_id);
        ++submissions;
        const std::size_t round = (submissions + n - 1) / n;
        if (hooks.on_server_event) {
          hooks.on_server_event(make_event(server, round, u, d.mode));
        }
        if (d.mode == DispatchMode::broadcast) {
          for (auto& h : held) h = d.payload;
        } else {
          held[c] = d.payload;
        }
        global = std::move(d.payload);
        if (submissions % n == 0) emit(submissions / n);
      }
    } catch (...) {
      std::lock_guard lock(mu);
      if (!failure) failure = std::current_exception();
    }
  };

  std::vector<std::thread> threads;
  for (std::size_t c = 0; c < n; ++c) threads.emplace_back(worker, c);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);

  result.model = snapshot();
  return result;
}

}  // namespace

void ExperimentConfig::validate() const {
  require(clients >= 1, "clients must be >= 1, got " + std::to_string(clients));
  require(batch_size >= 1, "batch_size must be >= 1");
  require(embedding_dim >= 1, "embedding_dim must be >= 1");
  require(preference_dim >= 1, "preference_dim must be >= 1");
  require(learning_rate > 0 && std::isfinite(learning_rate),
          "learning_rate must be > 0, got " + std::to_string(learning_rate));
  require(!metapaths.empty(), "metapaths must name at least one meta path");
  require(speeds.empty() || speeds.size() == clients,
          "speeds must list one multiplier per client (" +
              std::to_string(clients) + ")");
  for (auto s : speeds) require(s >= 1, "speed multipliers must be >= 1");
  require(test_fraction >= 0.0 && test_fraction < 1.0,
          "test_fraction must lie in [0, 1)");
  require(dirichlet_concentration > 0.0, "dirichlet_concentration must be > 0");
  server.validate();
  for (const auto& name : metapaths) parse_metapath(name, alphabet);
}

ModelDims model_dims(const ExperimentConfig& config, const TrainingData& data) {
  ModelDims d;
  d.embedding = config.embedding_dim;
  d.preference = config.preference_dim;
  d.labels = data.label_count;
  d.targets = data.target_count();
  d.metapaths = data.metapath_count();
  return d;
}

ModelOptions model_options(const ExperimentConfig& config) {
  return {config.activation, config.sample_size};
}

PreparedData prepare_data(const ExperimentConfig& config,
                          const HeterogeneousGraph& graph) {
  config.validate();
  if (graph.target_type() != config.target_type) {
    throw Error(ErrorKind::config, "graph target type " + graph.target_type() +
                                       " differs from configured " +
                                       config.target_type);
  }
  std::vector<MetaPathSpec> specs;
  for (const auto& name : config.metapaths) {
    specs.push_back(parse_metapath(name, config.alphabet));
  }
  auto data = std::make_shared<TrainingData>(
      TrainingData::from_graph(graph, specs, config.adjacency_mode));
  if (data->label_count == 0) {
    throw Error(ErrorKind::config, "graph has no labeled target nodes");
  }
  PreparedData p;
  p.split = stratified_split(data->labels, config.test_fraction,
                             derive_seed(config.seed, kSplitStream));
  p.data = std::move(data);
  return p;
}

HeterogeneousGraph load_experiment_graph(const ExperimentConfig& config) {
  if (!config.data.from_files()) {
    SyntheticConfig sc = config.data.synthetic;
    sc.seed = config.seed;
    return synthetic_hin(sc);
  }
  auto open = [](const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open " + path);
    return in;
  };
  auto nodes = open(config.data.nodes_file);
  auto edges = open(config.data.edges_file);
  require(!config.data.schema_file.empty(),
          "schema_file is required when nodes_file is set");
  auto schema_in = open(config.data.schema_file);
  return load_graph(nodes, edges, load_schema(schema_in), config.target_type);
}

ExperimentResult run_experiment(const ExperimentConfig& config,
                                const HeterogeneousGraph& graph,
                                const ExperimentHooks& hooks) {
  Setup s = build(config, graph);
  ExperimentResult r = config.scheduling == Scheduling::deterministic
                           ? run_deterministic(config, s, hooks)
                           : run_concurrent(config, s, hooks);
  r.split = s.prepared.split;
  r.partition = s.partition;
  return r;
}

}  // namespace fedhin
