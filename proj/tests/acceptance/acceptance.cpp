// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Tolerances are fixed here, not taken from the command line.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fedhin/experiment.hpp"
#include "fedhin/federation.hpp"
#include "fedhin/metapath.hpp"
#include "fedhin/model.hpp"
#include "fedhin/run_io.hpp"
#include "test_support.hpp"

using namespace fedhin;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr std::size_t kGradCoords = 20;
constexpr double kGradSeconds = 60.0;
constexpr double kSimplexTolerance = 1e-12;
constexpr int kSimplexDraws = 1000;
constexpr int kOracleGraphs = 50;
constexpr std::size_t kOracleMaxNodes = 40;
constexpr double kDegeneracyTolerance = 1e-12;
constexpr double kCentralizedTarget = 0.85;
constexpr std::size_t kCentralizedRounds = 200;
constexpr double kCentralizedSeconds = 300.0;
constexpr double kChance = 0.25;
constexpr double kChanceTolerance = 0.15;
constexpr int kChanceSeeds = 20;
constexpr double kParityGap = 0.05;
constexpr double kParitySeconds = 600.0;
constexpr std::size_t kTrendRounds = 200;
constexpr double kStalenessShare = 0.6;
constexpr std::size_t kStalenessFirst = 10, kStalenessLast = 50;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// The preset every experiment criterion runs on: default synthetic graph,
// APA/APPA, d = 32.
ExperimentConfig preset(std::uint64_t seed) {
  ExperimentConfig c;
  c.embedding_dim = 32;
  c.seed = seed;
  return c;
}

Outcome gradient_check() {
  const auto start = Clock::now();
  double worst = 0;
  std::size_t tensors = 0, short_tensors = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto g = oracle::small_hin(seed);
    auto data = TrainingData::from_graph(
        g, {parse_metapath("APA"), parse_metapath("APPA"), parse_metapath("APVPA")});
    Rng init(seed * 31 + 1);
    auto params = ModelParams::initialize({5, 3, data.label_count, data.target_count(), 3},
                                          data.metapath_names(), init);
    std::vector<std::size_t> batch;
    for (std::size_t i = 0; i < data.target_count(); ++i)
      if (data.labels[i] >= 0) batch.push_back(i);
    // Odd seeds use full neighborhoods, even seeds a fixed neighbor sample.
    const ModelOptions options{Activation::elu, seed % 2 ? 0u : 2u};
    auto objective = [&](const ModelParams& p) {
      Rng rng(seed);
      return loss(p, data, batch, options, &rng).loss;
    };
    Rng rng(seed);
    auto trace = loss(params, data, batch, options, &rng);
    auto grads = backward(params, data, trace, options);
    std::mt19937_64 pick(seed);
    for (const auto& r : oracle::finite_difference_check(params, grads, objective, pick, kGradCoords)) {
      ++tensors;
      if (r.checked < std::min(kGradCoords, r.size)) ++short_tensors;
      worst = std::max(worst, r.worst);
    }
  }
  const double elapsed = seconds_since(start);
  return {worst < kGradTolerance && short_tensors == 0 && elapsed < kGradSeconds,
          fmt("worst relative error %.3g over %zu tensors x 10 seeds (< %.0e), %.2f s (< %.0f s)",
              worst, tensors, kGradTolerance, elapsed, kGradSeconds)};
}

Outcome simplex_suite() {
  std::mt19937_64 draw(2024);
  double worst_sum = 0, worst_shift = 0;
  bool negative = false;
  int draws = 0;
  while (draws < kSimplexDraws) {
    auto g = oracle::small_hin(draw());
    auto data = TrainingData::from_graph(g, {parse_metapath("APA"), parse_metapath("APPA")});
    Rng rng(draw());
    auto params = ModelParams::initialize({4, 3, data.label_count, data.target_count(), 2},
                                          data.metapath_names(), rng);
    std::vector<std::size_t> nodes(data.target_count());
    for (std::size_t i = 0; i < nodes.size(); ++i) nodes[i] = i;
    auto trace = forward(params, data, nodes, {Activation::elu, 0}, nullptr, false);
    for (const auto& nt : trace.nodes) {
      worst_sum = std::max(worst_sum, std::abs(nt.metapath_weights.sum() - 1.0));
      negative |= nt.metapath_weights.minCoeff() < 0.0;
      for (const auto& pt : nt.paths) {
        if (pt.neighbors.empty()) continue;
        worst_sum = std::max(worst_sum, std::abs(pt.attention.sum() - 1.0));
        negative |= pt.attention.minCoeff() < 0.0;
      }
    }

    // Positive rescaling of the transformed features: W_t scaled for every
    // node, then one neighbor's adjacency row scaled on its own. Rescaling
    // p_i and W_p leaves the meta-path weights alone.
    const double factor = std::uniform_real_distribution<double>(0.1, 10.0)(draw);
    auto scaled = params;
    for (auto& wt : scaled.transform) wt *= factor;
    scaled.preference *= factor;
    scaled.projection *= factor;
    for (std::size_t i = 0; i < data.target_count(); ++i) {
      for (std::size_t p = 0; p < data.metapath_count(); ++p) {
        auto base = node_attention(params, data.adjacency[p], p, i);
        auto after = node_attention(scaled, data.adjacency[p], p, i);
        for (std::size_t k = 0; k < base.size(); ++k)
          worst_shift = std::max(worst_shift, std::abs(base[k].second - after[k].second));
        if (base.empty()) continue;
        MetaPathAdjacency row_scaled = data.adjacency[p];
        const auto j = static_cast<Eigen::Index>(base.front().first);
        for (SparseCounts::InnerIterator it(row_scaled.matrix, j); it; ++it) it.valueRef() *= factor;
        auto single = node_attention(params, row_scaled, p, i);
        for (std::size_t k = 0; k < base.size(); ++k)
          worst_shift = std::max(worst_shift, std::abs(base[k].second - single[k].second));
      }
    }
    for (std::size_t n = 0; n < trace.nodes.size(); ++n) {
      std::vector<Vector> embeddings;
      for (const auto& pt : trace.nodes[n].paths) embeddings.push_back(pt.embedding);
      auto a = metapath_attention(params, trace.nodes[n].node, embeddings);
      auto b = metapath_attention(scaled, trace.nodes[n].node, embeddings);
      worst_shift = std::max(worst_shift, (a - b).cwiseAbs().maxCoeff());
    }
    ++draws;
  }
  return {!negative && worst_sum <= kSimplexTolerance && worst_shift <= kSimplexTolerance,
          fmt("%d draws: max |sum-1| %.2g, negatives %s, max rescaling shift %.2g (<= %.0e)",
              draws, worst_sum, negative ? "yes" : "no", worst_shift, kSimplexTolerance)};
}

Outcome metapath_oracle() {
  std::mt19937_64 rng(50);
  std::size_t compared = 0, mismatched = 0;
  for (int k = 0; k < kOracleGraphs; ++k) {
    auto g = oracle::random_hin(rng, kOracleMaxNodes);
    for (const char* name : {"APA", "APPA", "APVPA", "PAP", "PVP", "APV"}) {
      auto adj = metapath_adjacency(g, parse_metapath(name));
      std::map<std::pair<std::size_t, std::size_t>, long> got;
      for (Eigen::Index r = 0; r < adj.matrix.outerSize(); ++r)
        for (SparseCounts::InnerIterator it(adj.matrix, r); it; ++it)
          if (it.value() != 0)
            got[{static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col())}] =
                static_cast<long>(it.value());
      mismatched += got != oracle::enumerate_walks(g, adj.metapath.type_sequence);
      ++compared;
    }
  }
  return {mismatched == 0,
          fmt("%zu adjacency matrices on %d graphs (<= %zu nodes), %zu mismatches", compared,
              kOracleGraphs, kOracleMaxNodes, mismatched)};
}

Outcome feddwa_degeneracy() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> value(-10, 10);
  double worst = 0;
  for (int trial = 0; trial < 200; ++trial) {
    ServerConfig cfg;
    cfg.staleness_exponent = trial % 2 ? 0.0 : 0.5;
    const std::size_t clients = 2 + trial % 6, width = 1 + trial % 9;
    std::vector<ClientId> ids;
    for (std::size_t c = 0; c < clients; ++c) ids.push_back(static_cast<ClientId>(c));
    ServerState s(ids, {{"w", width, 1}}, cfg);
    const std::uint64_t shared = 1 + trial % 7;
    for (ClientId c = 0; c < clients; ++c) {
      const std::uint64_t version =
          cfg.staleness_exponent == 0.0 ? std::uniform_int_distribution<std::uint64_t>(1, 12)(rng)
                                        : shared;
      FlatVector w(width);
      for (std::uint64_t v = 1; v <= version; ++v) {
        for (auto& x : w) x = value(rng);
        submit(s, {c, w, v});
      }
    }
    const auto dwa = aggregate_feddwa(s, 0);
    const auto avg = aggregate_fedavg(s);
    for (std::size_t k = 0; k < width; ++k) worst = std::max(worst, std::abs(dwa[k] - avg[k]));
  }

  ServerConfig cfg;
  cfg.staleness_exponent = 1.0;
  ServerState hand({0, 1}, {{"w", 1, 1}}, cfg);
  for (std::uint64_t v = 1; v <= 5; ++v) submit(hand, {0, {1.0}, v});
  for (std::uint64_t v = 1; v <= 3; ++v) submit(hand, {1, {5.0}, v});
  const auto coeffs = feddwa_coefficients(hand, 0);
  const bool exact = coeffs.size() == 2 && coeffs[0] == 0.75 && coeffs[1] == 0.25;
  return {worst <= kDegeneracyTolerance && exact,
          fmt("max |FedDWA - FedAvg| %.2g over 200 cases (<= %.0e); versions (5,3) alpha 1 -> "
              "(%.17g, %.17g)",
              worst, kDegeneracyTolerance, coeffs.empty() ? NAN : coeffs[0],
              coeffs.size() < 2 ? NAN : coeffs[1])};
}

struct Centralized {
  double final_micro = 0;
  std::size_t first_reach = 0;  // 0 when never reached
  double seconds = 0;
};

Centralized centralized_run(std::uint64_t seed) {
  auto c = preset(seed);
  c.clients = 1;
  c.rounds = kCentralizedRounds;
  const auto start = Clock::now();
  auto g = load_experiment_graph(c);
  auto r = run_experiment(c, g);
  Centralized out;
  out.seconds = seconds_since(start);
  out.final_micro = r.metrics.back().micro_f1;
  for (const auto& m : r.metrics)
    if (m.round > 0 && m.micro_f1 >= kCentralizedTarget) {
      out.first_reach = m.round;
      break;
    }
  return out;
}

Outcome centralized_convergence(const Centralized& run) {
  double chance = 0;
  for (int seed = 1; seed <= kChanceSeeds; ++seed) {
    auto c = preset(1);
    c.clients = 1;
    c.rounds = 0;
    // Graph fixed, initialization seed varied.
    auto g = load_experiment_graph(c);
    c.seed = static_cast<std::uint64_t>(seed);
    chance += run_experiment(c, g).metrics.front().micro_f1;
  }
  chance /= kChanceSeeds;
  const bool reached = run.first_reach > 0 && run.final_micro >= kCentralizedTarget;
  return {reached && run.seconds < kCentralizedSeconds &&
              std::abs(chance - kChance) <= kChanceTolerance,
          fmt("micro %.4f after %zu rounds (>= %.2f first at round %zu), %.1f s (< %.0f s); "
              "untrained mean over %d inits %.4f (%.2f +- %.2f)",
              run.final_micro, kCentralizedRounds, kCentralizedTarget, run.first_reach,
              run.seconds, kCentralizedSeconds, kChanceSeeds, chance, kChance, kChanceTolerance)};
}

Outcome federated_parity(const Centralized& central) {
  auto c = preset(1);
  c.clients = 3;
  c.rounds = kCentralizedRounds;
  const auto start = Clock::now();
  auto g = load_experiment_graph(c);
  const double micro = run_experiment(c, g).metrics.back().micro_f1;
  const double elapsed = seconds_since(start);
  const double gap = std::abs(micro - central.final_micro);
  return {gap <= kParityGap && elapsed <= kParitySeconds,
          fmt("C=3 micro %.4f vs centralized %.4f, gap %.4f (<= %.2f), %.1f s (<= %.0f s)", micro,
              central.final_micro, gap, kParityGap, elapsed, kParitySeconds)};
}

Outcome computation_trends() {
  int epoch_holds = 0, batch_holds = 0;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    auto run = [&](std::size_t epochs, std::size_t batch) {
      auto c = preset(seed);
      c.rounds = kTrendRounds;
      c.local_epochs = epochs;
      c.batch_size = batch;
      auto g = load_experiment_graph(c);
      return run_experiment(c, g).metrics.back().micro_f1;
    };
    const double base = run(1, 256), e5 = run(5, 256), b64 = run(1, 64);
    epoch_holds += base >= e5;
    batch_holds += base >= b64;
    detail << (seed > 1 ? "; " : "") << "seed " << seed << " e1/B256 " << fmt("%.4f", base)
           << " e5 " << fmt("%.4f", e5) << " B64 " << fmt("%.4f", b64);
  }
  return {epoch_holds >= 2 && batch_holds >= 2,
          fmt("e1>=e5 in %d/3, B256>=B64 in %d/3 (need 2/3 each): ", epoch_holds, batch_holds) +
              detail.str()};
}

Outcome staleness_benefit() {
  auto c = preset(1);
  c.speeds = {1, 1, 3};
  c.rounds = kStalenessLast;
  auto g = load_experiment_graph(c);
  const auto dwa = run_experiment(c, g).metrics;
  c.server.aggregator = AggregatorKind::fedavg;
  const auto avg = run_experiment(c, g).metrics;
  std::size_t holds = 0, total = 0;
  std::uint64_t widest = 0;
  for (std::size_t r = kStalenessFirst; r <= kStalenessLast; ++r) {
    holds += dwa[r].loss <= avg[r].loss;
    ++total;
    widest = std::max(widest, dwa[r].max_version_gap);
  }
  const double share = static_cast<double>(holds) / total;
  return {share >= kStalenessShare,
          fmt("FedDWA loss <= FedAvg at %zu/%zu rounds %zu-%zu (%.0f%%, need >= %.0f%%), max "
              "version gap %llu",
              holds, total, kStalenessFirst, kStalenessLast, 100 * share, 100 * kStalenessShare,
              static_cast<unsigned long long>(widest))};
}

Outcome determinism() {
  auto stream = [] {
    auto c = preset(7);
    c.speeds = {1, 2, 3};
    c.rounds = 30;
    auto g = load_experiment_graph(c);
    std::string out;
    for (const auto& m : run_experiment(c, g).metrics) out += to_json_line(m) + "\n";
    return out;
  };
  const auto a = stream();
  const auto b = stream();
  return {a == b && !a.empty(),
          fmt("two runs produced %zu and %zu bytes, %s", a.size(), b.size(),
              a == b ? "identical" : "different")};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& fn) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s [%d] %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "gradient check", gradient_check);
  report(2, "attention simplex", simplex_suite);
  report(3, "meta-path oracle", metapath_oracle);
  report(4, "FedDWA degeneracy", feddwa_degeneracy);
  Centralized central;
  report(5, "centralized convergence", [&] {
    central = centralized_run(1);
    return centralized_convergence(central);
  });
  report(6, "federated parity", [&] { return federated_parity(central); });
  report(7, "client computation trends", computation_trends);
  report(8, "staleness benefit", staleness_benefit);
  report(9, "determinism", determinism);
  std::printf("%d of 9 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
