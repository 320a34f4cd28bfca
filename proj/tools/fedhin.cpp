// fedhin: command-line front end for the federated HIN embedding simulator.
//
//   fedhin generate           synthetic academic HIN -> nodes/edges/schema CSV
//   fedhin partition          split labeled target nodes across clients
//   fedhin train              run an experiment from a JSON config
//   fedhin eval               score a finished run on its test split
//   fedhin export-embeddings  write fused node embeddings of a run
//   fedhin aggregate-demo     replay FedDWA on a record table

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedhin/config.hpp"
#include "fedhin/error.hpp"
#include "fedhin/experiment.hpp"
#include "fedhin/run_io.hpp"
#include "fedhin/wire.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw fedhin::Error(fedhin::ErrorKind::io, "cannot write " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw fedhin::Error(fedhin::ErrorKind::io, "cannot open " + path.string());
  return in;
}

void print_error(std::string_view kind, const std::string& message) {
  json j;
  j["error"] = {{"kind", kind}, {"message", message}};
  std::cerr << j.dump() << '\n';
}

struct GraphArgs {
  std::string config;
  std::string nodes;
  std::string edges;
  std::string schema;
};

void add_graph_options(CLI::App* cmd, GraphArgs& a) {
  cmd->add_option("--config", a.config, "Experiment config (JSON)");
  cmd->add_option("--nodes", a.nodes, "Node table id,type,label");
  cmd->add_option("--edges", a.edges, "Edge table src,dst,relation");
  cmd->add_option("--schema", a.schema, "Schema table src_type,relation,dst_type");
}

fedhin::ExperimentConfig resolve_config(const GraphArgs& a) {
  fedhin::ExperimentConfig c =
      a.config.empty() ? fedhin::ExperimentConfig{} : fedhin::parse_config(a.config);
  if (!a.nodes.empty()) c.data.nodes_file = a.nodes;
  if (!a.edges.empty()) c.data.edges_file = a.edges;
  if (!a.schema.empty()) c.data.schema_file = a.schema;
  return c;
}

// ---- generate ---------------------------------------------------------------

int cmd_generate(const fedhin::SyntheticConfig& sc, const std::string& out_dir) {
  auto g = fedhin::synthetic_hin(sc);
  fs::create_directories(out_dir);
  auto nodes = open_out(fs::path(out_dir) / "nodes.csv");
  fedhin::write_node_table(nodes, g);
  auto edges = open_out(fs::path(out_dir) / "edges.csv");
  fedhin::write_edge_table(edges, g);
  auto schema = open_out(fs::path(out_dir) / "schema.csv");
  fedhin::write_schema(schema, g.schema());
  json j = {{"nodes", g.node_count()},
            {"edges", g.edge_count()},
            {"labels", g.label_count()},
            {"fingerprint", fedhin::dataset_fingerprint(g)}};
  std::cout << j.dump() << '\n';
  return 0;
}

// ---- partition --------------------------------------------------------------

int cmd_partition(const GraphArgs& ga, std::size_t clients,
                  const std::string& strategy, std::uint64_t seed,
                  double concentration, const std::string& out_path) {
  auto config = resolve_config(ga);
  auto g = fedhin::load_experiment_graph(config);
  auto p = fedhin::partition(g, clients, fedhin::parse_partition_strategy(strategy),
                             seed, concentration);
  if (out_path.empty()) {
    fedhin::write_partition(std::cout, g, p);
  } else {
    auto out = open_out(out_path);
    fedhin::write_partition(out, g, p);
  }
  return 0;
}

// ---- train ------------------------------------------------------------------

void write_index_list(const fs::path& path, const fedhin::HeterogeneousGraph& g,
                      const fedhin::EvalSplit& split) {
  auto out = open_out(path);
  out << "node_id,set\n";
  for (auto i : split.train) out << g.target_nodes()[i] << ",train\n";
  for (auto i : split.test) out << g.target_nodes()[i] << ",test\n";
}

int cmd_train(const GraphArgs& ga, const std::string& replay,
              const std::string& out_dir, bool quiet) {
  fedhin::ExperimentConfig config;
  std::string expected_fingerprint;
  if (!replay.empty()) {
    auto m = fedhin::read_manifest(replay);
    config = m.config;
    expected_fingerprint = m.dataset_fingerprint;
  } else {
    config = resolve_config(ga);
  }
  auto graph = fedhin::load_experiment_graph(config);
  fedhin::RunManifest manifest;
  manifest.config = config;
  manifest.seed = config.seed;
  manifest.dataset_fingerprint = fedhin::dataset_fingerprint(graph);
  if (!expected_fingerprint.empty() &&
      expected_fingerprint != manifest.dataset_fingerprint) {
    throw fedhin::Error(fedhin::ErrorKind::validation,
                        "dataset fingerprint " + manifest.dataset_fingerprint +
                            " differs from manifest " + expected_fingerprint);
  }
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  manifest.outputs = {{"config", "config.json"},
                      {"metrics", "metrics.jsonl"},
                      {"server_log", "server_log.jsonl"},
                      {"checkpoint", "model.ckpt"},
                      {"preferences", "model.pref"},
                      {"split", "split.csv"},
                      {"partition", "partition.csv"},
                      {"curves", "curves.csv"}};
  fedhin::write_manifest(dir / "manifest.json", manifest);
  {
    auto out = open_out(dir / "config.json");
    out << fedhin::config_to_json(config) << '\n';
  }

  auto metrics_out = open_out(dir / "metrics.jsonl");
  auto server_out = open_out(dir / "server_log.jsonl");
  fedhin::LineLogger metrics_log(metrics_out);
  fedhin::LineLogger server_log(server_out);
  fedhin::ExperimentHooks hooks;
  hooks.on_round = [&](const fedhin::RoundMetrics& m) {
    const auto line = fedhin::to_json_line(m);
    metrics_log.write(line);
    if (!quiet) std::cerr << line << '\n';
  };
  hooks.on_server_event = [&](const fedhin::ServerEvent& e) {
    server_log.write(fedhin::to_json_line(e));
  };
  hooks.diagnostic_dir = (dir / "diagnostic").string();

  auto result = fedhin::run_experiment(config, graph, hooks);

  {
    auto ck = open_out(dir / "model.ckpt", true);
    fedhin::save_checkpoint(ck, result.model);
    auto pf = open_out(dir / "model.pref", true);
    fedhin::save_preferences(pf, result.model);
  }
  write_index_list(dir / "split.csv", graph, result.split);
  {
    auto out = open_out(dir / "partition.csv");
    fedhin::write_partition(out, graph, result.partition);
  }
  {
    auto out = open_out(dir / "curves.csv");
    fedhin::write_curves(out, fedhin::curve_extract(result.metrics));
  }
  std::cout << fedhin::to_json_line(result.metrics.back()) << '\n';
  return 0;
}

// ---- eval / export ----------------------------------------------------------

struct LoadedRun {
  fedhin::ExperimentConfig config;
  fedhin::HeterogeneousGraph graph;
  fedhin::PreparedData prepared;
  fedhin::ModelParams model;
};

LoadedRun load_run(const std::string& run_dir) {
  const fs::path dir(run_dir);
  auto manifest = fedhin::read_manifest(dir / "manifest.json");
  auto graph = fedhin::load_experiment_graph(manifest.config);
  if (fedhin::dataset_fingerprint(graph) != manifest.dataset_fingerprint) {
    throw fedhin::Error(fedhin::ErrorKind::validation,
                        "dataset no longer matches the run's fingerprint");
  }
  auto prepared = fedhin::prepare_data(manifest.config, graph);
  auto model = fedhin::ModelParams::zeros(
      fedhin::model_dims(manifest.config, *prepared.data),
      prepared.data->metapath_names());
  auto ck = open_in(dir / "model.ckpt", true);
  fedhin::load_checkpoint(ck, model);
  auto pf = open_in(dir / "model.pref", true);
  fedhin::load_preferences(pf, model);
  return {std::move(manifest.config), std::move(graph), std::move(prepared),
          std::move(model)};
}

int cmd_eval(const std::string& run_dir) {
  auto run = load_run(run_dir);
  auto e = fedhin::evaluate(run.model, *run.prepared.data, run.prepared.split.test,
                            fedhin::model_options(run.config));
  json j = {{"micro_f1", e.scores.micro},
            {"macro_f1", e.scores.macro},
            {"n_test", e.n_test}};
  std::cout << j.dump() << '\n';
  return 0;
}

int cmd_export(const std::string& run_dir, const std::string& out_path) {
  auto run = load_run(run_dir);
  const auto& targets = run.graph.target_nodes();
  std::vector<std::size_t> all(targets.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  auto emb = fedhin::embed(run.model, *run.prepared.data, all,
                           fedhin::model_options(run.config));
  auto out = open_out(out_path);
  out << std::setprecision(17);
  for (std::size_t i = 0; i < all.size(); ++i) {
    out << targets[i];
    for (Eigen::Index r = 0; r < emb.rows(); ++r) {
      out << ',' << emb(r, static_cast<Eigen::Index>(i));
    }
    out << '\n';
  }
  std::cout << json({{"rows", all.size()}, {"dim", emb.rows()}, {"path", out_path}}).dump()
            << '\n';
  return 0;
}

// ---- aggregate-demo ---------------------------------------------------------

// Rows: client_id,version,w_1,...,w_n
int cmd_aggregate_demo(const std::string& records_path, double alpha,
                       std::uint64_t threshold, std::int64_t uploader_arg) {
  auto in = open_in(records_path);
  std::vector<fedhin::ClientUpdate> rows;
  std::string line;
  std::size_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("client", 0) == 0) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 3) throw fedhin::ParseError(line_no, "need client_id,version,weights...");
    fedhin::ClientUpdate u;
    try {
      u.client_id = static_cast<fedhin::ClientId>(std::stoul(fields[0]));
      u.version = std::stoull(fields[1]);
      for (std::size_t k = 2; k < fields.size(); ++k) u.weights.push_back(std::stod(fields[k]));
    } catch (const std::exception&) {
      throw fedhin::ParseError(line_no, "non-numeric field");
    }
    if (width == 0) width = u.weights.size();
    if (u.weights.size() != width) throw fedhin::ParseError(line_no, "ragged weight row");
    rows.push_back(std::move(u));
  }
  if (rows.empty()) throw fedhin::Error(fedhin::ErrorKind::empty, "no records");

  std::vector<fedhin::ClientId> ids;
  for (const auto& r : rows) ids.push_back(r.client_id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  fedhin::ServerConfig sc;
  sc.staleness_exponent = alpha;
  sc.gap_threshold = threshold;
  fedhin::ServerState state(ids, {{"weights", width, 1}}, sc);
  for (const auto& r : rows) fedhin::submit(state, r);
  const auto uploader = uploader_arg >= 0 ? static_cast<fedhin::ClientId>(uploader_arg)
                                          : rows.back().client_id;
  auto coeffs = fedhin::feddwa_coefficients(state, uploader);
  auto agg = fedhin::aggregate_feddwa(state, uploader);
  auto decision = fedhin::dispatch(state, agg, uploader);
  json clients = json::array();
  std::size_t k = 0;
  for (const auto& [id, v] : state.versions()) {
    clients.push_back({{"client_id", id}, {"version", v}, {"coefficient", coeffs[k++]}});
  }
  json j = {{"clients", clients},
            {"latest_version", state.latest_version()},
            {"max_version_gap", state.max_version_gap()},
            {"aggregate", agg},
            {"dispatch", decision.mode == fedhin::DispatchMode::broadcast ? "broadcast" : "targeted"},
            {"uploader", uploader}};
  std::cout << j.dump(2) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated heterogeneous-graph embedding simulator"};
  app.require_subcommand(1);

  fedhin::SyntheticConfig sc;
  std::string gen_out = "data";
  auto* gen = app.add_subcommand("generate", "Write a synthetic academic HIN");
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();
  gen->add_option("--authors", sc.authors)->capture_default_str();
  gen->add_option("--papers", sc.papers)->capture_default_str();
  gen->add_option("--venues", sc.venues)->capture_default_str();
  gen->add_option("--classes", sc.classes)->capture_default_str();
  gen->add_option("--p-in", sc.p_in)->capture_default_str();
  gen->add_option("--p-out", sc.p_out)->capture_default_str();
  gen->add_option("--seed", sc.seed)->capture_default_str();

  GraphArgs part_graph;
  std::size_t part_clients = 3;
  std::string part_strategy = "uniform";
  std::uint64_t part_seed = 1;
  double part_conc = 0.5;
  std::string part_out;
  auto* part = app.add_subcommand("partition", "Split labeled nodes across clients");
  add_graph_options(part, part_graph);
  part->add_option("--clients", part_clients)->capture_default_str();
  part->add_option("--strategy", part_strategy, "uniform | label_skewed")->capture_default_str();
  part->add_option("--seed", part_seed)->capture_default_str();
  part->add_option("--concentration", part_conc)->capture_default_str();
  part->add_option("--out", part_out, "Output CSV (default stdout)");

  GraphArgs train_graph;
  std::string train_out = "run";
  std::string replay;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Run a federated experiment");
  add_graph_options(train, train_graph);
  train->add_option("--replay", replay, "Re-run from a manifest.json");
  train->add_option("--out", train_out, "Run directory")->capture_default_str();
  train->add_flag("--quiet", quiet, "Do not echo metrics to stderr");

  std::string eval_run;
  auto* eval = app.add_subcommand("eval", "Score a run on its test split");
  eval->add_option("--run", eval_run, "Run directory")->required();

  std::string export_run;
  std::string export_out = "embeddings.csv";
  auto* exp = app.add_subcommand("export-embeddings", "Write node embeddings");
  exp->add_option("--run", export_run, "Run directory")->required();
  exp->add_option("--out", export_out)->capture_default_str();

  std::string records;
  double alpha = 0.5;
  std::uint64_t threshold = 5;
  std::int64_t uploader = -1;
  auto* demo = app.add_subcommand("aggregate-demo", "Replay FedDWA on a record table");
  demo->add_option("--records", records, "CSV rows client_id,version,w...")->required();
  demo->add_option("--alpha", alpha, "Staleness exponent")->capture_default_str();
  demo->add_option("--threshold", threshold, "Version-gap threshold")->capture_default_str();
  demo->add_option("--uploader", uploader, "Uploading client (default: last row)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*gen) return cmd_generate(sc, gen_out);
    if (*part) return cmd_partition(part_graph, part_clients, part_strategy, part_seed, part_conc, part_out);
    if (*train) return cmd_train(train_graph, replay, train_out, quiet);
    if (*eval) return cmd_eval(eval_run);
    if (*exp) return cmd_export(export_run, export_out);
    if (*demo) return cmd_aggregate_demo(records, alpha, threshold, uploader);
  } catch (const fedhin::Error& e) {
    print_error(fedhin::to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
