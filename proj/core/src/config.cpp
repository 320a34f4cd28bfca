#include "fedhin/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

using nlohmann::json;

std::string_view to_string(Granularity g) {
  return g == Granularity::per_round ? "round" : "batch";
}
std::string_view to_string(Scheduling s) {
  return s == Scheduling::deterministic ? "deterministic" : "concurrent";
}
std::string_view to_string(AdjacencyMode m) {
  return m == AdjacencyMode::counts ? "counts" : "binary";
}
std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::elu: return "elu";
  }
  return "elu";
}

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw Error(ErrorKind::config, "config key '" + key + "': " + what);
}

template <typename Enum>
Enum pick(const std::string& key, const json& v,
          std::initializer_list<std::pair<std::string_view, Enum>> options) {
  if (!v.is_string()) bad(key, "expected a string");
  const auto s = v.get<std::string>();
  std::string allowed;
  for (const auto& [name, value] : options) {
    if (s == name) return value;
    allowed += (allowed.empty() ? "" : ", ") + std::string(name);
  }
  bad(key, "'" + s + "' is not one of {" + allowed + "}");
}

std::size_t count(const std::string& key, const json& v, std::size_t min_value) {
  if (!v.is_number_integer() || v.get<std::int64_t>() < static_cast<std::int64_t>(min_value)) {
    bad(key, "expected an integer >= " + std::to_string(min_value));
  }
  return v.get<std::size_t>();
}

double real(const std::string& key, const json& v, double lo, double hi,
            bool lo_open = false) {
  if (!v.is_number()) bad(key, "expected a number");
  const double x = v.get<double>();
  if (!(lo_open ? x > lo : x >= lo) || !(x <= hi)) {
    std::ostringstream os;
    os << "value " << x << " outside " << (lo_open ? "(" : "[") << lo << ", "
       << hi << "]";
    bad(key, os.str());
  }
  return x;
}

std::string text(const std::string& key, const json& v) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

ExperimentConfig parse_config_text(std::string_view text_in) {
  ExperimentConfig c;
  if (text_in.find_first_not_of(" \t\r\n") == std::string_view::npos) {
    return c;
  }
  json doc;
  try {
    doc = json::parse(text_in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::parse, std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorKind::config, "config must be a JSON object");

  for (const auto& [key, v] : doc.items()) {
    if (key == "clients") c.clients = count(key, v, 1);
    else if (key == "local_epochs") c.local_epochs = count(key, v, 0);
    else if (key == "batch_size") c.batch_size = count(key, v, 1);
    else if (key == "embedding_dim") c.embedding_dim = count(key, v, 1);
    else if (key == "preference_dim") c.preference_dim = count(key, v, 1);
    else if (key == "learning_rate") c.learning_rate = real(key, v, 0.0, kInf, true);
    else if (key == "metapaths") {
      if (!v.is_array() || v.empty()) bad(key, "expected a non-empty array of strings");
      c.metapaths.clear();
      for (const auto& m : v) c.metapaths.push_back(text(key, m));
    } else if (key == "target_type") c.target_type = text(key, v);
    else if (key == "type_alphabet") {
      if (!v.is_object()) bad(key, "expected an object of initial -> type");
      c.alphabet.clear();
      for (const auto& [initial, type] : v.items()) {
        if (initial.size() != 1) bad(key, "initials must be single characters");
        c.alphabet[initial[0]] = text(key, type);
      }
    } else if (key == "aggregator") {
      c.server.aggregator = pick<AggregatorKind>(
          key, v, {{"feddwa", AggregatorKind::feddwa},
                   {"fedavg", AggregatorKind::fedavg},
                   {"ema", AggregatorKind::ema}});
    } else if (key == "staleness_exponent") c.server.staleness_exponent = real(key, v, 0.0, kInf);
    else if (key == "gap_threshold") c.server.gap_threshold = count(key, v, 1);
    else if (key == "ema_beta") c.server.ema_beta = real(key, v, 0.0, 1.0);
    else if (key == "staleness_reference") {
      c.server.staleness_from_uploader =
          pick<bool>(key, v, {{"global_max", false}, {"uploader", true}});
    } else if (key == "speeds") {
      if (!v.is_array()) bad(key, "expected an array of integers");
      c.speeds.clear();
      for (const auto& s : v) c.speeds.push_back(count(key, s, 1));
    } else if (key == "seed") {
      if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        bad(key, "expected a non-negative integer");
      c.seed = v.get<std::uint64_t>();
    } else if (key == "rounds") c.rounds = count(key, v, 0);
    else if (key == "granularity") {
      c.granularity = pick<Granularity>(
          key, v, {{"round", Granularity::per_round}, {"batch", Granularity::per_batch}});
    } else if (key == "scheduling") {
      c.scheduling = pick<Scheduling>(
          key, v, {{"deterministic", Scheduling::deterministic},
                   {"concurrent", Scheduling::concurrent}});
    } else if (key == "adjacency_mode") {
      c.adjacency_mode = pick<AdjacencyMode>(
          key, v, {{"counts", AdjacencyMode::counts}, {"binary", AdjacencyMode::binary}});
    } else if (key == "activation") {
      c.activation = pick<Activation>(key, v, {{"identity", Activation::identity},
                                               {"relu", Activation::relu},
                                               {"elu", Activation::elu}});
    } else if (key == "sample_size") c.sample_size = count(key, v, 0);
    else if (key == "partition") {
      c.partition = pick<PartitionStrategy>(
          key, v, {{"uniform", PartitionStrategy::uniform},
                   {"label_skewed", PartitionStrategy::label_skewed}});
    } else if (key == "dirichlet_concentration") c.dirichlet_concentration = real(key, v, 0.0, kInf, true);
    else if (key == "test_fraction") c.test_fraction = real(key, v, 0.0, 0.95);
    else if (key == "nodes_file") c.data.nodes_file = text(key, v);
    else if (key == "edges_file") c.data.edges_file = text(key, v);
    else if (key == "schema_file") c.data.schema_file = text(key, v);
    else if (key == "synthetic_authors") c.data.synthetic.authors = count(key, v, 1);
    else if (key == "synthetic_papers") c.data.synthetic.papers = count(key, v, 1);
    else if (key == "synthetic_venues") c.data.synthetic.venues = count(key, v, 1);
    else if (key == "synthetic_classes") c.data.synthetic.classes = count(key, v, 1);
    else if (key == "synthetic_p_in") c.data.synthetic.p_in = real(key, v, 0.0, 1.0);
    else if (key == "synthetic_p_out") c.data.synthetic.p_out = real(key, v, 0.0, 1.0);
    else throw Error(ErrorKind::config, "unknown config key '" + key + "'");
  }
  c.validate();
  return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json alphabet = json::object();
  for (const auto& [initial, type] : c.alphabet) alphabet[std::string(1, initial)] = type;
  json j = json::object();
  j["clients"] = c.clients;
  j["local_epochs"] = c.local_epochs;
  j["batch_size"] = c.batch_size;
  j["embedding_dim"] = c.embedding_dim;
  j["preference_dim"] = c.preference_dim;
  j["learning_rate"] = c.learning_rate;
  j["metapaths"] = c.metapaths;
  j["target_type"] = c.target_type;
  j["type_alphabet"] = alphabet;
  j["aggregator"] = std::string(to_string(c.server.aggregator));
  j["staleness_exponent"] = c.server.staleness_exponent;
  j["gap_threshold"] = c.server.gap_threshold;
  j["ema_beta"] = c.server.ema_beta;
  j["staleness_reference"] = c.server.staleness_from_uploader ? "uploader" : "global_max";
  j["speeds"] = c.speeds;
  j["seed"] = c.seed;
  j["rounds"] = c.rounds;
  j["granularity"] = std::string(to_string(c.granularity));
  j["scheduling"] = std::string(to_string(c.scheduling));
  j["adjacency_mode"] = std::string(to_string(c.adjacency_mode));
  j["activation"] = std::string(to_string(c.activation));
  j["sample_size"] = c.sample_size;
  j["partition"] = std::string(to_string(c.partition));
  j["dirichlet_concentration"] = c.dirichlet_concentration;
  j["test_fraction"] = c.test_fraction;
  if (c.data.from_files()) {
    j["nodes_file"] = c.data.nodes_file;
    j["edges_file"] = c.data.edges_file;
    j["schema_file"] = c.data.schema_file;
  }
  j["synthetic_authors"] = c.data.synthetic.authors;
  j["synthetic_papers"] = c.data.synthetic.papers;
  j["synthetic_venues"] = c.data.synthetic.venues;
  j["synthetic_classes"] = c.data.synthetic.classes;
  j["synthetic_p_in"] = c.data.synthetic.p_in;
  j["synthetic_p_out"] = c.data.synthetic.p_out;
  return j.dump(2);
}

}  // namespace fedhin
