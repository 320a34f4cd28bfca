#include "fedhin/run_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedhin/config.hpp"
#include "fedhin/error.hpp"

namespace fedhin {
namespace {

using nlohmann::json;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::string dataset_fingerprint(const HeterogeneousGraph& g) {
  std::ostringstream os;
  write_node_table(os, g);
  write_edge_table(os, g);
  write_schema(os, g.schema());
  const std::uint64_t h = fnv1a(os.str(), 0xcbf29ce484222325ULL);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  json j;
  j["config"] = json::parse(config_to_json(m.config));
  j["seed"] = m.seed;
  j["code_version"] = m.code_version;
  j["dataset_fingerprint"] = m.dataset_fingerprint;
  j["outputs"] = m.outputs;
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

RunManifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
    RunManifest m;
    m.config = parse_config_text(j.at("config").dump());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.code_version = j.at("code_version").get<std::string>();
    m.dataset_fingerprint = j.at("dataset_fingerprint").get<std::string>();
    m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, "malformed manifest " + path.string() + ": " + e.what());
  }
}

std::string to_json_line(const RoundMetrics& m) {
  json j = json::object();
  j["round"] = m.round;
  j["aggregator"] = m.aggregator;
  j["loss"] = m.loss;
  j["micro_f1"] = m.micro_f1;
  j["macro_f1"] = m.macro_f1;
  j["max_version_gap"] = m.max_version_gap;
  j["elapsed"] = m.elapsed;
  return j.dump();
}

std::string to_json_line(const ServerEvent& e) {
  json j = json::object();
  j["round"] = e.round;
  j["uploader"] = e.uploader;
  j["version"] = e.version;
  j["dispatch"] = e.mode == DispatchMode::broadcast ? "broadcast" : "targeted";
  j["max_version_gap"] = e.max_version_gap;
  j["coefficients"] = e.coefficients;
  return j.dump();
}

RoundMetrics parse_metrics_line(const std::string& line) {
  try {
    const json j = json::parse(line);
    RoundMetrics m;
    m.round = j.at("round").get<std::size_t>();
    m.aggregator = j.at("aggregator").get<std::string>();
    m.loss = j.at("loss").get<double>();
    m.micro_f1 = j.at("micro_f1").get<double>();
    m.macro_f1 = j.at("macro_f1").get<double>();
    m.max_version_gap = j.at("max_version_gap").get<std::uint64_t>();
    m.elapsed = j.at("elapsed").get<double>();
    return m;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::parse, std::string("malformed metrics line: ") + e.what());
  }
}

}  // namespace fedhin
