#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <string>

#include "fedhin/experiment.hpp"

namespace fedhin {

inline constexpr std::string_view kCodeVersion = "fedhin-0.1.0";

/// Everything needed to replay a deterministic run.
struct RunManifest {
  ExperimentConfig config;
  std::uint64_t seed = 0;
  std::string code_version{kCodeVersion};
  std::string dataset_fingerprint;
  std::map<std::string, std::string> outputs;
};

/// FNV-1a 64 over the canonical node, edge and schema tables, as 16 hex digits.
std::string dataset_fingerprint(const HeterogeneousGraph& g);

void write_manifest(const std::filesystem::path& path, const RunManifest& m);
RunManifest read_manifest(const std::filesystem::path& path);

/// {round, aggregator, loss, micro_f1, macro_f1, max_version_gap, elapsed}
std::string to_json_line(const RoundMetrics& m);
std::string to_json_line(const ServerEvent& e);
RoundMetrics parse_metrics_line(const std::string& line);

/// Serializes whole lines from concurrent producers onto one stream.
class LineLogger {
 public:
  explicit LineLogger(std::ostream& out) : out_(out) {}

  void write(const std::string& line) {
    std::lock_guard lock(mu_);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ostream& out_;
};

}  // namespace fedhin
