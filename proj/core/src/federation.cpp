#include "fedhin/federation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

// Shared by FedDWA and FedAvg so equal weights give bit-identical results.
FlatVector weighted_mean(const std::map<ClientId, FlatVector>& records,
                         const std::vector<double>& lambda) {
  const std::size_t n = records.begin()->second.size();
  FlatVector sum(n, 0.0);
  double total = 0.0;
  std::size_t k = 0;
  for (const auto& [id, w] : records) {
    const double l = lambda[k++];
    for (std::size_t c = 0; c < n; ++c) sum[c] += l * w[c];
    total += l;
  }
  for (auto& v : sum) v /= total;
  return sum;
}

std::vector<double> staleness_weights(const ServerState& state,
                                      ClientId uploader) {
  std::uint64_t reference = state.latest_version();
  if (state.config().staleness_from_uploader) {
    auto it = state.versions().find(uploader);
    if (it != state.versions().end()) reference = it->second;
  }
  const double alpha = state.config().staleness_exponent;
  std::vector<double> lambda;
  lambda.reserve(state.versions().size());
  for (const auto& [id, v] : state.versions()) {
    const std::uint64_t gap = reference > v ? reference - v : 0;
    lambda.push_back(std::pow(static_cast<double>(gap + 1), -alpha));
  }
  return lambda;
}

void require_records(const ServerState& state) {
  if (state.empty()) {
    throw Error(ErrorKind::empty, "no client records to aggregate");
  }
}

}  // namespace

std::string_view to_string(AggregatorKind kind) {
  switch (kind) {
    case AggregatorKind::feddwa: return "feddwa";
    case AggregatorKind::fedavg: return "fedavg";
    case AggregatorKind::ema: return "ema";
  }
  return "unknown";
}

AggregatorKind parse_aggregator(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "feddwa") return AggregatorKind::feddwa;
  if (lower == "fedavg") return AggregatorKind::fedavg;
  if (lower == "ema") return AggregatorKind::ema;
  throw Error(ErrorKind::config, "unknown aggregator '" + std::string(name) +
                                     "' (expected feddwa, fedavg or ema)");
}

void ServerConfig::validate() const {
  if (!(staleness_exponent >= 0.0) || !std::isfinite(staleness_exponent)) {
    throw Error(ErrorKind::config,
                "staleness_exponent must be finite and >= 0, got " +
                    std::to_string(staleness_exponent));
  }
  if (gap_threshold == 0) {
    throw Error(ErrorKind::config, "gap_threshold must be >= 1");
  }
  if (!(ema_beta >= 0.0 && ema_beta <= 1.0)) {
    throw Error(ErrorKind::config,
                "ema_beta must lie in [0, 1], got " + std::to_string(ema_beta));
  }
}

ServerState::ServerState(std::vector<ClientId> clients, ShapeManifest manifest,
                         ServerConfig config, FlatVector initial_weights)
    : clients_(std::move(clients)),
      manifest_(std::move(manifest)),
      config_(config),
      running_(std::move(initial_weights)) {
  config_.validate();
  if (clients_.empty()) {
    throw Error(ErrorKind::config, "server needs at least one client");
  }
  std::sort(clients_.begin(), clients_.end());
  if (std::adjacent_find(clients_.begin(), clients_.end()) != clients_.end()) {
    throw Error(ErrorKind::registration, "duplicate client id");
  }
  if (!running_.empty() && running_.size() != total_size(manifest_)) {
    throw Error(ErrorKind::shape, "initial weights do not match the manifest");
  }
}

bool ServerState::is_registered(ClientId id) const {
  return std::binary_search(clients_.begin(), clients_.end(), id);
}

std::uint64_t ServerState::latest_version() const {
  std::uint64_t latest = 0;
  for (const auto& [id, v] : versions_) latest = std::max(latest, v);
  return latest;
}

std::uint64_t ServerState::max_version_gap() const {
  if (versions_.empty()) return 0;
  std::uint64_t lowest = versions_.begin()->second;
  for (const auto& [id, v] : versions_) lowest = std::min(lowest, v);
  return latest_version() - lowest;
}

void submit(ServerState& state, const ClientUpdate& update) {
  if (!state.is_registered(update.client_id)) {
    throw Error(ErrorKind::registration,
                "client " + std::to_string(update.client_id) +
                    " is not registered");
  }
  if (update.weights.size() != total_size(state.manifest_)) {
    throw Error(ErrorKind::shape,
                "client " + std::to_string(update.client_id) + " sent " +
                    std::to_string(update.weights.size()) +
                    " weights, manifest expects " +
                    std::to_string(total_size(state.manifest_)));
  }
  auto it = state.versions_.find(update.client_id);
  const std::uint64_t recorded = it == state.versions_.end() ? 0 : it->second;
  if (update.version <= recorded) {
    throw Error(ErrorKind::staleness,
                "client " + std::to_string(update.client_id) + " version " +
                    std::to_string(update.version) +
                    " is not newer than recorded version " +
                    std::to_string(recorded));
  }
  state.weights_[update.client_id] = update.weights;
  state.versions_[update.client_id] = update.version;
}

std::vector<double> feddwa_coefficients(const ServerState& state,
                                        ClientId uploader) {
  require_records(state);
  auto lambda = staleness_weights(state, uploader);
  double total = 0.0;
  for (double l : lambda) total += l;
  for (auto& l : lambda) l /= total;
  return lambda;
}

FlatVector aggregate_feddwa(const ServerState& state, ClientId uploader) {
  require_records(state);
  return weighted_mean(state.weights(), staleness_weights(state, uploader));
}

FlatVector aggregate_fedavg(const ServerState& state) {
  require_records(state);
  return weighted_mean(state.weights(),
                       std::vector<double>(state.weights().size(), 1.0));
}

FlatVector aggregate_ema(ServerState& state, const ClientUpdate& update,
                         double beta) {
  if (!(beta >= 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::config,
                "ema beta must lie in [0, 1], got " + std::to_string(beta));
  }
  auto& running = state.running_;
  if (running.empty()) {
    running = update.weights;
    return running;
  }
  if (running.size() != update.weights.size()) {
    throw Error(ErrorKind::shape, "ema update does not match the server vector");
  }
  for (std::size_t c = 0; c < running.size(); ++c) {
    running[c] = beta * running[c] + (1.0 - beta) * update.weights[c];
  }
  return running;
}

FlatVector aggregate(ServerState& state, const ClientUpdate& update) {
  switch (state.config().aggregator) {
    case AggregatorKind::feddwa: return aggregate_feddwa(state, update.client_id);
    case AggregatorKind::fedavg: return aggregate_fedavg(state);
    case AggregatorKind::ema: return aggregate_ema(state, update, state.config().ema_beta);
  }
  return {};
}

DispatchDecision dispatch(const ServerState& state, FlatVector aggregated,
                          ClientId uploader) {
  DispatchDecision d;
  d.mode = state.max_version_gap() < state.config().gap_threshold
               ? DispatchMode::targeted
               : DispatchMode::broadcast;
  d.target = uploader;
  d.payload = std::move(aggregated);
  return d;
}

}  // namespace fedhin
