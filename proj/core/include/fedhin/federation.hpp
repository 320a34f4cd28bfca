#pragma once

#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "fedhin/model.hpp"

namespace fedhin {

using ClientId = std::uint32_t;
using FlatVector = std::vector<double>;

enum class AggregatorKind { feddwa, fedavg, ema };

std::string_view to_string(AggregatorKind kind);
AggregatorKind parse_aggregator(std::string_view name);

struct ServerConfig {
  AggregatorKind aggregator = AggregatorKind::feddwa;
  /// alpha in lambda_i = (v_latest - S_v[i] + 1)^-alpha
  double staleness_exponent = 0.5;
  /// Broadcast once the largest version gap reaches this value.
  std::uint64_t gap_threshold = 5;
  double ema_beta = 0.9;
  /// Measure staleness against the uploader's version instead of the newest
  /// recorded version.
  bool staleness_from_uploader = false;

  /// Throws config error on alpha < 0, threshold 0 or beta outside [0, 1].
  void validate() const;
};

struct ClientUpdate {
  ClientId client_id = 0;
  FlatVector weights;
  std::uint64_t version = 0;
};

enum class DispatchMode { targeted, broadcast };

struct DispatchDecision {
  DispatchMode mode = DispatchMode::targeted;
  ClientId target = 0;  // meaningful for targeted
  FlatVector payload;
};

/// Parameter-server records: S_w (latest weights per client) and S_v (latest
/// version per client). Records appear on a client's first accepted upload;
/// both maps always share one key set.
class ServerState {
 public:
  ServerState(std::vector<ClientId> clients, ShapeManifest manifest,
              ServerConfig config, FlatVector initial_weights = {});

  const ServerConfig& config() const { return config_; }
  const ShapeManifest& manifest() const { return manifest_; }
  bool is_registered(ClientId id) const;
  const std::vector<ClientId>& clients() const { return clients_; }

  const std::map<ClientId, FlatVector>& weights() const { return weights_; }
  const std::map<ClientId, std::uint64_t>& versions() const {
    return versions_;
  }
  bool empty() const { return weights_.empty(); }

  /// Newest recorded version (0 with no records).
  std::uint64_t latest_version() const;
  /// max_i (latest_version - S_v[i]) over recorded clients.
  std::uint64_t max_version_gap() const;

  /// Server-side vector maintained by the EMA aggregator.
  const FlatVector& running() const { return running_; }

 private:
  friend void submit(ServerState&, const ClientUpdate&);
  friend FlatVector aggregate_ema(ServerState&, const ClientUpdate&, double);

  std::vector<ClientId> clients_;
  ShapeManifest manifest_;
  ServerConfig config_;
  std::map<ClientId, FlatVector> weights_;
  std::map<ClientId, std::uint64_t> versions_;
  FlatVector running_;
};

/// Replaces S_w[id] and S_v[id]. Throws registration error for an unknown
/// client, staleness error when version <= S_v[id], shape error on a
/// mis-sized vector. A rejected update leaves the state untouched.
void submit(ServerState& state, const ClientUpdate& update);

/// Normalized staleness weights lambda_i / sum lambda, in record-key order.
std::vector<double> feddwa_coefficients(const ServerState& state,
                                        ClientId uploader);

/// sum_i lambda_i S_w[i] / sum_i lambda_i. Throws empty error with no records.
FlatVector aggregate_feddwa(const ServerState& state, ClientId uploader);

/// Unweighted mean of S_w; same summation order as aggregate_feddwa.
FlatVector aggregate_fedavg(const ServerState& state);

/// running <- beta * running + (1 - beta) * update.weights. An empty running
/// vector adopts the update. Throws config error on beta outside [0, 1].
FlatVector aggregate_ema(ServerState& state, const ClientUpdate& update,
                         double beta);

/// Runs whichever aggregator the state is configured with.
FlatVector aggregate(ServerState& state, const ClientUpdate& update);

/// targeted(uploader) while max version gap < threshold, else broadcast.
DispatchDecision dispatch(const ServerState& state, FlatVector aggregated,
                          ClientId uploader);

}  // namespace fedhin
