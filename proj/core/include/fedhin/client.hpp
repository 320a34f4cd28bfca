#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "fedhin/adam.hpp"
#include "fedhin/federation.hpp"
#include "fedhin/model.hpp"

namespace fedhin {

struct ClientOptions {
  std::size_t local_epochs = 1;   // e
  std::size_t batch_size = 256;   // B
  AdamConfig adam;
  ModelOptions model;
};

/// One federated participant: private labeled nodes, a full local model
/// (shared tensors + preference vectors) and its Adam state. Optimizer
/// moments persist across rounds; downloads replace parameter values only.
class Client {
 public:
  Client(ClientId id, std::shared_ptr<const TrainingData> data,
         std::vector<std::size_t> train_nodes, ModelParams initial,
         ClientOptions options, std::uint64_t seed);

  ClientId id() const { return id_; }
  std::uint64_t version() const { return version_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }
  const OptimizerState& optimizer() const { return optimizer_; }
  const std::vector<std::size_t>& train_nodes() const { return train_nodes_; }
  const ClientOptions& options() const { return options_; }

  void set_schedule(std::size_t epochs, std::size_t batch_size);

  /// Installs downloaded shared weights.
  void install(std::span<const double> shared);

  /// e local epochs of shuffled mini-batch Adam; returns the new shared
  /// weights stamped with version + 1.
  ClientUpdate train_round();

  /// A single mini-batch step (per-batch communication granularity).
  ClientUpdate train_batch();

  /// Mean per-node loss over the batches of the last train call.
  double last_loss() const { return last_loss_; }

 private:
  double step(std::span<const std::size_t> batch);
  ClientUpdate make_update();

  ClientId id_;
  std::shared_ptr<const TrainingData> data_;
  std::vector<std::size_t> train_nodes_;
  ModelParams params_;
  OptimizerState optimizer_;
  ClientOptions options_;
  Rng rng_;
  std::uint64_t version_ = 0;
  double last_loss_ = 0.0;
  std::vector<std::size_t> epoch_order_;
  std::size_t cursor_ = 0;
};

/// Installs `shared`, trains `epochs` epochs with batch size `batch_size` and
/// returns the client's next update.
ClientUpdate client_round(Client& client, std::span<const double> shared,
                          std::size_t epochs, std::size_t batch_size);

}  // namespace fedhin
