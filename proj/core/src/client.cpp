#include "fedhin/client.hpp"

#include <algorithm>
#include <cmath>

#include "fedhin/error.hpp"

namespace fedhin {

Client::Client(ClientId id, std::shared_ptr<const TrainingData> data,
               std::vector<std::size_t> train_nodes, ModelParams initial,
               ClientOptions options, std::uint64_t seed)
    : id_(id),
      data_(std::move(data)),
      train_nodes_(std::move(train_nodes)),
      params_(std::move(initial)),
      optimizer_(OptimizerState::for_params(params_, options.adam)),
      options_(options),
      rng_(seed) {
  if (train_nodes_.empty()) {
    throw Error(ErrorKind::empty,
                "client " + std::to_string(id_) + " has no training nodes");
  }
  if (options_.batch_size == 0) {
    throw Error(ErrorKind::config, "batch size must be >= 1");
  }
  for (auto i : train_nodes_) {
    if (i >= data_->target_count() || data_->labels[i] < 0) {
      throw Error(ErrorKind::validation,
                  "client " + std::to_string(id_) + " training node " +
                      std::to_string(i) + " is missing or unlabeled");
    }
  }
}

void Client::set_schedule(std::size_t epochs, std::size_t batch_size) {
  if (batch_size == 0) throw Error(ErrorKind::config, "batch size must be >= 1");
  options_.local_epochs = epochs;
  options_.batch_size = batch_size;
}

void Client::install(std::span<const double> shared) {
  params_.set_shared_flat(shared);
}

double Client::step(std::span<const std::size_t> batch) {
  ForwardTrace trace = loss(params_, *data_, batch, options_.model, &rng_);
  if (!std::isfinite(trace.loss)) {
    throw Error(ErrorKind::numeric, "client " + std::to_string(id_) +
                                        " produced a non-finite loss");
  }
  ModelParams grads = backward(params_, *data_, trace, options_.model);
  adam_step(params_, grads, optimizer_);
  return trace.loss;
}

ClientUpdate Client::make_update() {
  return {id_, params_.shared_flat(), ++version_};
}

ClientUpdate Client::train_round() {
  double total = 0.0;
  std::size_t seen = 0;
  std::vector<std::size_t> order = train_nodes_;
  const std::size_t b = options_.batch_size;
  for (std::size_t epoch = 0; epoch < options_.local_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng_);
    for (std::size_t start = 0; start < order.size(); start += b) {
      const std::size_t n = std::min(b, order.size() - start);
      total += step(std::span<const std::size_t>(order).subspan(start, n));
      seen += n;
    }
  }
  last_loss_ = seen ? total / static_cast<double>(seen) : 0.0;
  return make_update();
}

ClientUpdate Client::train_batch() {
  if (cursor_ >= epoch_order_.size()) {
    epoch_order_ = train_nodes_;
    std::shuffle(epoch_order_.begin(), epoch_order_.end(), rng_);
    cursor_ = 0;
  }
  const std::size_t n = std::min(options_.batch_size, epoch_order_.size() - cursor_);
  const double total =
      step(std::span<const std::size_t>(epoch_order_).subspan(cursor_, n));
  cursor_ += n;
  last_loss_ = total / static_cast<double>(n);
  return make_update();
}

ClientUpdate client_round(Client& client, std::span<const double> shared,
                          std::size_t epochs, std::size_t batch_size) {
  client.install(shared);
  client.set_schedule(epochs, batch_size);
  return client.train_round();
}

}  // namespace fedhin
