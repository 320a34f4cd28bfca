#include "fedhin/adam.hpp"

#include <cmath>
#include <vector>

#include "fedhin/error.hpp"

namespace fedhin {

OptimizerState OptimizerState::for_params(const ModelParams& params,
                                          AdamConfig config) {
  OptimizerState s;
  s.config = config;
  s.first_moment = ModelParams::zeros(params.dims(), params.metapath_names);
  s.second_moment = s.first_moment;
  return s;
}

void adam_update(Matrix& param, const Matrix& grad, Matrix& first_moment,
                 Matrix& second_moment, std::uint64_t t,
                 const AdamConfig& config) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() ||
      first_moment.rows() != grad.rows() || first_moment.cols() != grad.cols() ||
      second_moment.rows() != grad.rows() || second_moment.cols() != grad.cols()) {
    throw Error(ErrorKind::shape, "adam: tensor shapes differ");
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  first_moment = b1 * first_moment + (1.0 - b1) * grad;
  second_moment = b2 * second_moment + (1.0 - b2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t));
  param.array() -= config.learning_rate * (first_moment.array() / c1) /
                   ((second_moment.array() / c2).sqrt() + config.epsilon);
}

void adam_step(ModelParams& params, const ModelParams& grads,
               OptimizerState& state) {
  std::vector<const Matrix*> g;
  grads.for_each_tensor([&](const std::string& name, const Matrix& m) {
    if (!m.allFinite()) {
      throw Error(ErrorKind::numeric, "non-finite gradient in tensor " + name);
    }
    g.push_back(&m);
  });
  std::vector<Matrix*> m1;
  std::vector<Matrix*> m2;
  state.first_moment.for_each_tensor(
      [&](const std::string&, Matrix& m) { m1.push_back(&m); });
  state.second_moment.for_each_tensor(
      [&](const std::string&, Matrix& m) { m2.push_back(&m); });
  std::size_t param_count = 0;
  params.for_each_tensor([&](const std::string&, const Matrix&) { ++param_count; });
  if (m1.size() != g.size() || m2.size() != g.size() || param_count != g.size()) {
    throw Error(ErrorKind::shape, "adam: optimizer state does not match");
  }
  const std::uint64_t t = state.step + 1;
  std::size_t k = 0;
  params.for_each_tensor([&](const std::string&, Matrix& p) {
    adam_update(p, *g[k], *m1[k], *m2[k], t, state.config);
    ++k;
  });
  state.step = t;
}

}  // namespace fedhin
