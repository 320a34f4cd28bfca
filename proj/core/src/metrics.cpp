#include "fedhin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <random>

#include "fedhin/error.hpp"

namespace fedhin {

F1Scores f1_scores(std::span<const int> predictions, std::span<const int> truths,
                   std::size_t label_count) {
  if (predictions.empty()) throw Error(ErrorKind::empty, "f1 of empty input");
  if (predictions.size() != truths.size()) {
    throw Error(ErrorKind::validation,
                "predictions and truths differ in length");
  }
  std::vector<double> tp(label_count, 0.0), fp(label_count, 0.0),
      fn(label_count, 0.0);
  auto check = [&](int l) {
    if (l < 0 || static_cast<std::size_t>(l) >= label_count) {
      throw Error(ErrorKind::validation,
                  "label " + std::to_string(l) + " outside 0.." +
                      std::to_string(label_count) + ")");
    }
  };
  for (std::size_t k = 0; k < predictions.size(); ++k) {
    check(predictions[k]);
    check(truths[k]);
    if (predictions[k] == truths[k]) {
      tp[predictions[k]] += 1;
    } else {
      fp[predictions[k]] += 1;
      fn[truths[k]] += 1;
    }
  }
  double tp_sum = 0, fp_sum = 0, fn_sum = 0, macro = 0;
  for (std::size_t c = 0; c < label_count; ++c) {
    tp_sum += tp[c];
    fp_sum += fp[c];
    fn_sum += fn[c];
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    macro += denom > 0 ? 2 * tp[c] / denom : 0.0;
  }
  F1Scores s;
  s.micro = 2 * tp_sum / (2 * tp_sum + fp_sum + fn_sum);
  s.macro = macro / static_cast<double>(label_count);
  return s;
}

EvalSplit stratified_split(std::span<const int> labels, double test_fraction,
                           std::uint64_t seed) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) {
    throw Error(ErrorKind::config, "test_fraction must lie in [0, 1)");
  }
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) by_class[labels[i]].push_back(i);
  }
  std::mt19937_64 rng(seed);
  EvalSplit split;
  split.test_fraction = test_fraction;
  split.seed = seed;
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    const auto n_test = static_cast<std::size_t>(
        std::lround(test_fraction * static_cast<double>(members.size())));
    split.test.insert(split.test.end(), members.begin(),
                      members.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(),
                       members.begin() + static_cast<std::ptrdiff_t>(n_test),
                       members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

Evaluation evaluate(const ModelParams& params, const TrainingData& data,
                    std::span<const std::size_t> test,
                    const ModelOptions& options) {
  std::vector<int> truths;
  truths.reserve(test.size());
  for (auto i : test) {
    if (i >= data.target_count() || data.labels[i] < 0) {
      throw Error(ErrorKind::validation,
                  "test node " + std::to_string(i) + " has no label");
    }
    truths.push_back(data.labels[i]);
  }
  const auto predictions = predict(params, data, test, options);
  return {f1_scores(predictions, truths, data.label_count), test.size()};
}

Curves curve_extract(std::span<const RoundMetrics> stream) {
  std::vector<const RoundMetrics*> sorted;
  for (const auto& m : stream) sorted.push_back(&m);
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](auto* a, auto* b) { return a->round < b->round; });
  Curves c;
  for (const auto* m : sorted) {
    c.loss.emplace_back(m->round, m->loss);
    c.micro_f1.emplace_back(m->round, m->micro_f1);
    c.macro_f1.emplace_back(m->round, m->macro_f1);
  }
  return c;
}

void write_curves(std::ostream& out, const Curves& curves) {
  out << "round,loss,micro_f1,macro_f1\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < curves.loss.size(); ++k) {
    out << curves.loss[k].first << ',' << curves.loss[k].second << ','
        << curves.micro_f1[k].second << ',' << curves.macro_f1[k].second
        << '\n';
  }
}

}  // namespace fedhin
