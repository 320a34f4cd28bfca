#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fedhin/model.hpp"

namespace fedhin {

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};

/// Micro-F1 pools tp/fp/fn over classes; Macro-F1 averages per-class F1 over
/// all `label_count` classes, a class with no true and no predicted instance
/// contributing 0. Throws empty error on empty input, validation error on
/// length mismatch or out-of-range labels.
F1Scores f1_scores(std::span<const int> predictions, std::span<const int> truths,
                   std::size_t label_count);

struct EvalSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

/// Per-class shuffle; round(test_fraction * class size) nodes of each class go
/// to test. Both lists ascending.
EvalSplit stratified_split(std::span<const int> labels, double test_fraction,
                           std::uint64_t seed);

struct Evaluation {
  F1Scores scores;
  std::size_t n_test = 0;
};

/// argmax prediction on `test` nodes scored against data.labels.
Evaluation evaluate(const ModelParams& params, const TrainingData& data,
                    std::span<const std::size_t> test,
                    const ModelOptions& options);

struct RoundMetrics {
  std::size_t round = 0;
  std::string aggregator;
  double loss = 0.0;
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::uint64_t max_version_gap = 0;
  double elapsed = 0.0;
};

struct Curves {
  std::vector<std::pair<std::size_t, double>> loss;
  std::vector<std::pair<std::size_t, double>> micro_f1;
  std::vector<std::pair<std::size_t, double>> macro_f1;
};

/// Round-ordered tables, no smoothing.
Curves curve_extract(std::span<const RoundMetrics> stream);

/// `round,loss,micro_f1,macro_f1` rows.
void write_curves(std::ostream& out, const Curves& curves);

}  // namespace fedhin
