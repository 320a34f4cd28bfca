#pragma once

#include <cstdint>

#include "fedhin/graph.hpp"

namespace fedhin {

/// Planted-community academic HIN. Authors, papers and venues each carry a
/// class (index mod classes); authors are labeled with theirs. An author joins
/// a same-class paper with probability p_in and each foreign-class paper with
/// p_out / (classes - 1). Paper pairs cite each other and papers choose their
/// venue with the same class weighting. write, cite and publish edges are
/// stored in both directions. p_out = (classes - 1) * p_in removes the class
/// signal.
struct SyntheticConfig {
  std::size_t authors = 400;
  std::size_t papers = 400;
  std::size_t venues = 8;
  std::size_t classes = 4;
  double p_in = 0.05;
  double p_out = 0.005;
  std::uint64_t seed = 1;
};

/// Throws config error unless 0 <= p_out <= (classes-1)*p_in, p_in <= 1 and all
/// counts >= 1.
HeterogeneousGraph synthetic_hin(const SyntheticConfig& config);

Schema academic_schema();

}  // namespace fedhin
