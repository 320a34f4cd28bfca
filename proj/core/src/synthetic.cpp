#include "fedhin/synthetic.hpp"

#include <random>
#include <string>
#include <vector>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

class ClassWeights {
 public:
  ClassWeights(const SyntheticConfig& c)
      : p_in_(c.p_in),
        p_cross_(c.classes > 1 ? c.p_out / static_cast<double>(c.classes - 1)
                               : 0.0),
        classes_(c.classes) {}

  double operator()(std::size_t a, std::size_t b) const {
    return a % classes_ == b % classes_ ? p_in_ : p_cross_;
  }

 private:
  double p_in_;
  double p_cross_;
  std::size_t classes_;
};

// Index drawn proportionally to weight(candidate); uniform if all are zero.
std::size_t weighted_pick(std::size_t count, const auto& weight,
                          std::mt19937_64& rng) {
  std::vector<double> w(count);
  double total = 0.0;
  for (std::size_t k = 0; k < count; ++k) total += (w[k] = weight(k));
  if (total <= 0.0) {
    return std::uniform_int_distribution<std::size_t>(0, count - 1)(rng);
  }
  return std::discrete_distribution<std::size_t>(w.begin(), w.end())(rng);
}

}  // namespace

Schema academic_schema() {
  return {{"Author", "write", "Paper"},   {"Paper", "write", "Author"},
          {"Paper", "cite", "Paper"},     {"Paper", "publish", "Venue"},
          {"Venue", "publish", "Paper"}};
}

HeterogeneousGraph synthetic_hin(const SyntheticConfig& config) {
  if (config.authors == 0 || config.papers == 0 || config.venues == 0 ||
      config.classes == 0) {
    throw Error(ErrorKind::config, "synthetic HIN counts must all be >= 1");
  }
  const double spread = config.classes > 1 ? static_cast<double>(config.classes - 1) : 1.0;
  if (!(config.p_out >= 0.0 && config.p_out <= spread * config.p_in &&
        config.p_in <= 1.0)) {
    throw Error(ErrorKind::config,
                "synthetic HIN needs 0 <= p_out <= (classes-1)*p_in and p_in <= 1, got p_in=" +
                    std::to_string(config.p_in) +
                    " p_out=" + std::to_string(config.p_out));
  }
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const ClassWeights weight(config);

  const std::size_t na = config.authors;
  const std::size_t np = config.papers;
  const std::size_t nv = config.venues;
  auto author = [](std::size_t a) { return a; };
  auto paper = [na](std::size_t p) { return na + p; };
  auto venue = [na, np](std::size_t v) { return na + np + v; };

  std::vector<Node> nodes;
  nodes.reserve(na + np + nv);
  for (std::size_t a = 0; a < na; ++a)
    nodes.push_back({author(a), "Author", static_cast<int>(a % config.classes)});
  for (std::size_t p = 0; p < np; ++p) nodes.push_back({paper(p), "Paper", {}});
  for (std::size_t v = 0; v < nv; ++v) nodes.push_back({venue(v), "Venue", {}});

  std::vector<Edge> edges;
  auto link = [&](std::size_t u, std::size_t v, const char* relation) {
    edges.push_back({u, v, relation});
    edges.push_back({v, u, relation});
  };

  for (std::size_t a = 0; a < na; ++a) {
    bool wrote = false;
    for (std::size_t p = 0; p < np; ++p) {
      if (unit(rng) < weight(a, p)) {
        link(author(a), paper(p), "write");
        wrote = true;
      }
    }
    if (!wrote) {
      const auto p = weighted_pick(np, [&](std::size_t q) { return weight(a, q); }, rng);
      link(author(a), paper(p), "write");
    }
  }
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t q = p + 1; q < np; ++q) {
      if (unit(rng) < weight(p, q)) link(paper(p), paper(q), "cite");
    }
  }
  for (std::size_t p = 0; p < np; ++p) {
    const auto v = weighted_pick(nv, [&](std::size_t w) { return weight(p, w); }, rng);
    link(paper(p), venue(v), "publish");
  }
  return HeterogeneousGraph(std::move(nodes), std::move(edges),
                            academic_schema(), "Author");
}

}  // namespace fedhin
