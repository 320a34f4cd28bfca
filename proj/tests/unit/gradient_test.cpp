#include <gtest/gtest.h>

#include "fedhin/model.hpp"
#include "test_support.hpp"

using namespace fedhin;

namespace {

struct Problem {
  TrainingData data;
  ModelParams params;
  std::vector<std::size_t> batch;
};

Problem make_problem(std::uint64_t seed) {
  auto g = oracle::small_hin(seed);
  auto data = TrainingData::from_graph(
      g, {parse_metapath("APA"), parse_metapath("APPA"), parse_metapath("APVPA")});
  Rng rng(seed * 31 + 1);
  ModelDims dims{5, 3, data.label_count, data.target_count(), 3};
  auto params = ModelParams::initialize(dims, data.metapath_names(), rng);
  std::vector<std::size_t> batch;
  for (std::size_t i = 0; i < data.target_count(); ++i)
    if (data.labels[i] >= 0) batch.push_back(i);
  return {std::move(data), std::move(params), std::move(batch)};
}

void expect_gradients_match(const Problem& pr, const ModelOptions& options,
                            std::uint64_t sample_seed, std::uint64_t check_seed) {
  auto objective = [&](const ModelParams& p) {
    Rng rng(sample_seed);
    return loss(p, pr.data, pr.batch, options, &rng).loss;
  };
  Rng rng(sample_seed);
  auto trace = loss(pr.params, pr.data, pr.batch, options, &rng);
  auto grads = backward(pr.params, pr.data, trace, options);
  std::mt19937_64 pick(check_seed);
  for (const auto& r : oracle::finite_difference_check(pr.params, grads, objective, pick)) {
    EXPECT_EQ(r.checked, std::min<std::size_t>(20, r.size)) << r.tensor;
    EXPECT_LT(r.worst, 1e-4) << r.tensor;
  }
}

}  // namespace

TEST(Gradients, FullNeighborhoodsElu) {
  for (std::uint64_t seed = 1; seed <= 4; ++seed) {
    SCOPED_TRACE(seed);
    expect_gradients_match(make_problem(seed), {Activation::elu, 0}, 0, seed);
  }
}

TEST(Gradients, SampledNeighborhoods) {
  for (std::uint64_t seed = 5; seed <= 7; ++seed) {
    SCOPED_TRACE(seed);
    expect_gradients_match(make_problem(seed), {Activation::elu, 2}, seed, seed);
  }
}

TEST(Gradients, IdentityAndRelu) {
  expect_gradients_match(make_problem(8), {Activation::identity, 0}, 0, 8);
  expect_gradients_match(make_problem(9), {Activation::relu, 0}, 0, 9);
}

// A second shared paper raises the APA count between two authors to 2; the
// gradients must be those of the one-paper graph with A_ij scaled to 2.
TEST(Gradients, DuplicatePathEqualsScaledEntry) {
  const Schema schema{{"Author", "write", "Paper"}, {"Paper", "write", "Author"}};
  std::vector<Node> nodes{{0, "Author", 0}, {1, "Author", 1}, {2, "Author", 0},
                          {3, "Paper", {}}, {4, "Paper", {}}, {5, "Paper", {}}};
  auto both = [](std::size_t a, std::size_t p) {
    return std::vector<Edge>{{a, p, "write"}, {p, a, "write"}};
  };
  std::vector<Edge> single;
  for (auto [a, p] : {std::pair{0, 3}, {1, 3}, {1, 5}, {2, 5}, {2, 3}})
    for (auto e : both(a, p)) single.push_back(e);
  std::vector<Edge> doubled = single;
  for (auto [a, p] : {std::pair{0, 4}, {1, 4}})
    for (auto e : both(a, p)) doubled.push_back(e);

  HeterogeneousGraph g1(nodes, single, schema), g2(nodes, doubled, schema);
  const auto spec = parse_metapath("APA");
  auto scaled = TrainingData::from_graph(g1, {spec});
  scaled.adjacency[0].matrix.coeffRef(0, 1) = 2;
  scaled.adjacency[0].matrix.coeffRef(1, 0) = 2;
  auto dup = TrainingData::from_graph(g2, {spec});
  ASSERT_EQ(Eigen::MatrixXd(dup.adjacency[0].matrix), Eigen::MatrixXd(scaled.adjacency[0].matrix));

  Rng rng(4);
  auto params = ModelParams::initialize({4, 2, 2, 3, 1}, {"APA"}, rng);
  const std::vector<std::size_t> batch{0, 1, 2};
  const ModelOptions full{Activation::elu, 0};
  auto gd = backward(params, dup, loss(params, dup, batch, full), full);
  auto gs = backward(params, scaled, loss(params, scaled, batch, full), full);
  EXPECT_EQ(gd.shared_flat(), gs.shared_flat());
  EXPECT_EQ(gd.preference, gs.preference);

  auto objective = [&](const ModelParams& p) { return loss(p, scaled, batch, full).loss; };
  std::mt19937_64 pick(2);
  for (const auto& r : oracle::finite_difference_check(params, gs, objective, pick))
    EXPECT_LT(r.worst, 1e-4) << r.tensor;
}
