#include <gtest/gtest.h>

#include "fedhin/error.hpp"
#include "fedhin/metapath.hpp"
#include "test_support.hpp"

using namespace fedhin;

namespace {

HeterogeneousGraph toy_apa() {
  // a1, a2 both write p1
  return HeterogeneousGraph({{0, "Author", 0}, {1, "Author", 1}, {2, "Paper", {}}},
                            {{0, 2, "write"}, {2, 0, "write"}, {1, 2, "write"}, {2, 1, "write"}},
                            {{"Author", "write", "Paper"}, {"Paper", "write", "Author"}});
}

std::map<std::pair<std::size_t, std::size_t>, long> entries(const MetaPathAdjacency& adj) {
  std::map<std::pair<std::size_t, std::size_t>, long> out;
  for (Eigen::Index r = 0; r < adj.matrix.outerSize(); ++r)
    for (SparseCounts::InnerIterator it(adj.matrix, r); it; ++it)
      out[{static_cast<std::size_t>(it.row()), static_cast<std::size_t>(it.col())}] =
          static_cast<long>(it.value());
  return out;
}

}  // namespace

TEST(MetaPath, ParseAgainstAlphabet) {
  auto spec = parse_metapath("APVPA");
  EXPECT_EQ(spec.type_sequence,
            (std::vector<std::string>{"Author", "Paper", "Venue", "Paper", "Author"}));
  EXPECT_THROW(parse_metapath("AXA"), Error);
  EXPECT_THROW(parse_metapath("A"), Error);
}

TEST(MetaPath, ToyApa) {
  auto g = toy_apa();
  auto adj = metapath_adjacency(g, parse_metapath("APA"));
  EXPECT_EQ(adj.matrix.coeff(0, 1), 1.0);
  EXPECT_EQ(adj.matrix.coeff(1, 0), 1.0);
  EXPECT_EQ(adj.matrix.coeff(0, 0), 0.0);
  EXPECT_EQ(entries(adj), oracle::enumerate_walks(g, adj.metapath.type_sequence));
  EXPECT_EQ(neighbors_along(adj, 0), (std::vector<std::size_t>{1}));
}

TEST(MetaPath, NoPapersGivesZeroMatrix) {
  HeterogeneousGraph g({{0, "Author", 0}, {1, "Author", 1}}, {},
                       {{"Author", "write", "Paper"}, {"Paper", "write", "Author"}});
  auto adj = metapath_adjacency(g, parse_metapath("APA"));
  EXPECT_EQ(adj.rows(), 2u);
  EXPECT_EQ(adj.matrix.nonZeros(), 0);
}

TEST(MetaPath, AbsentTypeIsEmptyTypeError) {
  auto g = toy_apa();
  try {
    metapath_adjacency(g, parse_metapath("APVPA"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::empty_type);
  }
}

TEST(MetaPath, NeighborsAlongSupport) {
  MetaPathAdjacency adj;
  adj.matrix = SparseCounts(1, 4);
  adj.matrix.insert(0, 1) = 1;
  adj.matrix.insert(0, 3) = 2;
  EXPECT_EQ(neighbors_along(adj, 0), (std::vector<std::size_t>{1, 3}));
  MetaPathAdjacency zero;
  zero.matrix = SparseCounts(2, 2);
  EXPECT_TRUE(neighbors_along(zero, 1).empty());
  EXPECT_THROW(neighbors_along(zero, 2), Error);
}

TEST(MetaPath, RandomApvpaMatchesWalkEnumeration) {
  std::mt19937_64 rng(30);
  auto g = oracle::random_hin(rng, 30, 0.3);
  auto adj = metapath_adjacency(g, parse_metapath("APVPA"));
  EXPECT_EQ(entries(adj), oracle::enumerate_walks(g, adj.metapath.type_sequence));
}

TEST(MetaPath, OracleAndStructuralProperties) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    auto g = oracle::random_hin(rng, 40);
    for (const char* name : {"APA", "APPA", "APVPA", "PAP", "AP", "APV"}) {
      auto counts = metapath_adjacency(g, parse_metapath(name));
      auto binary = metapath_adjacency(g, parse_metapath(name), AdjacencyMode::binary);
      ASSERT_EQ(entries(counts), oracle::enumerate_walks(g, counts.metapath.type_sequence))
          << name << " trial " << trial;
      auto c = entries(counts);
      auto b = entries(binary);
      ASSERT_EQ(c.size(), b.size());
      for (const auto& [key, v] : c) {
        EXPECT_EQ(b.at(key), 1);
        EXPECT_GE(v, b.at(key));
      }
      const auto& types = counts.metapath.type_sequence;
      if (std::equal(types.begin(), types.end(), types.rbegin())) {
        Eigen::MatrixXd dense(counts.matrix);
        EXPECT_EQ(dense, dense.transpose()) << name;
      }
    }
    Eigen::MatrixXd ap(metapath_adjacency(g, parse_metapath("AP")).matrix);
    Eigen::MatrixXd bi(g.typed_biadjacency("Author", "Paper"));
    EXPECT_EQ(ap, bi);
  }
}
