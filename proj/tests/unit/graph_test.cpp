#include <sstream>

#include <gtest/gtest.h>

#include "fedhin/error.hpp"
#include "fedhin/graph.hpp"
#include "test_support.hpp"

using namespace fedhin;

namespace {

Schema write_schema_ap() {
  return {{"Author", "write", "Paper"}};
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::io;
}

}  // namespace

TEST(Graph, MinimalLoad) {
  std::istringstream nodes("id,type,label\n0,Author,0\n1,Author,1\n2,Author,0\n3,Paper,\n");
  std::istringstream edges("src,dst,relation\n0,3,write\n1,3,write\n2,3,write\n");
  auto g = load_graph(nodes, edges, write_schema_ap());
  EXPECT_EQ(g.node_count(), 4u);
  EXPECT_EQ(g.edge_count(), 3u);
  EXPECT_EQ(g.schema().size(), 1u);
  EXPECT_EQ(g.target_count(), 3u);
  EXPECT_EQ(g.label_count(), 2u);
  EXPECT_EQ(g.target_labels(), (std::vector<int>{0, 1, 0}));
}

TEST(Graph, SchemaViolationNamesEdge) {
  std::istringstream nodes("0,Author,0\n1,Venue,\n");
  std::istringstream edges("1,0,write\n");
  try {
    load_graph(nodes, edges, write_schema_ap());
    FAIL() << "expected validation error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
    EXPECT_NE(std::string(e.what()).find("1 (Venue) -[write]-> 0 (Author)"), std::string::npos)
        << e.what();
  }
}

TEST(Graph, MalformedRowReportsLineNumber) {
  std::istringstream nodes("id,type,label\n# comment\n0,Author,0\n1,Paper\n");
  std::istringstream edges("");
  try {
    load_graph(nodes, edges, write_schema_ap());
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
  std::istringstream nodes2("0,Author,0\n1,Paper,\n");
  std::istringstream edges2("0,1,write\n\n0,x,write\n");
  try {
    load_graph(nodes2, edges2, write_schema_ap());
    FAIL() << "expected parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
}

TEST(Graph, ConstructionInvariants) {
  const Schema s = write_schema_ap();
  // ids not dense
  EXPECT_EQ(kind_of([&] { HeterogeneousGraph({{0, "Author", 0}, {2, "Paper", {}}}, {}, s); }),
            ErrorKind::validation);
  // label on non-target node
  EXPECT_EQ(kind_of([&] { HeterogeneousGraph({{0, "Author", 0}, {1, "Paper", 1}}, {}, s); }),
            ErrorKind::validation);
  // dangling edge
  EXPECT_EQ(kind_of([&] { HeterogeneousGraph({{0, "Author", 0}}, {{0, 5, "write"}}, s); }),
            ErrorKind::validation);
  // duplicate edge
  EXPECT_EQ(kind_of([&] {
              HeterogeneousGraph({{0, "Author", 0}, {1, "Paper", {}}},
                                 {{0, 1, "write"}, {0, 1, "write"}}, s);
            }),
            ErrorKind::validation);
  HeterogeneousGraph g({{0, "Author", 0}}, {}, s);
  EXPECT_EQ(kind_of([&] { g.node(3); }), ErrorKind::index);
}

TEST(Graph, RelationAdjacencyMatchesEdges) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = oracle::random_hin(rng, 30);
    for (const std::string rel : {"write", "cite", "publish"}) {
      auto a = g.relation_adjacency(rel);
      std::set<std::pair<std::size_t, std::size_t>> expected;
      for (const auto& e : g.edges())
        if (e.relation == rel) expected.emplace(e.src, e.dst);
      std::size_t nnz = 0;
      for (Eigen::Index r = 0; r < a.outerSize(); ++r) {
        for (SparseCounts::InnerIterator it(a, r); it; ++it) {
          EXPECT_EQ(it.value(), 1.0);
          EXPECT_TRUE(expected.contains({static_cast<std::size_t>(it.row()),
                                         static_cast<std::size_t>(it.col())}));
          ++nnz;
        }
      }
      EXPECT_EQ(nnz, expected.size());
    }
  }
}

TEST(Graph, TableRoundTrip) {
  std::mt19937_64 rng(3);
  auto g = oracle::random_hin(rng, 30);
  std::stringstream nodes, edges, schema;
  write_node_table(nodes, g);
  write_edge_table(edges, g);
  write_schema(schema, g.schema());
  auto s = load_schema(schema);
  auto h = load_graph(nodes, edges, s);
  EXPECT_EQ(h.node_count(), g.node_count());
  EXPECT_EQ(h.edge_count(), g.edge_count());
  EXPECT_EQ(h.schema(), g.schema());
  EXPECT_EQ(h.target_labels(), g.target_labels());
}

// Table I's DBLP row has 10650 nodes and 39888 edges; the loader must keep
// every row of files that size.
TEST(Graph, DblpScaleCounts) {
  const std::size_t authors = 4000, papers = 6650;
  std::ostringstream nodes, edges;
  nodes << "id,type,label\n";
  for (std::size_t i = 0; i < authors; ++i) nodes << i << ",Author," << i % 4 << '\n';
  for (std::size_t p = 0; p < papers; ++p) nodes << authors + p << ",Paper,\n";
  edges << "src,dst,relation\n";
  for (std::size_t k = 0; k < 19944; ++k) {
    const std::size_t a = k % authors;
    const std::size_t p = authors + (a + (k / authors) * 1000) % papers;
    edges << a << ',' << p << ",write\n" << p << ',' << a << ",write\n";
  }
  std::istringstream ni(nodes.str()), ei(edges.str());
  auto g = load_graph(ni, ei, {{"Author", "write", "Paper"}, {"Paper", "write", "Author"}});
  EXPECT_EQ(g.node_count(), 10650u);
  EXPECT_EQ(g.edge_count(), 39888u);
  EXPECT_EQ(g.label_count(), 4u);
}
