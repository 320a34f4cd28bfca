#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/SparseCore>

namespace fedhin {

using NodeIndex = std::size_t;
using SparseCounts = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct Node {
  NodeIndex id = 0;
  std::string type;
  std::optional<int> label;
};

struct Edge {
  NodeIndex src = 0;
  NodeIndex dst = 0;
  std::string relation;
};

struct SchemaTriple {
  std::string src_type;
  std::string relation;
  std::string dst_type;

  auto operator<=>(const SchemaTriple&) const = default;
};

using Schema = std::set<SchemaTriple>;

/// Typed directed multigraph G = (V, E, node type map, edge type map) plus its
/// network schema. Immutable after construction; construction validates:
///  - node ids are dense 0..N-1 (in order),
///  - every edge endpoint exists and its (src type, relation, dst type)
///    is a schema triple,
///  - no duplicate (src, dst, relation) edges,
///  - labels are non-negative and only on nodes of the target type.
class HeterogeneousGraph {
 public:
  HeterogeneousGraph(std::vector<Node> nodes, std::vector<Edge> edges,
                     Schema schema, std::string target_type = "Author");

  std::size_t node_count() const { return nodes_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  const std::vector<Node>& nodes() const { return nodes_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const Node& node(NodeIndex id) const;
  const Schema& schema() const { return schema_; }
  const std::string& target_type() const { return target_type_; }

  /// Node types declared anywhere in the schema.
  std::set<std::string> schema_types() const;

  /// Global ids of all nodes with `type`, ascending. Empty if none.
  const std::vector<NodeIndex>& nodes_of_type(const std::string& type) const;

  /// Position of a global id inside nodes_of_type(node(id).type).
  std::size_t local_index(NodeIndex id) const { return local_index_[id]; }

  const std::vector<NodeIndex>& target_nodes() const {
    return nodes_of_type(target_type_);
  }
  std::size_t target_count() const { return target_nodes().size(); }

  /// Labels indexed by target-local index; -1 marks unlabeled.
  std::vector<int> target_labels() const;
  /// 1 + max label; 0 if the graph carries no labels.
  std::size_t label_count() const { return label_count_; }

  /// N x N 0/1 matrix with a 1 exactly where an edge of `relation` exists.
  SparseCounts relation_adjacency(const std::string& relation) const;

  /// |src_type| x |dst_type| matrix over type-local indices, counting edges of
  /// any relation r with (src_type, r, dst_type) in the schema.
  SparseCounts typed_biadjacency(const std::string& src_type,
                                 const std::string& dst_type) const;

  bool has_relation(const std::string& src_type,
                    const std::string& dst_type) const;

 private:
  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  Schema schema_;
  std::string target_type_;
  std::map<std::string, std::vector<NodeIndex>> by_type_;
  std::vector<std::size_t> local_index_;
  std::size_t label_count_ = 0;
};

/// Reads `id,type,label` rows and `src,dst,relation` rows (comma separated,
/// optional header line, `#` comments and blank lines skipped).
HeterogeneousGraph load_graph(std::istream& node_table,
                              std::istream& edge_table, Schema schema,
                              std::string target_type = "Author");

/// Reads `src_type,relation,dst_type` rows.
Schema load_schema(std::istream& in);

void write_node_table(std::ostream& out, const HeterogeneousGraph& g);
void write_edge_table(std::ostream& out, const HeterogeneousGraph& g);
void write_schema(std::ostream& out, const Schema& schema);

}  // namespace fedhin
