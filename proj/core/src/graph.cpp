#include "fedhin/graph.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <tuple>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    auto comma = line.find(',', start);
    fields.push_back(trim(std::string_view(line).substr(
        start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Calls fn(line_number, fields) for every data row. The first non-comment row
// is treated as a header when its first field equals `header_key`.
template <typename Fn>
void for_each_row(std::istream& in, std::string_view header_key,
                  std::size_t columns, Fn&& fn) {
  std::string line;
  std::size_t line_no = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++line_no;
    auto content = trim(line);
    if (content.empty() || content.front() == '#') continue;
    auto fields = split_row(content);
    if (first_row) {
      first_row = false;
      if (fields.front() == header_key) continue;
    }
    if (fields.size() != columns) {
      throw ParseError(line_no, "expected " + std::to_string(columns) +
                                    " columns, got " +
                                    std::to_string(fields.size()));
    }
    fn(line_no, fields);
  }
}

std::string describe(const Edge& e, const std::string& src_type,
                     const std::string& dst_type) {
  return std::to_string(e.src) + " (" + src_type + ") -[" + e.relation +
         "]-> " + std::to_string(e.dst) + " (" + dst_type + ")";
}

}  // namespace

HeterogeneousGraph::HeterogeneousGraph(std::vector<Node> nodes,
                                       std::vector<Edge> edges, Schema schema,
                                       std::string target_type)
    : nodes_(std::move(nodes)),
      edges_(std::move(edges)),
      schema_(std::move(schema)),
      target_type_(std::move(target_type)) {
  std::sort(nodes_.begin(), nodes_.end(),
            [](const Node& a, const Node& b) { return a.id < b.id; });
  local_index_.resize(nodes_.size());
  int max_label = -1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const Node& n = nodes_[i];
    if (n.id != i) {
      throw Error(ErrorKind::validation,
                  "node ids must be dense 0..N-1; missing or duplicate id at " +
                      std::to_string(i));
    }
    if (n.type.empty()) {
      throw Error(ErrorKind::validation,
                  "node " + std::to_string(i) + " has an empty type");
    }
    if (n.label) {
      if (n.type != target_type_) {
        throw Error(ErrorKind::validation,
                    "node " + std::to_string(i) + " of type " + n.type +
                        " carries a label; only " + target_type_ +
                        " nodes may be labeled");
      }
      if (*n.label < 0) {
        throw Error(ErrorKind::validation,
                    "node " + std::to_string(i) + " has a negative label");
      }
      max_label = std::max(max_label, *n.label);
    }
    auto& bucket = by_type_[n.type];
    local_index_[i] = bucket.size();
    bucket.push_back(i);
  }
  label_count_ = static_cast<std::size_t>(max_label + 1);

  std::set<std::tuple<NodeIndex, NodeIndex, std::string>> seen;
  for (const Edge& e : edges_) {
    if (e.src >= nodes_.size() || e.dst >= nodes_.size()) {
      throw Error(ErrorKind::validation,
                  "edge " + std::to_string(e.src) + " -[" + e.relation +
                      "]-> " + std::to_string(e.dst) +
                      " references an unknown node");
    }
    const auto& st = nodes_[e.src].type;
    const auto& dt = nodes_[e.dst].type;
    if (!schema_.contains({st, e.relation, dt})) {
      throw Error(ErrorKind::validation,
                  "edge " + describe(e, st, dt) + " violates the schema");
    }
    if (!seen.emplace(e.src, e.dst, e.relation).second) {
      throw Error(ErrorKind::validation,
                  "duplicate edge " + describe(e, st, dt));
    }
  }
}

const Node& HeterogeneousGraph::node(NodeIndex id) const {
  if (id >= nodes_.size()) {
    throw Error(ErrorKind::index, "node id " + std::to_string(id) +
                                      " out of range (N = " +
                                      std::to_string(nodes_.size()) + ")");
  }
  return nodes_[id];
}

std::set<std::string> HeterogeneousGraph::schema_types() const {
  std::set<std::string> types;
  for (const auto& t : schema_) {
    types.insert(t.src_type);
    types.insert(t.dst_type);
  }
  return types;
}

const std::vector<NodeIndex>& HeterogeneousGraph::nodes_of_type(
    const std::string& type) const {
  static const std::vector<NodeIndex> kEmpty;
  auto it = by_type_.find(type);
  return it == by_type_.end() ? kEmpty : it->second;
}

std::vector<int> HeterogeneousGraph::target_labels() const {
  const auto& targets = target_nodes();
  std::vector<int> labels(targets.size(), -1);
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (auto l = nodes_[targets[i]].label) labels[i] = *l;
  }
  return labels;
}

SparseCounts HeterogeneousGraph::relation_adjacency(
    const std::string& relation) const {
  std::vector<Eigen::Triplet<double>> entries;
  for (const Edge& e : edges_) {
    if (e.relation == relation) entries.emplace_back(e.src, e.dst, 1.0);
  }
  SparseCounts m(nodes_.size(), nodes_.size());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

bool HeterogeneousGraph::has_relation(const std::string& src_type,
                                      const std::string& dst_type) const {
  return std::any_of(schema_.begin(), schema_.end(), [&](const auto& t) {
    return t.src_type == src_type && t.dst_type == dst_type;
  });
}

SparseCounts HeterogeneousGraph::typed_biadjacency(
    const std::string& src_type, const std::string& dst_type) const {
  std::vector<Eigen::Triplet<double>> entries;
  for (const Edge& e : edges_) {
    const auto& st = nodes_[e.src].type;
    const auto& dt = nodes_[e.dst].type;
    if (st == src_type && dt == dst_type) {
      entries.emplace_back(local_index_[e.src], local_index_[e.dst], 1.0);
    }
  }
  SparseCounts m(nodes_of_type(src_type).size(),
                 nodes_of_type(dst_type).size());
  m.setFromTriplets(entries.begin(), entries.end());
  return m;
}

HeterogeneousGraph load_graph(std::istream& node_table,
                              std::istream& edge_table, Schema schema,
                              std::string target_type) {
  std::vector<Node> nodes;
  for_each_row(node_table, "id", 3,
               [&](std::size_t line, const std::vector<std::string>& f) {
                 Node n;
                 if (!parse_number(f[0], n.id)) {
                   throw ParseError(line, "invalid node id '" + f[0] + "'");
                 }
                 if (f[1].empty()) throw ParseError(line, "empty node type");
                 n.type = f[1];
                 if (!f[2].empty()) {
                   int label = 0;
                   if (!parse_number(f[2], label)) {
                     throw ParseError(line, "invalid label '" + f[2] + "'");
                   }
                   n.label = label;
                 }
                 nodes.push_back(std::move(n));
               });
  std::vector<Edge> edges;
  for_each_row(edge_table, "src", 3,
               [&](std::size_t line, const std::vector<std::string>& f) {
                 Edge e;
                 if (!parse_number(f[0], e.src) || !parse_number(f[1], e.dst)) {
                   throw ParseError(line, "invalid edge endpoint");
                 }
                 if (f[2].empty()) throw ParseError(line, "empty relation");
                 e.relation = f[2];
                 edges.push_back(std::move(e));
               });
  return HeterogeneousGraph(std::move(nodes), std::move(edges),
                            std::move(schema), std::move(target_type));
}

Schema load_schema(std::istream& in) {
  Schema schema;
  for_each_row(in, "src_type", 3,
               [&](std::size_t line, const std::vector<std::string>& f) {
                 if (f[0].empty() || f[1].empty() || f[2].empty()) {
                   throw ParseError(line, "empty schema field");
                 }
                 schema.insert({f[0], f[1], f[2]});
               });
  return schema;
}

void write_node_table(std::ostream& out, const HeterogeneousGraph& g) {
  out << "id,type,label\n";
  for (const auto& n : g.nodes()) {
    out << n.id << ',' << n.type << ',';
    if (n.label) out << *n.label;
    out << '\n';
  }
}

void write_edge_table(std::ostream& out, const HeterogeneousGraph& g) {
  out << "src,dst,relation\n";
  for (const auto& e : g.edges()) {
    out << e.src << ',' << e.dst << ',' << e.relation << '\n';
  }
}

void write_schema(std::ostream& out, const Schema& schema) {
  out << "src_type,relation,dst_type\n";
  for (const auto& t : schema) {
    out << t.src_type << ',' << t.relation << ',' << t.dst_type << '\n';
  }
}

}  // namespace fedhin
