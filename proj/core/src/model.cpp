#include "fedhin/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "fedhin/error.hpp"

namespace fedhin {
namespace {

Matrix uniform_matrix(std::size_t rows, std::size_t cols, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(cols, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = dist(rng);
  return m;
}

void check_path(const ModelParams& params, std::size_t path) {
  if (path >= params.transform.size()) {
    throw Error(ErrorKind::index, "meta path index " + std::to_string(path) +
                                      " out of range");
  }
}

void check_target(const ModelParams& params, std::size_t i) {
  if (i >= static_cast<std::size_t>(params.preference.rows())) {
    throw Error(ErrorKind::index, "target node " + std::to_string(i) +
                                      " out of range");
  }
}

// W_t A_u, cached per batch.
class FeatureCache {
 public:
  FeatureCache(const ModelParams& params, const TrainingData& data,
               ForwardTrace& trace)
      : params_(params), data_(data), trace_(trace) {
    const auto m = data.metapath_count();
    const auto d = static_cast<Eigen::Index>(params.dims().embedding);
    const auto n = static_cast<Eigen::Index>(data.target_count());
    trace_.features.assign(m, Matrix(d, n));
    trace_.feature_ready.assign(m, std::vector<char>(data.target_count(), 0));
  }

  const auto& get(std::size_t path, std::size_t u) {
    auto col = trace_.features[path].col(static_cast<Eigen::Index>(u));
    if (!trace_.feature_ready[path][u]) {
      col = transform_features(params_, data_.adjacency[path], path, u);
      trace_.feature_ready[path][u] = 1;
    }
    return trace_.features[path];
  }

  Vector column(std::size_t path, std::size_t u) {
    return get(path, u).col(static_cast<Eigen::Index>(u));
  }

 private:
  const ModelParams& params_;
  const TrainingData& data_;
  ForwardTrace& trace_;
};

double log_sum_exp(const Vector& x) {
  const double m = x.maxCoeff();
  return m + std::log((x.array() - m).exp().sum());
}

NodeTrace forward_node(const ModelParams& params, const TrainingData& data,
                       std::size_t i, int label, const ModelOptions& options,
                       Rng* rng, FeatureCache& cache,
                       std::size_t& degenerate) {
  const auto d = static_cast<Eigen::Index>(params.dims().embedding);
  const std::size_t paths = data.metapath_count();
  NodeTrace nt;
  nt.node = i;
  nt.label = label;
  nt.paths.resize(paths);
  std::vector<Vector> embeddings(paths);
  Vector raw_weights(static_cast<Eigen::Index>(paths));
  const Vector p_i = params.preference.row(static_cast<Eigen::Index>(i)).transpose();

  for (std::size_t pi = 0; pi < paths; ++pi) {
    PathTrace& pt = nt.paths[pi];
    pt.neighbors = sample_neighbors(neighbors_along(data.adjacency[pi], i),
                                    options.sample_size, rng);
    pt.self_feature = cache.column(pi, i);
    const auto n = static_cast<Eigen::Index>(pt.neighbors.size());
    pt.similarity.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      auto s = cosine(pt.self_feature, cache.column(pi, pt.neighbors[k]));
      degenerate += s.degenerate;
      pt.similarity[k] = s.value;
    }
    pt.attention = n > 0 ? softmax(pt.similarity) : Vector();
    pt.pre_activation = Vector::Zero(d);
    for (Eigen::Index k = 0; k < n; ++k) {
      pt.pre_activation += pt.attention[k] *
                           cache.get(pi, pt.neighbors[k]).col(
                               static_cast<Eigen::Index>(pt.neighbors[k]));
    }
    pt.aggregated = activate(pt.pre_activation, options.activation);
    const Matrix& wc = params.combine[pi];
    pt.embedding = wc.leftCols(d) * pt.aggregated + wc.rightCols(d) * pt.self_feature;
    pt.projected = params.projection * pt.embedding;
    auto s = cosine(p_i, pt.projected);
    degenerate += s.degenerate;
    pt.preference_similarity = s.value;
    raw_weights[static_cast<Eigen::Index>(pi)] = s.value;
    embeddings[pi] = pt.embedding;
  }

  nt.metapath_weights = softmax(raw_weights);
  nt.fused = fuse(embeddings, nt.metapath_weights);
  const Vector logits = params.classifier * nt.fused;
  const double lse = log_sum_exp(logits);
  nt.probabilities = (logits.array() - lse).exp().matrix();
  if (label >= 0) nt.loss = lse - logits[label];
  return nt;
}

// d/da and d/db of cosine(a, b) scaled by `upstream`; no-op when degenerate.
void cosine_backward(const Vector& a, const Vector& b, double value,
                     double upstream, Vector* da, Vector* db) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0 || upstream == 0.0) return;
  const double inv = 1.0 / (na * nb);
  if (da) *da += upstream * (b * inv - value * a / (na * na));
  if (db) *db += upstream * (a * inv - value * b / (nb * nb));
}

// Backward through softmax: dx = y * (dy - <y, dy>).
Vector softmax_backward(const Vector& y, const Vector& dy) {
  return y.cwiseProduct((dy.array() - y.dot(dy)).matrix());
}

}  // namespace

std::size_t total_size(const ShapeManifest& manifest) {
  std::size_t n = 0;
  for (const auto& t : manifest) n += t.size();
  return n;
}

ModelParams ModelParams::zeros(const ModelDims& dims,
                               std::vector<std::string> metapath_names) {
  if (metapath_names.size() != dims.metapaths) {
    throw Error(ErrorKind::shape, "meta path name count does not match M");
  }
  const auto d = static_cast<Eigen::Index>(dims.embedding);
  const auto k = static_cast<Eigen::Index>(dims.preference);
  const auto l = static_cast<Eigen::Index>(dims.labels);
  const auto n = static_cast<Eigen::Index>(dims.targets);
  ModelParams p;
  p.metapath_names = std::move(metapath_names);
  p.transform.assign(dims.metapaths, Matrix::Zero(d, n));
  p.combine.assign(dims.metapaths, Matrix::Zero(d, 2 * d));
  p.projection = Matrix::Zero(k, d);
  p.classifier = Matrix::Zero(l, d);
  p.preference = Matrix::Zero(n, k);
  return p;
}

ModelParams ModelParams::initialize(const ModelDims& dims,
                                    std::vector<std::string> metapath_names,
                                    Rng& rng) {
  if (dims.embedding == 0 || dims.preference == 0 || dims.labels == 0 ||
      dims.targets == 0 || dims.metapaths == 0) {
    throw Error(ErrorKind::shape, "model dimensions must all be positive");
  }
  ModelParams p = zeros(dims, std::move(metapath_names));
  for (auto& m : p.transform) m = uniform_matrix(m.rows(), m.cols(), rng);
  for (auto& m : p.combine) m = uniform_matrix(m.rows(), m.cols(), rng);
  p.projection = uniform_matrix(p.projection.rows(), p.projection.cols(), rng);
  p.classifier = uniform_matrix(p.classifier.rows(), p.classifier.cols(), rng);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(dims.preference));
  for (Eigen::Index r = 0; r < p.preference.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.preference.cols(); ++c)
      p.preference(r, c) = scale * gauss(rng);
    const double norm = p.preference.row(r).norm();
    if (norm > 0) p.preference.row(r) /= norm;
  }
  return p;
}

ModelDims ModelParams::dims() const {
  ModelDims d;
  d.embedding = static_cast<std::size_t>(projection.cols());
  d.preference = static_cast<std::size_t>(projection.rows());
  d.labels = static_cast<std::size_t>(classifier.rows());
  d.targets = static_cast<std::size_t>(preference.rows());
  d.metapaths = transform.size();
  return d;
}

ShapeManifest ModelParams::shared_manifest() const {
  ShapeManifest manifest;
  for_each_tensor([&](const std::string& name, const Matrix& m) {
    if (name == "preference") return;
    manifest.push_back({name, static_cast<std::size_t>(m.rows()),
                        static_cast<std::size_t>(m.cols())});
  });
  return manifest;
}

std::size_t ModelParams::shared_size() const {
  return total_size(shared_manifest());
}

std::vector<double> ModelParams::shared_flat() const {
  std::vector<double> flat;
  flat.reserve(shared_size());
  for_each_tensor([&](const std::string& name, const Matrix& m) {
    if (name == "preference") return;
    flat.insert(flat.end(), m.data(), m.data() + m.size());
  });
  return flat;
}

void ModelParams::set_shared_flat(std::span<const double> flat) {
  if (flat.size() != shared_size()) {
    throw Error(ErrorKind::shape,
                "flat parameter vector has " + std::to_string(flat.size()) +
                    " entries, expected " + std::to_string(shared_size()));
  }
  std::size_t offset = 0;
  for_each_tensor([&](const std::string& name, Matrix& m) {
    if (name == "preference") return;
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), m.size(),
                m.data());
    offset += static_cast<std::size_t>(m.size());
  });
}

bool ModelParams::all_finite() const {
  bool ok = true;
  for_each_tensor([&](const std::string&, const Matrix& m) {
    ok = ok && m.allFinite();
  });
  return ok;
}

std::vector<std::string> TrainingData::metapath_names() const {
  std::vector<std::string> names;
  for (const auto& a : adjacency) names.push_back(a.metapath.name);
  return names;
}

TrainingData TrainingData::from_graph(const HeterogeneousGraph& g,
                                      const std::vector<MetaPathSpec>& specs,
                                      AdjacencyMode mode) {
  if (specs.empty()) {
    throw Error(ErrorKind::config, "at least one meta path is required");
  }
  TrainingData data;
  for (const auto& spec : specs) {
    if (spec.type_sequence.front() != g.target_type() ||
        spec.type_sequence.back() != g.target_type()) {
      throw Error(ErrorKind::config, "meta path '" + spec.name +
                                         "' must start and end at target type " +
                                         g.target_type());
    }
    data.adjacency.push_back(metapath_adjacency(g, spec, mode));
  }
  data.labels = g.target_labels();
  data.label_count = g.label_count();
  return data;
}

Similarity cosine(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::shape, "cosine of vectors with different sizes");
  }
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return {0.0, true};
  return {a.dot(b) / (na * nb), false};
}

Vector softmax(const Vector& x) {
  if (x.size() == 0) return x;
  Vector e = (x.array() - x.maxCoeff()).exp().matrix();
  return e / e.sum();
}

Vector activate(const Vector& z, Activation act) {
  switch (act) {
    case Activation::identity: return z;
    case Activation::relu: return z.cwiseMax(0.0);
    case Activation::elu:
      return z.unaryExpr([](double v) { return v > 0 ? v : std::expm1(v); });
  }
  return z;
}

Vector activation_derivative(const Vector& z, Activation act) {
  switch (act) {
    case Activation::identity: return Vector::Ones(z.size());
    case Activation::relu:
      return z.unaryExpr([](double v) { return v > 0 ? 1.0 : 0.0; });
    case Activation::elu:
      return z.unaryExpr([](double v) { return v > 0 ? 1.0 : std::exp(v); });
  }
  return Vector::Ones(z.size());
}

Vector transform_features(const ModelParams& params,
                          const MetaPathAdjacency& adj, std::size_t path,
                          std::size_t i) {
  check_path(params, path);
  const Matrix& wt = params.transform[path];
  if (wt.cols() != adj.matrix.cols()) {
    throw Error(ErrorKind::shape,
                "transform for '" + adj.metapath.name + "' has " +
                    std::to_string(wt.cols()) + " columns, adjacency has " +
                    std::to_string(adj.matrix.cols()));
  }
  if (i >= adj.rows()) {
    throw Error(ErrorKind::index, "node " + std::to_string(i) +
                                      " out of range for '" +
                                      adj.metapath.name + "'");
  }
  Vector h = Vector::Zero(wt.rows());
  for (SparseCounts::InnerIterator it(adj.matrix, static_cast<Eigen::Index>(i));
       it; ++it) {
    h += it.value() * wt.col(it.col());
  }
  return h;
}

Similarity node_similarity(const ModelParams& params,
                           const MetaPathAdjacency& adj, std::size_t path,
                           std::size_t i, std::size_t j) {
  return cosine(transform_features(params, adj, path, i),
                transform_features(params, adj, path, j));
}

NeighborWeights node_attention(const ModelParams& params,
                               const MetaPathAdjacency& adj, std::size_t path,
                               std::size_t i) {
  const auto neighbors = neighbors_along(adj, i);
  const Vector hi = transform_features(params, adj, path, i);
  Vector s(static_cast<Eigen::Index>(neighbors.size()));
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    s[static_cast<Eigen::Index>(k)] =
        cosine(hi, transform_features(params, adj, path, neighbors[k])).value;
  }
  const Vector c = softmax(s);
  NeighborWeights out;
  for (std::size_t k = 0; k < neighbors.size(); ++k) {
    out.emplace_back(neighbors[k], c[static_cast<Eigen::Index>(k)]);
  }
  return out;
}

std::vector<std::size_t> sample_neighbors(const std::vector<std::size_t>& all,
                                          std::size_t sample_size, Rng* rng) {
  if (sample_size == 0 || rng == nullptr || all.size() <= sample_size) {
    return all;
  }
  std::vector<std::size_t> out;
  out.reserve(sample_size);
  std::sample(all.begin(), all.end(), std::back_inserter(out), sample_size,
              *rng);
  return out;
}

Vector aggregate_neighbors(const ModelParams& params,
                           const MetaPathAdjacency& adj, std::size_t path,
                           const NeighborWeights& coeffs,
                           std::size_t sample_size, Activation act, Rng* rng) {
  check_path(params, path);
  std::vector<std::size_t> positions(coeffs.size());
  for (std::size_t k = 0; k < positions.size(); ++k) positions[k] = k;
  positions = sample_neighbors(positions, sample_size, rng);
  double total = 0.0;
  for (auto k : positions) total += coeffs[k].second;
  Vector z = Vector::Zero(params.transform[path].rows());
  if (total > 0.0) {
    for (auto k : positions) {
      z += (coeffs[k].second / total) *
           transform_features(params, adj, path, coeffs[k].first);
    }
  }
  return activate(z, act);
}

Vector metapath_embedding(const ModelParams& params,
                          const MetaPathAdjacency& adj, std::size_t path,
                          std::size_t i, const Vector& aggregated) {
  check_path(params, path);
  const Matrix& wc = params.combine[path];
  const Eigen::Index d = wc.rows();
  if (aggregated.size() != d || wc.cols() != 2 * d) {
    throw Error(ErrorKind::shape, "combine matrix for '" + adj.metapath.name +
                                      "' does not match the embedding size");
  }
  return wc.leftCols(d) * aggregated +
         wc.rightCols(d) * transform_features(params, adj, path, i);
}

Vector metapath_attention(const ModelParams& params, std::size_t i,
                          const std::vector<Vector>& embeddings) {
  check_target(params, i);
  if (embeddings.empty()) {
    throw Error(ErrorKind::shape, "meta-path attention needs at least one path");
  }
  const Vector p_i = params.preference.row(static_cast<Eigen::Index>(i)).transpose();
  Vector raw(static_cast<Eigen::Index>(embeddings.size()));
  for (std::size_t k = 0; k < embeddings.size(); ++k) {
    if (embeddings[k].size() != params.projection.cols()) {
      throw Error(ErrorKind::shape, "embedding size does not match projection");
    }
    raw[static_cast<Eigen::Index>(k)] =
        cosine(p_i, params.projection * embeddings[k]).value;
  }
  return softmax(raw);
}

Vector fuse(const std::vector<Vector>& embeddings, const Vector& coeffs) {
  if (embeddings.empty() ||
      coeffs.size() != static_cast<Eigen::Index>(embeddings.size())) {
    throw Error(ErrorKind::shape, "fuse needs one coefficient per embedding");
  }
  Vector out = Vector::Zero(embeddings.front().size());
  for (std::size_t k = 0; k < embeddings.size(); ++k) {
    out += coeffs[static_cast<Eigen::Index>(k)] * embeddings[k];
  }
  return out;
}

ForwardTrace forward(const ModelParams& params, const TrainingData& data,
                     std::span<const std::size_t> nodes,
                     const ModelOptions& options, Rng* rng,
                     bool require_labels) {
  if (params.transform.size() != data.metapath_count() ||
      params.dims().targets != data.target_count()) {
    throw Error(ErrorKind::shape, "parameters do not match the training data");
  }
  ForwardTrace trace;
  FeatureCache cache(params, data, trace);
  trace.nodes.reserve(nodes.size());
  for (std::size_t i : nodes) {
    check_target(params, i);
    const int label = data.labels[i];
    if (require_labels && label < 0) {
      throw Error(ErrorKind::validation,
                  "batch node " + std::to_string(i) + " has no label");
    }
    if (label >= static_cast<int>(params.classifier.rows())) {
      throw Error(ErrorKind::shape, "label " + std::to_string(label) +
                                        " exceeds classifier size");
    }
    trace.nodes.push_back(forward_node(params, data, i, label, options, rng,
                                       cache, trace.degenerate_cosines));
    trace.loss += trace.nodes.back().loss;
  }
  return trace;
}

ForwardTrace loss(const ModelParams& params, const TrainingData& data,
                  std::span<const std::size_t> batch,
                  const ModelOptions& options, Rng* rng) {
  return forward(params, data, batch, options, rng, true);
}

ModelParams backward(const ModelParams& params, const TrainingData& data,
                     const ForwardTrace& trace, const ModelOptions& options) {
  const ModelDims dims = params.dims();
  const auto d = static_cast<Eigen::Index>(dims.embedding);
  const std::size_t paths = dims.metapaths;
  ModelParams grads = ModelParams::zeros(dims, params.metapath_names);
  std::vector<Matrix> feature_grads(paths, Matrix::Zero(d, static_cast<Eigen::Index>(dims.targets)));
  std::vector<std::vector<char>> touched(paths, std::vector<char>(dims.targets, 0));

  auto feature = [&](std::size_t pi, std::size_t u) {
    return trace.features[pi].col(static_cast<Eigen::Index>(u));
  };
  auto add_feature_grad = [&](std::size_t pi, std::size_t u, const Vector& g) {
    feature_grads[pi].col(static_cast<Eigen::Index>(u)) += g;
    touched[pi][u] = 1;
  };

  for (const NodeTrace& nt : trace.nodes) {
    if (nt.label < 0) continue;
    const std::size_t i = nt.node;
    Vector dlogits = nt.probabilities;
    dlogits[nt.label] -= 1.0;
    grads.classifier += dlogits * nt.fused.transpose();
    const Vector dfused = params.classifier.transpose() * dlogits;

    Vector dweights(static_cast<Eigen::Index>(paths));
    for (std::size_t pi = 0; pi < paths; ++pi) {
      dweights[static_cast<Eigen::Index>(pi)] = dfused.dot(nt.paths[pi].embedding);
    }
    const Vector draw = softmax_backward(nt.metapath_weights, dweights);
    const Vector p_i = params.preference.row(static_cast<Eigen::Index>(i)).transpose();
    Vector dp = Vector::Zero(p_i.size());

    for (std::size_t pi = 0; pi < paths; ++pi) {
      const PathTrace& pt = nt.paths[pi];
      Vector dembedding = nt.metapath_weights[static_cast<Eigen::Index>(pi)] * dfused;

      Vector dprojected = Vector::Zero(pt.projected.size());
      cosine_backward(p_i, pt.projected, pt.preference_similarity,
                      draw[static_cast<Eigen::Index>(pi)], &dp, &dprojected);
      grads.projection += dprojected * pt.embedding.transpose();
      dembedding += params.projection.transpose() * dprojected;

      Vector concat(2 * d);
      concat << pt.aggregated, pt.self_feature;
      grads.combine[pi] += dembedding * concat.transpose();
      const Vector dconcat = params.combine[pi].transpose() * dembedding;
      Vector dself = dconcat.tail(d);
      const Vector dz = dconcat.head(d).cwiseProduct(
          activation_derivative(pt.pre_activation, options.activation));

      const auto n = static_cast<Eigen::Index>(pt.neighbors.size());
      if (n > 0) {
        Vector dattention(n);
        for (Eigen::Index k = 0; k < n; ++k) {
          const auto j = pt.neighbors[static_cast<std::size_t>(k)];
          dattention[k] = dz.dot(feature(pi, j));
          add_feature_grad(pi, j, pt.attention[k] * dz);
        }
        const Vector dsim = softmax_backward(pt.attention, dattention);
        for (Eigen::Index k = 0; k < n; ++k) {
          const auto j = pt.neighbors[static_cast<std::size_t>(k)];
          const Vector hj = feature(pi, j);
          Vector dhj = Vector::Zero(d);
          cosine_backward(pt.self_feature, hj, pt.similarity[k], dsim[k],
                          &dself, &dhj);
          add_feature_grad(pi, j, dhj);
        }
      }
      add_feature_grad(pi, i, dself);
    }
    grads.preference.row(static_cast<Eigen::Index>(i)) += dp.transpose();
  }

  // W_t A_u = sum_c A_uc W_t[:, c]  =>  dW_t[:, c] += A_uc dH[:, u]
  for (std::size_t pi = 0; pi < paths; ++pi) {
    const SparseCounts& a = data.adjacency[pi].matrix;
    for (std::size_t u = 0; u < dims.targets; ++u) {
      if (!touched[pi][u]) continue;
      const auto g = feature_grads[pi].col(static_cast<Eigen::Index>(u));
      for (SparseCounts::InnerIterator it(a, static_cast<Eigen::Index>(u)); it;
           ++it) {
        grads.transform[pi].col(it.col()) += it.value() * g;
      }
    }
  }
  return grads;
}

Matrix embed(const ModelParams& params, const TrainingData& data,
             std::span<const std::size_t> nodes, const ModelOptions& options) {
  ModelOptions full = options;
  full.sample_size = 0;
  ForwardTrace trace = forward(params, data, nodes, full, nullptr, false);
  Matrix out(static_cast<Eigen::Index>(params.dims().embedding),
             static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t k = 0; k < trace.nodes.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = trace.nodes[k].fused;
  }
  return out;
}

std::vector<int> predict(const ModelParams& params, const TrainingData& data,
                         std::span<const std::size_t> nodes,
                         const ModelOptions& options) {
  ModelOptions full = options;
  full.sample_size = 0;
  ForwardTrace trace = forward(params, data, nodes, full, nullptr, false);
  std::vector<int> out;
  out.reserve(nodes.size());
  for (const auto& nt : trace.nodes) {
    Eigen::Index best = 0;
    nt.probabilities.maxCoeff(&best);
    out.push_back(static_cast<int>(best));
  }
  return out;
}

}  // namespace fedhin
