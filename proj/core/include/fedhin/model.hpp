#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fedhin/metapath.hpp"

namespace fedhin {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

enum class Activation { identity, relu, elu };

struct ModelDims {
  std::size_t embedding = 128;  // d
  std::size_t preference = 16;  // k
  std::size_t labels = 0;       // L
  std::size_t targets = 0;      // N_t
  std::size_t metapaths = 0;    // M
};

struct TensorShape {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;

  std::size_t size() const { return rows * cols; }
  bool operator==(const TensorShape&) const = default;
};

using ShapeManifest = std::vector<TensorShape>;

std::size_t total_size(const ShapeManifest& manifest);

/// All learnable tensors of the two-level attention model. Gradients and
/// Adam moments reuse this type.
///
/// The shared (federated) part is transform, combine, projection and
/// classifier; its flat layout is transform[0..M), combine[0..M), projection,
/// classifier, each tensor in column-major order. Preference vectors are
/// client-local.
struct ModelParams {
  std::vector<std::string> metapath_names;
  std::vector<Matrix> transform;  // per meta path: d x N_t
  std::vector<Matrix> combine;    // per meta path: d x 2d
  Matrix projection;              // k x d
  Matrix classifier;              // L x d
  Matrix preference;              // N_t x k, row i is p_i

  static ModelParams zeros(const ModelDims& dims,
                           std::vector<std::string> metapath_names);
  /// Matrices uniform in +-1/sqrt(fan_in); preference rows Gaussian scaled by
  /// 1/sqrt(k) then L2-normalized.
  static ModelParams initialize(const ModelDims& dims,
                                std::vector<std::string> metapath_names,
                                Rng& rng);

  ModelDims dims() const;
  ShapeManifest shared_manifest() const;
  std::size_t shared_size() const;
  std::vector<double> shared_flat() const;
  /// Throws shape error when the span length does not match.
  void set_shared_flat(std::span<const double> flat);

  /// fn(name, tensor) over every tensor, shared ones first, then "preference".
  template <typename Fn>
  void for_each_tensor(Fn&& fn) { visit(*this, fn); }
  template <typename Fn>
  void for_each_tensor(Fn&& fn) const { visit(*this, fn); }

  bool all_finite() const;

 private:
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn& fn) {
    for (std::size_t p = 0; p < self.transform.size(); ++p)
      fn("transform/" + self.metapath_names[p], self.transform[p]);
    for (std::size_t p = 0; p < self.combine.size(); ++p)
      fn("combine/" + self.metapath_names[p], self.combine[p]);
    fn(std::string("projection"), self.projection);
    fn(std::string("classifier"), self.classifier);
    fn(std::string("preference"), self.preference);
  }
};

/// The read-only graph view the model trains on: one square target x target
/// adjacency per meta path and target-local labels (-1 = unlabeled).
struct TrainingData {
  std::vector<MetaPathAdjacency> adjacency;
  std::vector<int> labels;
  std::size_t label_count = 0;

  std::size_t target_count() const { return labels.size(); }
  std::size_t metapath_count() const { return adjacency.size(); }
  std::vector<std::string> metapath_names() const;

  /// Every spec must start and end at the graph's target type.
  static TrainingData from_graph(const HeterogeneousGraph& g,
                                 const std::vector<MetaPathSpec>& specs,
                                 AdjacencyMode mode = AdjacencyMode::counts);
};

struct ModelOptions {
  Activation activation = Activation::elu;
  /// Neighbors drawn per node and meta path; 0 keeps the full neighborhood.
  std::size_t sample_size = 16;
};

struct Similarity {
  double value = 0.0;
  bool degenerate = false;  // a zero-norm input; value forced to 0
};

Similarity cosine(const Vector& a, const Vector& b);
Vector softmax(const Vector& x);
Vector activate(const Vector& z, Activation act);
Vector activation_derivative(const Vector& z, Activation act);

// ---- Node-level attention -------------------------------------------------

/// W_t^pi A_i^pi for target node i.
Vector transform_features(const ModelParams& params,
                          const MetaPathAdjacency& adj, std::size_t path,
                          std::size_t i);

Similarity node_similarity(const ModelParams& params,
                           const MetaPathAdjacency& adj, std::size_t path,
                           std::size_t i, std::size_t j);

/// (neighbor, coefficient) pairs
using NeighborWeights = std::vector<std::pair<std::size_t, double>>;

/// Softmax of node_similarity over the full meta-path neighborhood of i.
NeighborWeights node_attention(const ModelParams& params,
                               const MetaPathAdjacency& adj, std::size_t path,
                               std::size_t i);

/// Uniform sample without replacement of min(sample_size, |neighbors|)
/// entries, order preserved. sample_size 0 or a null rng keeps everything.
std::vector<std::size_t> sample_neighbors(const std::vector<std::size_t>& all,
                                          std::size_t sample_size, Rng* rng);

/// sigma(sum_j c_ij W_t A_j) over a uniform sample of the neighbors in
/// `coeffs`, with the coefficients renormalized over the sample.
Vector aggregate_neighbors(const ModelParams& params,
                           const MetaPathAdjacency& adj, std::size_t path,
                           const NeighborWeights& coeffs,
                           std::size_t sample_size, Activation act,
                           Rng* rng = nullptr);

/// W_c^pi [aggregated ; W_t^pi A_i^pi]
Vector metapath_embedding(const ModelParams& params,
                          const MetaPathAdjacency& adj, std::size_t path,
                          std::size_t i, const Vector& aggregated);

// ---- Meta-path-level attention --------------------------------------------

/// Softmax over pi of cosine(p_i, W_p e_i^pi).
Vector metapath_attention(const ModelParams& params, std::size_t i,
                          const std::vector<Vector>& embeddings);

Vector fuse(const std::vector<Vector>& embeddings, const Vector& coeffs);

// ---- Full forward / backward ----------------------------------------------

struct PathTrace {
  std::vector<std::size_t> neighbors;  // sampled neighborhood
  Vector similarity;                   // s_ij over neighbors
  Vector attention;                    // c_ij over neighbors
  Vector pre_activation;
  Vector aggregated;                   // e_N(i)
  Vector self_feature;                 // W_t A_i
  Vector embedding;                    // e_i^pi
  Vector projected;                    // W_p e_i^pi
  double preference_similarity = 0.0;  // delta'
};

struct NodeTrace {
  std::size_t node = 0;
  int label = -1;
  std::vector<PathTrace> paths;
  Vector metapath_weights;  // delta
  Vector fused;             // e_i
  Vector probabilities;
  double loss = 0.0;
};

struct ForwardTrace {
  std::vector<NodeTrace> nodes;
  /// Per meta path, W_t A_u columns for every node touched by the batch.
  std::vector<Matrix> features;
  std::vector<std::vector<char>> feature_ready;
  double loss = 0.0;
  /// Count of cosines that hit a zero-norm input.
  std::size_t degenerate_cosines = 0;
};

/// Forward pass over `nodes`. When `require_labels` every node must be
/// labeled and the trace carries the summed cross-entropy; otherwise loss
/// terms are computed only for labeled nodes.
ForwardTrace forward(const ModelParams& params, const TrainingData& data,
                     std::span<const std::size_t> nodes,
                     const ModelOptions& options, Rng* rng,
                     bool require_labels);

/// Summed cross-entropy -sum_i ln softmax(W_o e_i)_{y_i} over the batch.
/// Throws validation error on an unlabeled node.
ForwardTrace loss(const ModelParams& params, const TrainingData& data,
                  std::span<const std::size_t> batch,
                  const ModelOptions& options, Rng* rng = nullptr);

/// Exact gradient of trace.loss with respect to every tensor in params.
ModelParams backward(const ModelParams& params, const TrainingData& data,
                     const ForwardTrace& trace, const ModelOptions& options);

/// Fused embeddings e_i (one column per requested node), full neighborhoods.
Matrix embed(const ModelParams& params, const TrainingData& data,
             std::span<const std::size_t> nodes, const ModelOptions& options);

/// argmax class per node, full neighborhoods.
std::vector<int> predict(const ModelParams& params, const TrainingData& data,
                         std::span<const std::size_t> nodes,
                         const ModelOptions& options);

}  // namespace fedhin
