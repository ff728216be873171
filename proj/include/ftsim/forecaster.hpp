#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ftsim/trace.hpp"
#include "ftsim/types.hpp"

namespace ftsim {

/// Geometry of the network-of-networks: one private feed-forward sub-network
/// per resource, evaluated jointly. Layers hold *sets* of nodes; node i of a
/// set only ever connects to node i of the next layer's sets, so the
/// per-resource weight blocks are disjoint.
///
/// No bias terms. Per-resource weight count:
///   input_sets*hidden_sets + hidden_sets^2*(hidden_layers-1) + hidden_sets*output_sets
struct NetworkLayout {
  int n_resources = kNumResources;
  int input_sets = 6;    // window length l
  int hidden_sets = 8;   // sets per hidden layer
  int hidden_layers = 2; // total hidden layers
  int output_sets = 1;   // fixed one-step horizon

  int weights_per_resource() const {
    return input_sets * hidden_sets + hidden_sets * hidden_sets * (hidden_layers - 1) +
           hidden_sets * output_sets;
  }
  int total_weights() const { return n_resources * weights_per_resource(); }
  int input_width() const { return input_sets * n_resources; }

  void validate() const;
  bool operator==(const NetworkLayout&) const = default;
};

/// Flattened weight vector of one candidate network. Encoding order:
/// resource-major, then layer-major, then (source set, dest set) row-major.
struct NetworkGenome {
  NetworkLayout layout;
  Vector weights;
  double fitness = std::numeric_limits<double>::quiet_NaN();  // RMSE, NaN = unset

  bool has_fitness() const { return std::isfinite(fitness); }
};

/// Window matrices rearranged per resource so genome evaluation is a chain of
/// dense products; reused across a whole training run.
struct EvalBatch {
  std::vector<Matrix> inputs_per_resource;  // n matrices, each m x l
  Matrix targets;                           // m x n

  static EvalBatch from_windows(const WindowSet& windows, const NetworkLayout& layout);
  Eigen::Index rows() const { return targets.rows(); }
};

/// Joint feed-forward pass: sigmoid hidden activations, identity output.
/// Input is one flattened window (length l*n, time-major, resource inner);
/// returns one normalized value per resource.
Vector forward(const NetworkGenome& genome, const Eigen::Ref<const Vector>& input);

/// Batch variant of forward over every row of a prepared batch.
Matrix forward_batch(const NetworkGenome& genome, const EvalBatch& batch);

/// Multi-output root mean squared error over all entries.
template <typename DerivedA, typename DerivedB>
double rmse(const Eigen::MatrixBase<DerivedA>& actual, const Eigen::MatrixBase<DerivedB>& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw std::invalid_argument("rmse: shape mismatch");
  if (actual.rows() < 1) throw std::invalid_argument("rmse: need at least one sample");
  const double mean_sq =
      (actual - predicted).array().square().sum() / static_cast<double>(actual.size());
  return std::sqrt(mean_sq);
}

/// Column-wise RMSE, one value per resource.
Vector rmse_per_resource(const Matrix& actual, const Matrix& predicted);

double evaluate_rmse(const NetworkGenome& genome, const EvalBatch& batch);

struct Prediction {
  std::string vm_id;
  ResourceVector predicted_norm = ResourceVector::Zero();  // model space
  ResourceVector denormalized = ResourceVector::Zero();    // capacity fraction, clamped to [0,1]
};

/// Forward on the last l values of `series` (raw capacity fractions), using
/// `record` to map into and out of model space.
Prediction predict_next(const NetworkGenome& genome, const VmSeries& series, const NormRecord& record);

/// Genome file format: JSON object {"layout": {...}, "weights": [...]}.
std::string genome_to_json(const NetworkGenome& genome);
NetworkGenome genome_from_json(const std::string& text);
void save_genome(const NetworkGenome& genome, const std::string& path);
NetworkGenome load_genome(const std::string& path);

}  // namespace ftsim
