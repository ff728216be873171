#include "ftsim/forecaster.hpp"

#include <fstream>

#include <json.hpp>

namespace ftsim {

namespace {

using RowMajorMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Weight block offsets inside one resource's slice of the flat vector.
struct BlockView {
  RowMajorMap input_to_hidden;          // l x h
  std::vector<RowMajorMap> hidden_step; // h x h, hidden_layers-1 of them
  Eigen::Map<const Vector> hidden_to_output;  // h (output_sets == 1)
};

BlockView blocks_for_resource(const NetworkGenome& genome, int resource) {
  const NetworkLayout& L = genome.layout;
  const double* base = genome.weights.data() +
                       static_cast<std::ptrdiff_t>(resource) * L.weights_per_resource();
  const double* p = base;
  RowMajorMap w_in(p, L.input_sets, L.hidden_sets);
  p += L.input_sets * L.hidden_sets;
  std::vector<RowMajorMap> steps;
  steps.reserve(static_cast<std::size_t>(L.hidden_layers - 1));
  for (int k = 1; k < L.hidden_layers; ++k) {
    steps.emplace_back(p, L.hidden_sets, L.hidden_sets);
    p += L.hidden_sets * L.hidden_sets;
  }
  Eigen::Map<const Vector> w_out(p, L.hidden_sets);
  return BlockView{w_in, std::move(steps), w_out};
}

inline void sigmoid_in_place(Matrix& m) { m = (1.0 / (1.0 + (-m.array()).exp())).matrix(); }
inline void sigmoid_in_place(Vector& v) { v = (1.0 / (1.0 + (-v.array()).exp())).matrix(); }

void check_genome(const NetworkGenome& genome) {
  genome.layout.validate();
  if (genome.weights.size() != genome.layout.total_weights())
    throw std::invalid_argument("genome weight vector has length " +
                                std::to_string(genome.weights.size()) + ", layout requires " +
                                std::to_string(genome.layout.total_weights()));
}

}  // namespace

void NetworkLayout::validate() const {
  if (n_resources < 1 || input_sets < 1 || hidden_sets < 1 || hidden_layers < 1)
    throw std::invalid_argument("network layout counts must all be >= 1");
  if (output_sets != 1)
    throw std::invalid_argument("output_sets is fixed to 1 (one-step horizon)");
}

EvalBatch EvalBatch::from_windows(const WindowSet& windows, const NetworkLayout& layout) {
  layout.validate();
  if (windows.window_length != layout.input_sets)
    throw std::invalid_argument("window length " + std::to_string(windows.window_length) +
                                " does not match layout input_sets " +
                                std::to_string(layout.input_sets));
  if (windows.n_resources != layout.n_resources)
    throw std::invalid_argument("window resource count does not match layout");

  const int n = layout.n_resources;
  const int l = layout.input_sets;
  EvalBatch batch;
  batch.inputs_per_resource.resize(static_cast<std::size_t>(n));
  for (int r = 0; r < n; ++r) {
    Matrix& xr = batch.inputs_per_resource[static_cast<std::size_t>(r)];
    xr.resize(windows.rows(), l);
    for (int t = 0; t < l; ++t) xr.col(t) = windows.inputs.col(t * n + r);
  }
  batch.targets = windows.targets;
  return batch;
}

Vector forward(const NetworkGenome& genome, const Eigen::Ref<const Vector>& input) {
  check_genome(genome);
  const NetworkLayout& L = genome.layout;
  if (input.size() != L.input_width())
    throw std::invalid_argument("input length " + std::to_string(input.size()) +
                                " does not match layout width " + std::to_string(L.input_width()));

  Vector out(L.n_resources);
  for (int r = 0; r < L.n_resources; ++r) {
    const BlockView blocks = blocks_for_resource(genome, r);
    // Gather this resource's slots: positions t*n + r.
    Vector x(L.input_sets);
    for (int t = 0; t < L.input_sets; ++t) x[t] = input[t * L.n_resources + r];
    Vector a = blocks.input_to_hidden.transpose() * x;
    sigmoid_in_place(a);
    for (const auto& step : blocks.hidden_step) {
      a = step.transpose() * a;
      sigmoid_in_place(a);
    }
    out[r] = blocks.hidden_to_output.dot(a);
  }
  return out;
}

Matrix forward_batch(const NetworkGenome& genome, const EvalBatch& batch) {
  check_genome(genome);
  const NetworkLayout& L = genome.layout;
  if (batch.inputs_per_resource.size() != static_cast<std::size_t>(L.n_resources))
    throw std::invalid_argument("batch resource count does not match layout");

  Matrix out(batch.rows(), L.n_resources);
  for (int r = 0; r < L.n_resources; ++r) {
    const BlockView blocks = blocks_for_resource(genome, r);
    Matrix a = batch.inputs_per_resource[static_cast<std::size_t>(r)] * blocks.input_to_hidden;
    sigmoid_in_place(a);
    for (const auto& step : blocks.hidden_step) {
      a = a * step;
      sigmoid_in_place(a);
    }
    out.col(r) = a * blocks.hidden_to_output;
  }
  return out;
}

Vector rmse_per_resource(const Matrix& actual, const Matrix& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != predicted.cols())
    throw std::invalid_argument("rmse_per_resource: shape mismatch");
  if (actual.rows() < 1) throw std::invalid_argument("rmse_per_resource: need at least one sample");
  return ((actual - predicted).array().square().colwise().sum() /
          static_cast<double>(actual.rows()))
      .sqrt()
      .matrix()
      .transpose();
}

double evaluate_rmse(const NetworkGenome& genome, const EvalBatch& batch) {
  return rmse(batch.targets, forward_batch(genome, batch));
}

Prediction predict_next(const NetworkGenome& genome, const VmSeries& series,
                        const NormRecord& record) {
  const int l = genome.layout.input_sets;
  const int n = genome.layout.n_resources;
  if (series.size() < static_cast<std::size_t>(l))
    throw std::invalid_argument("series for '" + series.vm_id + "' has " +
                                std::to_string(series.size()) + " values, prediction needs " +
                                std::to_string(l));

  Vector input(genome.layout.input_width());
  const std::size_t start = series.size() - static_cast<std::size_t>(l);
  for (int t = 0; t < l; ++t) {
    const ResourceVector norm = normalize_value(series.values[start + t], record);
    for (int r = 0; r < n; ++r) input[t * n + r] = norm[r];
  }

  const Vector y = forward(genome, input);
  Prediction pred;
  pred.vm_id = series.vm_id;
  for (int r = 0; r < n && r < kNumResources; ++r) pred.predicted_norm[r] = y[r];
  pred.denormalized = clamp01(denormalize_value(pred.predicted_norm, record));
  return pred;
}

std::string genome_to_json(const NetworkGenome& genome) {
  check_genome(genome);
  nlohmann::ordered_json j;
  j["layout"] = {{"n_resources", genome.layout.n_resources},
                 {"input_sets", genome.layout.input_sets},
                 {"hidden_sets", genome.layout.hidden_sets},
                 {"hidden_layers", genome.layout.hidden_layers},
                 {"output_sets", genome.layout.output_sets}};
  j["weights"] = std::vector<double>(genome.weights.data(),
                                     genome.weights.data() + genome.weights.size());
  return j.dump(2) + "\n";
}

NetworkGenome genome_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  NetworkGenome genome;
  const auto& L = j.at("layout");
  genome.layout.n_resources = L.at("n_resources").get<int>();
  genome.layout.input_sets = L.at("input_sets").get<int>();
  genome.layout.hidden_sets = L.at("hidden_sets").get<int>();
  genome.layout.hidden_layers = L.at("hidden_layers").get<int>();
  genome.layout.output_sets = L.at("output_sets").get<int>();
  const auto w = j.at("weights").get<std::vector<double>>();
  genome.weights = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
  check_genome(genome);
  return genome;
}

void save_genome(const NetworkGenome& genome, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << genome_to_json(genome);
  if (!out) throw std::runtime_error("failed writing genome to '" + path + "'");
}

NetworkGenome load_genome(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open genome file '" + path + "'");
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return genome_from_json(text);
}

}  // namespace ftsim
