#include <doctest.h>

#include <cmath>
#include <random>

#include "ftsim/dade.hpp"
#include "ftsim/forecaster.hpp"

using namespace ftsim;

namespace {

NetworkGenome random_genome(const NetworkLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  NetworkGenome genome;
  genome.layout = layout;
  genome.weights.resize(layout.total_weights());
  for (Eigen::Index i = 0; i < genome.weights.size(); ++i) genome.weights[i] = unit(rng);
  return genome;
}

Vector random_input(const NetworkLayout& layout, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector input(layout.input_width());
  for (Eigen::Index i = 0; i < input.size(); ++i) input[i] = unit(rng);
  return input;
}

}  // namespace

TEST_CASE("weight count matches the size formula") {
  NetworkLayout layout;
  layout.input_sets = 6;
  layout.hidden_sets = 8;
  layout.hidden_layers = 2;
  CHECK(layout.weights_per_resource() == 6 * 8 + 8 * 8 + 8);
  CHECK(layout.total_weights() == 3 * (6 * 8 + 8 * 8 + 8));
}

TEST_CASE("zero weights produce zero output") {
  NetworkLayout layout;
  NetworkGenome genome;
  genome.layout = layout;
  genome.weights = Vector::Zero(layout.total_weights());
  const Vector out = forward(genome, Vector::Constant(layout.input_width(), 0.8));
  for (Eigen::Index r = 0; r < out.size(); ++r) CHECK(out[r] == doctest::Approx(0.0));
}

TEST_CASE("resource blocks are disjoint under weight perturbation") {
  NetworkLayout layout;
  NetworkGenome genome = random_genome(layout, 21);
  const Vector input = random_input(layout, 22);
  const Vector baseline = forward(genome, input);

  NetworkGenome perturbed = genome;
  for (int i = 0; i < layout.weights_per_resource(); i += 7) perturbed.weights[i] += 0.5;
  const Vector out = forward(perturbed, input);
  CHECK(out[0] != baseline[0]);
  CHECK(out[1] == baseline[1]);  // bit-identical, untouched blocks
  CHECK(out[2] == baseline[2]);
}

TEST_CASE("outputs depend only on the resource's own input slots") {
  NetworkLayout layout;
  const NetworkGenome genome = random_genome(layout, 23);
  Vector input = random_input(layout, 24);
  const Vector baseline = forward(genome, input);
  for (int t = 0; t < layout.input_sets; ++t) input[t * layout.n_resources + 1] += 0.25;
  const Vector out = forward(genome, input);
  CHECK(out[0] == baseline[0]);
  CHECK(out[1] != baseline[1]);
  CHECK(out[2] == baseline[2]);
}

TEST_CASE("two-weight network evaluates to sigmoid(input)") {
  NetworkLayout layout;
  layout.n_resources = 1;
  layout.input_sets = 1;
  layout.hidden_sets = 1;
  layout.hidden_layers = 1;
  NetworkGenome genome;
  genome.layout = layout;
  genome.weights = Vector::Ones(2);  // w_in = 1, w_out = 1
  Vector input(1);
  input << 0.4;
  const Vector out = forward(genome, input);
  const double expected = 1.0 / (1.0 + std::exp(-0.4));
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(out[0] == doctest::Approx(0.59869).epsilon(1e-5));
}

TEST_CASE("forward and forward_batch agree") {
  NetworkLayout layout;
  const NetworkGenome genome = random_genome(layout, 31);
  WindowSet ws;
  ws.window_length = layout.input_sets;
  ws.inputs.resize(9, layout.input_width());
  ws.targets.resize(9, layout.n_resources);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Eigen::Index i = 0; i < ws.inputs.size(); ++i) ws.inputs.data()[i] = unit(rng);
  ws.targets.setZero();

  const EvalBatch batch = EvalBatch::from_windows(ws, layout);
  const Matrix predictions = forward_batch(genome, batch);
  for (Eigen::Index j = 0; j < ws.rows(); ++j) {
    const Vector single = forward(genome, ws.inputs.row(j).transpose());
    for (int r = 0; r < layout.n_resources; ++r)
      CHECK(predictions(j, r) == doctest::Approx(single[r]).epsilon(1e-12));
  }
}

TEST_CASE("shape mismatches are rejected") {
  NetworkLayout layout;
  const NetworkGenome genome = random_genome(layout, 41);
  CHECK_THROWS_AS(forward(genome, Vector::Zero(layout.input_width() + 1)), std::invalid_argument);
  CHECK_THROWS_AS(rmse(Matrix::Zero(2, 3), Matrix::Zero(3, 2)), std::invalid_argument);
}

TEST_CASE("rmse knows its fixed points") {
  Matrix a = Matrix::Zero(4, 3);
  CHECK(rmse(a, a) == doctest::Approx(0.0));
  CHECK(rmse(a, Matrix::Ones(4, 3)) == doctest::Approx(1.0));

  Matrix actual(2, 1), predicted(2, 1);
  actual << 0.2, 0.4;
  predicted << 0.3, 0.6;
  CHECK(rmse(actual, predicted) == doctest::Approx(0.15811).epsilon(1e-4));
}

TEST_CASE("rmse is symmetric in error sign and zero only at equality") {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix a(5, 3), b(5, 3);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a.data()[i] = unit(rng);
    b.data()[i] = unit(rng);
  }
  const Matrix d = b - a;
  CHECK(rmse(a, a + d) == doctest::Approx(rmse(a, a - d)));
  CHECK(rmse(a, b) > 0.0);
}

TEST_CASE("prediction clamps the de-normalized output") {
  NetworkLayout layout;
  layout.n_resources = 3;
  layout.input_sets = 1;
  layout.hidden_sets = 1;
  layout.hidden_layers = 1;
  NetworkGenome genome;
  genome.layout = layout;
  genome.weights = Vector::Zero(layout.total_weights());
  // Large output weights drive each resource's output to 10 * sigmoid(...).
  for (int r = 0; r < 3; ++r) genome.weights[r * layout.weights_per_resource() + 1] = 10.0;

  VmSeries series;
  series.vm_id = "v";
  series.values = {ResourceVector(0.2, 0.2, 0.2), ResourceVector(0.8, 0.8, 0.8)};
  const NormRecord record = compute_norm_record(series);
  const Prediction pred = predict_next(genome, series, record);
  for (int r = 0; r < 3; ++r) {
    CHECK(pred.predicted_norm[r] == doctest::Approx(5.0));  // sigmoid(0) * 10
    CHECK(pred.denormalized[r] == doctest::Approx(1.0));    // clamped
  }
}

TEST_CASE("prediction needs at least a full window") {
  NetworkLayout layout;  // input_sets = 6
  const NetworkGenome genome = random_genome(layout, 61);
  VmSeries series;
  series.vm_id = "v";
  series.values = {ResourceVector::Constant(0.5), ResourceVector::Constant(0.5)};
  CHECK_THROWS_AS(predict_next(genome, series, compute_norm_record(series)), std::invalid_argument);
}

TEST_CASE("genome json io round-trips") {
  NetworkLayout layout;
  layout.hidden_sets = 4;
  const NetworkGenome genome = random_genome(layout, 71);
  const NetworkGenome back = genome_from_json(genome_to_json(genome));
  CHECK(back.layout == genome.layout);
  CHECK((back.weights - genome.weights).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("training a constant series converges and predicts the constant") {
  // The trained model on a constant series must reach a tiny error; the
  // prediction path then reproduces the constant exactly through the
  // degenerate min-max record.
  VmSeries series;
  series.vm_id = "const";
  for (int i = 0; i < 30; ++i) series.values.push_back(ResourceVector::Constant(0.42));

  auto [normalized, record] = normalize_minmax(series);
  NetworkLayout layout;
  layout.input_sets = 4;
  layout.hidden_sets = 3;
  layout.hidden_layers = 1;
  const WindowSet windows = build_windows(normalized, layout.input_sets);

  DadeConfig config;
  config.population_size = 20;
  config.max_generations = 200;
  config.seed = 7;
  const TrainReport report = train(windows, layout, config);
  CHECK(report.best.fitness < 0.01);

  const Prediction pred = predict_next(report.best, series, record);
  for (int r = 0; r < 3; ++r) CHECK(pred.denormalized[r] == doctest::Approx(0.42).epsilon(1e-9));
}
