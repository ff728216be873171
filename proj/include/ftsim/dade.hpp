#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "ftsim/forecaster.hpp"
#include "ftsim/types.hpp"

namespace ftsim {

/// Dual-adaptive differential evolution settings.
struct DadeConfig {
  int population_size = 20;   // >= 4 so DE/rand/1 can draw three distinct others
  int max_generations = 200;
  double mutation_lo = 0.4;   // mutation factor drawn uniformly per individual
  double mutation_hi = 0.9;
  double crossover_eta_lo = 0.0;
  double crossover_eta_hi = 1.0;
  double init_weight_lo = -1.0;
  double init_weight_hi = 1.0;
  double convergence_epsilon = 1e-6;
  int convergence_patience = 10;  // consecutive generations below epsilon
  std::uint64_t seed = 1;
  /// Historical probability-update denominator that double-counts the s2*s3
  /// product and omits s1*s2; kept selectable for comparison runs.
  bool asymmetric_b_term = false;

  void validate() const;
};

enum class MutationStrategy { best1 = 0, current_to_best1 = 1, rand1 = 2 };

/// Adaptive strategy-selection state: selection probabilities plus per-strategy
/// success/failure counters for the running generation.
struct StrategyState {
  std::array<double, 3> probabilities{0.33, 0.33, 0.34};
  std::array<long long, 3> successes{0, 0, 0};
  std::array<long long, 3> failures{0, 0, 0};
};

/// Maps a uniform draw onto a strategy by cumulative probability bands:
/// best1 for (0, P1], current_to_best1 for (P1, P1+P2], rand1 otherwise.
MutationStrategy select_strategy(double msp, const StrategyState& state);

/// Draws `count` indices in [0, n) that are mutually distinct and avoid
/// everything in `exclude`.
std::vector<int> draw_distinct_indices(std::mt19937_64& rng, int n, int count,
                                       const std::vector<int>& exclude);

/// One mutant weight vector:
///   best1:            X_best + mu*(X_r1 - X_r2)
///   current_to_best1: X_i + mu*(X_best - X_i) + mu*(X_r1 - X_r2)
///   rand1:            X_r3 + mu*(X_r1 - X_r2)
/// r1/r2/r3 are mutually distinct, distinct from the target, and distinct from
/// best for the best1 strategy.
Vector mutate(const std::vector<NetworkGenome>& population, int best_index, int target_index,
              MutationStrategy strategy, double mu, std::mt19937_64& rng);

/// Heuristic crossover pulled toward the fitter parent (lower RMSE; ties favor
/// `a`): eta*(better - other) + better.
Vector crossover_heuristic(const Vector& a, const Vector& b, double fitness_a, double fitness_b,
                           double eta);

struct SurvivorResult {
  NetworkGenome survivor;
  bool offspring_won = false;  // success/failure flag for the producing strategy
};

/// Greedy survivor selection: the offspring replaces the current individual only
/// on strictly lower RMSE; non-finite offspring fitness is rejected outright.
SurvivorResult select_survivor(const NetworkGenome& current, const Vector& offspring_weights,
                               const EvalBatch& batch);

/// Re-derives the selection probabilities from the generation's counters and
/// clears them; a zero denominator leaves the state untouched.
StrategyState update_strategy_probabilities(const StrategyState& state,
                                            bool asymmetric_b_term = false);

struct TrainReport {
  NetworkGenome best;
  std::vector<double> best_rmse_curve;                   // one entry per generation, non-increasing
  std::vector<std::array<double, 3>> probability_curve;  // P1,P2,P3 after each generation
  int generations = 0;
  bool converged = false;
};

/// JSON rendering of a whole training run: best genome, RMSE curve, and the
/// strategy-probability trajectory.
std::string train_report_to_json(const TrainReport& report);

std::vector<NetworkGenome> init_population(const NetworkLayout& layout, const DadeConfig& config,
                                           const EvalBatch& batch);

TrainReport train(const WindowSet& windows, const NetworkLayout& layout, const DadeConfig& config);
TrainReport train(const EvalBatch& batch, const NetworkLayout& layout, const DadeConfig& config);

}  // namespace ftsim
