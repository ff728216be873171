#include "ftsim/dade.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace ftsim {

void DadeConfig::validate() const {
  if (population_size < 4)
    throw std::invalid_argument("population_size must be >= 4 (DE/rand/1 draws three distinct others)");
  if (max_generations < 1) throw std::invalid_argument("max_generations must be >= 1");
  if (mutation_lo > mutation_hi || crossover_eta_lo > crossover_eta_hi ||
      init_weight_lo > init_weight_hi)
    throw std::invalid_argument("dade parameter ranges must be well ordered");
  if (convergence_epsilon < 0.0) throw std::invalid_argument("convergence_epsilon must be >= 0");
  if (convergence_patience < 1) throw std::invalid_argument("convergence_patience must be >= 1");
}

MutationStrategy select_strategy(double msp, const StrategyState& state) {
  if (msp < 0.0 || msp > 1.0) throw std::invalid_argument("msp must lie in [0, 1]");
  const double p1 = state.probabilities[0];
  const double p2 = state.probabilities[1];
  if (msp > 0.0 && msp <= p1) return MutationStrategy::best1;
  if (msp > p1 && msp <= p1 + p2) return MutationStrategy::current_to_best1;
  return MutationStrategy::rand1;
}

std::vector<int> draw_distinct_indices(std::mt19937_64& rng, int n, int count,
                                       const std::vector<int>& exclude) {
  const int excluded_distinct = [&] {
    std::vector<int> e = exclude;
    std::sort(e.begin(), e.end());
    e.erase(std::unique(e.begin(), e.end()), e.end());
    return static_cast<int>(e.size());
  }();
  if (n - excluded_distinct < count)
    throw std::invalid_argument("population too small to draw " + std::to_string(count) +
                                " distinct indices");
  std::uniform_int_distribution<int> dist(0, n - 1);
  std::vector<int> picked;
  picked.reserve(static_cast<std::size_t>(count));
  while (static_cast<int>(picked.size()) < count) {
    const int candidate = dist(rng);
    const bool banned = std::find(exclude.begin(), exclude.end(), candidate) != exclude.end() ||
                        std::find(picked.begin(), picked.end(), candidate) != picked.end();
    if (!banned) picked.push_back(candidate);
  }
  return picked;
}

Vector mutate(const std::vector<NetworkGenome>& population, int best_index, int target_index,
              MutationStrategy strategy, double mu, std::mt19937_64& rng) {
  const int n = static_cast<int>(population.size());
  if (target_index < 0 || target_index >= n || best_index < 0 || best_index >= n)
    throw std::invalid_argument("mutate: index out of range");

  switch (strategy) {
    case MutationStrategy::best1: {
      const auto r = draw_distinct_indices(rng, n, 2, {target_index, best_index});
      return population[static_cast<std::size_t>(best_index)].weights +
             mu * (population[static_cast<std::size_t>(r[0])].weights -
                   population[static_cast<std::size_t>(r[1])].weights);
    }
    case MutationStrategy::current_to_best1: {
      const auto r = draw_distinct_indices(rng, n, 2, {target_index});
      const Vector& xi = population[static_cast<std::size_t>(target_index)].weights;
      return xi + mu * (population[static_cast<std::size_t>(best_index)].weights - xi) +
             mu * (population[static_cast<std::size_t>(r[0])].weights -
                   population[static_cast<std::size_t>(r[1])].weights);
    }
    case MutationStrategy::rand1: {
      const auto r = draw_distinct_indices(rng, n, 3, {target_index});
      return population[static_cast<std::size_t>(r[2])].weights +
             mu * (population[static_cast<std::size_t>(r[0])].weights -
                   population[static_cast<std::size_t>(r[1])].weights);
    }
  }
  throw std::logic_error("unreachable mutation strategy");
}

Vector crossover_heuristic(const Vector& a, const Vector& b, double fitness_a, double fitness_b,
                           double eta) {
  const bool a_better = fitness_a <= fitness_b;  // tie favors a
  const Vector& better = a_better ? a : b;
  const Vector& other = a_better ? b : a;
  return eta * (better - other) + better;
}

SurvivorResult select_survivor(const NetworkGenome& current, const Vector& offspring_weights,
                               const EvalBatch& batch) {
  NetworkGenome offspring;
  offspring.layout = current.layout;
  offspring.weights = offspring_weights;

  double offspring_fitness = std::numeric_limits<double>::infinity();
  if (offspring_weights.allFinite()) offspring_fitness = evaluate_rmse(offspring, batch);

  const double current_fitness =
      current.has_fitness() ? current.fitness : evaluate_rmse(current, batch);

  if (std::isfinite(offspring_fitness) && offspring_fitness < current_fitness) {
    offspring.fitness = offspring_fitness;
    return {std::move(offspring), true};
  }
  NetworkGenome kept = current;
  kept.fitness = current_fitness;
  return {std::move(kept), false};
}

StrategyState update_strategy_probabilities(const StrategyState& state, bool asymmetric_b_term) {
  const double s1 = static_cast<double>(state.successes[0]);
  const double s2 = static_cast<double>(state.successes[1]);
  const double s3 = static_cast<double>(state.successes[2]);
  const double f1 = static_cast<double>(state.failures[0]);
  const double f2 = static_cast<double>(state.failures[1]);
  const double f3 = static_cast<double>(state.failures[2]);

  const double pair_terms = asymmetric_b_term ? (s2 * s3 + s1 * s3 + s2 * s3)
                                              : (s1 * s2 + s1 * s3 + s2 * s3);
  const double b = 2.0 * pair_terms + f1 * (s2 + s3) + f2 * (s1 + s3) + f3 * (s1 + s2);
  if (b <= 0.0) return state;  // nothing to adapt from

  StrategyState next;
  next.probabilities[0] = s1 * (s2 + f2 + s3 + f3) / b;
  next.probabilities[1] = s2 * (s1 + f1 + s3 + f3) / b;
  next.probabilities[2] = 1.0 - next.probabilities[0] - next.probabilities[1];
  next.successes = {0, 0, 0};
  next.failures = {0, 0, 0};
  return next;
}

std::vector<NetworkGenome> init_population(const NetworkLayout& layout, const DadeConfig& config,
                                           const EvalBatch& batch) {
  layout.validate();
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> weight(config.init_weight_lo, config.init_weight_hi);

  std::vector<NetworkGenome> population(static_cast<std::size_t>(config.population_size));
  for (NetworkGenome& genome : population) {
    genome.layout = layout;
    genome.weights.resize(layout.total_weights());
    for (Eigen::Index i = 0; i < genome.weights.size(); ++i) genome.weights[i] = weight(rng);
    genome.fitness = evaluate_rmse(genome, batch);
  }
  return population;
}

TrainReport train(const WindowSet& windows, const NetworkLayout& layout, const DadeConfig& config) {
  if (windows.rows() < 1) throw std::invalid_argument("train: window set is empty");
  return train(EvalBatch::from_windows(windows, layout), layout, config);
}

TrainReport train(const EvalBatch& batch, const NetworkLayout& layout, const DadeConfig& config) {
  if (batch.rows() < 1) throw std::invalid_argument("train: window set is empty");
  layout.validate();
  config.validate();

  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> mu_dist(config.mutation_lo, config.mutation_hi);
  std::uniform_real_distribution<double> eta_dist(config.crossover_eta_lo, config.crossover_eta_hi);

  std::vector<NetworkGenome> population = init_population(layout, config, batch);
  auto best_index = [&population] {
    int best = 0;
    for (int i = 1; i < static_cast<int>(population.size()); ++i)
      if (population[static_cast<std::size_t>(i)].fitness <
          population[static_cast<std::size_t>(best)].fitness)
        best = i;
    return best;
  };

  StrategyState strategies;
  TrainReport report;
  int stall = 0;
  double previous_best = population[static_cast<std::size_t>(best_index())].fitness;

  for (int generation = 0; generation < config.max_generations; ++generation) {
    const int best = best_index();
    for (int i = 0; i < config.population_size; ++i) {
      const double msp = unit(rng);
      const MutationStrategy strategy = select_strategy(msp, strategies);
      const double mu = mu_dist(rng);
      const Vector mutant = mutate(population, best, i, strategy, mu, rng);

      NetworkGenome mutant_genome;
      mutant_genome.layout = layout;
      mutant_genome.weights = mutant;
      const double mutant_fitness = mutant.allFinite()
                                        ? evaluate_rmse(mutant_genome, batch)
                                        : std::numeric_limits<double>::infinity();

      NetworkGenome& target = population[static_cast<std::size_t>(i)];
      const double eta = eta_dist(rng);
      const Vector offspring =
          crossover_heuristic(mutant, target.weights, mutant_fitness, target.fitness, eta);

      SurvivorResult result = select_survivor(target, offspring, batch);
      const auto s = static_cast<std::size_t>(strategy);
      if (result.offspring_won)
        ++strategies.successes[s];
      else
        ++strategies.failures[s];
      target = std::move(result.survivor);
    }

    strategies = update_strategy_probabilities(strategies, config.asymmetric_b_term);

    const double generation_best = population[static_cast<std::size_t>(best_index())].fitness;
    report.best_rmse_curve.push_back(generation_best);
    report.probability_curve.push_back(strategies.probabilities);
    report.generations = generation + 1;

    if (previous_best - generation_best < config.convergence_epsilon)
      ++stall;
    else
      stall = 0;
    previous_best = generation_best;
    if (stall >= config.convergence_patience) {
      report.converged = true;
      break;
    }
  }

  report.best = population[static_cast<std::size_t>(best_index())];
  return report;
}

std::string train_report_to_json(const TrainReport& report) {
  nlohmann::ordered_json j;
  j["generations"] = report.generations;
  j["converged"] = report.converged;
  j["best_rmse"] = report.best.fitness;
  j["best_rmse_curve"] = report.best_rmse_curve;
  nlohmann::ordered_json probabilities = nlohmann::ordered_json::array();
  for (const auto& p : report.probability_curve) probabilities.push_back({p[0], p[1], p[2]});
  j["strategy_probabilities"] = std::move(probabilities);
  j["best_genome"] = nlohmann::json::parse(genome_to_json(report.best));
  return j.dump(2) + "\n";
}

}  // namespace ftsim
