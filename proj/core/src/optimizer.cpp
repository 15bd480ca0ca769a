#include "statecurve/optimizer.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <string>
#include <thread>
#include <utility>

namespace statecurve {

void GaConfig::validate() const {
  std::vector<std::string> v;
  auto probability = [&](double p, const char* name) {
    if (!(p >= 0.0 && p <= 1.0)) v.push_back(std::string(name) + " must be in [0, 1]");
  };
  if (population_size == 0) v.emplace_back("population_size must be >= 1");
  if (generations == 0) v.emplace_back("generations must be >= 1");
  if (tournament_size == 0) v.emplace_back("tournament_size must be >= 1");
  if (threads == 0) v.emplace_back("threads must be >= 1");
  probability(crossover_prob, "crossover_prob");
  probability(mutation_prob, "mutation_prob");
  if (mutation_gene_prob) probability(*mutation_gene_prob, "mutation_gene_prob");
  if (!(mutation_sigma >= 0.0) || !std::isfinite(mutation_sigma)) v.emplace_back("mutation_sigma must be >= 0");
  if (!std::isfinite(mutation_mean)) v.emplace_back("mutation_mean must be finite");
  if (!(blend_alpha >= 0.0) || !std::isfinite(blend_alpha)) v.emplace_back("blend_alpha must be >= 0");
  if (!v.empty()) throw Error(ErrorCode::invalid_config, "invalid GA config", std::move(v));
}

std::string_view to_string(OptimizationMode mode) noexcept {
  switch (mode) {
    case OptimizationMode::opt: return "opt";
    case OptimizationMode::one: return "one";
    case OptimizationMode::all: return "all";
  }
  return "unknown";
}

OptimizationMode parse_mode(std::string_view text) {
  if (text == "opt" || text == "OPT") return OptimizationMode::opt;
  if (text == "one" || text == "ONE") return OptimizationMode::one;
  if (text == "all" || text == "ALL") return OptimizationMode::all;
  throw Error(ErrorCode::invalid_config, "unknown optimization mode \"" + std::string(text) + "\"");
}

namespace {

double fitness_of(const SimilaritySeries& series, const PromptSet& prompts, const std::vector<double>& genes,
                  const FitConfig& fit, double window_seconds) {
  return evaluate_weights(series, prompts, WeightVector(genes), window_seconds, fit).e_value();
}

// Evaluates every individual whose fitness was invalidated. Fitness is a
// pure function of the genes, so worker count does not change results.
std::size_t evaluate_population(std::vector<Individual>& population, const SimilaritySeries& series,
                                const PromptSet& prompts, const FitConfig& fit, double window_seconds,
                                std::size_t threads) {
  std::vector<std::size_t> pending;
  for (std::size_t k = 0; k < population.size(); ++k) {
    if (!population[k].valid) pending.push_back(k);
  }
  auto run = [&](std::size_t k) {
    population[k].fitness = fitness_of(series, prompts, population[k].genes, fit, window_seconds);
    population[k].valid = true;
  };

  const std::size_t workers = std::min(threads, pending.size());
  if (workers <= 1) {
    for (std::size_t k : pending) run(k);
    return pending.size();
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < pending.size() && !failed; j = next++) {
          try {
            run(pending[j]);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return pending.size();
}

void clip(std::vector<double>& genes) {
  for (double& g : genes) g = std::clamp(g, 0.0, 1.0);
}

class Variation {
 public:
  Variation(const GaConfig& config, std::size_t genes)
      : config_(config),
        rng_(config.rng_seed),
        gene_prob_(config.mutation_gene_prob.value_or(1.0 / static_cast<double>(genes))) {}

  double uniform() { return unit_(rng_); }

  const Individual& tournament(const std::vector<Individual>& population) {
    std::uniform_int_distribution<std::size_t> pick(0, population.size() - 1);
    const Individual* best = &population[pick(rng_)];
    for (std::size_t k = 1; k < config_.tournament_size; ++k) {
      const Individual* aspirant = &population[pick(rng_)];
      if (aspirant->fitness > best->fitness) best = aspirant;
    }
    return *best;
  }

  // Blend crossover: each gene pair is mixed by a factor drawn from
  // [-blend_alpha, 1 + blend_alpha].
  void crossover(Individual& a, Individual& b) {
    for (std::size_t i = 0; i < a.genes.size(); ++i) {
      const double gamma = (1.0 + 2.0 * config_.blend_alpha) * uniform() - config_.blend_alpha;
      const double x = a.genes[i];
      const double y = b.genes[i];
      a.genes[i] = (1.0 - gamma) * x + gamma * y;
      b.genes[i] = gamma * x + (1.0 - gamma) * y;
    }
    clip(a.genes);
    clip(b.genes);
    a.valid = b.valid = false;
  }

  void mutate(Individual& ind) {
    std::normal_distribution<double> noise(config_.mutation_mean, config_.mutation_sigma);
    for (double& g : ind.genes) {
      if (uniform() < gene_prob_) g += noise(rng_);
    }
    clip(ind.genes);
    ind.valid = false;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  const GaConfig& config_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_{0.0, 1.0};
  double gene_prob_;
};

double mean_fitness(const std::vector<Individual>& population) {
  double sum = 0.0;
  for (const auto& ind : population) sum += ind.fitness;
  return sum / static_cast<double>(population.size());
}

OptimizationResult finalize(const SimilaritySeries& series, const PromptSet& prompts, std::vector<double> best_genes,
                            const FitConfig& fit, double window_seconds, OptimizationMode mode) {
  OptimizationResult result;
  result.mode = mode;
  result.best_weights = WeightVector(std::move(best_genes));
  const WeightEvaluation eval = evaluate_weights(series, prompts, result.best_weights, window_seconds, fit);
  result.best_fit = eval.fit;
  result.normalization = eval.normalization;
  result.status = eval.status;
  result.signal_found = eval.e_value() > 0.0;
  return result;
}

void check_inputs(const SimilaritySeries& series, const PromptSet& prompts, const FitConfig& fit,
                  double window_seconds) {
  require_matching_columns(series, prompts);
  fit.validate();
  (void)window_samples(window_seconds, series.sample_rate_hz());
}

}  // namespace

OptimizationResult optimize(const SimilaritySeries& series, const PromptSet& prompts, const GaConfig& ga,
                            const FitConfig& fit, double window_seconds, const OptimizeHooks& hooks) {
  ga.validate();
  check_inputs(series, prompts, fit, window_seconds);
  const std::size_t genes = prompts.size();

  Variation variation(ga, genes);
  std::vector<Individual> population(ga.population_size);
  for (auto& ind : population) {
    ind.genes.resize(genes);
    for (double& g : ind.genes) g = variation.uniform();
  }
  std::size_t evaluations = evaluate_population(population, series, prompts, fit, window_seconds, ga.threads);
  if (hooks.on_generation) hooks.on_generation(0, population);

  Individual best = *std::max_element(population.begin(), population.end(),
                                      [](const Individual& a, const Individual& b) { return a.fitness < b.fitness; });
  std::vector<GenerationStats> history;
  history.reserve(ga.generations + 1);
  history.push_back({best.fitness, mean_fitness(population)});

  for (std::size_t gen = 1; gen <= ga.generations; ++gen) {
    std::vector<Individual> offspring;
    offspring.reserve(population.size());
    for (std::size_t k = 0; k < population.size(); ++k) offspring.push_back(variation.tournament(population));

    for (std::size_t k = 1; k < offspring.size(); k += 2) {
      if (variation.uniform() < ga.crossover_prob) variation.crossover(offspring[k - 1], offspring[k]);
    }
    for (auto& ind : offspring) {
      if (variation.uniform() < ga.mutation_prob) variation.mutate(ind);
    }

    evaluations += evaluate_population(offspring, series, prompts, fit, window_seconds, ga.threads);
    population = std::move(offspring);
    for (const auto& ind : population) {
      if (ind.fitness > best.fitness) best = ind;
    }
    history.push_back({best.fitness, mean_fitness(population)});
    if (hooks.on_generation) hooks.on_generation(gen, population);
  }

  OptimizationResult result = finalize(series, prompts, best.genes, fit, window_seconds, OptimizationMode::opt);
  result.history = std::move(history);
  result.evaluations = evaluations + 1;
  result.ga = ga;
  return result;
}

OptimizationResult select_one(const SimilaritySeries& series, const PromptSet& prompts, const FitConfig& fit,
                              double window_seconds) {
  check_inputs(series, prompts, fit, window_seconds);
  const std::size_t n = prompts.size();
  std::size_t best_index = 0;
  double best_e = -1.0;
  double sum_e = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = evaluate_weights(series, prompts, WeightVector::one_hot(n, i), window_seconds, fit).e_value();
    sum_e += e;
    if (e > best_e) {
      best_e = e;
      best_index = i;
    }
  }
  std::vector<double> genes(n, 0.0);
  genes[best_index] = 1.0;
  OptimizationResult result = finalize(series, prompts, std::move(genes), fit, window_seconds, OptimizationMode::one);
  result.history = {{result.best_fit.e_value, sum_e / static_cast<double>(n)}};
  result.evaluations = n + 1;
  return result;
}

OptimizationResult select_all(const SimilaritySeries& series, const PromptSet& prompts, const FitConfig& fit,
                              double window_seconds) {
  check_inputs(series, prompts, fit, window_seconds);
  OptimizationResult result = finalize(series, prompts, std::vector<double>(prompts.size(), 1.0), fit,
                                       window_seconds, OptimizationMode::all);
  result.history = {{result.best_fit.e_value, result.best_fit.e_value}};
  result.evaluations = 1;
  return result;
}

}  // namespace statecurve
