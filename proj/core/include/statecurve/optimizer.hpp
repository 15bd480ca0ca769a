#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "statecurve/fitting.hpp"
#include "statecurve/model.hpp"

namespace statecurve {

struct GaConfig {
  std::size_t population_size = 300;
  std::size_t generations = 300;
  double crossover_prob = 0.5;
  double mutation_prob = 0.2;
  double mutation_mean = 0.0;
  double mutation_sigma = std::sqrt(0.1);  // variance 0.1
  /// Per-gene perturbation probability once an individual is picked for
  /// mutation. Empty means 1 / N.
  std::optional<double> mutation_gene_prob;
  std::size_t tournament_size = 5;
  double blend_alpha = 0.5;
  std::uint64_t rng_seed = 0;
  /// Fitness evaluation workers. Results do not depend on this.
  std::size_t threads = 1;

  void validate() const;

  bool operator==(const GaConfig&) const = default;
};

enum class OptimizationMode { opt, one, all };

std::string_view to_string(OptimizationMode mode) noexcept;
OptimizationMode parse_mode(std::string_view text);

/// One entry per generation; entry 0 is the initial population.
struct GenerationStats {
  double best_e = 0.0;  // best-ever so far
  double mean_e = 0.0;  // population mean this generation

  bool operator==(const GenerationStats&) const = default;
};

struct OptimizationResult {
  WeightVector best_weights{std::vector<double>{1.0}};
  SigmoidFit best_fit;
  std::optional<NormalizationParams> normalization;
  EvaluationStatus status = EvaluationStatus::ok;
  std::vector<GenerationStats> history;
  OptimizationMode mode = OptimizationMode::opt;
  /// False when every evaluated candidate scored zero.
  bool signal_found = false;
  std::size_t evaluations = 0;
  std::optional<GaConfig> ga;  // set for opt
};

struct Individual {
  std::vector<double> genes;
  double fitness = 0.0;
  bool valid = false;
};

struct OptimizeHooks {
  /// Called with the initial population (generation 0) and after every
  /// generation, once all fitness values are assigned.
  std::function<void(std::size_t generation, std::span<const Individual> population)> on_generation;
};

/// Genetic algorithm maximizing the evaluation value over weight vectors:
/// uniform [0,1] initialization, tournament selection, blend crossover and
/// Gaussian mutation, genes clipped to [0,1] after each variation. The best
/// individual ever evaluated is returned with its normalization params.
OptimizationResult optimize(const SimilaritySeries& series, const PromptSet& prompts, const GaConfig& ga,
                            const FitConfig& fit, double window_seconds, const OptimizeHooks& hooks = {});

/// Best one-hot weight vector by evaluation value; ties go to the lower index.
OptimizationResult select_one(const SimilaritySeries& series, const PromptSet& prompts, const FitConfig& fit,
                              double window_seconds);

/// All weights set to 1.
OptimizationResult select_all(const SimilaritySeries& series, const PromptSet& prompts, const FitConfig& fit,
                              double window_seconds);

}  // namespace statecurve
