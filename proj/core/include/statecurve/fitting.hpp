#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "statecurve/model.hpp"
#include "statecurve/signal.hpp"

namespace statecurve {

/// Which signal the sigmoid is fitted to. Both are min-max scaled with the
/// params taken from the moving average.
enum class FitTarget { averaged, raw };

std::string_view to_string(FitTarget target) noexcept;

struct FitConfig {
  double alpha_init = 0.1;
  double beta_init_fraction = 0.5;  // beta starts at this fraction of T
  std::size_t max_iterations = 200;
  double residual_tolerance = 1e-10;  // relative per-parameter step stop
  double sigma_floor = 1e-6;
  FitTarget target = FitTarget::averaged;

  /// Throws Error(invalid_config).
  void validate() const;

  bool operator==(const FitConfig&) const = default;
};

/// Exponent argument is clamped to +-500 before exponentiation.
inline constexpr double kExponentClamp = 500.0;

/// Logistic curve 1 / (1 + exp(-alpha (t - beta))).
double sigmoid(double t, double alpha, double beta) noexcept;

struct SigmoidGradient {
  double d_alpha = 0.0;  // (t - beta) f (1 - f)
  double d_beta = 0.0;   // -alpha f (1 - f)
};

SigmoidGradient sigmoid_gradient(double t, double alpha, double beta) noexcept;

/// Box-constrained (alpha >= 0, beta >= 0) least-squares fit of the sigmoid
/// to `normalized`, with t running over sample indices 1..T. Uses damped
/// Gauss-Newton (Levenberg-Marquardt) steps projected onto the feasible box.
///
/// sigma is the RMSE over all T samples. e_value = alpha * beta /
/// max(sigma, sigma_floor) if the fit converged, 0 otherwise.
SigmoidFit fit_sigmoid(std::span<const double> normalized, const FitConfig& config = {});

enum class EvaluationStatus { ok, degenerate_weights, flat_signal, fit_failed };

std::string_view to_string(EvaluationStatus status) noexcept;

struct WeightEvaluation {
  SigmoidFit fit;
  std::optional<NormalizationParams> normalization;
  AggregateSignal signal;
  EvaluationStatus status = EvaluationStatus::ok;

  double e_value() const noexcept { return fit.e_value; }
};

/// Full objective for one weight vector:
///   weighted_similarity -> moving_average -> compute_normalization ->
///   normalize -> fit_sigmoid.
/// Stage failures (degenerate weights, flat signal, failed fit) produce a
/// zero e_value with the matching status instead of throwing. Dimension
/// mismatches still throw. The window is round-half-up(window_seconds *
/// sample rate) samples.
WeightEvaluation evaluate_weights(const SimilaritySeries& series, const PromptSet& prompts,
                                  const WeightVector& weights, double window_seconds, const FitConfig& config = {});

/// Fitted curve f(1..T) for a fit, for plot export.
std::vector<double> fitted_curve(const SigmoidFit& fit, std::size_t frames);

}  // namespace statecurve
