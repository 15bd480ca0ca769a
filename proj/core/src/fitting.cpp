#include "statecurve/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

namespace statecurve {

std::string_view to_string(FitTarget target) noexcept {
  return target == FitTarget::averaged ? "averaged" : "raw";
}

std::string_view to_string(EvaluationStatus status) noexcept {
  switch (status) {
    case EvaluationStatus::ok: return "ok";
    case EvaluationStatus::degenerate_weights: return "degenerate weights";
    case EvaluationStatus::flat_signal: return "flat signal";
    case EvaluationStatus::fit_failed: return "fit failed";
  }
  return "unknown";
}

void FitConfig::validate() const {
  std::vector<std::string> v;
  if (!(alpha_init > 0.0) || !std::isfinite(alpha_init)) v.emplace_back("alpha_init must be > 0");
  if (!(beta_init_fraction > 0.0 && beta_init_fraction < 1.0)) v.emplace_back("beta_init_fraction must be in (0, 1)");
  if (max_iterations == 0) v.emplace_back("max_iterations must be positive");
  if (!(residual_tolerance >= 0.0)) v.emplace_back("residual_tolerance must be >= 0");
  if (!(sigma_floor > 0.0)) v.emplace_back("sigma_floor must be > 0");
  if (!v.empty()) throw Error(ErrorCode::invalid_config, "invalid fit config", std::move(v));
}

namespace {

// exp(-alpha (t - beta)) with the argument clamped.
double tail(double t, double alpha, double beta) noexcept {
  return std::exp(std::clamp(-alpha * (t - beta), -kExponentClamp, kExponentClamp));
}

struct Params {
  double alpha;
  double beta;
};

// Gauss-Newton normal equations at one parameter point. Residuals are
// y - f, so the (undamped) step solves jtj * delta = jtr.
struct NormalEquations {
  double a11 = 0, a12 = 0, a22 = 0;
  double g1 = 0, g2 = 0;
  double sse = 0;
};

NormalEquations build_normal_equations(std::span<const double> y, Params p) {
  NormalEquations n;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double t = static_cast<double>(k + 1);
    const double e = tail(t, p.alpha, p.beta);
    const double f = 1.0 / (1.0 + e);
    const double slope = f * (e * f);  // f (1 - f) without cancellation
    const double ja = (t - p.beta) * slope;
    const double jb = -p.alpha * slope;
    const double r = y[k] - f;
    n.a11 += ja * ja;
    n.a12 += ja * jb;
    n.a22 += jb * jb;
    n.g1 += ja * r;
    n.g2 += jb * r;
    n.sse += r * r;
  }
  return n;
}

double sum_squared_error(std::span<const double> y, Params p) {
  double sse = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double r = y[k] - sigmoid(static_cast<double>(k + 1), p.alpha, p.beta);
    sse += r * r;
  }
  return sse;
}

SigmoidFit finish(Params p, double sse, std::size_t frames, std::size_t iterations, FitTermination why,
                  const FitConfig& config) {
  SigmoidFit fit;
  fit.alpha = p.alpha;
  fit.beta = p.beta;
  fit.sigma = std::sqrt(sse / static_cast<double>(frames));
  fit.iterations = iterations;
  fit.termination = why;
  fit.converged = why == FitTermination::step_tolerance || why == FitTermination::no_improvement;
  fit.e_value = fit.converged ? fit.alpha * fit.beta / std::max(fit.sigma, config.sigma_floor) : 0.0;
  return fit;
}

bool within_tolerance(Params from, Params to, double tol) {
  return std::abs(to.alpha - from.alpha) <= tol * (std::abs(from.alpha) + tol) &&
         std::abs(to.beta - from.beta) <= tol * (std::abs(from.beta) + tol);
}

constexpr double kLambdaInit = 1e-3;
constexpr double kSseRounding = 1e-12;
constexpr double kLambdaMin = 1e-15;
constexpr double kLambdaMax = 1e16;

}  // namespace

double sigmoid(double t, double alpha, double beta) noexcept { return 1.0 / (1.0 + tail(t, alpha, beta)); }

SigmoidGradient sigmoid_gradient(double t, double alpha, double beta) noexcept {
  const double e = tail(t, alpha, beta);
  const double f = 1.0 / (1.0 + e);
  const double slope = f * (e * f);
  return {(t - beta) * slope, -alpha * slope};
}

SigmoidFit fit_sigmoid(std::span<const double> y, const FitConfig& config) {
  config.validate();
  if (y.size() < 3) throw Error(ErrorCode::invalid_series, "sigmoid fit needs at least 3 samples");
  if (!std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::invalid_series, "sigmoid fit input is not finite");
  }

  const std::size_t frames = y.size();
  Params p{config.alpha_init, config.beta_init_fraction * static_cast<double>(frames)};
  double lambda = kLambdaInit;
  double sse = sum_squared_error(y, p);
  if (!std::isfinite(sse)) return finish(p, sse, frames, 0, FitTermination::non_finite, config);

  for (std::size_t iter = 1; iter <= config.max_iterations; ++iter) {
    const NormalEquations n = build_normal_equations(y, p);
    // Marquardt scaling; the floor keeps the system solvable when a
    // parameter has no influence (alpha = 0 zeroes the beta column).
    const double scale_floor = 1e-12 * std::max({n.a11, n.a22, 1e-300});
    const double d1 = std::max(n.a11, scale_floor);
    const double d2 = std::max(n.a22, scale_floor);

    bool accepted = false;
    bool small = false;
    Params next = p;
    double next_sse = sse;
    while (lambda <= kLambdaMax) {
      const double m11 = n.a11 + lambda * d1;
      const double m22 = n.a22 + lambda * d2;
      const double det = m11 * m22 - n.a12 * n.a12;
      if (det > 0.0 && std::isfinite(det)) {
        const double da = (m22 * n.g1 - n.a12 * n.g2) / det;
        const double db = (m11 * n.g2 - n.a12 * n.g1) / det;
        next = {std::max(0.0, p.alpha + da), std::max(0.0, p.beta + db)};
        next_sse = sum_squared_error(y, next);
        small = within_tolerance(p, next, config.residual_tolerance);
        // Near the optimum the SSE change drops below rounding; a step that
        // leaves the SSE unchanged to that level is still taken.
        if (std::isfinite(next_sse) && next_sse <= sse * (1.0 + kSseRounding)) {
          accepted = true;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) return finish(p, sse, frames, iter, FitTermination::no_improvement, config);

    p = next;
    sse = next_sse;
    lambda = std::max(lambda * 0.1, kLambdaMin);
    if (small) return finish(p, sse, frames, iter, FitTermination::step_tolerance, config);
  }
  return finish(p, sse, frames, config.max_iterations, FitTermination::max_iterations, config);
}

WeightEvaluation evaluate_weights(const SimilaritySeries& series, const PromptSet& prompts,
                                  const WeightVector& weights, double window_seconds, const FitConfig& config) {
  const std::size_t window = window_samples(window_seconds, series.sample_rate_hz());
  require_matching_columns(series, prompts);
  if (weights.size() != prompts.size()) {
    throw Error(ErrorCode::dimension_mismatch, "weight count does not match prompt count");
  }

  WeightEvaluation out;
  out.signal.window_samples = window;
  if (weights.degenerate()) {
    out.status = EvaluationStatus::degenerate_weights;
    return out;
  }

  out.signal.raw = weighted_similarity(series, prompts, weights);
  out.signal.averaged = moving_average(out.signal.raw, window);
  const auto [lo, hi] = std::minmax_element(out.signal.averaged.begin(), out.signal.averaged.end());
  if (!(*hi - *lo > kRangeEpsilon)) {
    out.status = EvaluationStatus::flat_signal;
    return out;
  }
  const NormalizationParams params = compute_normalization(out.signal.averaged, window);
  out.signal.normalization = params;
  out.signal.normalized = normalize(out.signal.averaged, params);
  out.normalization = params;
  if (out.signal.normalized.size() < 3) {
    out.status = EvaluationStatus::fit_failed;
    return out;
  }

  if (config.target == FitTarget::averaged) {
    out.fit = fit_sigmoid(out.signal.normalized, config);
  } else {
    out.fit = fit_sigmoid(normalize(out.signal.raw, params), config);
  }
  if (!out.fit.converged) out.status = EvaluationStatus::fit_failed;
  return out;
}

std::vector<double> fitted_curve(const SigmoidFit& fit, std::size_t frames) {
  std::vector<double> out(frames);
  for (std::size_t k = 0; k < frames; ++k) out[k] = sigmoid(static_cast<double>(k + 1), fit.alpha, fit.beta);
  return out;
}

}  // namespace statecurve
