#ifndef COASTLINE_FIT_HPP
#define COASTLINE_FIT_HPP

#include <algorithm>
#include <limits>
#include <cmath>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "coastline/correlation.hpp"
#include "coastline/error.hpp"

namespace coastline {

struct FitResult {
  double alpha_mc;
  double beta_mc;
  double amplitude;
  double residual_l2;
  double t_half;  ///< beta_mc^(1/alpha_mc)
};

inline constexpr double kMaxFitAlpha = 4.0;
inline constexpr double kMinGridAlpha = 0.05;
inline constexpr std::size_t kAlphaGridPoints = 32;
inline constexpr double kTHalfPointsPerDecade = 64.0;

namespace detail {

/// Least squares of C(t) against A β / (β + |t|^α), parameterized by
/// (α, log t_half) with β = t_half^α. A is either 1 or its closed-form
/// optimum for the given shape.
class ModCauchyObjective {
 public:
  ModCauchyObjective(std::vector<double> lags, std::vector<double> values, bool fix_amplitude)
      : lags_(std::move(lags)), values_(std::move(values)), fix_amplitude_(fix_amplitude) {}

  struct Eval {
    double sse;
    double amplitude;
  };

  Eval evaluate(double alpha, double log_t_half) const {
    if (!(alpha > 0.0) || alpha > kMaxFitAlpha || !std::isfinite(log_t_half)) {
      return {std::numeric_limits<double>::infinity(), 1.0};
    }
    model_.resize(lags_.size());
    const double log_beta = alpha * log_t_half;
    for (std::size_t i = 0; i < lags_.size(); ++i) {
      // β / (β + t^α) = 1 / (1 + (t / t_half)^α)
      model_[i] = lags_[i] == 0.0 ? 1.0 : 1.0 / (1.0 + std::exp(alpha * std::log(lags_[i]) - log_beta));
    }
    double amplitude = 1.0;
    if (!fix_amplitude_) {
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < lags_.size(); ++i) {
        num += values_[i] * model_[i];
        den += model_[i] * model_[i];
      }
      amplitude = den > 0.0 ? num / den : 1.0;
    }
    double sse = 0.0;
    for (std::size_t i = 0; i < lags_.size(); ++i) {
      const double r = values_[i] - amplitude * model_[i];
      sse += r * r;
    }
    return {sse, amplitude};
  }

 private:
  std::vector<double> lags_;
  std::vector<double> values_;
  bool fix_amplitude_;
  mutable std::vector<double> model_;
};

inline double gsl_objective(const gsl_vector* v, void* params) {
  const auto* obj = static_cast<const ModCauchyObjective*>(params);
  return obj->evaluate(gsl_vector_get(v, 0), gsl_vector_get(v, 1)).sse;
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

/// Nelder–Mead from `start` until the simplex size drops below `tol`.
inline std::pair<double, double> nelder_mead(const ModCauchyObjective& obj, std::pair<double, double> start,
                                             std::pair<double, double> step, double tol) {
  gsl_set_error_handler_off();
  gsl_multimin_function fn{&gsl_objective, 2, const_cast<ModCauchyObjective*>(&obj)};
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(2));
  std::unique_ptr<gsl_vector, VectorDeleter> ss(gsl_vector_alloc(2));
  gsl_vector_set(x.get(), 0, start.first);
  gsl_vector_set(x.get(), 1, start.second);
  gsl_vector_set(ss.get(), 0, step.first);
  gsl_vector_set(ss.get(), 1, step.second);
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2));
  gsl_multimin_fminimizer_set(s.get(), &fn, x.get(), ss.get());
  for (int iter = 0; iter < 5000; ++iter) {
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    const double scale = std::max({1.0, std::abs(gsl_vector_get(s->x, 0)), std::abs(gsl_vector_get(s->x, 1))});
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), tol * scale) == GSL_SUCCESS) break;
  }
  return {gsl_vector_get(s->x, 0), gsl_vector_get(s->x, 1)};
}

}  // namespace detail

/// One point of the coarse search, exposed for diagnostics.
struct GridCandidate {
  double alpha_mc;
  double t_half;
  double residual_l2;
};

/// Least-squares fit on raw (|t|, C) points. The t_half grid spans
/// [t_min, t_max] at 64 points per decade.
inline FitResult fit_modcauchy_points(std::vector<double> lags, std::vector<double> values, double t_min,
                                      double t_max, bool fix_amplitude,
                                      std::vector<GridCandidate>* grid_out = nullptr) {
  const detail::ModCauchyObjective obj(std::move(lags), std::move(values), fix_amplitude);

  std::vector<double> alphas(kAlphaGridPoints);
  const double log_a0 = std::log(kMinGridAlpha);
  const double log_a1 = std::log(kMaxFitAlpha);
  for (std::size_t j = 0; j < kAlphaGridPoints; ++j) {
    alphas[j] = std::exp(log_a0 + (log_a1 - log_a0) * static_cast<double>(j) / static_cast<double>(kAlphaGridPoints - 1));
  }
  alphas.back() = kMaxFitAlpha;
  const double log_t0 = std::log(t_min);
  const double log_t1 = std::log(t_max);
  const auto n_t = static_cast<std::size_t>(std::ceil(kTHalfPointsPerDecade * (log_t1 - log_t0) / std::log(10.0))) + 1;
  std::vector<double> log_ts(n_t);
  for (std::size_t k = 0; k < n_t; ++k) {
    log_ts[k] = n_t == 1 ? log_t0 : log_t0 + (log_t1 - log_t0) * static_cast<double>(k) / static_cast<double>(n_t - 1);
  }

  // Scan α-major with ascending α then t_half; strict < keeps the first of ties.
  double best_sse = std::numeric_limits<double>::infinity();
  std::pair<double, double> best{alphas.front(), log_ts.front()};
  for (double a : alphas) {
    for (double lt : log_ts) {
      const double sse = obj.evaluate(a, lt).sse;
      if (grid_out) grid_out->push_back({a, std::exp(lt), std::sqrt(sse)});
      if (sse < best_sse) {
        best_sse = sse;
        best = {a, lt};
      }
    }
  }

  auto point = detail::nelder_mead(obj, best, {0.05, 0.1}, 1e-8);
  point = detail::nelder_mead(obj, point, {0.01, 0.02}, 1e-10);
  auto eval = obj.evaluate(point.first, point.second);
  if (!(eval.sse <= best_sse)) {
    point = best;
    eval = obj.evaluate(best.first, best.second);
  }

  FitResult r{};
  r.alpha_mc = point.first;
  r.beta_mc = std::exp(point.first * point.second);
  r.amplitude = eval.amplitude;
  r.residual_l2 = std::sqrt(eval.sse);
  r.t_half = std::pow(r.beta_mc, 1.0 / r.alpha_mc);
  return r;
}

/// Fits A β / (β + |t|^α) to a correlation series, α in (0, 4]. With
/// `fix_amplitude` A = 1. Negative and positive lags are pooled by |lag|.
inline FitResult fit_modcauchy(const CorrelationSeries& series, bool fix_amplitude,
                               std::vector<GridCandidate>* grid_out = nullptr) {
  if (series.lags.size() != series.values.size()) fail(ErrorCode::alignment, "series lags/values length mismatch");
  std::vector<double> lags, values, nonzero;
  for (std::size_t i = 0; i < series.lags.size(); ++i) {
    const double v = series.values[i];
    if (!std::isfinite(v) || v < 0.0 || v > 1.0) fail(ErrorCode::domain_error, "correlation values must lie in [0, 1]");
    const double t = std::abs(static_cast<double>(series.lags[i]));
    lags.push_back(t);
    values.push_back(v);
    if (t > 0.0) nonzero.push_back(t);
  }
  std::sort(nonzero.begin(), nonzero.end());
  nonzero.erase(std::unique(nonzero.begin(), nonzero.end()), nonzero.end());
  if (nonzero.size() < 4) fail(ErrorCode::insufficient_data, "need at least 4 distinct nonzero |lag| values");
  const auto [vmin, vmax] = std::minmax_element(values.begin(), values.end());
  if (*vmax - *vmin < 1e-12) fail(ErrorCode::degenerate_fit, "constant series carries no decay information");
  return fit_modcauchy_points(std::move(lags), std::move(values), nonzero.front(), nonzero.back(), fix_amplitude,
                              grid_out);
}

struct ReportRow {
  std::string label;
  double alpha_mc;
  double beta_mc;
  double t_half;
};

inline std::vector<ReportRow> t_half_report(std::span<const FitResult> fits, std::span<const std::string> labels) {
  if (fits.size() != labels.size()) fail(ErrorCode::alignment, "fits and labels differ in length");
  std::vector<ReportRow> rows;
  for (std::size_t i = 0; i < fits.size(); ++i) {
    rows.push_back({labels[i], fits[i].alpha_mc, fits[i].beta_mc, std::pow(fits[i].beta_mc, 1.0 / fits[i].alpha_mc)});
  }
  return rows;
}

}  // namespace coastline

#endif  // COASTLINE_FIT_HPP
