#ifndef COASTLINE_DISTRIBUTIONS_HPP
#define COASTLINE_DISTRIBUTIONS_HPP

#include <cmath>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "coastline/error.hpp"
#include "coastline/numeric.hpp"

namespace coastline {

/// Shape and scale of the modified Cauchy family, p(x) ∝ β / (β + |x|^α),
/// restricted to a bounded support.
class ModCauchyParams {
 public:
  ModCauchyParams(double beta, double alpha, Interval support)
      : beta_(beta), alpha_(alpha), support_(support) {
    if (!(beta > 0.0) || !std::isfinite(beta)) fail(ErrorCode::domain_error, "modcauchy beta must be > 0");
    if (!(alpha > 0.0) || !std::isfinite(alpha)) fail(ErrorCode::domain_error, "modcauchy alpha must be > 0");
    if (!(support.lo < support.hi)) fail(ErrorCode::domain_error, "modcauchy support needs a < b");
  }

  double beta() const { return beta_; }
  double alpha() const { return alpha_; }
  const Interval& support() const { return support_; }

 private:
  double beta_;
  double alpha_;
  Interval support_;
};

inline constexpr std::size_t kNormalizationNodes = 2048;

inline double modcauchy_unnormalized(double x, const ModCauchyParams& p) {
  return p.beta() / (p.beta() + std::pow(std::abs(x), p.alpha()));
}

/// Trapezoid integral of the unnormalized density over the support.
inline double modcauchy_normalizer(const ModCauchyParams& p) {
  const auto xs = linspace(p.support().lo, p.support().hi, kNormalizationNodes);
  std::vector<double> ys(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ys[i] = modcauchy_unnormalized(xs[i], p);
  return trapezoid(xs, ys);
}

/// Unnormalized mode has density(0) = 1.
inline double modcauchy_density(double x, const ModCauchyParams& p, bool normalized) {
  if (!normalized) return modcauchy_unnormalized(x, p);
  if (!p.support().contains(x)) fail(ErrorCode::domain_error, "x outside modcauchy support");
  return modcauchy_unnormalized(x, p) / modcauchy_normalizer(p);
}

/// Full width at half maximum, β^(1/α).
inline double fwhm(const ModCauchyParams& p) { return std::pow(p.beta(), 1.0 / p.alpha()); }

/// Ratio of the modified Cauchy density to the standard Cauchy shape. It grows
/// without bound for 0 < α < 2, which is the numeric face of heavy-tailedness.
inline double heavy_tail_ratio(double x, const ModCauchyParams& p) {
  return p.beta() * (1.0 + x * x) / (p.beta() + std::pow(std::abs(x), p.alpha()));
}

// Closed-form densities.

struct Gaussian {
  double mean = 0.0;
  double stddev = 1.0;
};

struct StandardCauchy {};

/// Modified Cauchy normalized over its support; the normalizer is cached.
struct ModCauchy {
  explicit ModCauchy(ModCauchyParams p) : params(p), normalizer(modcauchy_normalizer(p)) {}

  ModCauchyParams params;
  double normalizer;
};

/// Arcsine law on [-1, 1].
struct Arcsine {};

using AnalyticPdf = std::variant<Gaussian, StandardCauchy, ModCauchy, Arcsine>;

inline AnalyticPdf make_gaussian(double mean, double stddev) {
  if (!(stddev > 0.0)) fail(ErrorCode::domain_error, "gaussian stddev must be > 0");
  return Gaussian{mean, stddev};
}

inline double eval_pdf(const AnalyticPdf& f, double x) {
  struct Visitor {
    double x;
    double operator()(const Gaussian& g) const {
      if (!(g.stddev > 0.0)) fail(ErrorCode::domain_error, "gaussian stddev must be > 0");
      const double z = (x - g.mean) / g.stddev;
      return std::exp(-0.5 * z * z) / (g.stddev * std::sqrt(2.0 * kPi));
    }
    double operator()(const StandardCauchy&) const { return 1.0 / (kPi * (1.0 + x * x)); }
    double operator()(const ModCauchy& m) const {
      if (!m.params.support().contains(x)) fail(ErrorCode::domain_error, "x outside modcauchy support");
      return modcauchy_unnormalized(x, m.params) / m.normalizer;
    }
    double operator()(const Arcsine&) const {
      if (!(std::abs(x) < 1.0)) fail(ErrorCode::domain_error, "arcsine density needs |x| < 1");
      return 1.0 / (kPi * std::sqrt(1.0 - x * x));
    }
  };
  return std::visit(Visitor{x}, f);
}

/// A tabulated density: strictly increasing abscissae, non-negative values.
class PdfGrid {
 public:
  PdfGrid(std::vector<double> xs, std::vector<double> ps) : xs_(std::move(xs)), ps_(std::move(ps)) {
    if (xs_.size() < 2) fail(ErrorCode::degenerate_input, "pdf grid needs at least 2 nodes");
    if (xs_.size() != ps_.size()) fail(ErrorCode::alignment, "pdf grid xs/ps length mismatch");
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (!std::isfinite(xs_[i])) fail(ErrorCode::degenerate_input, "pdf grid abscissa not finite");
      if (i > 0 && !(xs_[i] > xs_[i - 1])) {
        fail(ErrorCode::degenerate_input, "pdf grid abscissae must be strictly increasing");
      }
      if (!(ps_[i] >= 0.0) || !std::isfinite(ps_[i])) {
        fail(ErrorCode::degenerate_input, "pdf grid values must be finite and non-negative");
      }
    }
  }

  std::span<const double> xs() const { return xs_; }
  std::span<const double> ps() const { return ps_; }
  std::size_t size() const { return xs_.size(); }
  double integral() const { return trapezoid(xs_, ps_); }
  double max_value() const { return *std::max_element(ps_.begin(), ps_.end()); }

 private:
  std::vector<double> xs_;
  std::vector<double> ps_;
};

inline PdfGrid normalize_on_support(const PdfGrid& g) {
  const double total = g.integral();
  if (!(total > 0.0) || !std::isfinite(total)) {
    fail(ErrorCode::degenerate_input, "pdf grid has non-positive integral");
  }
  std::vector<double> ps(g.ps().begin(), g.ps().end());
  for (auto& p : ps) p /= total;
  return PdfGrid({g.xs().begin(), g.xs().end()}, std::move(ps));
}

inline PdfGrid tabulate(const AnalyticPdf& f, std::span<const double> xs) {
  std::vector<double> ps(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ps[i] = eval_pdf(f, xs[i]);
  return PdfGrid({xs.begin(), xs.end()}, std::move(ps));
}

}  // namespace coastline

#endif  // COASTLINE_DISTRIBUTIONS_HPP
