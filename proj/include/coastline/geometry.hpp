#ifndef COASTLINE_GEOMETRY_HPP
#define COASTLINE_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include "coastline/distributions.hpp"
#include "coastline/error.hpp"
#include "coastline/numeric.hpp"

namespace coastline {

// Coastlines. The lighthouse always sits at (0, y0); a coastline is the graph
// y = f(x) on which its flashes land.

struct Flat {};             ///< f(x) = 0
struct Line45 {};           ///< f(x) = x
struct Line135 {};          ///< f(x) = -x
struct LowerSemicircle {};  ///< f(x) = 1 - sqrt(1 - x^2), unit circle centred at (0, 1)

/// Piecewise-linear coastline with explicitly stored derivative values.
///
/// `slopes[i]` is the derivative at node i and also the slope used for
/// density queries strictly inside segment [x_i, x_{i+1}]. Heights between
/// nodes are linear interpolants of `fs`.
class TabulatedCoastline {
 public:
  TabulatedCoastline(std::vector<double> xs, std::vector<double> fs, std::vector<double> slopes)
      : xs_(std::move(xs)), fs_(std::move(fs)), slopes_(std::move(slopes)) {
    if (xs_.size() < 2) fail(ErrorCode::degenerate_input, "tabulated coastline needs at least 2 nodes");
    if (fs_.size() != xs_.size() || slopes_.size() != xs_.size()) {
      fail(ErrorCode::alignment, "tabulated coastline columns differ in length");
    }
    for (std::size_t i = 0; i < xs_.size(); ++i) {
      if (i > 0 && !(xs_[i] > xs_[i - 1])) {
        fail(ErrorCode::degenerate_input, "tabulated coastline xs must be strictly increasing");
      }
      if (!std::isfinite(xs_[i]) || !std::isfinite(fs_[i]) || !std::isfinite(slopes_[i])) {
        fail(ErrorCode::degenerate_input, "tabulated coastline values must be finite");
      }
    }
  }

  std::span<const double> xs() const { return xs_; }
  std::span<const double> fs() const { return fs_; }
  std::span<const double> slopes() const { return slopes_; }
  std::size_t size() const { return xs_.size(); }

  double height(double x) const { return interpolate(xs_, fs_, x); }

  double slope(double x) const {
    if (x < xs_.front() || x > xs_.back()) fail(ErrorCode::domain_error, "x outside tabulated coastline");
    auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
    if (it == xs_.end()) return slopes_.back();
    return slopes_[static_cast<std::size_t>(it - xs_.begin()) - 1];
  }

 private:
  std::vector<double> xs_;
  std::vector<double> fs_;
  std::vector<double> slopes_;
};

using Coastline = std::variant<Flat, Line45, Line135, LowerSemicircle, TabulatedCoastline>;

inline std::optional<Coastline> builtin_coastline(std::string_view name) {
  if (name == "flat") return Flat{};
  if (name == "line45") return Line45{};
  if (name == "line135") return Line135{};
  if (name == "semicircle") return LowerSemicircle{};
  return std::nullopt;
}

inline constexpr std::string_view kBuiltinCoastlines[] = {"flat", "line45", "line135", "semicircle"};

/// Closed domain of f. The semicircle's density only exists on the open interior.
inline Interval domain(const Coastline& c) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  if (std::holds_alternative<LowerSemicircle>(c)) return {-1.0, 1.0};
  if (const auto* t = std::get_if<TabulatedCoastline>(&c)) return {t->xs().front(), t->xs().back()};
  return {-inf, inf};
}

inline double height(const Coastline& c, double x) {
  if (!domain(c).contains(x)) fail(ErrorCode::domain_error, "x outside coastline domain");
  struct Visitor {
    double x;
    double operator()(const Flat&) const { return 0.0; }
    double operator()(const Line45&) const { return x; }
    double operator()(const Line135&) const { return -x; }
    double operator()(const LowerSemicircle&) const { return 1.0 - std::sqrt(1.0 - x * x); }
    double operator()(const TabulatedCoastline& t) const { return t.height(x); }
  };
  return std::visit(Visitor{x}, c);
}

inline double slope(const Coastline& c, double x) {
  if (!domain(c).contains(x)) fail(ErrorCode::domain_error, "x outside coastline domain");
  struct Visitor {
    double x;
    double operator()(const Flat&) const { return 0.0; }
    double operator()(const Line45&) const { return 1.0; }
    double operator()(const Line135&) const { return -1.0; }
    double operator()(const LowerSemicircle&) const {
      if (!(std::abs(x) < 1.0)) fail(ErrorCode::domain_error, "semicircle slope is vertical at |x| = 1");
      return x / std::sqrt(1.0 - x * x);
    }
    double operator()(const TabulatedCoastline& t) const { return t.slope(x); }
  };
  return std::visit(Visitor{x}, c);
}

/// Interval of azimuths uniformly swept by the lighthouse.
class AzimuthalBounds {
 public:
  AzimuthalBounds(double lo, double hi) : lo_(lo), hi_(hi) {
    if (!(lo >= -kPi && hi <= kPi && lo < hi)) {
      fail(ErrorCode::domain_error, "azimuthal bounds need -pi <= lo < hi <= pi");
    }
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double width() const { return hi_ - lo_; }
  bool strictly_contains(double theta) const { return theta > lo_ && theta < hi_; }

 private:
  double lo_;
  double hi_;
};

/// Signed azimuth of (x, fx) seen from (0, y0), measured from straight down.
///
/// Below the lighthouse the angle is arctan(x / (y0 - fx)); above it the
/// continuous branch arctan((fx - y0) / x) + sgn(x)·π/2 is used. A point
/// directly overhead (x = 0, fx > y0) maps to π.
inline double azimuth_of(double x, double fx, double y0) {
  if (x == 0.0 && fx == y0) fail(ErrorCode::domain_error, "point coincides with the lighthouse");
  if (fx <= y0) return std::atan(x / (y0 - fx));
  if (x == 0.0) return kPi;
  return std::atan((fx - y0) / x) + std::copysign(kPi / 2.0, x);
}

/// Limits of the azimuth at the ends of a builtin coastline's domain, or at
/// the end nodes of a tabulated one.
inline AzimuthalBounds natural_bounds(const Coastline& c, double y0) {
  // Directions to the far ends of a line y = m x are (-1, -m) and (1, m).
  auto line_bounds = [](double m) {
    const double left = std::atan2(-1.0, m);
    const double right = std::atan2(1.0, -m);
    return AzimuthalBounds(std::min(left, right), std::max(left, right));
  };
  struct Visitor {
    double y0;
    decltype(line_bounds)& lines;
    AzimuthalBounds operator()(const Flat&) const { return {-kPi / 2.0, kPi / 2.0}; }
    AzimuthalBounds operator()(const Line45&) const { return lines(1.0); }
    AzimuthalBounds operator()(const Line135&) const { return lines(-1.0); }
    AzimuthalBounds operator()(const LowerSemicircle&) const {
      const double a = azimuth_of(-1.0, 1.0, y0);
      const double b = azimuth_of(1.0, 1.0, y0);
      return {std::min(a, b), std::max(a, b)};
    }
    AzimuthalBounds operator()(const TabulatedCoastline& t) const {
      const double a = azimuth_of(t.xs().front(), t.fs().front(), y0);
      const double b = azimuth_of(t.xs().back(), t.fs().back(), y0);
      return {std::min(a, b), std::max(a, b)};
    }
  };
  return std::visit(Visitor{y0, line_bounds}, c);
}

enum class ConditionFailure { none, too_few_probes, outside_domain, lighthouse_on_graph, not_injective };

constexpr std::string_view to_string(ConditionFailure f) {
  switch (f) {
    case ConditionFailure::none: return "none";
    case ConditionFailure::too_few_probes: return "too_few_probes";
    case ConditionFailure::outside_domain: return "outside_domain";
    case ConditionFailure::lighthouse_on_graph: return "lighthouse_on_graph";
    case ConditionFailure::not_injective: return "not_injective";
  }
  return "unknown";
}

struct ConditionReport {
  bool ok = false;
  ConditionFailure reason = ConditionFailure::none;
  std::optional<AzimuthalBounds> bounds;  ///< set iff ok
};

/// Checks that the lighthouse is off the graph and that x -> θ(x) is strictly
/// monotone on the probes. Bounds are the azimuths at the first and last probe.
inline ConditionReport check_coastline_condition(const Coastline& c, double y0,
                                                 std::span<const double> probes) {
  ConditionReport report;
  if (probes.size() < 3) {
    report.reason = ConditionFailure::too_few_probes;
    return report;
  }
  const Interval dom = domain(c);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    if (!dom.contains(probes[i]) || (i > 0 && !(probes[i] > probes[i - 1]))) {
      report.reason = ConditionFailure::outside_domain;
      return report;
    }
  }
  if (dom.contains(0.0) && std::abs(height(c, 0.0) - y0) <= 1e-12) {
    report.reason = ConditionFailure::lighthouse_on_graph;
    return report;
  }
  std::vector<double> thetas(probes.size());
  for (std::size_t i = 0; i < probes.size(); ++i) {
    thetas[i] = azimuth_of(probes[i], height(c, probes[i]), y0);
  }
  bool increasing = true;
  bool decreasing = true;
  for (std::size_t i = 1; i < thetas.size(); ++i) {
    increasing = increasing && thetas[i] > thetas[i - 1];
    decreasing = decreasing && thetas[i] < thetas[i - 1];
  }
  if (!increasing && !decreasing) {
    report.reason = ConditionFailure::not_injective;
    return report;
  }
  report.ok = true;
  report.bounds = AzimuthalBounds(std::min(thetas.front(), thetas.back()),
                                  std::max(thetas.front(), thetas.back()));
  return report;
}

/// Density of landing abscissae for uniform azimuths in `bounds`:
/// |(y0 - f) + x f'| / (x^2 + (y0 - f)^2) / Δθ.
inline double gencauchy_density(const Coastline& c, double y0, const AzimuthalBounds& bounds, double x) {
  if (std::holds_alternative<LowerSemicircle>(c) && !(std::abs(x) < 1.0)) {
    fail(ErrorCode::domain_error, "semicircle density needs |x| < 1");
  }
  const double gap = y0 - height(c, x);
  const double numerator = gap + x * slope(c, x);
  const double r2 = x * x + gap * gap;
  if (r2 == 0.0) fail(ErrorCode::domain_error, "density undefined at the lighthouse");
  return std::abs(numerator) / r2 / bounds.width();
}

/// The unique abscissa where the ray at azimuth `theta` meets the coastline.
inline double ray_intersect(const Coastline& c, double y0, double theta) {
  const AzimuthalBounds bounds = natural_bounds(c, y0);
  if (!bounds.strictly_contains(theta)) fail(ErrorCode::no_intersection, "azimuth outside coastline bounds");
  const double s = std::sin(theta);
  const double co = std::cos(theta);

  // Ray (t s, y0 - t co), t > 0, against y = m x.
  auto against_line = [&](double m) {
    const double t = y0 / (co + m * s);
    if (!(t > 0.0) || !std::isfinite(t)) fail(ErrorCode::no_intersection, "ray misses the coastline");
    return t * s;
  };

  struct Visitor {
    double y0, theta, s, co;
    decltype(against_line)& line;
    double operator()(const Flat&) const {
      if (!(y0 / co > 0.0)) fail(ErrorCode::no_intersection, "ray misses the coastline");
      return y0 * std::tan(theta);
    }
    double operator()(const Line45&) const { return line(1.0); }
    double operator()(const Line135&) const { return line(-1.0); }
    double operator()(const LowerSemicircle&) const {
      // |(t s, y0 - t co) - (0, 1)| = 1 on the lower half y <= 1.
      const double d = y0 - 1.0;
      const double disc = d * d * co * co - d * d + 1.0;
      if (disc < 0.0) fail(ErrorCode::no_intersection, "ray misses the semicircle");
      const double root = std::sqrt(disc);
      std::optional<double> hit;
      for (double t : {d * co + root, d * co - root}) {
        if (t > 0.0 && y0 - t * co <= 1.0 + 1e-15 && !hit) hit = t * s;
      }
      if (!hit) fail(ErrorCode::no_intersection, "ray misses the semicircle");
      return *hit;
    }
    double operator()(const TabulatedCoastline& tab) const {
      const double dx = s;
      const double dy = -co;
      const auto xs = tab.xs();
      const auto fs = tab.fs();
      for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
        const double ex = xs[i + 1] - xs[i];
        const double ey = fs[i + 1] - fs[i];
        const double denom = dx * ey - dy * ex;
        if (denom == 0.0) continue;
        const double ax = xs[i];
        const double ay = fs[i] - y0;
        const double t = (ax * ey - ay * ex) / denom;
        const double u = (ax * dy - ay * dx) / denom;
        if (t > 0.0 && u >= 0.0 && u <= 1.0) return xs[i] + u * ex;
      }
      fail(ErrorCode::no_intersection, "ray misses the tabulated coastline");
    }
  };
  return std::visit(Visitor{y0, theta, s, co, against_line}, c);
}

inline constexpr std::size_t kSampleChunk = std::size_t{1} << 16;

/// Landing abscissae of n flashes with azimuths i.i.d. uniform on the open
/// bounds. Chunk k of 2^16 draws uses stream (seed, k), so the output depends
/// only on (seed, n).
inline std::vector<double> sample_hits(const Coastline& c, double y0, const AzimuthalBounds& bounds,
                                       std::size_t n, std::uint64_t seed) {
  std::vector<double> hits(n);
  const std::size_t chunks = (n + kSampleChunk - 1) / kSampleChunk;
  parallel_for(chunks, [&](std::size_t k) {
    auto engine = make_engine(seed, k);
    const std::size_t begin = k * kSampleChunk;
    const std::size_t end = std::min(n, begin + kSampleChunk);
    for (std::size_t i = begin; i < end; ++i) {
      double theta = bounds.lo() + open_unit(engine()) * bounds.width();
      theta = std::clamp(theta, std::nextafter(bounds.lo(), bounds.hi()),
                         std::nextafter(bounds.hi(), bounds.lo()));
      hits[i] = ray_intersect(c, y0, theta);
    }
  });
  return hits;
}

/// Kolmogorov–Smirnov sup-distance between samples and a CDF.
template <typename Cdf>
  requires std::is_invocable_r_v<double, const Cdf&, double>
double ks_distance(std::span<const double> samples, const Cdf& cdf) {
  if (samples.empty()) fail(ErrorCode::degenerate_input, "ks distance needs at least one sample");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    const double i_d = static_cast<double>(i);
    d = std::max({d, f - i_d / n, (i_d + 1.0) / n - f});
  }
  return std::clamp(d, 0.0, 1.0);
}

/// CDF of a tabulated density, exact for its piecewise-linear interpolant and
/// scaled by the total trapezoid mass so it ends at 1.
class GridCdf {
 public:
  explicit GridCdf(const PdfGrid& pdf)
      : xs_(pdf.xs().begin(), pdf.xs().end()), ps_(pdf.ps().begin(), pdf.ps().end()), cum_(xs_.size(), 0.0) {
    for (std::size_t i = 0; i + 1 < xs_.size(); ++i) {
      cum_[i + 1] = cum_[i] + 0.5 * (xs_[i + 1] - xs_[i]) * (ps_[i] + ps_[i + 1]);
    }
    const double total = cum_.back();
    if (!(total > 0.0)) fail(ErrorCode::degenerate_input, "pdf grid has no mass");
    for (auto& c : cum_) c /= total;
    for (auto& p : ps_) p /= total;
  }

  double operator()(double x) const {
    if (x <= xs_.front()) return 0.0;
    if (x >= xs_.back()) return 1.0;
    const auto i = static_cast<std::size_t>(std::upper_bound(xs_.begin(), xs_.end(), x) - xs_.begin()) - 1;
    const double h = xs_[i + 1] - xs_[i];
    const double s = (x - xs_[i]) / h;
    return cum_[i] + h * (s * ps_[i] + 0.5 * s * s * (ps_[i + 1] - ps_[i]));
  }

 private:
  std::vector<double> xs_;
  std::vector<double> ps_;
  std::vector<double> cum_;
};

inline double ks_distance(std::span<const double> samples, const PdfGrid& pdf) {
  return ks_distance(samples, GridCdf(pdf));
}

/// Forward map on a grid: the generalized Cauchy density at each node.
inline PdfGrid forward_density(const Coastline& c, double y0, const AzimuthalBounds& bounds,
                               std::span<const double> xs) {
  std::vector<double> ps(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) ps[i] = gencauchy_density(c, y0, bounds, xs[i]);
  return PdfGrid({xs.begin(), xs.end()}, std::move(ps));
}

}  // namespace coastline

#endif  // COASTLINE_GEOMETRY_HPP
