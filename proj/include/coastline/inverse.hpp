#ifndef COASTLINE_INVERSE_HPP
#define COASTLINE_INVERSE_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coastline/distributions.hpp"
#include "coastline/error.hpp"
#include "coastline/geometry.hpp"
#include "coastline/numeric.hpp"

namespace coastline {

/// Inputs of the sine-squared heuristic. `kappa` is the proportionality
/// constant in p = sin^2(φ) / κ; `f1` is the coastline height at the first node.
struct HeuristicConfig {
  double y0 = 1.0;
  double kappa = 1.0;
  double f1 = 0.0;
};

inline constexpr double kMaxSlope = 1e12;

/// Angle between the lighthouse ray and the tangent, arcsin(sqrt(κ p)).
inline double phi_of(double p, double kappa) {
  if (!(kappa > 0.0)) fail(ErrorCode::domain_error, "kappa must be > 0");
  if (!(p >= 0.0)) fail(ErrorCode::domain_error, "density must be non-negative");
  const double arg = kappa * p;
  if (arg > 1.0) {
    fail(ErrorCode::arcsin_domain, "kappa * p = " + std::to_string(arg) + " exceeds 1");
  }
  return std::asin(std::sqrt(arg));
}

/// Marches the coastline node by node: θ_i from the current point, φ_i from
/// the density, f_{i+1} = f_i + δ_i tan(θ_i + φ_i - π/2). The last node
/// repeats the previous slope.
inline TabulatedCoastline sine_squared_coastline(const PdfGrid& pdf, const HeuristicConfig& cfg) {
  if (!(cfg.kappa > 0.0)) fail(ErrorCode::domain_error, "kappa must be > 0");
  if (cfg.kappa * pdf.max_value() > 1.0) {
    fail(ErrorCode::arcsin_domain, "kappa * max(p) exceeds 1");
  }
  const auto xs = pdf.xs();
  const auto ps = pdf.ps();
  const std::size_t n = xs.size();
  std::vector<double> fs(n, 0.0);
  std::vector<double> slopes(n, 0.0);
  fs[0] = cfg.f1;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double theta = azimuth_of(xs[i], fs[i], cfg.y0);
    const double phi = phi_of(ps[i], cfg.kappa);
    const double s = std::tan(theta + phi - kPi / 2.0);
    if (!(std::abs(s) < kMaxSlope)) {
      fail(ErrorCode::blow_up, "heuristic slope diverged at step " + std::to_string(i));
    }
    slopes[i] = s;
    fs[i + 1] = fs[i] + (xs[i + 1] - xs[i]) * s;
  }
  slopes[n - 1] = slopes[n - 2];
  return TabulatedCoastline({xs.begin(), xs.end()}, std::move(fs), std::move(slopes));
}

/// One monotone piece of the density. Flipped pieces are increasing and are
/// processed mirrored about the y-axis. `f1` is the height at the node where
/// processing starts: `lo` for unflipped pieces, `hi` for flipped ones.
struct Segment {
  double lo;
  double hi;
  bool flip;
  double f1 = 0.0;

  bool operator==(const Segment&) const = default;
};

struct SegmentPlan {
  std::vector<Segment> segments;
};

/// Splits the support at interior local extrema so each piece is monotone;
/// increasing pieces are flagged for flipping. Plateaus split at their first node.
inline SegmentPlan plan_segments(const PdfGrid& pdf, double /*y0*/) {
  const auto xs = pdf.xs();
  const auto ps = pdf.ps();
  std::vector<std::size_t> cuts{0};
  std::vector<int> dirs;
  int dir = 0;
  std::size_t run_start = 0;  // first node after the last strict step
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const int step = ps[i + 1] > ps[i] ? 1 : (ps[i + 1] < ps[i] ? -1 : 0);
    if (step == 0) continue;
    if (dir != 0 && step != dir) {
      cuts.push_back(run_start);
      dirs.push_back(dir);
    }
    dir = step;
    run_start = i + 1;
  }
  cuts.push_back(xs.size() - 1);
  dirs.push_back(dir);

  SegmentPlan plan;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    plan.segments.push_back({xs[cuts[k]], xs[cuts[k + 1]], dirs[k] > 0, 0.0});
  }
  return plan;
}

namespace detail {

struct Piece {
  std::vector<double> xs, fs, slopes;
  bool starts_at_lo;  ///< processing began at the left end
};

inline Piece run_segment(const PdfGrid& pdf, const Segment& seg, double y0, double kappa) {
  const auto xs = pdf.xs();
  const auto ps = pdf.ps();
  std::vector<double> sx, sp;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] >= seg.lo && xs[i] <= seg.hi) {
      sx.push_back(xs[i]);
      sp.push_back(ps[i]);
    }
  }
  if (sx.size() < 2) fail(ErrorCode::degenerate_input, "segment covers fewer than 2 nodes");
  Piece piece;
  if (!seg.flip) {
    auto c = sine_squared_coastline(PdfGrid(sx, sp), {y0, kappa, seg.f1});
    piece.xs = std::move(sx);
    piece.fs.assign(c.fs().begin(), c.fs().end());
    piece.slopes.assign(c.slopes().begin(), c.slopes().end());
    piece.starts_at_lo = true;
    return piece;
  }
  std::vector<double> mx(sx.size()), mp(sp.size());
  for (std::size_t i = 0; i < sx.size(); ++i) {
    mx[i] = -sx[sx.size() - 1 - i];
    mp[i] = sp[sp.size() - 1 - i];
  }
  auto c = sine_squared_coastline(PdfGrid(std::move(mx), std::move(mp)), {y0, kappa, seg.f1});
  const std::size_t m = sx.size();
  piece.xs = std::move(sx);
  piece.fs.resize(m);
  piece.slopes.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    piece.fs[j] = c.fs()[m - 1 - j];
    piece.slopes[j] = -c.slopes()[m - 1 - j];
  }
  piece.starts_at_lo = false;
  return piece;
}

}  // namespace detail

/// Runs the heuristic on every piece of the plan and joins the pieces. At a
/// shared node the piece that started there wins, preferring the right one.
inline TabulatedCoastline run_plan(const PdfGrid& pdf, const SegmentPlan& plan, double y0, double kappa) {
  if (plan.segments.empty()) fail(ErrorCode::degenerate_input, "empty segment plan");
  std::vector<double> xs, fs, slopes;
  bool last_started_at_end = false;
  for (const auto& seg : plan.segments) {
    auto piece = detail::run_segment(pdf, seg, y0, kappa);
    std::size_t from = 0;
    if (!xs.empty() && piece.xs.front() == xs.back()) {
      const bool right_wins = piece.starts_at_lo || !last_started_at_end;
      if (right_wins) {
        fs.back() = piece.fs.front();
        slopes.back() = piece.slopes.front();
      }
      from = 1;
    }
    for (std::size_t i = from; i < piece.xs.size(); ++i) {
      xs.push_back(piece.xs[i]);
      fs.push_back(piece.fs[i]);
      slopes.push_back(piece.slopes[i]);
    }
    last_started_at_end = !piece.starts_at_lo;
  }
  return TabulatedCoastline(std::move(xs), std::move(fs), std::move(slopes));
}

/// Nodes at which a coastline is evaluated: its own nodes when tabulated.
inline std::vector<double> coastline_nodes(const Coastline& c, std::span<const double> fallback) {
  if (const auto* t = std::get_if<TabulatedCoastline>(&c)) return {t->xs().begin(), t->xs().end()};
  return {fallback.begin(), fallback.end()};
}

/// Forward-maps a coastline back to a density on its nodes, then rescales it
/// by one constant so it agrees with `ref_pdf` at the smallest abscissa.
inline PdfGrid regenerate_pdf(const Coastline& c, double y0, const PdfGrid& ref_pdf) {
  const auto nodes = coastline_nodes(c, ref_pdf.xs());
  const auto report = check_coastline_condition(c, y0, nodes);
  if (!report.ok) {
    fail(ErrorCode::geometry, std::string("coastline condition fails: ") + std::string(to_string(report.reason)));
  }
  std::vector<double> ps(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) ps[i] = gencauchy_density(c, y0, *report.bounds, nodes[i]);
  if (nodes.front() < ref_pdf.xs().front() || nodes.front() > ref_pdf.xs().back()) {
    fail(ErrorCode::alignment, "coastline starts outside the reference grid");
  }
  const double target = interpolate(ref_pdf.xs(), ref_pdf.ps(), nodes.front());
  if (!(target > 0.0)) fail(ErrorCode::degenerate_normalization, "reference density is zero at minimum x");
  if (!(ps.front() > 0.0) || !std::isfinite(ps.front())) {
    fail(ErrorCode::degenerate_normalization, "regenerated density is degenerate at minimum x");
  }
  const double scale = target / ps.front();
  for (auto& p : ps) p *= scale;
  return PdfGrid(nodes, std::move(ps));
}

/// sqrt(Σ w_i (a_i - b_i)^2) with trapezoid weights w_i on the shared grid.
inline double weighted_l2(const PdfGrid& a, const PdfGrid& b) {
  if (a.size() != b.size() || !std::equal(a.xs().begin(), a.xs().end(), b.xs().begin())) {
    fail(ErrorCode::alignment, "l2 needs densities on the same grid");
  }
  const auto w = trapezoid_weights(a.xs());
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = a.ps()[i] - b.ps()[i];
    sum += w[i] * d * d;
  }
  return std::sqrt(sum);
}

struct KappaCandidate {
  double kappa;
  double l2;  ///< +inf when the candidate failed
};

struct KappaChoice {
  double kappa;
  double l2;
  std::vector<KappaCandidate> candidates;
};

inline constexpr double kKappaCeiling = 5.0;

/// Round-trip error of one κ: heuristic over the plan, forward map, min-x
/// normalization, weighted L2 against the input. Failures give +inf.
inline double roundtrip_l2(const PdfGrid& pdf, double y0, const SegmentPlan& plan, double kappa) {
  try {
    const Coastline c = run_plan(pdf, plan, y0, kappa);
    const double l2 = weighted_l2(regenerate_pdf(c, y0, pdf), pdf);
    return std::isfinite(l2) ? l2 : std::numeric_limits<double>::infinity();
  } catch (const Error&) {
    return std::numeric_limits<double>::infinity();
  }
}

/// Grid search of κ over k_steps uniform values in (0, min(5, 1/max p)].
/// Ties go to the smaller κ.
inline KappaChoice select_kappa(const PdfGrid& pdf, double y0, const SegmentPlan& plan, std::size_t k_steps) {
  if (k_steps < 2) fail(ErrorCode::domain_error, "k_steps must be >= 2");
  const double peak = pdf.max_value();
  if (!(peak > 0.0)) fail(ErrorCode::degenerate_input, "density is identically zero");
  const double upper = std::min(kKappaCeiling, 1.0 / peak);
  std::vector<KappaCandidate> candidates(k_steps);
  parallel_for(k_steps, [&](std::size_t k) {
    const double kappa = upper * static_cast<double>(k + 1) / static_cast<double>(k_steps);
    candidates[k] = {kappa, roundtrip_l2(pdf, y0, plan, kappa)};
  });
  std::size_t best = 0;
  for (std::size_t k = 1; k < k_steps; ++k) {
    if (candidates[k].l2 < candidates[best].l2) best = k;
  }
  if (!std::isfinite(candidates[best].l2)) fail(ErrorCode::no_feasible_kappa, "every kappa candidate failed");
  return {candidates[best].kappa, candidates[best].l2, std::move(candidates)};
}

/// Residual of y' = (1/x)(y - Δθ p (x^2 + y^2)) with y = y0 - f at each pdf
/// node. Nodes with |x| <= 1e-6 are left unevaluated.
inline std::vector<std::optional<double>> ode_residual(const PdfGrid& pdf, const Coastline& c, double y0,
                                                       double delta_theta) {
  if (!(delta_theta > 0.0)) fail(ErrorCode::domain_error, "delta_theta must be > 0");
  if (const auto* t = std::get_if<TabulatedCoastline>(&c)) {
    if (t->size() != pdf.size() || !std::equal(t->xs().begin(), t->xs().end(), pdf.xs().begin())) {
      fail(ErrorCode::alignment, "coastline nodes do not match the pdf grid");
    }
  }
  const auto xs = pdf.xs();
  const auto ps = pdf.ps();
  std::vector<std::optional<double>> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    if (std::abs(x) <= 1e-6) continue;
    const double y = y0 - height(c, x);
    const double dy = -slope(c, x);
    out[i] = dy - (y - delta_theta * ps[i] * (x * x + y * y)) / x;
  }
  return out;
}

/// Full inverse round trip on one density.
struct RoundTrip {
  SegmentPlan plan;
  double kappa;
  double l2;
  TabulatedCoastline coastline;
  PdfGrid regenerated;
};

inline RoundTrip roundtrip(const PdfGrid& pdf, double y0, std::optional<double> kappa, std::size_t k_steps) {
  SegmentPlan plan = plan_segments(pdf, y0);
  double chosen = 0.0;
  if (kappa) {
    chosen = *kappa;
  } else {
    chosen = select_kappa(pdf, y0, plan, k_steps).kappa;
  }
  TabulatedCoastline c = run_plan(pdf, plan, y0, chosen);
  PdfGrid regen = regenerate_pdf(c, y0, pdf);
  const double l2 = weighted_l2(regen, pdf);
  return {std::move(plan), chosen, l2, std::move(c), std::move(regen)};
}

}  // namespace coastline

#endif  // COASTLINE_INVERSE_HPP
