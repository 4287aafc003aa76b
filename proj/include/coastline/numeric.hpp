#ifndef COASTLINE_NUMERIC_HPP
#define COASTLINE_NUMERIC_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "coastline/error.hpp"

namespace coastline {

inline constexpr double kPi = std::numbers::pi;

struct Interval {
  double lo;
  double hi;

  bool contains(double x) const { return x >= lo && x <= hi; }
  double width() const { return hi - lo; }
};

/// Composite trapezoid rule over a tabulation.
inline double trapezoid(std::span<const double> xs, std::span<const double> ys) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    sum += 0.5 * (xs[i + 1] - xs[i]) * (ys[i] + ys[i + 1]);
  }
  return sum;
}

/// Trapezoid quadrature weights; sum equals hi - lo.
inline std::vector<double> trapezoid_weights(std::span<const double> xs) {
  std::vector<double> w(xs.size(), 0.0);
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double h = 0.5 * (xs[i + 1] - xs[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  return w;
}

/// n uniformly spaced points on [lo, hi], endpoints included exactly.
inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  if (n < 2) fail(ErrorCode::degenerate_input, "linspace needs at least 2 points");
  std::vector<double> xs(n);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) xs[i] = lo + static_cast<double>(i) * step;
  xs.back() = hi;
  return xs;
}

/// Grid from a `lo:hi:step` range; the step is rounded so hi is hit exactly.
inline std::vector<double> range_grid(double lo, double hi, double step) {
  if (!(hi > lo) || !(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi)) {
    fail(ErrorCode::usage, "range needs lo < hi and step > 0");
  }
  const double count = std::round((hi - lo) / step);
  if (count < 1.0 || count > 1e8) fail(ErrorCode::usage, "range step out of bounds");
  return linspace(lo, hi, static_cast<std::size_t>(count) + 1);
}

/// Linear interpolation on a strictly increasing table; x must lie inside.
inline double interpolate(std::span<const double> xs, std::span<const double> ys, double x) {
  if (x < xs.front() || x > xs.back()) {
    fail(ErrorCode::domain_error, "interpolation point outside table");
  }
  auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.end()) return ys.back();
  const auto i = static_cast<std::size_t>(it - xs.begin()) - 1;
  if (xs[i] == x) return ys[i];
  const double s = (x - xs[i]) / (xs[i + 1] - xs[i]);
  return ys[i] + s * (ys[i + 1] - ys[i]);
}

// Random streams. A stream is identified by (seed, stream index) so work can
// be split into independent chunks whose output does not depend on how the
// chunks are scheduled.

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream),
                    static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

/// Maps 64 random bits to a double strictly inside (0, 1).
inline double open_unit(std::uint64_t bits) {
  return (static_cast<double>(bits >> 12) + 0.5) * 0x1p-52;
}

// Threading. COASTLINE_THREADS caps worker count; 0 or unset means one per core.

inline unsigned thread_budget() {
  unsigned n = 0;
  if (const char* env = std::getenv("COASTLINE_THREADS")) {
    n = static_cast<unsigned>(std::strtoul(env, nullptr, 10));
  }
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

/// Runs task(i) for i in [0, n). Tasks must be independent; results are
/// scheduling-independent as long as each task writes only its own slot.
template <typename Task>
void parallel_for(std::size_t n, Task&& task) {
  const std::size_t workers = std::min<std::size_t>(thread_budget(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) task(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) task(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace coastline

#endif  // COASTLINE_NUMERIC_HPP
