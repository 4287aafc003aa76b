#ifndef COASTLINE_TEST_SUPPORT_HPP
#define COASTLINE_TEST_SUPPORT_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

namespace gen {

// Small hand-rolled generator for property tests; every case is reproducible
// from (seed, case index).
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  std::int64_t integer(std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_);
  }
  std::size_t index(std::size_t n) { return static_cast<std::size_t>(integer(0, static_cast<std::int64_t>(n) - 1)); }
  bool coin() { return integer(0, 1) == 1; }

  // Strictly increasing grid on [lo, hi] with jittered spacing.
  std::vector<double> grid(double lo, double hi, std::size_t n) {
    std::vector<double> w(n - 1);
    double total = 0.0;
    for (auto& v : w) total += (v = uniform(0.5, 1.5));
    std::vector<double> xs{lo};
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      xs.push_back(lo + (hi - lo) * acc / total);
    }
    xs.push_back(hi);
    return xs;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

template <typename Body>
void for_all(std::uint64_t seed, int cases, Body body) {
  for (int i = 0; i < cases; ++i) {
    SCOPED_TRACE("property case " + std::to_string(i) + " seed " + std::to_string(seed));
    Gen g(seed * 1000003u + static_cast<std::uint64_t>(i));
    body(g);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

}  // namespace gen

#endif
