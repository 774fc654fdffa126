#pragma once

#include <cstdint>
#include <vector>

namespace icpsim {

// Monte Carlo estimate with a 95% interval.
struct Estimate {
  double mean = 0;
  double ci_low = 0;
  double ci_high = 0;
  std::uint64_t replicas = 0;
  std::uint64_t excluded = 0;
  std::uint64_t seed = 0;

  bool operator==(const Estimate&) const = default;
};

constexpr double kZ95 = 1.959963984540054;

// Wilson score interval for successes out of trials.
Estimate wilson(std::uint64_t successes, std::uint64_t trials, double z = kZ95);

// Running count / sum / sum of squares; merging is commutative.
struct Accumulator {
  std::uint64_t count = 0;
  std::uint64_t excluded = 0;
  double sum = 0;
  double sum_sq = 0;

  void add(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const Accumulator& o) {
    count += o.count;
    excluded += o.excluded;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
  double variance() const;
  // Normal-approximation interval for the mean.
  Estimate estimate(std::uint64_t seed = 0) const;
};

// Upper tail probability of a chi-square variable.
double chi_square_sf(double statistic, double dof);

struct ChiSquareResult {
  double statistic = 0;
  double dof = 0;
  double p_value = 1;
};

// Two-sample homogeneity test on binned counts. Bins whose pooled count is
// below min_pooled are merged into their neighbor before testing.
ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_pooled = 10);

// Goodness of fit of observed counts to expected counts (same total).
ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                               double min_expected = 5, int fitted_parameters = 0);

}  // namespace icpsim
