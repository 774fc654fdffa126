#include "icpsim/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "icpsim/errors.hpp"

namespace icpsim {

Estimate wilson(std::uint64_t successes, std::uint64_t trials, double z) {
  Estimate e;
  e.replicas = trials;
  if (trials == 0) {
    e.ci_low = 0;
    e.ci_high = 1;
    return e;
  }
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1 + z2 / n;
  const double center = (phat + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom;
  e.mean = phat;
  e.ci_low = std::max(0.0, center - half);
  e.ci_high = std::min(1.0, center + half);
  return e;
}

double Accumulator::variance() const {
  if (count < 2) return 0.0;
  const double n = static_cast<double>(count);
  const double m = sum / n;
  return std::max(0.0, (sum_sq - n * m * m) / (n - 1));
}

Estimate Accumulator::estimate(std::uint64_t seed) const {
  Estimate e;
  e.mean = mean();
  const double half = count ? kZ95 * std::sqrt(variance() / static_cast<double>(count)) : 0.0;
  e.ci_low = e.mean - half;
  e.ci_high = e.mean + half;
  e.replicas = count;
  e.excluded = excluded;
  e.seed = seed;
  return e;
}

double chi_square_sf(double statistic, double dof) {
  if (dof <= 0) return 1.0;
  if (statistic <= 0) return 1.0;
  boost::math::chi_squared dist(dof);
  return boost::math::cdf(boost::math::complement(dist, statistic));
}

namespace {

// Greedy left-to-right merging until every bin reaches the floor.
std::vector<std::pair<double, double>> merge_bins(const std::vector<double>& a, const std::vector<double>& b,
                                                  const std::vector<double>& weight, double floor) {
  std::vector<std::pair<double, double>> out;
  double ca = 0, cb = 0, w = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ca += a[i];
    cb += b[i];
    w += weight[i];
    if (w >= floor) {
      out.push_back({ca, cb});
      ca = cb = w = 0;
    }
  }
  if (w > 0 || ca > 0 || cb > 0) {
    if (out.empty()) {
      out.push_back({ca, cb});
    } else {
      out.back().first += ca;
      out.back().second += cb;
    }
  }
  return out;
}

}  // namespace

ChiSquareResult chi_square_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                                      double min_pooled) {
  require(a.size() == b.size(), "histograms differ in length");
  std::vector<double> pooled(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) pooled[i] = a[i] + b[i];
  auto bins = merge_bins(a, b, pooled, min_pooled);
  double na = 0, nb = 0;
  for (auto [x, y] : bins) {
    na += x;
    nb += y;
  }
  ChiSquareResult r;
  if (bins.size() < 2 || na == 0 || nb == 0) return r;
  const double ka = std::sqrt(nb / na), kb = std::sqrt(na / nb);
  for (auto [x, y] : bins) {
    if (x + y == 0) continue;
    const double diff = ka * x - kb * y;
    r.statistic += diff * diff / (x + y);
  }
  r.dof = static_cast<double>(bins.size() - 1);
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

ChiSquareResult chi_square_gof(const std::vector<double>& observed, const std::vector<double>& expected,
                               double min_expected, int fitted_parameters) {
  require(observed.size() == expected.size(), "histograms differ in length");
  auto bins = merge_bins(observed, expected, expected, min_expected);
  ChiSquareResult r;
  if (bins.size() < 2) return r;
  for (auto [o, e] : bins) {
    if (e <= 0) continue;
    r.statistic += (o - e) * (o - e) / e;
  }
  r.dof = static_cast<double>(bins.size()) - 1 - fitted_parameters;
  r.p_value = chi_square_sf(r.statistic, r.dof);
  return r;
}

}  // namespace icpsim
