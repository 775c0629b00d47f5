#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace comtraq {

struct SampleStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample (n - 1) standard deviation; 0 when n < 2
  std::size_t n = 0;
};

inline SampleStats sample_stats(std::span<const double> xs) {
  SampleStats s;
  s.n = xs.size();
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

struct PairedTTest {
  double mean_diff = 0.0;  // mean of (a - b)
  double t = 0.0;
  double dof = 0.0;
  double p_greater = 1.0;    // one-sided, H1: mean(a - b) > 0
  double p_two_sided = 1.0;
};

/// Paired t-test on a[i] - b[i]. All-equal differences give t = +-inf (or 0
/// when the mean difference is 0) with the matching limiting p-values.
inline PairedTTest paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: sample sizes differ");
  if (a.size() < 2) throw std::invalid_argument("paired_t_test: need at least two pairs");
  const std::size_t n = a.size();
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] - b[i];
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i] - mean;
    ss += d * d;
  }
  PairedTTest r;
  r.mean_diff = mean;
  r.dof = static_cast<double>(n - 1);
  const double se = std::sqrt(ss / r.dof / static_cast<double>(n));
  if (se == 0.0) {
    if (mean > 0.0) {
      r.t = INFINITY;
      r.p_greater = 0.0;
      r.p_two_sided = 0.0;
    } else if (mean < 0.0) {
      r.t = -INFINITY;
      r.p_greater = 1.0;
      r.p_two_sided = 0.0;
    } else {
      r.p_greater = 0.5;
      r.p_two_sided = 1.0;
    }
    return r;
  }
  r.t = mean / se;
  const boost::math::students_t dist(r.dof);
  r.p_greater = boost::math::cdf(boost::math::complement(dist, r.t));
  r.p_two_sided = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(r.t)));
  return r;
}

}  // namespace comtraq
