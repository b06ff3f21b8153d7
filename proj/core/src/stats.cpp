#include "tomsyn/stats.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <cmath>

#include "tomsyn/error.hpp"

namespace tomsyn {
namespace {

double variance_of(const std::vector<double>& xs, double mean) {
  if (xs.size() < 2) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / (static_cast<double>(xs.size()) - 1.0);
}

}  // namespace

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double sample_std(const std::vector<double>& xs) {
  return std::sqrt(variance_of(xs, mean_of(xs)));
}

double significance(const std::vector<double>& a,
                    const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) {
    throw UsageError("significance test needs at least two values per side");
  }
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double ma = mean_of(a);
  const double mb = mean_of(b);
  const double ea = variance_of(a, ma) / na;  // squared standard errors
  const double eb = variance_of(b, mb) / nb;
  const double se2 = ea + eb;
  if (se2 <= 0.0) return ma == mb ? 1.0 : 0.0;

  const double t = (ma - mb) / std::sqrt(se2);
  // Welch-Satterthwaite degrees of freedom.
  const double df =
      se2 * se2 / (ea * ea / (na - 1.0) + eb * eb / (nb - 1.0));
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

double significance_above(const std::vector<double>& xs, double mu0) {
  if (xs.size() < 2) {
    throw UsageError("significance test needs at least two values");
  }
  const double n = static_cast<double>(xs.size());
  const double m = mean_of(xs);
  const double var = variance_of(xs, m);
  if (var <= 0.0) return m > mu0 ? 0.0 : 1.0;

  const double t = (m - mu0) / std::sqrt(var / n);
  boost::math::students_t dist(n - 1.0);
  return boost::math::cdf(boost::math::complement(dist, t));
}

}  // namespace tomsyn
