#include "bolt/stats.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "bolt/errors.hpp"

namespace bolt::stats {

double mean(std::span<const double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

double sample_std(std::span<const double> xs) { return std::sqrt(sample_variance(xs)); }

namespace {

// Continued fraction for I_x(a, b); valid (fast convergence) for x < (a+1)/(a+b+2).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIterations = 10000;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIterations; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) throw PreconditionError("incomplete_beta needs a, b > 0");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_cdf(double t, double df) {
  if (!(df > 0.0)) throw PreconditionError("t_cdf needs df > 0");
  if (std::isnan(t)) return t;
  if (t == 0.0) return 0.5;
  if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
  // Tail mass P(|T| > |t|) = I_{df/(df+t^2)}(df/2, 1/2).
  const double x = df / (df + t * t);
  const double tail = 0.5 * incomplete_beta(0.5 * df, 0.5, x);
  return t > 0 ? 1.0 - tail : tail;
}

TTestResult students_t_test(std::span<const double> a, std::span<const double> b, Variance variance) {
  if (a.size() < 2 || b.size() < 2) throw PreconditionError("t test needs at least two samples per group");
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double diff = mean(a) - mean(b);
  const double va = sample_variance(a);
  const double vb = sample_variance(b);

  TTestResult r;
  if (variance == Variance::pooled) {
    r.df = na + nb - 2.0;
    const double pooled = ((na - 1.0) * va + (nb - 1.0) * vb) / r.df;
    r.std_error = std::sqrt(pooled * (1.0 / na + 1.0 / nb));
  } else {
    const double sa = va / na;
    const double sb = vb / nb;
    r.std_error = std::sqrt(sa + sb);
    const double denom = sa * sa / (na - 1.0) + sb * sb / (nb - 1.0);
    r.df = denom > 0.0 ? (sa + sb) * (sa + sb) / denom : na + nb - 2.0;
  }
  if (r.std_error == 0.0) {
    if (diff == 0.0) {
      r.t = 0.0;
      r.p = 1.0;
    } else {
      r.t = std::copysign(std::numeric_limits<double>::infinity(), diff);
      r.p = 0.0;
    }
    return r;
  }
  r.t = diff / r.std_error;
  // Two-sided p = I_{df/(df+t^2)}(df/2, 1/2); computed directly to avoid 1 - cdf cancellation.
  r.p = incomplete_beta(0.5 * r.df, 0.5, r.df / (r.df + r.t * r.t));
  if (r.p > 1.0) r.p = 1.0;
  return r;
}

}  // namespace bolt::stats
