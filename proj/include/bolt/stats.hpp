#pragma once

#include <span>

namespace bolt::stats {

double mean(std::span<const double> xs);
/// Sample variance with (n - 1) denominator; 0 for fewer than two values.
double sample_variance(std::span<const double> xs);
double sample_std(std::span<const double> xs);

/// Regularized incomplete beta I_x(a, b), evaluated with a modified Lentz
/// continued fraction (relative error well below 1e-10 for a, b <= 1e4).
double incomplete_beta(double a, double b, double x);

/// CDF of Student's t distribution with `df` degrees of freedom.
double t_cdf(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  double std_error = 0.0;  // standard error of mean(a) - mean(b)
};

enum class Variance { pooled, welch };

/// Two-sided two-sample t test. Pooled (Student) by default.
/// Zero variance: equal means give t = 0, p = 1; unequal means give
/// t = +/-inf, p = 0. Throws PreconditionError when |a| < 2 or |b| < 2.
TTestResult students_t_test(std::span<const double> a, std::span<const double> b,
                            Variance variance = Variance::pooled);

}  // namespace bolt::stats
