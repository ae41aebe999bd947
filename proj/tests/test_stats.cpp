#include <doctest.h>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "bolt/errors.hpp"
#include "bolt/stats.hpp"

using namespace bolt;
using namespace bolt::stats;

namespace {

// Reference values computed with scipy.stats.ttest_ind (equal_var=True).
constexpr double kScipyT = -1.8973665961010275;
constexpr double kScipyP = 0.09434977284243756;

double boost_two_sided_p(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)));
}

}  // namespace

TEST_CASE("descriptive statistics") {
  std::vector<double> xs{2, 4};
  CHECK(mean(xs) == 3.0);
  CHECK(sample_std(xs) == doctest::Approx(1.4142135623730951).epsilon(1e-15));
  CHECK(sample_variance(std::vector<double>{5}) == 0.0);
  CHECK(std::isnan(mean(std::vector<double>{})));
}

TEST_CASE("incomplete beta against boost") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> ab(0.1, 40.0), xs(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double a = ab(gen), b = ab(gen), x = xs(gen);
    CAPTURE(a);
    CAPTURE(b);
    CAPTURE(x);
    CHECK(incomplete_beta(a, b, x) == doctest::Approx(boost::math::ibeta(a, b, x)).epsilon(1e-12));
  }
  CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
  CHECK_THROWS_AS(incomplete_beta(0, 1, 0.5), PreconditionError);
}

TEST_CASE("t cdf") {
  CHECK(t_cdf(0.0, 5) == 0.5);
  CHECK(t_cdf(2.0, 7) == doctest::Approx(boost::math::cdf(boost::math::students_t(7), 2.0)).epsilon(1e-13));
  CHECK(t_cdf(-2.0, 7) + t_cdf(2.0, 7) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pooled t test hand example") {
  std::vector<double> a{1, 2, 3, 4, 5}, b{2, 4, 6, 8, 10};
  auto r = students_t_test(a, b);
  CHECK(r.df == 8.0);
  CHECK(std::fabs(r.t - kScipyT) < 1e-12);
  CHECK(std::fabs(r.p - kScipyP) < 1e-12);

  auto swapped = students_t_test(b, a);
  CHECK(swapped.t == -r.t);
  CHECK(swapped.p == r.p);
}

TEST_CASE("identical samples give t=0, p=1 exactly") {
  std::vector<double> a{3, 1, 4, 1, 5};
  auto r = students_t_test(a, a);
  CHECK(r.t == 0.0);
  CHECK(r.p == 1.0);
}

TEST_CASE("zero-variance groups") {
  std::vector<double> ten(4, 10.0), zero(4, 0.0);
  auto r = students_t_test(ten, zero);
  CHECK(std::isinf(r.t));
  CHECK(r.t > 0);
  CHECK(r.p == 0.0);
  auto same = students_t_test(zero, zero);
  CHECK(same.t == 0.0);
  CHECK(same.p == 1.0);
}

TEST_CASE("precondition: at least two samples each") {
  std::vector<double> one{1}, two{1, 2};
  CHECK_THROWS_AS(students_t_test(one, two), PreconditionError);
}

TEST_CASE("pooled and welch agree with boost on random samples") {
  std::mt19937_64 gen(7);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t na = 2 + gen() % 49, nb = 2 + gen() % 49;
    std::vector<double> a(na), b(nb);
    const double shift = (gen() % 5) * 0.3;
    for (auto& x : a) x = noise(gen) + shift;
    for (auto& x : b) x = noise(gen) * (1 + (gen() % 3));
    for (auto v : {Variance::pooled, Variance::welch}) {
      auto r = students_t_test(a, b, v);
      CHECK(std::fabs(r.p - boost_two_sided_p(r.t, r.df)) < 1e-9);
    }
  }
}
