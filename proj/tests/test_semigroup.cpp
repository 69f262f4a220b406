#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>

#include "outail/semigroup.hpp"

using namespace outail;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MixtureDensity two_bump() { return MixtureDensity({0.5, 0.5}, {vec({-1.0}), vec({1.0})}, 0.5); }

// log f_a(x) for the 1-D tilt exp(a x - a^2/2).
double log_tilt(double a, double x) { return a * x - 0.5 * a * a; }

}  // namespace

TEST_CASE("constant density is a fixed point") {
  const TiltDensity one(Vector::Zero(2));
  for (double t : {0.1, 1.0, 5.0}) {
    const auto v = ou_apply({one, t, vec({0.3, -2.0})});
    CHECK(v.value() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(ou_grad_log({one, t, vec({0.3, -2.0})}).norm() < 1e-13);
  }
  CHECK(heat_apply({one, 0.5, vec({1.0, 1.0})}).value() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("tilt semigroup value at t = log 2") {
  const TiltDensity f(vec({1.0}));
  const auto v = ou_apply({f, std::log(2.0), vec({0.0})});
  CHECK(v.value() == doctest::Approx(std::exp(-0.125)).epsilon(1e-12));
  CHECK(v.value() == doctest::Approx(0.882497).epsilon(1e-6));
}

TEST_CASE("tilt maps to the tilt of size alpha e^-t by quadrature") {
  double worst = 0.0;
  for (double a : {-2.0, -0.5, 0.3, 1.0, 3.0})
    for (double t : {0.05, 0.2, 0.7, 1.5, 4.0})
      for (double x : {-3.0, -1.0, 0.0, 0.5, 2.5}) {
        const TiltDensity f(vec({a}));
        const double got = ou_apply({f, t, vec({x}), Method::quadrature}).log_value;
        worst = std::max(worst, std::abs(std::expm1(got - log_tilt(a * std::exp(-t), x))));
      }
  CHECK(worst < 1e-8);
}

TEST_CASE("tilt heat transform and gradient") {
  const TiltDensity f(vec({1.7}));
  for (double s : {0.01, 0.4, 1.0}) {
    for (double x : {-1.0, 0.6}) {
      const double want = 1.7 * x - 0.5 * 1.7 * 1.7 + 0.5 * 1.7 * 1.7 * s;
      CHECK(heat_apply({f, s, vec({x}), Method::quadrature}).log_value == doctest::Approx(want).epsilon(1e-12));
      CHECK(heat_apply({f, s, vec({x}), Method::closed_form}).log_value == doctest::Approx(want).epsilon(1e-14));
      CHECK(heat_grad_log({f, s, vec({x}), Method::quadrature})(0) == doctest::Approx(1.7).epsilon(1e-10));
    }
  }
}

TEST_CASE("mixture quadrature against Monte Carlo with a million samples") {
  const auto mix = two_bump();
  const auto quad = ou_apply({mix, 0.5, vec({0.3}), Method::quadrature});
  MonteCarloOptions mc;
  mc.samples = 1'000'000;
  mc.seed = 11;
  const auto sim = ou_apply({mix, 0.5, vec({0.3}), Method::monte_carlo, mc});
  CHECK(sim.n_samples == 1'000'000);
  CHECK(sim.std_error > 0.0);
  CHECK(std::abs(sim.value() - quad.value()) <= 3.0 * sim.std_error);
  CHECK(quad.value() == doctest::Approx(ou_apply({mix, 0.5, vec({0.3}), Method::closed_form}).value()).epsilon(1e-12));
}

TEST_CASE("heat transform at tiny bandwidth recovers f") {
  const auto mix = two_bump();
  const SinPerturbationDensity s(0.5, vec({1.0}));
  for (double x : {-1.3, 0.0, 0.7}) {
    CHECK(heat_apply({mix, 1e-6, vec({x})}).value() == doctest::Approx(mix.f(vec({x}))).epsilon(1e-4));
    CHECK(heat_apply({s, 1e-6, vec({x})}).value() == doctest::Approx(s.f(vec({x}))).epsilon(1e-4));
  }
}

TEST_CASE("mixture heat gradient against differences of log heat_apply") {
  const auto mix = two_bump();
  const double h = 1e-4;
  for (double x : {0.0, 0.8, -2.0}) {
    const double fd = (heat_apply({mix, 0.5, vec({x + h})}).log_value - heat_apply({mix, 0.5, vec({x - h})}).log_value) /
                      (2.0 * h);
    CHECK(heat_grad_log({mix, 0.5, vec({x})})(0) == doctest::Approx(fd).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("gradient below the quadrature floor is refused") {
  const auto mix = two_bump();
  CHECK_THROWS_AS(heat_grad_log({mix, 1e-5, vec({0.0}), Method::quadrature}), std::domain_error);
  CHECK(heat_grad_log({mix, 1e-5, vec({0.0}), Method::closed_form}).allFinite());
  CHECK_THROWS_AS(heat_apply({mix, 1.5, vec({0.0})}), std::invalid_argument);
  CHECK_THROWS_AS(ou_apply({mix, 0.0, vec({0.0})}), std::invalid_argument);
  CHECK_THROWS_AS(ou_apply({mix, 1.0, vec({0.0, 1.0})}), std::invalid_argument);
  const SinPerturbationDensity s(0.5, vec({1.0}));
  Vector g(1);
  CHECK_NOTHROW(log_heat(s, 0.3, vec({0.0}), Method::closed_form, g));
  CHECK_THROWS_AS(log_heat(s, 0.3, vec({0.0}), Method::monte_carlo, g), std::invalid_argument);
}

TEST_CASE("log-semiconvexity margin") {
  const TiltDensity one(Vector::Zero(1));
  const TiltDensity tilt(vec({2.0}));
  for (double t : {0.1, 0.5, 1.0}) {
    CHECK(ou_log_hessian_min_eig({one, t, vec({0.4})}) == doctest::Approx(0.5 / t).epsilon(1e-10));
    CHECK(ou_log_hessian_min_eig({tilt, t, vec({-1.0})}) == doctest::Approx(0.5 / t).epsilon(1e-6));
  }

  // Analytic oracle for the mixture: Hess log Q_t f(x) = e^{-2t} Hess log P_s f(e^{-t} x).
  const auto mix = two_bump();
  const SinPerturbationDensity sn(0.5, vec({1.0}));
  for (double t : {0.1, 0.5, 1.0}) {
    const double s = -std::expm1(-2.0 * t);
    double worst_mix = 1e300, worst_sin = 1e300;
    for (int i = 0; i < 50; ++i) {
      const double x = -3.0 + 6.0 * i / 49.0;
      const double m = ou_log_hessian_min_eig({mix, t, vec({x})});
      const double exact = std::exp(-2.0 * t) * mix.log_heat_hessian(s, vec({std::exp(-t) * x}))(0, 0) + 0.5 / t;
      CHECK(m == doctest::Approx(exact).epsilon(1e-6).scale(1.0));
      worst_mix = std::min(worst_mix, m);
      worst_sin = std::min(worst_sin, ou_log_hessian_min_eig({sn, t, vec({x})}));
    }
    CHECK(worst_mix >= -1e-5);
    CHECK(worst_sin >= -1e-5);
  }
}

TEST_CASE("Nelson exponent") {
  CHECK(nelson_exponent(2.0, std::log(2.0)) == doctest::Approx(5.0).epsilon(1e-14));
  CHECK(nelson_exponent(2.0, 1e-12) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(nelson_exponent(1.5, 1.0) == doctest::Approx(1.0 + 0.5 * std::exp(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(nelson_exponent(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(nelson_exponent(2.0, 0.0), std::invalid_argument);
}

TEST_CASE("hypercontractivity") {
  const auto& q1 = default_rule(1);
  const auto one = hypercontractivity_check(TiltDensity(Vector::Zero(1)), 2.0, 0.5, q1);
  CHECK(one.estimate == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.bound == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(one.pass());

  // ||f_a||_p = exp(a^2 (p - 1) / 2); Q_t f_a = f_{a e^-t}.
  const auto tilt = hypercontractivity_check(TiltDensity(vec({1.0})), 2.0, 0.5, q1);
  const double q = nelson_exponent(2.0, 0.5);
  CHECK(tilt.bound == doctest::Approx(std::exp(0.5)).epsilon(1e-10));
  CHECK(tilt.estimate == doctest::Approx(std::exp(0.5 * std::exp(-1.0) * (q - 1.0))).epsilon(1e-10));
  CHECK(tilt.pass());

  const auto mix = hypercontractivity_check(two_bump(), 2.0, 0.3, q1);
  CHECK(mix.pass());
  CHECK(mix.margin() > 0.0);

  const MixtureDensity mix2({0.4, 0.6}, {vec({0.5, -0.5}), vec({-1.0, 0.0})}, 0.6);
  CHECK(hypercontractivity_check(mix2, 1.5, 0.2, default_rule(2)).pass());
  CHECK_THROWS_AS(hypercontractivity_check(two_bump(), 2.0, 0.3, default_rule(2)), std::invalid_argument);
}

TEST_CASE("semigroup property for the tilt") {
  // Q_s f_a = f_{a e^-s}, so Q_t(Q_s f_a) is the quadrature image of another tilt.
  for (double a : {0.5, 2.0}) {
    for (double t : {0.2, 1.0}) {
      for (double s : {0.3, 0.9}) {
        const TiltDensity inner(vec({a * std::exp(-s)}));
        const double nested = ou_apply({inner, t, vec({0.7}), Method::quadrature}).log_value;
        const double direct = ou_apply({TiltDensity(vec({a})), t + s, vec({0.7}), Method::quadrature}).log_value;
        CHECK(nested == doctest::Approx(direct).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("mass conservation") {
  std::vector<std::unique_ptr<DensityModel>> fams;
  fams.push_back(std::make_unique<TiltDensity>(vec({1.5})));
  fams.push_back(std::make_unique<MixtureDensity>(two_bump()));
  fams.push_back(std::make_unique<SinPerturbationDensity>(0.5, vec({1.0})));
  fams.push_back(std::make_unique<MixtureDensity>(std::vector<double>{0.3, 0.7},
                                                  std::vector<Vector>{vec({1.0, 0.0}), vec({-0.5, 0.5})}, 0.5));
  for (const auto& d : fams)
    for (double t : {0.1, 1.0, 3.0}) {
      INFO(d->family(), " t=", t);
      const auto& rule = d->dim() == 1 ? default_rule(1) : QuadratureRule::gauss_hermite(32, 2);
      CHECK(ou_mass(*d, t, rule) == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("Markov baseline for exact tilt tails") {
  for (double a : {0.5, 1.0, 2.0, 4.0})
    for (double t : {0.0, 0.1, 1.0})
      for (double r : {1.5, std::exp(1.0), std::exp(4.0)}) {
        const TiltDensity f(vec({a}));
        CHECK(std::exp(f.log_exact_tail(t, r)) <= 1.0 / r);
      }
}
