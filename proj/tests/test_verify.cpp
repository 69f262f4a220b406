#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "outail/verify.hpp"

using namespace outail;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

MixtureDensity two_bump() { return MixtureDensity({0.5, 0.5}, {vec({-1.0}), vec({1.0})}, 0.5); }

double upper_tail(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// gamma_1({f_a > r}) for the tilt of size a > 0.
double tilt_tail(double a, double r) { return upper_tail(std::log(r) / a + 0.5 * a); }

PathBatch make_batch(const DensityModel& d, std::vector<StopSpec> stops, std::size_t paths, int steps,
                     std::uint64_t seed = 42) {
  BatchConfig bc;
  bc.path.dim = d.dim();
  bc.path.steps = steps;
  bc.path.seed = seed;
  bc.path.beta = d.beta();
  bc.stops = std::move(stops);
  bc.paths = paths;
  return simulate_batch(d, bc);
}

// Closed-form sides of P(Z <= -2) <= -E[Z].
struct LawSides {
  double prob;
  double neg_mean;
  double exp_mean;
};

}  // namespace

TEST_CASE("exact tilt tails against the error-function oracle") {
  for (double a : {0.5, 1.0, 2.5})
    for (double t : {0.0, 0.3, 1.0})
      for (double r : {1.5, std::exp(1.0), std::exp(6.0)}) {
        const TiltDensity f(vec({a}));
        const auto est = tail_probability(f, t, r, TailMethod::exact_tilt);
        CHECK(est.estimate == doctest::Approx(tilt_tail(a * std::exp(-t), r)).epsilon(1e-12));
        CHECK(est.resolved);
      }
  // Examples: matched tilt at r = e^8 and the unit tilt at r = e.
  const auto far = tail_probability(TiltDensity(vec({4.0})), 0.0, std::exp(8.0), TailMethod::exact_tilt);
  CHECK(far.estimate == doctest::Approx(3.167124e-5).epsilon(1e-6));
  CHECK(far.estimate * std::exp(8.0) * std::sqrt(8.0) == doctest::Approx(0.267).epsilon(1e-3));
  const auto unit = tail_probability(TiltDensity(vec({1.0})), 0.0, std::exp(1.0), TailMethod::exact_tilt);
  CHECK(unit.estimate == doctest::Approx(0.0668072).epsilon(1e-6));
  CHECK(unit.estimate <= std::exp(-1.0));

  CHECK(tail_probability(TiltDensity(Vector::Zero(1)), 0.5, 3.0, TailMethod::exact_tilt).estimate == 0.0);
  CHECK_THROWS_AS(tail_probability(two_bump(), 0.5, 3.0, TailMethod::exact_tilt), std::logic_error);
  CHECK_THROWS_AS(tail_probability(TiltDensity(vec({1.0})), 0.5, 1.0, TailMethod::exact_tilt), std::invalid_argument);
}

TEST_CASE("quadrature CDF tails reproduce exact tails") {
  for (double a : {1.0, 3.0})
    for (double t : {0.0, 0.5})
      for (double r : {2.0, std::exp(2.0)}) {
        const TiltDensity f(vec({a}));
        const double want = tilt_tail(a * std::exp(-t), r);
        const auto got = tail_probability(f, t, r, TailMethod::quadrature_cdf);
        CHECK(got.estimate == doctest::Approx(want).epsilon(1e-8));
      }
  CHECK_THROWS_AS(tail_probability(TiltDensity(vec({1.0, 1.0})), 0.5, 2.0, TailMethod::quadrature_cdf),
                  std::invalid_argument);
}

TEST_CASE("Monte Carlo tails agree with exact and quadrature tails") {
  MonteCarloOptions mc;
  mc.samples = 200'000;
  mc.seed = 3;
  const TiltDensity f(vec({1.5}));
  const auto exact = tail_probability(f, 0.2, 2.0, TailMethod::exact_tilt);
  const auto sim = tail_probability(f, 0.2, 2.0, TailMethod::monte_carlo, mc);
  CHECK(std::abs(sim.estimate - exact.estimate) <= sim.ci);

  const auto mix = two_bump();
  for (double r : {1.2, 1.6}) {
    const auto quad = tail_probability(mix, 0.5, r, TailMethod::quadrature_cdf);
    const auto mcr = tail_probability(mix, 0.5, r, TailMethod::monte_carlo, mc);
    CHECK(std::abs(mcr.estimate - quad.estimate) <= mcr.ci);
  }

  mc.samples = 999;
  CHECK_THROWS_AS(tail_probability(f, 0.2, 2.0, TailMethod::monte_carlo, mc), std::invalid_argument);

  mc.samples = 1000;
  const auto none = tail_probability(f, 0.2, std::exp(12.0), TailMethod::monte_carlo, mc);
  CHECK_FALSE(none.resolved);
}

TEST_CASE("tail curves: monotone, under the Markov envelope, bounded ratios") {
  const std::vector<double> grid{std::exp(2.0), std::exp(4.0), std::exp(6.0), std::exp(8.0)};
  double prev_ratio = 1e300;
  for (double r : grid) {
    // Matched tilt per r at t = 1: the tilt of size alpha e^-1 at r.
    const double alpha = std::sqrt(2.0 * std::log(r));
    const auto c = tail_curve(TiltDensity(vec({alpha})), 1.0, {r}, TailMethod::exact_tilt);
    CHECK(c.normalized_ratio[0] < kDeskCeiling);
    CHECK(c.tail[0].estimate <= 1.0 / r);
    prev_ratio = std::min(prev_ratio, c.normalized_ratio[0]);
  }
  CHECK(prev_ratio > 0.0);

  const auto mix = two_bump();
  const auto curve = tail_curve(mix, 0.5, {1.1, 1.3, 1.6, 2.0, 5.0, 10.0}, TailMethod::quadrature_cdf);
  for (std::size_t i = 0; i < curve.r_grid.size(); ++i) {
    CHECK(curve.tail[i].estimate <= 1.0 / curve.r_grid[i]);
    if (i > 0) CHECK(curve.tail[i].estimate <= curve.tail[i - 1].estimate);
    CHECK(curve.normalized_ratio[i] <= curve.c_hat);
    const double scale = curve.r_grid[i] * std::sqrt(std::log(curve.r_grid[i])) * 0.5;
    CHECK(curve.normalized_ratio[i] == doctest::Approx(curve.tail[i].estimate * scale));
  }

  const auto flat = tail_curve(TiltDensity(Vector::Zero(1)), 1.0, {2.0, 5.0}, TailMethod::exact_tilt);
  CHECK(flat.c_hat == 0.0);
  CHECK_THROWS_AS(tail_curve(mix, 0.5, {2.0, 2.0}, TailMethod::quadrature_cdf), std::invalid_argument);
  CHECK_THROWS_AS(tail_curve(mix, 0.5, {}, TailMethod::quadrature_cdf), std::invalid_argument);
}

TEST_CASE("tail report rows") {
  const TiltDensity f(vec({1.0}));
  const auto curve = tail_curve(f, 0.5, {2.0, std::exp(2.0)}, TailMethod::exact_tilt);
  const auto rows = tail_reports(f, curve, 42);
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].name == "tail_markov");
  CHECK(rows[0].paper_anchored);
  CHECK(rows[0].pass());
  CHECK(rows[1].name == "tail_ratio");
  CHECK_FALSE(rows[1].paper_anchored);
  CHECK(rows[1].bound == kDeskCeiling);

  MonteCarloOptions mc;
  mc.samples = 1000;
  const auto thin = tail_curve(f, 0.5, {std::exp(10.0)}, TailMethod::monte_carlo, mc);
  const auto bad = tail_reports(f, thin, 42);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].name == "tail_unresolved");
  CHECK(bad[0].note == "method=exact required");
  CHECK(std::isnan(bad[0].estimate));
  CHECK_FALSE(bad[0].pass());
  CHECK_FALSE(bad[0].paper_anchored);
}

TEST_CASE("sharpness constants against the error-function oracle") {
  const std::vector<double> grid{std::exp(2.0), std::exp(4.0), std::exp(8.0), std::exp(16.0)};
  double prev = 0.0;
  for (double r : grid) {
    const double lr = std::log(r);
    const double want = upper_tail(std::sqrt(2.0 * lr)) * r * std::sqrt(lr);
    const double got = sharpness_constant(r);
    CHECK(got == doctest::Approx(want).epsilon(1e-12));
    CHECK(got > prev);
    CHECK(got < 1.0 / (2.0 * std::sqrt(M_PI)));
    prev = got;
  }
  CHECK(sharpness_constant(std::exp(2.0)) == doctest::Approx(0.237732).epsilon(1e-5));
  CHECK(sharpness_constant(std::exp(8.0)) == doctest::Approx(0.267034).epsilon(1e-5));
  // Large-r limit 1/(2 sqrt(pi)), approached at rate 1/log r.
  CHECK(sharpness_constant(std::exp(700.0)) == doctest::Approx(1.0 / (2.0 * std::sqrt(M_PI))).epsilon(1e-3));

  const auto rows = sharpness_report(grid);
  REQUIRE(rows.size() == 4);
  for (const auto& row : rows) {
    CHECK(row.pass());
    CHECK(row.kind == BoundKind::lower);
    CHECK(row.bound == kSharpnessFloor);
  }
}

TEST_CASE("delta rule") {
  CHECK(paper_delta(std::exp(2.0)) == doctest::Approx(1.25));
  CHECK(paper_delta(std::exp(5.0)) == doctest::Approx(0.5));
  CHECK_THROWS_AS(paper_delta(1.0), std::invalid_argument);
}

TEST_CASE("relative entropy") {
  const auto& q = default_rule(1);
  CHECK(relative_entropy(TiltDensity(vec({2.0})), q) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(relative_entropy(TiltDensity(Vector::Zero(1)), q) == 0.0);
  CHECK(relative_entropy(TiltDensity(vec({1.0, -1.0})), default_rule(2)) == doctest::Approx(1.0).epsilon(1e-12));

  const auto mix = two_bump();
  Vector x(1);
  auto integrand = [&](double t) {
    x(0) = t;
    const double lf = mix.log_f(x);
    return std::exp(lf) * lf * std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI);
  };
  const double want = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, -40.0, 40.0, 15, 1e-14);
  CHECK(relative_entropy(mix) == doctest::Approx(want).epsilon(1e-10));
  CHECK(relative_entropy(mix) == doctest::Approx(0.0965014542131277).epsilon(1e-10));
  // The tensor rule is limited by the branch points of log f near the real axis.
  CHECK(relative_entropy(mix, q) == doctest::Approx(want).epsilon(1e-5));
}

TEST_CASE("deterministic rows") {
  const auto mix = two_bump();
  const SinPerturbationDensity sn(0.5, vec({1.0}));
  for (double t : {0.1, 0.5, 1.0}) {
    CHECK(lemma2_check(mix, t, lemma2_points(1, 42)).pass());
    CHECK(lemma2_check(sn, t, lemma2_points(1, 42)).pass());
  }
  const auto pts = lemma2_points(1, 42);
  REQUIRE(pts.size() == 50);
  CHECK(pts.front()(0) == -3.0);
  CHECK(pts.back()(0) == 3.0);
  CHECK(lemma2_points(2, 42).size() == 50);
  CHECK(lemma2_points(2, 42)[7] == lemma2_points(2, 42)[7]);

  CHECK(normalization_report(mix, default_rule(1)).pass());
  CHECK(beta_probe_report(mix).pass());
  const DeclaredBeta liar(std::make_shared<MixtureDensity>(mix), mix.beta() / 10.0);
  CHECK_FALSE(beta_probe_report(liar).pass());
  CHECK_THROWS_AS(lemma2_check(mix, 0.5, {}), std::invalid_argument);
}

TEST_CASE("synthetic laws satisfy the small-exponential-moment inequality in closed form") {
  std::vector<LawSides> battery;
  // Z = c - Exp(1): E e^Z = e^c / 2, so c = log 2 gives equality.
  for (double c : {std::log(2.0), 0.0, -1.0, -3.0}) {
    battery.push_back({std::exp(-(c + 2.0)) * (c + 2.0 > 0 ? 1.0 : std::exp(c + 2.0)), 1.0 - c, 0.5 * std::exp(c)});
  }
  // Gaussian with variance -2m: E e^Z = 1.
  for (double m : {-0.01, -0.1, -0.5, -1.0, -2.0, -5.0, -20.0}) {
    const double sigma = std::sqrt(-2.0 * m);
    battery.push_back({normal_cdf((-2.0 - m) / sigma), -m, 1.0});
  }
  // Two-point laws b < a with p e^a + (1-p) e^b = 1.
  for (double p : {0.01, 0.2, 0.5, 0.9})
    for (double b : {-1.0, -2.0, -2.5, -6.0}) {
      const double a = std::log((1.0 - (1.0 - p) * std::exp(b)) / p);
      const double mean = p * a + (1.0 - p) * b;
      const double prob = (b <= -2.0 ? 1.0 - p : 0.0) + (a <= -2.0 ? p : 0.0);
      battery.push_back({prob, -mean, p * std::exp(a) + (1.0 - p) * std::exp(b)});
    }
  for (const auto& law : battery) {
    CHECK(law.exp_mean <= 1.0 + 1e-12);
    CHECK(law.prob <= law.neg_mean + 1e-12);
  }
}

TEST_CASE("bizarre_check on sampled synthetic laws") {
  std::mt19937_64 gen(77);
  const std::size_t n = 200'000;
  std::vector<double> z(n);

  std::exponential_distribution<double> expo(1.0);
  for (auto& v : z) v = std::log(2.0) - expo(gen);
  CHECK(bizarre_check(z).pass());

  std::normal_distribution<double> normal(-1.0, std::sqrt(2.0));
  for (auto& v : z) v = normal(gen);
  const auto g = bizarre_check(z);
  CHECK(g.pass());
  CHECK(g.estimate == doctest::Approx(normal_cdf(-1.0 / std::sqrt(2.0)) - 1.0).epsilon(0.02));

  std::bernoulli_distribution coin(0.5);
  const double b = -3.0, a = std::log((1.0 - 0.5 * std::exp(b)) / 0.5);
  for (auto& v : z) v = coin(gen) ? a : b;
  CHECK(bizarre_check(z).pass());

  // A law with a large exponential moment violates it.
  for (auto& v : z) v = coin(gen) ? 3.0 : -3.0;
  CHECK_FALSE(bizarre_check(z).pass());
}

TEST_CASE("numeric CDF of the law against the closed form") {
  const auto mix = two_bump();
  const std::vector<double> pts{-3.0, -1.0, -0.2, 0.0, 0.0, 0.9, 2.5};
  const auto cdf = numeric_cdf_1d(mix, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(cdf[i] == doctest::Approx(mix.cdf_1d(pts[i])).epsilon(1e-10));
  CHECK_THROWS_AS(numeric_cdf_1d(TiltDensity(vec({1.0, 1.0})), pts), std::invalid_argument);
}

TEST_CASE("delta = 0 rows hold with equality") {
  const auto mix = two_bump();
  const double r = std::exp(1.0);
  const auto batch = make_batch(mix, {{r, 0.0}}, 2000, 128);
  const auto ez = exp_Z_check(mix, batch, r, 0.0);
  CHECK(ez.estimate == 1.0);
  CHECK(ez.ci_half_width == 0.0);
  CHECK(ez.pass());
  const auto biz = bizarre_check(z_samples(batch, 0, mix.beta()));
  CHECK(biz.estimate == 0.0);
  CHECK(biz.pass());
  CHECK(lemma4_check(mix, batch, r, 0.0).estimate == 0.0);
  CHECK(lemma4_check(mix, batch, r, 0.0).pass());
  const auto tv = prop1_tv_check(mix, batch, r, 0.0);
  CHECK(tv[0].estimate == 0.0);
  CHECK(tv[0].pass());
  CHECK(prop2_check(mix, batch, r, 0.0).pass());
  const auto cx = convexity_check(mix, batch, r, 0.0);
  CHECK(cx.estimate == 0.0);
  CHECK(cx.pass());
  for (const auto& row : martingale_check(mix, batch, r, 0.0)) CHECK(row.pass());
}

TEST_CASE("tilt batch: entropy identity, energy bound, Girsanov and Z rows") {
  const TiltDensity f(vec({2.0}));
  const double r = std::exp(2.0), delta = 0.1;
  const auto batch = make_batch(f, {{r, delta}}, 20000, 256, 5);
  const auto ent = entropy_identity_check(f, batch);
  CHECK(ent.pass());
  CHECK(ent.estimate == doctest::Approx(0.0).scale(1.0).epsilon(1e-9));  // v = alpha on every path

  CHECK(drift_energy_bound_check(f, batch, r, delta).pass());
  CHECK(exp_Z_check(f, batch, r, delta).pass());
  CHECK(lemma4_check(f, batch, r, delta).pass());
  CHECK(ineq_y_check(f, batch, r, delta).pass());
  for (const auto& row : girsanov_check(f, batch, r, delta)) CHECK(row.pass());
  for (const auto& row : pathwise_product_check(f, batch, r, delta)) {
    CHECK(row.pass());
    CHECK(row.paper_anchored);
  }
  CHECK(convexity_check(f, batch, r, delta).pass());
  for (const auto& row : martingale_check(f, batch, r, delta)) CHECK(row.pass());
  CHECK(law_check(f, batch).pass());
  CHECK_THROWS_AS(exp_Z_check(f, batch, r, 0.2), std::out_of_range);
}

TEST_CASE("shell events on paired tilt paths") {
  const TiltDensity f2(vec({2.0}));
  const double r4 = std::exp(4.0);
  const auto b1 = make_batch(f2, {{r4, 0.05}}, 20000, 256, 8);
  for (const auto& row : prop1_tv_check(f2, b1, r4, 0.05)) CHECK(row.pass());
  CHECK(prop1_tv_check(f2, b1, r4, 0.05)[0].bound == doctest::Approx(0.1));

  const TiltDensity f3(vec({3.0}));
  const double delta = paper_delta(r4);
  const auto b2 = make_batch(f3, {{r4, delta}}, 20000, 256, 9);
  CHECK(prop2_check(f3, b2, r4, delta).pass());
}

TEST_CASE("tilt shell probability: simulation against the exact value") {
  const double r = std::exp(4.0), alpha = std::sqrt(8.0);
  const TiltDensity f(vec({alpha}));
  const auto batch = make_batch(f, {{r, paper_delta(r)}}, 50000, 128, 12);
  const auto rows = thm2_composite_check(f, batch, r, paper_delta(r));
  REQUIRE(rows.size() == 3);
  // X_1 ~ mu = N(alpha, 1), so the shell {f in (r, e r]} has mu-mass at the level shifted by -alpha.
  const double exact = upper_tail(4.0 / alpha - alpha / 2.0) - upper_tail(5.0 / alpha - alpha / 2.0);
  const double scale = 1.0 / std::sqrt(4.0);
  CHECK(std::abs(rows[0].estimate * scale - exact) <= rows[0].ci_half_width * scale);
  CHECK(rows[0].pass());
  CHECK_FALSE(rows[0].paper_anchored);
  CHECK(rows[1].name == "thm2_shell_mixed");
  CHECK(rows[2].name == "thm1_reduction");
  CHECK(rows[2].pass());
  CHECK(rows[2].estimate == doctest::Approx(tilt_tail(alpha, r)).epsilon(1e-12));
}

TEST_CASE("mixture law and entropy identity") {
  const auto mix = two_bump();
  const double r = std::exp(1.0);
  const auto batch = make_batch(mix, {{r, paper_delta(r)}}, 20000, 512, 13);
  CHECK(law_check(mix, batch).pass());
  CHECK(entropy_identity_check(mix, batch).pass());
  CHECK(drift_energy_bound_check(mix, batch, r, paper_delta(r)).pass());
  const auto prod = pathwise_product_check(mix, batch, r, paper_delta(r));
  CHECK(prod[0].pass());
  CHECK_FALSE(prod[1].paper_anchored);
}

TEST_CASE("report semantics") {
  BoundReport up;
  up.estimate = 1.0;
  up.bound = 0.9;
  up.ci_half_width = 0.1;
  CHECK(up.margin() == doctest::Approx(-0.1));
  CHECK(up.pass());
  up.ci_half_width = 0.05;
  CHECK_FALSE(up.pass());

  BoundReport low = up;
  low.kind = BoundKind::lower;
  CHECK(low.margin() == doctest::Approx(0.1));
  CHECK(low.pass());

  BoundReport nan;
  nan.estimate = std::nan("");
  nan.ci_half_width = 1e300;
  CHECK_FALSE(nan.pass());
}

TEST_CASE("CSV rows and summary") {
  BoundReport a;
  a.name = "exp_z";
  a.family = "tilt";
  a.dim = 1;
  a.r = std::exp(1.0);
  a.delta = 0.5;
  a.estimate = 0.25;
  a.bound = 1.0;
  a.n_samples = 10;
  a.seed = 7;
  CHECK(csv_header() == "name,family,dim,t,r,delta,beta,estimate,ci,bound,margin,pass,n_samples,seed");
  CHECK(csv_row(a) == "exp_z,tilt,1,," + format_number(std::exp(1.0)) + ",0.5,0,0.25,0,1,0.75,true,10,7");
  CHECK(format_number(0.1) == "0.10000000000000001");
  CHECK(std::stod(format_number(std::exp(1.0))) == std::exp(1.0));

  BoundReport b = a;
  b.name = "tail_ratio";
  b.estimate = 30.0;
  b.bound = 20.0;
  b.paper_anchored = false;
  std::vector<BoundReport> rows{a, b};
  CHECK(all_paper_checks_pass(rows));
  const auto j = summary_json(rows, {{"seed", 7}});
  CHECK(j["rows"] == 2);
  CHECK(j["failed"] == 1);
  CHECK(j["paper_anchored_failed"] == 0);
  CHECK(j["all_paper_checks_pass"] == true);
  CHECK(j["seed"] == 7);
  CHECK(j["worst_margins"]["tail_ratio"]["margin"] == doctest::Approx(-10.0));
  rows[0].estimate = 2.0;
  CHECK_FALSE(all_paper_checks_pass(rows));
}
