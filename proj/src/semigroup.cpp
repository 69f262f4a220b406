#include "outail/semigroup.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace outail {

namespace {

const QuadratureRule& rule_for(const DensityModel& d, const QuadratureRule* rule) {
  const QuadratureRule& q = rule != nullptr ? *rule : default_rule(d.dim());
  if (q.empty()) throw std::invalid_argument("quadrature rule has no nodes");
  if (q.dim() != d.dim()) throw std::invalid_argument("quadrature rule dimension does not match density");
  return q;
}

double quadrature_log_heat(const DensityModel& d, double s, const VecRef& x, VecOut grad, const QuadratureRule& q) {
  const double sigma = std::sqrt(s);
  thread_local std::vector<double> terms;
  thread_local Vector y;
  terms.resize(q.size());
  y.resize(d.dim());
  LogSumExp lse;
  for (std::size_t i = 0; i < q.size(); ++i) {
    y = x + sigma * q.node(i);
    terms[i] = q.log_weights()[i] + d.log_f(y);
    lse.add(terms[i]);
  }
  const double total = require_finite(lse.value(), "log heat transform");
  grad.setZero();
  if (sigma > 0.0) {
    for (std::size_t i = 0; i < q.size(); ++i) grad += std::exp(terms[i] - total) * q.node(i);
    grad /= sigma;
  } else {
    d.grad_log_f(x, grad);
  }
  return total;
}

struct Transform {
  double scale;  // point multiplier
  double s;      // heat bandwidth
};

Transform ou_transform(double t) {
  if (!(t > 0.0)) throw std::invalid_argument("OU time must be positive");
  return {std::exp(-t), -std::expm1(-2.0 * t)};
}

SemigroupValue monte_carlo(const DensityModel& d, double scale, double s, const VecRef& x,
                           const MonteCarloOptions& mc) {
  if (mc.samples < 2) throw std::invalid_argument("Monte Carlo needs at least two samples");
  constexpr std::size_t kChunk = 8192;
  const std::size_t chunks = (mc.samples + kChunk - 1) / kChunk;
  std::vector<double> values(mc.samples);
  const double sigma = std::sqrt(s);
  const Vector centre = scale * x;
  parallel_for(chunks, mc.workers, [&](std::size_t c) {
    auto gen = make_stream(mc.seed, c);
    std::normal_distribution<double> normal;
    Vector y(d.dim());
    const std::size_t hi = std::min(mc.samples, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < hi; ++i) {
      for (int k = 0; k < d.dim(); ++k) y(k) = centre(k) + sigma * normal(gen);
      values[i] = std::exp(d.log_f(y));
    }
  });
  const MeanEstimate est = batch_mean(values);
  SemigroupValue out;
  out.log_value = std::log(require_finite(est.mean, "Monte Carlo semigroup value"));
  out.std_error = est.std_error;
  out.n_samples = est.n;
  return out;
}

void check_query(const SemigroupQuery& q) {
  if (q.point.size() != q.density.dim()) throw std::invalid_argument("query point dimension does not match density");
}

}  // namespace

double log_heat(const DensityModel& d, double s, const VecRef& x, Method method, VecOut grad,
                const QuadratureRule* rule) {
  if (!(s >= 0.0)) throw std::invalid_argument("heat bandwidth must be non-negative");
  switch (method) {
    case Method::closed_form:
      if (!d.closed_forms().heat) throw std::logic_error(d.family() + " density has no closed-form heat transform");
      return require_finite(d.log_heat_exact(s, x, grad), "closed-form heat transform");
    case Method::quadrature:
      if (s == 0.0) {
        d.grad_log_f(x, grad);
        return require_finite(d.log_f(x), "log f");
      }
      return quadrature_log_heat(d, s, x, grad, rule_for(d, rule));
    case Method::monte_carlo:
      break;
  }
  throw std::invalid_argument("log_heat: Monte Carlo evaluation has no gradient; use heat_apply");
}

double log_ou(const DensityModel& d, double t, const VecRef& x, Method method, VecOut grad,
              const QuadratureRule* rule) {
  const Transform tr = ou_transform(t);
  const Vector y = tr.scale * x;
  const double v = log_heat(d, tr.s, y, method, grad, rule);
  grad *= tr.scale;
  return v;
}

SemigroupValue ou_apply(const SemigroupQuery& q) {
  check_query(q);
  const Transform tr = ou_transform(q.time);
  if (q.method == Method::monte_carlo) return monte_carlo(q.density, tr.scale, tr.s, q.point, q.mc);
  Vector grad(q.density.dim());
  return {log_ou(q.density, q.time, q.point, q.method, grad, q.rule), 0.0, 0};
}

SemigroupValue heat_apply(const SemigroupQuery& q) {
  check_query(q);
  if (!(q.time > 0.0 && q.time <= 1.0)) throw std::invalid_argument("heat_apply: s must lie in (0, 1]");
  if (q.method == Method::monte_carlo) return monte_carlo(q.density, 1.0, q.time, q.point, q.mc);
  Vector grad(q.density.dim());
  return {log_heat(q.density, q.time, q.point, q.method, grad, q.rule), 0.0, 0};
}

Vector heat_grad_log(const SemigroupQuery& q) {
  check_query(q);
  if (!(q.time > 0.0 && q.time <= 1.0)) throw std::invalid_argument("heat_grad_log: s must lie in (0, 1]");
  if (q.method == Method::quadrature && q.time < kMinHeatBandwidth)
    throw std::domain_error("heat_grad_log: bandwidth below the quadrature floor and no closed form requested");
  Vector grad(q.density.dim());
  log_heat(q.density, q.time, q.point, q.method, grad, q.rule);
  if (!grad.allFinite()) throw NumericError("non-finite heat gradient");
  return grad;
}

Vector ou_grad_log(const SemigroupQuery& q) {
  check_query(q);
  Vector grad(q.density.dim());
  log_ou(q.density, q.time, q.point, q.method, grad, q.rule);
  if (!grad.allFinite()) throw NumericError("non-finite OU gradient");
  return grad;
}

Matrix ou_log_hessian(const SemigroupQuery& q) {
  check_query(q);
  if (q.method == Method::monte_carlo) throw std::invalid_argument("ou_log_hessian: Monte Carlo is not supported");
  const int n = q.density.dim();
  const double h = kSemigroupHessianStep * std::max(1.0, q.point.norm());
  Matrix hess(n, n);
  Vector xp = q.point, xm = q.point, gp(n), gm(n);
  for (int i = 0; i < n; ++i) {
    xp(i) = q.point(i) + h;
    xm(i) = q.point(i) - h;
    const double span = xp(i) - xm(i);
    log_ou(q.density, q.time, xp, q.method, gp, q.rule);
    log_ou(q.density, q.time, xm, q.method, gm, q.rule);
    hess.col(i) = (gp - gm) / span;
    xp(i) = q.point(i);
    xm(i) = q.point(i);
  }
  return 0.5 * (hess + hess.transpose());
}

double ou_log_hessian_min_eig(const SemigroupQuery& q) {
  if (!(q.time > 0.0)) throw std::invalid_argument("ou_log_hessian_min_eig: t must be positive");
  return min_symmetric_eigenvalue(ou_log_hessian(q)) + 1.0 / (2.0 * q.time);
}

double nelson_exponent(double p, double t) {
  if (!(p > 1.0)) throw std::invalid_argument("nelson_exponent: p must exceed 1");
  if (!(t > 0.0)) throw std::invalid_argument("nelson_exponent: t must be positive");
  return 1.0 + std::exp(2.0 * t) * (p - 1.0);
}

namespace {

// log ||g||_p with log g given at the rule's nodes.
double log_lp_norm(const std::vector<double>& log_g, const QuadratureRule& rule, double p) {
  LogSumExp lse;
  for (std::size_t i = 0; i < rule.size(); ++i) lse.add(rule.log_weights()[i] + p * log_g[i]);
  return require_finite(lse.value(), "L_p norm integral") / p;
}

Method inner_method(const DensityModel& d) {
  return d.closed_forms().heat ? Method::closed_form : Method::quadrature;
}

}  // namespace

BoundReport hypercontractivity_check(const DensityModel& d, double p, double t, const QuadratureRule& rule) {
  if (d.dim() > 2) throw std::invalid_argument("hypercontractivity_check: dimension must be <= 2");
  if (rule.dim() != d.dim()) throw std::invalid_argument("hypercontractivity_check: rule dimension mismatch");
  const double q = nelson_exponent(p, t);
  std::vector<double> log_f(rule.size()), log_qf(rule.size());
  Vector grad(d.dim());
  const Method method = inner_method(d);
  for (std::size_t i = 0; i < rule.size(); ++i) {
    log_f[i] = d.log_f(rule.node(i));
    log_qf[i] = log_ou(d, t, rule.node(i), method, grad);
  }
  BoundReport r;
  r.name = "hypercontractivity";
  r.family = d.family();
  r.dim = d.dim();
  r.t = t;
  r.beta = d.beta();
  r.estimate = std::exp(log_lp_norm(log_qf, rule, q));
  r.bound = std::exp(log_lp_norm(log_f, rule, p));
  r.ci_half_width = 1e-8 * r.bound;
  r.n_samples = rule.size();
  r.note = "p=" + format_number(p) + " q=" + format_number(q);
  return r;
}

double ou_mass(const DensityModel& d, double t, const QuadratureRule& rule, Method inner) {
  if (rule.dim() != d.dim()) throw std::invalid_argument("ou_mass: rule dimension mismatch");
  Vector grad(d.dim());
  CompensatedSum total;
  for (std::size_t i = 0; i < rule.size(); ++i)
    total.add(std::exp(rule.log_weights()[i] + log_ou(d, t, rule.node(i), inner, grad)));
  return total.value();
}

}  // namespace outail
