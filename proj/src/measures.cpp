#include "outail/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace outail {

namespace {

const double kFdStep = std::cbrt(std::numeric_limits<double>::epsilon());

[[noreturn]] void missing(const DensityModel& d, const char* what) {
  throw std::logic_error(d.family() + " density has no closed-form " + what);
}

void check_point(const DensityModel& d, const VecRef& x) {
  if (x.size() != d.dim()) throw std::invalid_argument("point dimension does not match density");
}

}  // namespace

double DensityModel::log_heat_exact(double, const VecRef&, VecOut) const { missing(*this, "heat transform"); }
double DensityModel::log_exact_tail(double, double) const { missing(*this, "tail"); }
double DensityModel::cdf_1d(double) const { missing(*this, "CDF"); }

// ---------------------------------------------------------------- tilt

TiltDensity::TiltDensity(Vector u) : u_(std::move(u)), half_norm2_(0.5 * u_.squaredNorm()) {
  if (u_.size() < 1) throw std::invalid_argument("TiltDensity: empty direction");
  if (!u_.allFinite()) throw std::invalid_argument("TiltDensity: non-finite direction");
}

double TiltDensity::log_f(const VecRef& x) const { return u_.dot(x) - half_norm2_; }

void TiltDensity::grad_log_f(const VecRef&, VecOut grad) const { grad = u_; }

double TiltDensity::log_heat_exact(double s, const VecRef& x, VecOut grad) const {
  grad = u_;
  return u_.dot(x) - half_norm2_ * (1.0 - s);
}

double TiltDensity::log_exact_tail(double t, double r) const {
  if (!(r > 1.0)) throw std::invalid_argument("tail: r must exceed 1");
  if (t < 0.0) throw std::invalid_argument("tail: t must be non-negative");
  // Q_t f_u = f_{u e^{-t}}; {f_a > r} is a half-space at distance log(r)/|a| + |a|/2.
  const double a = u_.norm() * std::exp(-t);
  if (a == 0.0) return -std::numeric_limits<double>::infinity();
  return log_normal_sf(std::log(r) / a + 0.5 * a);
}

double TiltDensity::cdf_1d(double x) const {
  if (dim() != 1) missing(*this, "CDF");
  return normal_cdf(x - u_(0));
}

// ------------------------------------------------------------- mixture

MixtureDensity::MixtureDensity(std::vector<double> weights, std::vector<Vector> means, double spread)
    : weights_(std::move(weights)), means_(std::move(means)), spread_(spread) {
  if (weights_.empty() || weights_.size() != means_.size())
    throw std::invalid_argument("MixtureDensity: need one weight per mean");
  if (!(spread_ > 0.0 && spread_ < 1.0)) throw std::invalid_argument("MixtureDensity: spread must lie in (0,1)");
  dim_ = static_cast<int>(means_.front().size());
  if (dim_ < 1) throw std::invalid_argument("MixtureDensity: empty mean");
  CompensatedSum total;
  for (std::size_t j = 0; j < weights_.size(); ++j) {
    if (!(weights_[j] > 0.0)) throw std::invalid_argument("MixtureDensity: weights must be positive");
    if (means_[j].size() != dim_) throw std::invalid_argument("MixtureDensity: inconsistent mean dimensions");
    total.add(weights_[j]);
  }
  if (std::abs(total.value() - 1.0) > 1e-12) throw std::invalid_argument("MixtureDensity: weights must sum to 1");
  for (double w : weights_) log_weights_.push_back(std::log(w));
  curvature_ = 1.0 / spread_ - 1.0;

  // Estimate beta = sup(-lambda_min(Hess log f)) on a grid covering the means.
  double reach = 0.0;
  for (const auto& m : means_) reach = std::max(reach, m.cwiseAbs().maxCoeff());
  reach += 6.0;
  std::vector<Vector> probes;
  if (dim_ <= 3) {
    const double step = dim_ == 1 ? 0.05 : (dim_ == 2 ? 0.25 : 0.5);
    probes = probe_grid(dim_, -reach, reach, step);
  } else {
    auto gen = make_stream(0x6d6978ULL, static_cast<std::uint64_t>(dim_));
    std::normal_distribution<double> normal(0.0, reach / 3.0);
    probes.resize(20000, Vector(dim_));
    for (auto& p : probes)
      for (int i = 0; i < dim_; ++i) p(i) = normal(gen);
  }
  double defect = 0.0;
  for (const auto& p : probes) defect = std::max(defect, -min_symmetric_eigenvalue(log_heat_hessian(0.0, p)));
  beta_ = 1.1 * defect;
}

double MixtureDensity::component_terms(double s, const VecRef& x, std::vector<double>& logs) const {
  // Per coordinate, with a = 1/s0 - 1 and b = m/s0:
  //   log P_s h(x) = -log(s0)/2 - m^2/(2 s0) - log(1+a s)/2 - a x^2/2 + b x + s (b - a x)^2 / (2 (1 + a s)).
  const double a = curvature_;
  const double one_as = 1.0 + a * s;
  const double constant = -0.5 * dim_ * (std::log(spread_) + std::log(one_as));
  logs.resize(means_.size());
  LogSumExp total;
  for (std::size_t j = 0; j < means_.size(); ++j) {
    double acc = constant + log_weights_[j];
    for (int k = 0; k < dim_; ++k) {
      const double m = means_[j](k);
      const double b = m / spread_;
      const double xk = x(k);
      const double slope = b - a * xk;
      acc += -0.5 * m * m / spread_ - 0.5 * a * xk * xk + b * xk + s * slope * slope / (2.0 * one_as);
    }
    logs[j] = acc;
    total.add(acc);
  }
  return total.value();
}

double MixtureDensity::log_heat_exact(double s, const VecRef& x, VecOut grad) const {
  thread_local std::vector<double> logs;
  const double lv = component_terms(s, x, logs);
  const double inv = 1.0 / (1.0 + curvature_ * s);
  grad.setZero();
  for (std::size_t j = 0; j < means_.size(); ++j) {
    const double p = std::exp(logs[j] - lv);
    for (int k = 0; k < dim_; ++k) grad(k) += p * (means_[j](k) / spread_ - curvature_ * x(k)) * inv;
  }
  return lv;
}

double MixtureDensity::log_f(const VecRef& x) const {
  thread_local std::vector<double> logs;
  return component_terms(0.0, x, logs);
}

void MixtureDensity::grad_log_f(const VecRef& x, VecOut grad) const { log_heat_exact(0.0, x, grad); }

Matrix MixtureDensity::log_heat_hessian(double s, const VecRef& x) const {
  std::vector<double> logs;
  const double lv = component_terms(s, x, logs);
  const double inv = 1.0 / (1.0 + curvature_ * s);
  Vector mean_grad = Vector::Zero(dim_);
  Matrix second = Matrix::Zero(dim_, dim_);
  Vector g(dim_);
  for (std::size_t j = 0; j < means_.size(); ++j) {
    const double p = std::exp(logs[j] - lv);
    for (int k = 0; k < dim_; ++k) g(k) = (means_[j](k) / spread_ - curvature_ * x(k)) * inv;
    mean_grad += p * g;
    second += p * g * g.transpose();
  }
  Matrix h = second - mean_grad * mean_grad.transpose();
  h.diagonal().array() -= curvature_ * inv;
  return h;
}

double MixtureDensity::cdf_1d(double x) const {
  if (dim_ != 1) missing(*this, "CDF");
  CompensatedSum acc;
  const double sd = std::sqrt(spread_);
  for (std::size_t j = 0; j < means_.size(); ++j) acc.add(weights_[j] * normal_cdf((x - means_[j](0)) / sd));
  return acc.value();
}

// ----------------------------------------------------- sin perturbation

SinPerturbationDensity::SinPerturbationDensity(double epsilon, Vector k) : epsilon_(epsilon), k_(std::move(k)) {
  if (!(epsilon_ >= 0.0) || !std::isfinite(epsilon_))
    throw std::invalid_argument("SinPerturbationDensity: epsilon must be finite and >= 0");
  if (k_.size() < 1 || !k_.allFinite()) throw std::invalid_argument("SinPerturbationDensity: bad frequency");
  bessel_.push_back(std::cyl_bessel_i(0.0, epsilon_));
  for (int j = 1; j < 400; ++j) {
    const double c = 2.0 * std::cyl_bessel_i(static_cast<double>(j), epsilon_);
    if (c < 1e-18 * bessel_.front() && j > epsilon_) break;
    bessel_.push_back(c);
  }
  log_z_ = std::log(series(1.0, 0.0, nullptr));
}

double SinPerturbationDensity::series(double s, double theta, double* dtheta) const {
  const double kappa = 0.5 * k_.squaredNorm() * s;
  const double phi = theta - 0.5 * std::numbers::pi;
  const double c1 = std::cos(phi);
  const double s1 = std::sin(phi);
  // Damping q_j = exp(-j^2 kappa), advanced by q_{j+1} = q_j e^{-kappa} e^{-2 j kappa}.
  const double e1 = std::exp(-kappa);
  const double e2 = std::exp(-2.0 * kappa);
  double q = 1.0;
  double ratio = e1;
  double cos_prev = 1.0, sin_prev = 0.0;  // j = 0
  double cos_j = c1, sin_j = s1;          // j = 1
  double value = bessel_[0];
  double deriv = 0.0;
  for (std::size_t j = 1; j < bessel_.size(); ++j) {
    q *= ratio;
    ratio *= e2;
    const double term = bessel_[j] * q;
    value += term * cos_j;
    deriv -= term * static_cast<double>(j) * sin_j;
    const double cos_next = 2.0 * c1 * cos_j - cos_prev;
    const double sin_next = 2.0 * c1 * sin_j - sin_prev;
    cos_prev = cos_j;
    sin_prev = sin_j;
    cos_j = cos_next;
    sin_j = sin_next;
  }
  if (dtheta != nullptr) *dtheta = deriv;
  return value;
}

double SinPerturbationDensity::log_f(const VecRef& x) const { return epsilon_ * std::sin(k_.dot(x)) - log_z_; }

void SinPerturbationDensity::grad_log_f(const VecRef& x, VecOut grad) const {
  grad = (epsilon_ * std::cos(k_.dot(x))) * k_;
}

double SinPerturbationDensity::log_heat_exact(double s, const VecRef& x, VecOut grad) const {
  if (s == 0.0) {
    grad_log_f(x, grad);
    return log_f(x);
  }
  double d = 0.0;
  const double g = series(s, k_.dot(x), &d);
  if (!(g > 0.0)) throw NumericError("sin heat series lost positivity");
  grad = (d / g) * k_;
  return std::log(g) - log_z_;
}

// ------------------------------------------------------------ checks

double validate_normalization(const DensityModel& d, const QuadratureRule& q) {
  if (q.empty()) throw std::invalid_argument("validate_normalization: quadrature rule has no nodes");
  if (q.dim() != d.dim()) throw std::invalid_argument("validate_normalization: dimension mismatch");
  CompensatedSum total;
  for (std::size_t i = 0; i < q.size(); ++i) total.add(std::exp(q.log_weights()[i] + d.log_f(q.node(i))));
  return std::abs(require_finite(total.value(), "normalization integral") - 1.0);
}

Matrix fd_hessian_log_f(const DensityModel& d, const VecRef& x, double step_scale) {
  check_point(d, x);
  const int n = d.dim();
  const double h = step_scale * std::max(1.0, x.norm());
  Matrix hess(n, n);
  Vector xp = x, xm = x, gp(n), gm(n);
  for (int i = 0; i < n; ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    const double span = xp(i) - xm(i);
    d.grad_log_f(xp, gp);
    d.grad_log_f(xm, gm);
    hess.col(i) = (gp - gm) / span;
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return hess;
}

Matrix fd_hessian_log_f(const DensityModel& d, const VecRef& x) { return fd_hessian_log_f(d, x, kFdStep); }

double beta_probe(const DensityModel& d, const std::vector<Vector>& points, double step_scale) {
  if (!(step_scale > 0.0)) throw std::invalid_argument("beta_probe: step must be positive");
  if (points.empty()) throw std::invalid_argument("beta_probe: no probe points");
  double margin = std::numeric_limits<double>::infinity();
  for (const auto& p : points) {
    if (p.size() != d.dim()) throw std::invalid_argument("beta_probe: dimension mismatch");
    if (!p.allFinite()) throw std::invalid_argument("beta_probe: non-finite probe point");
    if (!std::isfinite(d.log_f(p))) throw NumericError("beta_probe: non-finite log f at probe point");
    margin = std::min(margin, min_symmetric_eigenvalue(fd_hessian_log_f(d, p, step_scale)) + d.beta());
  }
  return margin;
}

double beta_probe(const DensityModel& d, const std::vector<Vector>& points) {
  return beta_probe(d, points, kFdStep);
}

std::vector<Vector> probe_grid(int dim, double lo, double hi, double step) {
  if (dim < 1 || !(step > 0.0) || hi < lo) throw std::invalid_argument("probe_grid: bad arguments");
  const int per_axis = static_cast<int>(std::floor((hi - lo) / step + 1e-9)) + 1;
  std::size_t count = 1;
  for (int i = 0; i < dim; ++i) count *= static_cast<std::size_t>(per_axis);
  std::vector<Vector> out(count, Vector(dim));
  for (std::size_t k = 0; k < count; ++k) {
    std::size_t rest = k;
    for (int i = dim - 1; i >= 0; --i) {
      out[k](i) = lo + step * static_cast<double>(rest % per_axis);
      rest /= per_axis;
    }
  }
  return out;
}

}  // namespace outail
