#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "outail/numeric.hpp"
#include "outail/quadrature.hpp"

namespace outail {

using VecRef = Eigen::Ref<const Vector>;
using VecOut = Eigen::Ref<Vector>;

/// Which closed forms a family provides beyond log f and its gradient.
struct ClosedForms {
  bool heat = false;        ///< log P_s f and its gradient (OU follows via Q_t f(x) = P_{1-e^{-2t}} f(e^{-t} x)).
  bool exact_tail = false;  ///< gamma_n({Q_t f > r}) in closed form.
  bool cdf_1d = false;      ///< law CDF of mu = f gamma_1 (dim 1 only).
};

/// Probability density f with respect to the standard Gaussian measure,
/// normalized and weakly log-concave with constant beta:
/// Hess log f >= -beta id everywhere. Implementations are immutable, so
/// evaluation is safe from any number of threads.
class DensityModel {
 public:
  virtual ~DensityModel() = default;

  virtual std::string family() const = 0;
  virtual int dim() const = 0;
  virtual double beta() const = 0;

  virtual double log_f(const VecRef& x) const = 0;
  virtual void grad_log_f(const VecRef& x, VecOut grad) const = 0;

  virtual ClosedForms closed_forms() const { return {}; }

  /// log P_s f(x) with its gradient written to `grad`; s = 0 returns log f.
  /// Only valid when closed_forms().heat.
  virtual double log_heat_exact(double s, const VecRef& x, VecOut grad) const;

  /// gamma_n({Q_t f > r}) in log scale. Only valid when closed_forms().exact_tail.
  virtual double log_exact_tail(double t, double r) const;

  /// CDF of the law f d(gamma_1). Only valid when closed_forms().cdf_1d.
  virtual double cdf_1d(double x) const;

  Vector grad_log_f(const VecRef& x) const {
    Vector g(dim());
    grad_log_f(x, g);
    return g;
  }
  double f(const VecRef& x) const { return std::exp(log_f(x)); }
};

using DensityPtr = std::shared_ptr<const DensityModel>;

/// f_u(x) = exp(<u,x> - |u|^2/2). Log-linear, so beta = 0; u = 0 gives f == 1.
class TiltDensity final : public DensityModel {
 public:
  explicit TiltDensity(Vector u);

  std::string family() const override { return u_.isZero() ? "constant" : "tilt"; }
  int dim() const override { return static_cast<int>(u_.size()); }
  double beta() const override { return 0.0; }
  double log_f(const VecRef& x) const override;
  void grad_log_f(const VecRef& x, VecOut grad) const override;

  ClosedForms closed_forms() const override { return {true, true, dim() == 1}; }
  double log_heat_exact(double s, const VecRef& x, VecOut grad) const override;
  double log_exact_tail(double t, double r) const override;
  double cdf_1d(double x) const override;

  const Vector& direction() const { return u_; }

 private:
  Vector u_;
  double half_norm2_;
};

/// Mixture of isotropic Gaussians N(m_j, s id), each written as a density
/// relative to gamma_n. Each component has Hess log = -(1/s - 1) id; beta is
/// estimated on a probe grid and inflated by 10%.
class MixtureDensity final : public DensityModel {
 public:
  MixtureDensity(std::vector<double> weights, std::vector<Vector> means, double spread);

  std::string family() const override { return "mixture"; }
  int dim() const override { return dim_; }
  double beta() const override { return beta_; }
  double log_f(const VecRef& x) const override;
  void grad_log_f(const VecRef& x, VecOut grad) const override;

  ClosedForms closed_forms() const override { return {true, false, dim_ == 1}; }
  double log_heat_exact(double s, const VecRef& x, VecOut grad) const override;
  double cdf_1d(double x) const override;

  /// Exact Hessian of log P_s f at x (s = 0 gives Hess log f).
  Matrix log_heat_hessian(double s, const VecRef& x) const;

  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Vector>& means() const { return means_; }
  double spread() const { return spread_; }

 private:
  // Per-component log P_s f_j(x) and softmax responsibilities.
  double component_terms(double s, const VecRef& x, std::vector<double>& logs) const;

  int dim_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<Vector> means_;
  double spread_;
  double curvature_;  // a = 1/s - 1
  double beta_;
};

/// f(x) = exp(eps * sin<k,x>) / Z with beta = eps |k|^2. Normalization and
/// the heat transform use the modified-Bessel expansion of exp(eps sin).
class SinPerturbationDensity final : public DensityModel {
 public:
  SinPerturbationDensity(double epsilon, Vector k);

  std::string family() const override { return "sin"; }
  int dim() const override { return static_cast<int>(k_.size()); }
  double beta() const override { return epsilon_ * k_.squaredNorm(); }
  double log_f(const VecRef& x) const override;
  void grad_log_f(const VecRef& x, VecOut grad) const override;

  ClosedForms closed_forms() const override { return {true, false, false}; }
  double log_heat_exact(double s, const VecRef& x, VecOut grad) const override;

  double log_normalizer() const { return log_z_; }
  double epsilon() const { return epsilon_; }
  const Vector& frequency() const { return k_; }

 private:
  // sum_j c_j exp(-j^2 |k|^2 s / 2) cos(j (theta - pi/2)) and its theta-derivative.
  double series(double s, double theta, double* dtheta) const;

  double epsilon_;
  Vector k_;
  std::vector<double> bessel_;  // I_0(eps), 2 I_1(eps), 2 I_2(eps), ...
  double log_z_;
};

/// Wraps a density and overrides its declared beta. Used for negative
/// controls where the certificate is deliberately wrong.
class DeclaredBeta final : public DensityModel {
 public:
  DeclaredBeta(DensityPtr inner, double beta) : inner_(std::move(inner)), beta_(beta) {}

  std::string family() const override { return inner_->family(); }
  int dim() const override { return inner_->dim(); }
  double beta() const override { return beta_; }
  double log_f(const VecRef& x) const override { return inner_->log_f(x); }
  void grad_log_f(const VecRef& x, VecOut grad) const override { inner_->grad_log_f(x, grad); }
  ClosedForms closed_forms() const override { return inner_->closed_forms(); }
  double log_heat_exact(double s, const VecRef& x, VecOut grad) const override {
    return inner_->log_heat_exact(s, x, grad);
  }
  double log_exact_tail(double t, double r) const override { return inner_->log_exact_tail(t, r); }
  double cdf_1d(double x) const override { return inner_->cdf_1d(x); }

  const DensityModel& inner() const { return *inner_; }

 private:
  DensityPtr inner_;
  double beta_;
};

/// |int f d(gamma_n) - 1| by the given rule.
double validate_normalization(const DensityModel& d, const QuadratureRule& q);

/// Central-difference Hessian of log f from differences of grad log f,
/// step h_i = cbrt(eps) * max(1, |x|).
Matrix fd_hessian_log_f(const DensityModel& d, const VecRef& x);
Matrix fd_hessian_log_f(const DensityModel& d, const VecRef& x, double step_scale);

/// min over points of lambda_min(Hess log f) + beta. Negative values mean the
/// declared beta does not certify the density at some probe.
double beta_probe(const DensityModel& d, const std::vector<Vector>& points);
double beta_probe(const DensityModel& d, const std::vector<Vector>& points, double step_scale);

/// Regular grid on [lo, hi]^dim with the given spacing (used for probes).
std::vector<Vector> probe_grid(int dim, double lo, double hi, double step);

}  // namespace outail
