#pragma once

#include <cstdint>

#include "outail/measures.hpp"
#include "outail/quadrature.hpp"
#include "outail/report.hpp"

namespace outail {

enum class Method { closed_form, quadrature, monte_carlo };

struct MonteCarloOptions {
  std::size_t samples = 1'000'000;
  std::uint64_t seed = 42;
  int workers = 1;
};

/// Evaluation request for Q_t f(x) (OU) or P_s f(x) (heat); `time` is t or s.
struct SemigroupQuery {
  const DensityModel& density;
  double time;
  Vector point;
  Method method = Method::quadrature;
  MonteCarloOptions mc{};
  const QuadratureRule* rule = nullptr;  // default_rule(dim) when null
};

struct SemigroupValue {
  double log_value = 0.0;
  double std_error = 0.0;  // Monte Carlo only, on the value scale
  std::size_t n_samples = 0;

  double value() const { return std::exp(log_value); }
};

/// Below this bandwidth the kernel-differentiated gradient is not evaluated
/// by quadrature; the drift falls back to grad log f.
inline constexpr double kMinHeatBandwidth = 1e-4;
/// Relative step of the gradient-difference Hessian of log Q_t f.
inline constexpr double kSemigroupHessianStep = 1e-4;

/// log P_s f(x) and grad log P_s f(x) for any s >= 0. Quadrature evaluates
/// E[f(x + sqrt(s) G)] in log scale and differentiates the Gaussian kernel,
/// grad log P_s f(x) = E_softmax[G] / sqrt(s). Monte Carlo is not accepted.
double log_heat(const DensityModel& d, double s, const VecRef& x, Method method, VecOut grad,
                const QuadratureRule* rule = nullptr);

/// log Q_t f(x) = log P_{1-e^{-2t}} f(e^{-t} x), gradient chained accordingly.
double log_ou(const DensityModel& d, double t, const VecRef& x, Method method, VecOut grad,
              const QuadratureRule* rule = nullptr);

/// Q_t f(x) = int f(e^{-t} x + sqrt(1 - e^{-2t}) y) gamma_n(dy).
SemigroupValue ou_apply(const SemigroupQuery& q);
/// P_s f(x) = E f(x + B_s), s in (0, 1].
SemigroupValue heat_apply(const SemigroupQuery& q);
/// grad log P_s f(x); quadrature requires s >= kMinHeatBandwidth.
Vector heat_grad_log(const SemigroupQuery& q);
Vector ou_grad_log(const SemigroupQuery& q);

/// Symmetrized central-difference Hessian of log Q_t f at q.point, built from
/// differences of the gradient with step 1e-4 * max(1, |x|).
Matrix ou_log_hessian(const SemigroupQuery& q);
/// lambda_min(Hess log Q_t f(x)) + 1/(2t); non-negative by the OU log-semiconvexity lemma.
double ou_log_hessian_min_eig(const SemigroupQuery& q);

/// q = 1 + e^{2t} (p - 1).
double nelson_exponent(double p, double t);

/// Compares ||Q_t f||_{L_q(gamma)} with ||f||_{L_p(gamma)}, q = nelson_exponent(p, t).
/// Passes iff the former is at most the latter up to relative 1e-8.
BoundReport hypercontractivity_check(const DensityModel& d, double p, double t, const QuadratureRule& rule);

/// int Q_t f d(gamma_n) by nested evaluation on the given rule.
double ou_mass(const DensityModel& d, double t, const QuadratureRule& rule, Method inner = Method::quadrature);

}  // namespace outail
