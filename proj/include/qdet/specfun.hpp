#pragma once

#include <mutex>
#include <unordered_map>

#include "qdet/model.hpp"
#include "qdet/quadrature.hpp"

namespace qdet {

// Exponent of the (inverse) scale density of the posterior diffusion:
// rho * (log(pi/(1-pi)) - 1/pi). Strictly increasing; diverges at 0 and 1.
double scale_exponent(double pi, const ModelParams& p);

// Slope of the value function on the continuation region:
//   psi(pi) = -(beta/gamma) int_0^pi exp(h(x) - h(pi)) / (x (1-x)^2) dx.
// The exponential difference is folded into the integrand so it never
// exceeds 1 (h is increasing and x <= pi). psi(0) = 0, psi < 0 on (0,1).
double psi(double pi, const ModelParams& p, const QuadratureConfig& quad = {});

// Derivative of psi via the ODE identity
//   psi'(pi) = -(beta*pi + lam*(1-pi)*psi(pi)) / (gamma pi^2 (1-pi)^2).
double psi_prime(double pi, const ModelParams& p, const QuadratureConfig& quad = {});

// Antiderivative int_0^pi psi(x) dx, evaluated as a nested adaptive
// quadrature over psi. Decreasing, zero at 0.
double psi_primitive(double pi, const ModelParams& p, const QuadratureConfig& quad = {});

// Scale-weighted mean-time density:
//   chi(pi) = -(1/gamma) int_0^pi exp(h(x) - h(pi)) / (x^2 (1-x)^2) dx.
// Satisfies chi = psi/beta - 1/lam identically.
double chi(double pi, const ModelParams& p, const QuadratureConfig& quad = {});

// Expected time for the posterior started at `from` to reach `barrier`:
//   -int_from^barrier chi(x) dx, nonnegative, zero iff from == barrier.
double expected_hitting_time(double from, double barrier, const ModelParams& p,
                             const QuadratureConfig& quad = {});

// Memoizing wrapper for the two expensive evaluations, keyed by the exact
// argument. Safe for concurrent use; the underlying functions are pure.
class PsiCache {
  public:
    PsiCache(const ModelParams& p, const QuadratureConfig& quad = {})
        : params_(p), quad_(quad) {}

    double psi(double pi) const;
    double primitive(double pi) const;

    const ModelParams& params() const { return params_; }
    const QuadratureConfig& quad() const { return quad_; }

  private:
    ModelParams params_;
    QuadratureConfig quad_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<double, double> psi_, primitive_;
};

}  // namespace qdet
