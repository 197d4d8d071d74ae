#pragma once

#include <functional>

#include "qdet/boundary.hpp"
#include "qdet/model.hpp"
#include "qdet/specfun.hpp"

namespace qdet {

// Payoff of testing now given continuation values `value_at`:
//   1 + (1 - (1-eps) pi) * value_at(g(pi)).
double stopping_payoff(const std::function<double(double)>& value_at, double pi, double epsilon);

struct ValuePoint {
    double value;
    bool tail_approximation;  // pi lay past the truncated ladder
    int ladder_steps;         // recursion unwinds applied
};

// Expected-cost value at pi. Below a* this is Psi(pi) + C; at 1 it is
// 1/(1-eps); in between the recursion V(pi) = 1 + (1-(1-eps)pi) V(g(pi)) is
// unwound iteratively as an accumulated affine map until the argument falls
// below a*. Past the truncated ladder the value is anchored at V(1) and
// flagged approximate.
ValuePoint value_point(const Solution& sol, double pi, const PsiCache& cache);
double value(const Solution& sol, double pi, const QuadratureConfig& quad = {});

// First and second derivatives propagated exactly through the recursion:
// on [0, a*) they are psi and psi'; across each unwind step
//   u'(pi) = -(1-eps) u(g) + (eps/m) u'(g),   u''(pi) = (eps^2/m^3) u''(g),
// with m = 1 - (1-eps) pi. Undefined exactly at ladder breakpoints.
struct ValueDerivatives {
    double u;
    double u1;
    double u2;
};
ValueDerivatives value_derivatives(const Solution& sol, double pi, const PsiCache& cache);

struct ValueDiagnostics {
    double ode_residual_max;    // max |L u + beta pi| on (0, a*)
    double variational_min;     // min of (L u)(pi) + beta pi over (a*, 1) off breakpoints
    double obstacle_gap_min;    // min of (A u)(pi) - u(pi) over [0, a*)
    double smooth_fit_gap;      // residual of the smooth-fit equation at a*
    double value_match_gap;     // residual of the value-matching equation at a*
    int concavity_violations;       // grid points with u'' >= 0
    int second_deriv_violations;    // u'' outside (-kappa/(1-pi), 0)
    int first_deriv_violations;     // u' outside (kappa log(1-pi), 0)
    double kappa;               // beta / (lam (1 - a*))
    int grid_points;
};

// Evaluates the free-boundary conditions on a grid with the given step over
// (0, 1 - 1e-3), skipping a margin of 3e-6 around every ladder breakpoint.
ValueDiagnostics diagnostics(const Solution& sol, const PsiCache& cache,
                             double grid_step = 1e-3);

struct ClassicalReduction {
    double constant_identity_gap;   // |C + psi(a*)|
    double boundary_equation_gap;   // |1 - Psi(a*) + a* psi(a*)|
    double boundary_resolve_gap;    // |A - a*| for the root of psi(A) = -C
    double affine_relation_gap;     // max over samples of the scaled-problem identity
};

// Consistency checks of the eps = 0 solution against the classical
// single-test problem with delay rate scaled by 1/V(0).
ClassicalReduction classical_reduction_check(const ModelParams& p,
                                             const QuadratureConfig& quad = {});

}  // namespace qdet
