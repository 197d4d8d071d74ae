#include "qdet/value.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace qdet {

double stopping_payoff(const std::function<double(double)>& value_at, double pi, double epsilon) {
    if (!(pi >= 0.0 && pi <= 1.0))
        throw std::invalid_argument("stopping_payoff requires pi in [0, 1]");
    return 1.0 + (1.0 - (1.0 - epsilon) * pi) * value_at(posterior_after_negative(pi, epsilon));
}

namespace {

double terminal_value(double epsilon) { return 1.0 / (1.0 - epsilon); }

double psi_prime_from(double pi, double psi_at, const ModelParams& p) {
    const double om = 1.0 - pi;
    return -(p.beta * pi + p.lam * om * psi_at) / (p.gamma * pi * pi * om * om);
}

}  // namespace

ValuePoint value_point(const Solution& sol, double pi, const PsiCache& cache) {
    if (!(pi >= 0.0 && pi <= 1.0))
        throw std::invalid_argument("value requires pi in [0, 1]");
    const double eps = sol.params.epsilon;
    if (pi >= 1.0) return {terminal_value(eps), false, 0};
    if (pi < sol.a_star) return {sol.value_at_zero + cache.primitive(pi), false, 0};

    if (eps > 0.0 && pi >= sol.decomp.breakpoints.back()) {
        // past the truncated ladder: one recursion step anchored at V(1)
        return {1.0 + (1.0 - (1.0 - eps) * pi) * terminal_value(eps), true, 1};
    }

    // V(pi) = head + scale * V(g^k(pi)) accumulated over the unwind
    double head = 0.0, scale = 1.0, cur = pi;
    int steps = 0;
    while (cur >= sol.a_star) {
        head += scale;
        scale *= 1.0 - (1.0 - eps) * cur;
        cur = posterior_after_negative(cur, eps);
        if (++steps > kMaxLadderLength)
            throw std::logic_error("value recursion failed to leave the stopping region");
    }
    return {head + scale * (sol.value_at_zero + cache.primitive(cur)), false, steps};
}

double value(const Solution& sol, double pi, const QuadratureConfig& quad) {
    PsiCache cache(sol.params, quad);
    return value_point(sol, pi, cache).value;
}

ValueDerivatives value_derivatives(const Solution& sol, double pi, const PsiCache& cache) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("value_derivatives requires pi in (0, 1)");
    const ModelParams& p = sol.params;
    const double eps = p.epsilon;

    std::vector<double> chain;  // pi and its g-iterates down to below a*
    double cur = pi;
    while (cur >= sol.a_star) {
        chain.push_back(cur);
        cur = posterior_after_negative(cur, eps);
        if (static_cast<int>(chain.size()) > kMaxLadderLength)
            throw std::logic_error("derivative recursion failed to leave the stopping region");
    }

    ValueDerivatives d;
    if (cur == 0.0) {  // eps = 0 lands exactly at the origin
        d.u = sol.value_at_zero;
        d.u1 = 0.0;
        d.u2 = -p.beta / (p.gamma * (1.0 + p.rho));
    } else {
        d.u = sol.value_at_zero + cache.primitive(cur);
        d.u1 = cache.psi(cur);
        d.u2 = psi_prime_from(cur, d.u1, p);
    }
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        const double m = 1.0 - (1.0 - eps) * (*it);
        const double u_new = 1.0 + m * d.u;
        const double u1_new = -(1.0 - eps) * d.u + (eps / m) * d.u1;
        const double u2_new = (eps * eps) / (m * m * m) * d.u2;
        d.u = u_new;
        d.u1 = u1_new;
        d.u2 = u2_new;
    }
    return d;
}

ValueDiagnostics diagnostics(const Solution& sol, const PsiCache& cache, double grid_step) {
    const ModelParams& p = sol.params;
    const double eps = p.epsilon;
    const double a = sol.a_star;
    const auto& bp = sol.decomp.breakpoints;
    constexpr double kBreakpointMargin = 3e-6;

    ValueDiagnostics out;
    out.kappa = p.beta / (p.lam * (1.0 - a));
    out.ode_residual_max = 0.0;
    out.variational_min = std::numeric_limits<double>::infinity();
    out.obstacle_gap_min = std::numeric_limits<double>::infinity();
    out.concavity_violations = 0;
    out.second_deriv_violations = 0;
    out.first_deriv_violations = 0;
    out.grid_points = 0;

    auto near_breakpoint = [&](double x) {
        auto it = std::lower_bound(bp.begin(), bp.end(), x - kBreakpointMargin);
        return it != bp.end() && *it <= x + kBreakpointMargin;
    };

    for (int i = 1; i * grid_step < 1.0 - 1e-3; ++i) {
        const double x = i * grid_step;
        if (near_breakpoint(x)) continue;
        const ValueDerivatives d = value_derivatives(sol, x, cache);
        const double om = 1.0 - x;
        const double gen = p.lam * om * d.u1 + p.gamma * x * x * om * om * d.u2;
        ++out.grid_points;

        if (x < a) {
            out.ode_residual_max = std::max(out.ode_residual_max, std::abs(gen + p.beta * x));
            const double reset = value_point(sol, posterior_after_negative(x, eps), cache).value;
            const double payoff = 1.0 + (1.0 - (1.0 - eps) * x) * reset;
            out.obstacle_gap_min = std::min(out.obstacle_gap_min, payoff - d.u);
        } else {
            out.variational_min = std::min(out.variational_min, gen + p.beta * x);
        }

        if (!(d.u2 < 0.0)) ++out.concavity_violations;
        if (!(d.u2 > -out.kappa / om && d.u2 < 0.0)) ++out.second_deriv_violations;
        if (!(d.u1 > out.kappa * std::log(om) && d.u1 < 0.0)) ++out.first_deriv_violations;
    }

    const double psi_a = cache.psi(a);
    const double ga = posterior_after_negative(a, eps);
    const double prim_ga = ga > 0.0 ? cache.primitive(ga) : 0.0;
    const double psi_ga = ga > 0.0 ? cache.psi(ga) : 0.0;
    const double C = sol.value_at_zero;
    out.smooth_fit_gap = std::abs(
        psi_a - (-(1.0 - eps) * (C + prim_ga) + eps / (1.0 - (1.0 - eps) * a) * psi_ga));
    out.value_match_gap = std::abs(C + cache.primitive(a) -
                                   (1.0 + (1.0 - (1.0 - eps) * a) * (C + prim_ga)));
    return out;
}

ClassicalReduction classical_reduction_check(const ModelParams& p, const QuadratureConfig& quad) {
    if (p.epsilon != 0.0)
        throw std::invalid_argument("classical reduction check requires epsilon = 0");
    const Solution sol = solve_boundary(p, quad);
    PsiCache cache(p, quad);
    const double a = sol.a_star;
    const double C = sol.value_at_zero;

    ClassicalReduction r;
    r.constant_identity_gap = std::abs(C + cache.psi(a));
    r.boundary_equation_gap = std::abs(1.0 - cache.primitive(a) + a * cache.psi(a));

    // re-solve the classical smooth-fit condition psi(A) = -C by bisection
    double lo = 1e-6, hi = 1.0 - 1e-6;
    while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (cache.psi(mid) + C > 0.0)
            lo = mid;
        else
            hi = mid;
    }
    r.boundary_resolve_gap = std::abs(0.5 * (lo + hi) - a);

    // V0(pi) = 1 + V0(0) * Vc(pi; beta/V0(0)) with Vc from its closed form
    double worst = 0.0;
    const double A = 0.5 * (lo + hi);
    for (int i = 1; i <= 19; ++i) {
        const double x = 0.05 * i;
        const double v0 = value_point(sol, x, cache).value;
        const double vc = x >= A ? 1.0 - x
                                 : (1.0 - A) - (cache.primitive(A) - cache.primitive(x)) / C;
        worst = std::max(worst, std::abs(v0 - 1.0 - C * vc));
    }
    r.affine_relation_gap = worst;
    return r;
}

}  // namespace qdet
