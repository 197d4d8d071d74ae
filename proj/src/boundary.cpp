#include "qdet/boundary.hpp"

#include <cmath>

namespace qdet {

double free_boundary_equation(double a, const ModelParams& p, const QuadratureConfig& quad) {
    if (!(a > 0.0 && a < 1.0))
        throw std::invalid_argument("free_boundary_equation requires a in (0, 1)");
    const double ga = posterior_after_negative(a, p.epsilon);
    double head = 1.0;
    if (ga > 0.0) head += psi_primitive(ga, p, quad) - ga * psi(ga, p, quad);
    return head - psi_primitive(a, p, quad) + a * psi(a, p, quad);
}

namespace {

double constant_for(double a_star, const ModelParams& p, const QuadratureConfig& quad) {
    const double psi_a = psi(a_star, p, quad);
    const double prim_a = psi_primitive(a_star, p, quad);
    if (p.epsilon == 0.0) {
        // limit form of the displayed constant; equals -psi(a_star) once
        // F(a_star) = 0, which the eps = 0 identity tests pin down.
        return 1.0 - (1.0 - a_star) * psi_a - prim_a;
    }
    const double eps = p.epsilon;
    const double ga = posterior_after_negative(a_star, eps);
    return 1.0 + eps / (1.0 - eps) * psi(ga, p, quad) -
           (1.0 - (1.0 - eps) * a_star) / (1.0 - eps) * psi_a - prim_a;
}

}  // namespace

Solution solve_boundary(const ModelParams& p, const QuadratureConfig& quad, double bracket_tol) {
    if (!(bracket_tol > 0.0)) throw std::invalid_argument("bracket_tol must be > 0");

    double lo = 1e-6;
    double f_lo = free_boundary_equation(lo, p, quad);
    if (f_lo <= 0.0)
        throw SolverError("F(" + std::to_string(lo) + ") = " + std::to_string(f_lo) +
                          " is not positive; no bracket");

    // expand the right end geometrically toward 1 until the sign flips
    double hi = 0.0, f_hi = 0.0;
    bool bracketed = false;
    for (int k = 1; k <= 17; ++k) {  // 1 - 0.1*2^-16 < 1 - 1e-6 < 1 - 0.1*2^-17
        hi = 1.0 - 0.1 * std::ldexp(1.0, -k + 1);
        if (hi > 1.0 - 1e-6) break;
        f_hi = free_boundary_equation(hi, p, quad);
        if (f_hi < 0.0) {
            bracketed = true;
            break;
        }
        lo = hi;
        f_lo = f_hi;
    }
    if (!bracketed)
        throw SolverError("no sign change of the boundary equation in [1e-6, 1 - 1e-6]; "
                          "last F(" + std::to_string(lo) + ") = " + std::to_string(f_lo));

    while (hi - lo > bracket_tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // bracket at rounding resolution
        const double f_mid = free_boundary_equation(mid, p, quad);
        if (f_mid > 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }

    Solution sol;
    sol.a_star = 0.5 * (lo + hi);
    sol.residual = std::abs(free_boundary_equation(sol.a_star, p, quad));
    sol.residual_bound = std::max(std::abs(f_lo), std::abs(f_hi));
    sol.bracket_tol = bracket_tol;
    sol.value_at_zero = constant_for(sol.a_star, p, quad);
    sol.decomp = decompose(sol.a_star, p.epsilon);
    sol.params = p;
    return sol;
}

std::vector<EpsSweepEntry> sweep_epsilon(const ModelParams& base,
                                         const std::vector<double>& eps_grid,
                                         const QuadratureConfig& quad, double bracket_tol) {
    std::vector<EpsSweepEntry> out;
    out.reserve(eps_grid.size());
    for (double eps : eps_grid) {
        EpsSweepEntry entry;
        entry.epsilon = eps;
        try {
            const ModelParams p = make_params(base.lam, base.mu, base.sigma, base.beta, eps);
            entry.sol = solve_boundary(p, quad, bracket_tol);
        } catch (const std::exception& e) {
            entry.error = e.what();
        }
        out.push_back(std::move(entry));
    }
    return out;
}

}  // namespace qdet
