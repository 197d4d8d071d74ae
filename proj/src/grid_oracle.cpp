#include "qdet/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qdet/specfun.hpp"
#include "qdet/value.hpp"

namespace qdet {

namespace {

struct Tridiag {
    std::vector<double> sub, diag, sup;
};

void thomas_solve(const std::vector<double>& sub, const std::vector<double>& diag,
                  const std::vector<double>& sup, const std::vector<double>& rhs,
                  std::vector<double>& x, std::vector<double>& c_scratch,
                  std::vector<double>& d_scratch) {
    const std::size_t n = diag.size();
    auto& c = c_scratch;
    auto& d = d_scratch;
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < n; ++i) {
        const double m = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / m;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / m;
    }
    x[n - 1] = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
}

double interp_on_grid(const std::vector<double>& values, double x, double h) {
    if (x <= 0.0) return values.front();
    if (x >= 1.0) return values.back();
    const double pos = x / h;
    const std::size_t i = std::min(static_cast<std::size_t>(pos), values.size() - 2);
    const double t = pos - static_cast<double>(i);
    return (1.0 - t) * values[i] + t * values[i + 1];
}

}  // namespace

GridValue value_iteration(const ModelParams& p, int n, double tol, int max_iter) {
    if (n < 500) throw std::invalid_argument("grid size must be >= 500");
    if (!(tol > 0.0)) throw std::invalid_argument("tol must be > 0");

    const double eps = p.epsilon;
    const double h = 1.0 / (n - 1);
    const double terminal = 1.0 / (1.0 - eps);

    std::vector<double> pi(n);
    for (int i = 0; i < n; ++i) pi[i] = i * h;

    // rows of L = -generator; upwind forward drift (drift lam(1-pi) >= 0)
    Tridiag L;
    L.sub.assign(n, 0.0);
    L.diag.assign(n, 0.0);
    L.sup.assign(n, 0.0);
    std::vector<double> f(n);
    for (int i = 1; i < n - 1; ++i) {
        const double b = p.lam * (1.0 - pi[i]);
        const double D = p.gamma * pi[i] * pi[i] * (1.0 - pi[i]) * (1.0 - pi[i]);
        L.sub[i] = -D / (h * h);
        L.diag[i] = 2.0 * D / (h * h) + b / h;
        L.sup[i] = -b / h - D / (h * h);
        f[i] = p.beta * pi[i];
    }
    // pi = 0: diffusion vanishes, entrance drift row enforces w'(0) = 0
    L.diag[0] = p.lam / h;
    L.sup[0] = -p.lam / h;
    f[0] = 0.0;
    // pi = 1: Dirichlet
    L.diag[n - 1] = 1.0;
    f[n - 1] = terminal;

    std::vector<double> inv_diag(n);
    for (int i = 0; i < n; ++i) inv_diag[i] = 1.0 / L.diag[i];

    std::vector<double> w(n), phi(n), rhs(n), sub(n), diag(n), sup(n), wn(n), c_s(n), d_s(n),
        residual(n);

    // Start from the discrete cost of the fixed rule "test whenever the
    // posterior reaches the midpoint node": a supersolution, so the outer
    // sweeps descend monotonically. Build the continuation leg first
    // (L cost = f below the rule's threshold, 0 at and above it) ...
    {
        const int j0 = n / 2;
        const double a0 = pi[j0];
        std::vector<double> leg(n);
        for (int i = 0; i < n; ++i) {
            const bool below = i < j0;
            sub[i] = below ? L.sub[i] : 0.0;
            diag[i] = below ? L.diag[i] : 1.0;
            sup[i] = below ? L.sup[i] : 0.0;
            rhs[i] = below ? f[i] : 0.0;
        }
        rhs[0] = 0.0;
        thomas_solve(sub, diag, sup, rhs, leg, c_s, d_s);
        // ... then the reset value c with w1(g(a0)) = c, and the recursion above.
        const double m0 = 1.0 - (1.0 - eps) * a0;
        const double c = (1.0 + interp_on_grid(leg, posterior_after_negative(a0, eps), h)) /
                         ((1.0 - eps) * a0);
        for (int i = 0; i <= j0; ++i) w[i] = 1.0 + leg[i] + m0 * c;
        for (int i = j0 + 1; i < n - 1; ++i) {
            const double m = 1.0 - (1.0 - eps) * pi[i];
            const double g = posterior_after_negative(pi[i], eps);
            const auto cell = static_cast<std::size_t>(g / h);
            if (cell + 1 < static_cast<std::size_t>(i)) {
                w[i] = 1.0 + m * interp_on_grid(w, g, h);
            } else {
                // reset lands in the cell just below node i; solve the linear
                // self-reference through the interpolant
                const double t = g / h - static_cast<double>(cell);
                w[i] = (1.0 + m * (1.0 - t) * w[cell]) / (1.0 - m * t);
            }
        }
        w[n - 1] = terminal;
    }

    std::vector<std::uint8_t> active(n, 0);
    GridValue out;
    out.monotone_excess = 0.0;
    out.sup_change = std::numeric_limits<double>::infinity();
    int outer = 0;
    for (; outer < max_iter; ++outer) {
        for (int i = 0; i < n - 1; ++i) {
            const double g = posterior_after_negative(pi[i], eps);
            phi[i] = 1.0 + (1.0 - (1.0 - eps) * pi[i]) * interp_on_grid(w, g, h);
        }
        phi[n - 1] = terminal;

        // policy iteration on max(Lw - f, w - phi) = 0, warm-started
        bool inner_converged = false;
        for (int sweep = 0; sweep < 4 * n; ++sweep) {
            for (int i = 0; i < n; ++i) {
                if (active[i]) {
                    sub[i] = 0.0;
                    diag[i] = 1.0;
                    sup[i] = 0.0;
                    rhs[i] = phi[i];
                } else {
                    sub[i] = L.sub[i];
                    diag[i] = L.diag[i];
                    sup[i] = L.sup[i];
                    rhs[i] = f[i];
                }
            }
            thomas_solve(sub, diag, sup, rhs, wn, c_s, d_s);
            for (int i = 0; i < n; ++i) {
                double lw = L.diag[i] * wn[i];
                if (i > 0) lw += L.sub[i] * wn[i - 1];
                if (i < n - 1) lw += L.sup[i] * wn[i + 1];
                residual[i] = (lw - f[i]) * inv_diag[i];
            }
            bool changed = false;
            for (int i = 0; i < n - 1; ++i) {
                const std::uint8_t want = (wn[i] - phi[i] > residual[i]) ? 1 : 0;
                if (want != active[i]) {
                    active[i] = want;
                    changed = true;
                }
            }
            if (!changed) {
                inner_converged = true;
                break;
            }
        }
        if (!inner_converged)
            throw SolverError("inner obstacle solve did not settle on an active set");

        double change = 0.0, excess = 0.0;
        for (int i = 0; i < n; ++i) {
            change = std::max(change, std::abs(wn[i] - w[i]));
            excess = std::max(excess, wn[i] - w[i]);
        }
        w.swap(wn);
        out.sup_change = change;
        if (outer > 0) out.monotone_excess = std::max(out.monotone_excess, excess);
        if (change <= tol) {
            ++outer;
            break;
        }
    }
    if (out.sup_change > tol)
        throw SolverError("value iteration did not converge within max_iter; last change " +
                          std::to_string(out.sup_change));

    out.grid = std::move(pi);
    out.values = std::move(w);
    out.stopping = active;
    out.iterations = outer;
    out.tol = tol;
    out.boundary_index = n - 1;
    for (int i = 0; i < n; ++i)
        if (active[i]) {
            out.boundary_index = i;
            break;
        }
    out.boundary_estimate = out.grid[out.boundary_index];
    return out;
}

OracleComparison compare_to_closed_form(const GridValue& gv, const Solution& sol) {
    PsiCache cache(sol.params, QuadratureConfig{});
    double sup = 0.0;
    for (std::size_t i = 0; i < gv.grid.size(); ++i) {
        const double v = value_point(sol, gv.grid[i], cache).value;
        sup = std::max(sup, std::abs(v - gv.values[i]));
    }
    OracleComparison cmp;
    cmp.sup_gap = sup;
    cmp.boundary_gap = std::abs(gv.boundary_estimate - sol.a_star);
    const double h = gv.grid[1] - gv.grid[0];
    cmp.boundary_cells = cmp.boundary_gap / h;
    return cmp;
}

}  // namespace qdet
