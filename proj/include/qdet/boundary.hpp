#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdet/model.hpp"
#include "qdet/quadrature.hpp"
#include "qdet/specfun.hpp"

namespace qdet {

class SolverError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// The solved free boundary together with the constant that anchors the
// value function (value_at_zero == V(0), since the primitive vanishes at 0).
struct Solution {
    double a_star;
    double value_at_zero;     // the constant C in V = Psi + C on [0, a*)
    double residual;          // |F(a_star)|
    double residual_bound;    // max(|F| at the final bracket ends)
    double bracket_tol;       // bracket-width tolerance used
    IntervalDecomposition decomp;  // breakpoint ladder at a_star
    ModelParams params;
};

// Smooth-fit/value-matching equation whose unique root in (0,1) is the
// optimal inspection threshold:
//   F(a) = 1 + Psi(g(a)) - g(a) psi(g(a)) - Psi(a) + a psi(a).
// Strictly decreasing, F(0+) = 1, F(1-) = -infinity.
double free_boundary_equation(double a, const ModelParams& p, const QuadratureConfig& quad = {});

// Bisection on an expanding bracket. The left end 1e-6 has F > 0; the right
// end grows as 1 - 0.1*2^-k until the sign changes. Throws SolverError if no
// sign change is found before 1 - 1e-6.
Solution solve_boundary(const ModelParams& p, const QuadratureConfig& quad = {},
                        double bracket_tol = 1e-10);

struct EpsSweepEntry {
    double epsilon;
    std::optional<Solution> sol;  // empty on per-entry failure
    std::string error;            // failure message, empty on success
};

// Re-solves the boundary across an epsilon grid, keeping lam/gamma/beta from
// the base parameters. Per-entry failures are recorded and the sweep continues.
std::vector<EpsSweepEntry> sweep_epsilon(const ModelParams& base,
                                         const std::vector<double>& eps_grid,
                                         const QuadratureConfig& quad = {},
                                         double bracket_tol = 1e-10);

}  // namespace qdet
