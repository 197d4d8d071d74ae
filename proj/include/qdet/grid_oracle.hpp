#pragma once

#include <cstdint>
#include <vector>

#include "qdet/boundary.hpp"
#include "qdet/model.hpp"

namespace qdet {

// Discrete solution of the recursive stopping problem on a uniform mesh of
// [0, 1]; the brute-force cross-check for the closed-form value and boundary.
struct GridValue {
    std::vector<double> grid;
    std::vector<double> values;
    std::vector<std::uint8_t> stopping;  // final active (stop) set
    int iterations;                      // outer sweeps performed
    double sup_change;                   // last outer sup-norm change
    double monotone_excess;              // max over outer sweeps of sup(w_new - w_old)+ after the first
    int boundary_index;                  // first stopping node
    double boundary_estimate;            // grid[boundary_index]
    double tol;
};

// Outer fixed-point iteration w_{n+1} = obstacle-solve(A w_n) where each
// inner problem is the stationary complementarity system
//   (L w - beta pi) <= 0,  w - phi <= 0,  one of them 0 at every node,
// with L the upwind finite-difference negative generator, Dirichlet value
// 1/(1-eps) at pi = 1, and obstacle phi = 1 + (1-(1-eps)pi) w_n(g(pi))
// (linear interpolation off-grid). Inner solves use policy iteration with a
// row-scaled branch comparison, warm-started across outer sweeps.
GridValue value_iteration(const ModelParams& p, int n, double tol = 1e-10, int max_iter = 500);

struct OracleComparison {
    double sup_gap;          // max |grid value - closed form| over nodes
    double boundary_gap;     // |boundary_estimate - a_star|
    double boundary_cells;   // the same gap in units of the mesh width
};

OracleComparison compare_to_closed_form(const GridValue& gv, const Solution& sol);

}  // namespace qdet
