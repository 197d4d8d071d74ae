#pragma once

#include <stdexcept>
#include <vector>

namespace qdet {

// Model constants for the detection problem: a Brownian observation picks up
// drift mu at an exponential(lambda) change time, tests cost 1 each and miss
// an active drift with probability epsilon, delay is billed at rate beta.
// gamma and rho are the derived signal-to-noise quantities used everywhere.
struct ModelParams {
    double lam;      // change-time rate, > 0
    double mu;       // drift magnitude, != 0
    double sigma;    // observation volatility, > 0
    double beta;     // delay cost per unit time, > 0
    double epsilon;  // false-negative probability, in [0, 1)
    double gamma;    // mu^2 / (2 sigma^2)
    double rho;      // lam / gamma
};

// Validates the raw constants and fills the derived fields.
// Throws std::invalid_argument naming the violated bound.
ModelParams make_params(double lam, double mu, double sigma, double beta, double epsilon);

// Same, parametrised by gamma directly (mu = sqrt(2 gamma), sigma = 1).
ModelParams make_params_from_gamma(double lam, double gamma, double beta, double epsilon);

// Posterior after a negative test: pi -> eps*pi / (1 - (1-eps)*pi).
// Total on [0,1]; clamped into [0,1] against last-ulp excursions.
double posterior_after_negative(double pi, double epsilon);

// Inverse of the map above: q -> q / (eps + q*(1-eps)).
// At epsilon = 0 the limit convention applies: 0 -> 0, anything else -> 1.
double posterior_before_negative(double q, double epsilon);

// The ladder a, g^{-1}(a), g^{-2}(a), ... truncated at the first value
// >= 1 - eta. It splits [0,1) into the intervals I_0 = [0,a),
// I_k = [g^{-(k-1)}(a), g^{-k}(a)).
struct IntervalDecomposition {
    double threshold;
    double epsilon;
    std::vector<double> breakpoints;  // strictly increasing, first == threshold
};

// Thrown when the breakpoint ladder does not leave [0, 1-eta] within the
// hard cap on ladder length.
class LadderTruncationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kDefaultLadderCutoff = 1e-9;
inline constexpr int kMaxLadderLength = 10000;

IntervalDecomposition decompose(double threshold, double epsilon,
                                double eta = kDefaultLadderCutoff);

// Index k of the interval I_k containing pi; 0 for pi < threshold.
// Throws std::out_of_range past the truncated end of the ladder.
int interval_index(double pi, const IntervalDecomposition& decomp);

}  // namespace qdet
