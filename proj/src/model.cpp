#include "qdet/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace qdet {

ModelParams make_params(double lam, double mu, double sigma, double beta, double epsilon) {
    if (!(lam > 0.0)) throw std::invalid_argument("lambda must be > 0, got " + std::to_string(lam));
    if (!(mu != 0.0) || std::isnan(mu)) throw std::invalid_argument("mu must be nonzero");
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0, got " + std::to_string(sigma));
    if (!(beta > 0.0)) throw std::invalid_argument("beta must be > 0, got " + std::to_string(beta));
    if (!(epsilon >= 0.0 && epsilon < 1.0))
        throw std::invalid_argument("epsilon must be in [0, 1), got " + std::to_string(epsilon));
    ModelParams p;
    p.lam = lam;
    p.mu = mu;
    p.sigma = sigma;
    p.beta = beta;
    p.epsilon = epsilon;
    p.gamma = mu * mu / (2.0 * sigma * sigma);
    p.rho = lam / p.gamma;
    return p;
}

ModelParams make_params_from_gamma(double lam, double gamma, double beta, double epsilon) {
    if (!(gamma > 0.0)) throw std::invalid_argument("gamma must be > 0, got " + std::to_string(gamma));
    return make_params(lam, std::sqrt(2.0 * gamma), 1.0, beta, epsilon);
}

double posterior_after_negative(double pi, double epsilon) {
    if (pi <= 0.0) return 0.0;
    if (pi >= 1.0) return 1.0;
    const double q = epsilon * pi / (1.0 - (1.0 - epsilon) * pi);
    return std::clamp(q, 0.0, 1.0);
}

double posterior_before_negative(double q, double epsilon) {
    if (q <= 0.0) return 0.0;
    if (q >= 1.0) return 1.0;
    if (epsilon == 0.0) return 1.0;  // limit convention
    const double pi = q / (epsilon + q * (1.0 - epsilon));
    return std::clamp(pi, 0.0, 1.0);
}

IntervalDecomposition decompose(double threshold, double epsilon, double eta) {
    if (!(threshold > 0.0 && threshold < 1.0))
        throw std::invalid_argument("threshold must be in (0, 1), got " + std::to_string(threshold));
    if (!(eta > 0.0 && eta < 1.0 - threshold))
        throw std::invalid_argument("eta must be in (0, 1 - threshold)");

    IntervalDecomposition d;
    d.threshold = threshold;
    d.epsilon = epsilon;
    d.breakpoints.push_back(threshold);
    if (epsilon == 0.0) return d;  // ladder collapses to {threshold}

    double b = threshold;
    while (b < 1.0 - eta) {
        if (static_cast<int>(d.breakpoints.size()) >= kMaxLadderLength)
            throw LadderTruncationError(
                "breakpoint ladder did not reach 1 - eta within " +
                std::to_string(kMaxLadderLength) + " steps (eta=" + std::to_string(eta) + ")");
        b = posterior_before_negative(b, epsilon);
        d.breakpoints.push_back(b);
    }
    return d;
}

int interval_index(double pi, const IntervalDecomposition& decomp) {
    if (pi < decomp.breakpoints.front()) return 0;
    // intervals are left-closed: I_k = [g^{-(k-1)}(a), g^{-k}(a))
    const auto& bp = decomp.breakpoints;
    auto it = std::upper_bound(bp.begin(), bp.end(), pi);
    if (it == bp.end()) {
        if (decomp.epsilon == 0.0) return 1;  // I_1 = [a, 1)
        throw std::out_of_range("pi=" + std::to_string(pi) +
                                " lies past the truncated breakpoint ladder");
    }
    return static_cast<int>(it - bp.begin());
}

}  // namespace qdet
