#include "qdet/specfun.hpp"

#include <cmath>
#include <string>

namespace qdet {

double scale_exponent(double pi, const ModelParams& p) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("scale exponent requires pi in (0, 1), got " +
                                    std::to_string(pi));
    return p.rho * (std::log(pi / (1.0 - pi)) - 1.0 / pi);
}

namespace {

// The inner integrals run over x in (0, pi] with all their mass in a layer of
// relative width ~pi/rho at the right end, which uniformly spaced nodes miss
// once pi is small. Substituting w = 1/x - 1/pi (x = pi/(1 + pi w)) flattens
// the layer into an exp(-rho w) damping on [0, inf) while keeping the folded
// exponent rho*(L - w) <= 0:
//   int_0^pi e^{h(x)-h(pi)} x^{-k} (1-x)^{-2} dx
//     = int_0^inf e^{rho (L(w) - w)} x(w)^{2-k} (1-x(w))^{-2} dw,
// with L = log(x (1-pi) / (pi (1-x))) <= 0. The tail past w = 50/rho is
// below e^{-50} relative and is dropped.
struct ReciprocalFold {
    double pi;
    double rho;

    double x(double w) const { return pi / (1.0 + pi * w); }
    double one_minus_x(double w) const { return (1.0 - pi + pi * w) / (1.0 + pi * w); }
    double damped_scale(double w) const {
        const double xv = x(w);
        const double L = std::log(xv * (1.0 - pi) / (pi * one_minus_x(w)));
        return std::exp(rho * (L - w));
    }
    double cutoff() const { return 50.0 / rho; }
};

}  // namespace

double psi(double pi, const ModelParams& p, const QuadratureConfig& quad) {
    if (pi == 0.0) return 0.0;
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("psi requires pi in [0, 1), got " + std::to_string(pi));
    const ReciprocalFold fold{pi, p.rho};
    const double val = integrate(
        [&](double w) {
            const double om = fold.one_minus_x(w);
            return fold.damped_scale(w) * fold.x(w) / (om * om);
        },
        0.0, fold.cutoff(), quad);
    return -(p.beta / p.gamma) * val;
}

double psi_prime(double pi, const ModelParams& p, const QuadratureConfig& quad) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("psi_prime requires pi in (0, 1), got " + std::to_string(pi));
    const double om = 1.0 - pi;
    return -(p.beta * pi + p.lam * om * psi(pi, p, quad)) / (p.gamma * pi * pi * om * om);
}

double psi_primitive(double pi, const ModelParams& p, const QuadratureConfig& quad) {
    if (pi == 0.0) return 0.0;
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("psi_primitive requires pi in [0, 1), got " +
                                    std::to_string(pi));
    return integrate([&](double x) { return psi(x, p, quad); }, 0.0, pi, quad);
}

double chi(double pi, const ModelParams& p, const QuadratureConfig& quad) {
    if (!(pi > 0.0 && pi < 1.0))
        throw std::invalid_argument("chi requires pi in (0, 1), got " + std::to_string(pi));
    const ReciprocalFold fold{pi, p.rho};
    const double val = integrate(
        [&](double w) {
            const double om = fold.one_minus_x(w);
            return fold.damped_scale(w) / (om * om);
        },
        0.0, fold.cutoff(), quad);
    return -val / p.gamma;
}

double expected_hitting_time(double from, double barrier, const ModelParams& p,
                             const QuadratureConfig& quad) {
    if (!(from >= 0.0 && from <= barrier && barrier < 1.0))
        throw std::invalid_argument("expected_hitting_time requires 0 <= from <= barrier < 1");
    if (from == barrier) return 0.0;
    // chi(0+) = -1/lam; interior quadrature nodes never actually land on 0.
    return -integrate([&](double x) { return x > 0.0 ? chi(x, p, quad) : -1.0 / p.lam; }, from,
                      barrier, quad);
}

double PsiCache::psi(double pi) const {
    {
        std::lock_guard lock(mutex_);
        if (auto it = psi_.find(pi); it != psi_.end()) return it->second;
    }
    const double v = qdet::psi(pi, params_, quad_);
    std::lock_guard lock(mutex_);
    return psi_.emplace(pi, v).first->second;
}

double PsiCache::primitive(double pi) const {
    {
        std::lock_guard lock(mutex_);
        if (auto it = primitive_.find(pi); it != primitive_.end()) return it->second;
    }
    const double v = qdet::psi_primitive(pi, params_, quad_);
    std::lock_guard lock(mutex_);
    return primitive_.emplace(pi, v).first->second;
}

}  // namespace qdet
