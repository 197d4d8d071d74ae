#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace qdet {

struct QuadratureConfig {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    int max_depth = 60;
};

// Raised when the adaptive scheme cannot meet the requested tolerance within
// the depth cap; carries the error bound actually achieved.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string& what, double achieved)
        : std::runtime_error(what + " (achieved error bound " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved() const { return achieved_; }

  private:
    double achieved_;
};

namespace detail {

// 15-point Kronrod nodes/weights with the embedded 7-point Gauss rule.
inline constexpr double kGk15Nodes[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000};
inline constexpr double kGk15WeightsK[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
inline constexpr double kGk15WeightsG[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

struct PanelResult {
    double integral;
    double error;
};

template <class F>
PanelResult gauss_kronrod_15(F&& f, double a, double b) {
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);

    const double fc = f(mid);
    double resk = kGk15WeightsK[7] * fc;
    double resg = kGk15WeightsG[3] * fc;
    double resabs = std::abs(resk);
    double fv[15];
    fv[7] = fc;
    for (int j = 0; j < 7; ++j) {
        const double dx = half * kGk15Nodes[j];
        const double f1 = f(mid - dx);
        const double f2 = f(mid + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        resk += kGk15WeightsK[j] * (f1 + f2);
        if (j % 2 == 1) resg += kGk15WeightsG[j / 2] * (f1 + f2);
        resabs += kGk15WeightsK[j] * (std::abs(f1) + std::abs(f2));
    }
    const double reskh = 0.5 * resk;
    double resasc = kGk15WeightsK[7] * std::abs(fc - reskh);
    for (int j = 0; j < 7; ++j)
        resasc += kGk15WeightsK[j] * (std::abs(fv[j] - reskh) + std::abs(fv[14 - j] - reskh));

    double err = std::abs(resk - resg) * half;
    resasc *= std::abs(half);
    if (resasc != 0.0 && err != 0.0)
        err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
    return {resk * half, err};
}

template <class F>
void adapt(F&& f, double a, double b, double tol, int depth, const QuadratureConfig& cfg,
           double& sum, double& err_sum, double& unresolved) {
    const auto panel = gauss_kronrod_15(f, a, b);
    const double goal = std::max(tol, cfg.rel_tol * std::abs(panel.integral));
    if (panel.error <= goal || !(b - a > 0.0)) {
        sum += panel.integral;
        err_sum += panel.error;
        return;
    }
    if (depth >= cfg.max_depth) {
        sum += panel.integral;
        err_sum += panel.error;
        unresolved += panel.error;
        return;
    }
    const double mid = 0.5 * (a + b);
    adapt(f, a, mid, 0.5 * tol, depth + 1, cfg, sum, err_sum, unresolved);
    adapt(f, mid, b, 0.5 * tol, depth + 1, cfg, sum, err_sum, unresolved);
}

}  // namespace detail

// Adaptive integration of f over [a, b] by recursive bisection with the
// embedded 15/7-point pair. Endpoints are never evaluated. Throws
// QuadratureError if depth-capped panels leave more than the requested
// tolerance unresolved.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureConfig& cfg = {}) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    double sum = 0.0, err_sum = 0.0, unresolved = 0.0;
    detail::adapt(f, a, b, cfg.abs_tol, 0, cfg, sum, err_sum, unresolved);
    if (unresolved > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(sum)))
        throw QuadratureError("adaptive quadrature did not converge", err_sum);
    return sign * sum;
}

}  // namespace qdet
