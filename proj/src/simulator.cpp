#include "qdet/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <thread>

namespace qdet {

namespace {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t sm = seed ^ (0xd1b54a32d192ed03ull * (stream + 1));
    for (auto& word : s_) word = splitmix64(sm);
}

std::uint64_t Rng::next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * u01() - 1.0;
        v = 2.0 * u01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
}

double sample_theta(double pi0, double lam, Rng& rng) {
    if (!(pi0 >= 0.0 && pi0 <= 1.0)) throw std::invalid_argument("pi0 must be in [0, 1]");
    if (rng.u01() < pi0) return 0.0;
    return -std::log(1.0 - rng.u01()) / lam;
}

namespace {

void validate_config(const SimConfig& cfg) {
    if (!(cfg.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (cfg.n_paths < 1) throw std::invalid_argument("n_paths must be >= 1");
    if (!(cfg.threshold > 0.0 && cfg.threshold < 1.0))
        throw std::invalid_argument("threshold must be in (0, 1)");
    if (!(cfg.pi0 >= 0.0 && cfg.pi0 <= 1.0)) throw std::invalid_argument("pi0 must be in [0, 1]");
}

double horizon_of(const ModelParams& p, const SimConfig& cfg) {
    return cfg.horizon_cap > 0.0 ? cfg.horizon_cap : 1e3 / p.lam;
}

}  // namespace

namespace {

template <class StepCb>
PathOutcome simulate_impl(const ModelParams& p, const SimConfig& cfg, double theta, Rng& rng,
                          StepCb&& on_grid_time) {
    const double eps = p.epsilon;
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double horizon = horizon_of(p, cfg);
    const double innov_coeff = p.mu / (p.sigma * p.sigma);

    PathOutcome out;
    out.theta = theta;
    out.n_tests = 0;
    out.tau_detect = 0.0;
    out.censored = false;
    out.tests_after_theta = 0;
    out.false_negatives = 0;
    out.max_clamp_excursion = 0.0;

    double t = 0.0;
    double post = cfg.pi0;
    bool detected = false;

    while (true) {
        on_grid_time(t, post);
        // inspection loop: possibly several tests at one instant
        while (post >= cfg.threshold) {
            ++out.n_tests;
            const bool drift_active = theta <= t;
            const bool positive = drift_active && rng.u01() <= 1.0 - eps;
            if (drift_active) {
                ++out.tests_after_theta;
                if (!positive) ++out.false_negatives;
            }
            if (cfg.collect_inspections) out.inspections.push_back({t, post, positive});
            if (positive) {
                out.tau_detect = t;
                detected = true;
                break;
            }
            post = posterior_after_negative(post, eps);
            if (post >= 1.0) post = std::nextafter(1.0, 0.0);  // clamp artifact guard
        }
        if (detected) break;
        if (t >= horizon) {
            out.censored = true;
            out.tau_detect = t;
            break;
        }

        const double z = rng.normal();
        const double dx = (theta <= t ? p.mu * dt : 0.0) + p.sigma * sqrt_dt * z;
        const double next =
            post + p.lam * (1.0 - post) * dt + innov_coeff * post * (1.0 - post) * (dx - p.mu * post * dt);
        if (next > 1.0)
            out.max_clamp_excursion = std::max(out.max_clamp_excursion, next - 1.0);
        else if (next < 0.0)
            out.max_clamp_excursion = std::max(out.max_clamp_excursion, -next);
        post = std::clamp(next, 0.0, 1.0);
        t += dt;
    }

    out.cost = out.n_tests + p.beta * std::max(out.tau_detect - theta, 0.0);
    return out;
}

}  // namespace

PathOutcome simulate_path_given_theta(const ModelParams& p, const SimConfig& cfg, double theta,
                                      Rng& rng) {
    validate_config(cfg);
    return simulate_impl(p, cfg, theta, rng, [](double, double) {});
}

PathOutcome simulate_path_traced(const ModelParams& p, const SimConfig& cfg, double theta,
                                 Rng& rng, std::vector<TracePoint>& trace) {
    validate_config(cfg);
    return simulate_impl(p, cfg, theta, rng,
                         [&trace](double t, double pi) { trace.push_back({t, pi}); });
}

PathOutcome simulate_path(const ModelParams& p, const SimConfig& cfg, Rng& rng) {
    validate_config(cfg);
    return simulate_path_given_theta(p, cfg, sample_theta(cfg.pi0, p.lam, rng), rng);
}

namespace {

double pairwise_sum(const double* data, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += data[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(data, half) + pairwise_sum(data + half, n - half);
}

struct MeanStderr {
    double mean, stderr_;
};

MeanStderr reduce(const std::vector<double>& xs) {
    const std::size_t n = xs.size();
    const double mean = pairwise_sum(xs.data(), n) / static_cast<double>(n);
    if (n < 2) return {mean, 0.0};
    std::vector<double> sq(n);
    for (std::size_t i = 0; i < n; ++i) sq[i] = (xs[i] - mean) * (xs[i] - mean);
    const double var = pairwise_sum(sq.data(), n) / static_cast<double>(n - 1);
    return {mean, std::sqrt(var / static_cast<double>(n))};
}

int resolve_threads(const SimConfig& cfg) {
    int t = cfg.threads;
    if (t <= 0) {
        if (const char* env = std::getenv("QDET_THREADS")) t = std::atoi(env);
        if (t <= 0) t = static_cast<int>(std::thread::hardware_concurrency());
        if (t <= 0) t = 1;
    }
    return static_cast<int>(std::min<std::int64_t>(t, cfg.n_paths));
}

}  // namespace

McSummary monte_carlo(const ModelParams& p, const SimConfig& cfg) {
    validate_config(cfg);
    const std::int64_t n = cfg.n_paths;

    std::vector<double> cost(n), n_tests(n), tau(n);
    std::vector<std::uint8_t> censored(n);
    std::vector<int> after(n), fneg(n);
    std::vector<double> excursion(n);

    SimConfig path_cfg = cfg;
    path_cfg.collect_inspections = false;

    auto run_range = [&](std::int64_t lo, std::int64_t hi) {
        for (std::int64_t i = lo; i < hi; ++i) {
            Rng rng(cfg.seed, static_cast<std::uint64_t>(i));
            const PathOutcome po = simulate_path(p, path_cfg, rng);
            cost[i] = po.cost;
            n_tests[i] = po.n_tests;
            tau[i] = po.tau_detect;
            censored[i] = po.censored ? 1 : 0;
            after[i] = po.tests_after_theta;
            fneg[i] = po.false_negatives;
            excursion[i] = po.max_clamp_excursion;
        }
    };

    const int n_threads = resolve_threads(cfg);
    if (n_threads <= 1) {
        run_range(0, n);
    } else {
        std::vector<std::thread> pool;
        const std::int64_t chunk = (n + n_threads - 1) / n_threads;
        for (int w = 0; w < n_threads; ++w) {
            const std::int64_t lo = w * chunk;
            const std::int64_t hi = std::min<std::int64_t>(lo + chunk, n);
            if (lo >= hi) break;
            pool.emplace_back(run_range, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    McSummary s;
    s.n_paths = n;
    s.n_censored = 0;
    s.tests_after_theta = 0;
    s.false_negatives_after_theta = 0;
    s.max_clamp_excursion = 0.0;
    int max_tests = 0;
    for (std::int64_t i = 0; i < n; ++i) {
        s.n_censored += censored[i];
        s.tests_after_theta += after[i];
        s.false_negatives_after_theta += fneg[i];
        s.max_clamp_excursion = std::max(s.max_clamp_excursion, excursion[i]);
        max_tests = std::max(max_tests, static_cast<int>(n_tests[i]));
    }
    s.n_tests_histogram.assign(static_cast<std::size_t>(max_tests) + 1, 0);
    for (std::int64_t i = 0; i < n; ++i) ++s.n_tests_histogram[static_cast<std::size_t>(n_tests[i])];

    const auto mc = reduce(cost);
    const auto mn = reduce(n_tests);
    const auto mt = reduce(tau);
    s.mean_cost = mc.mean;
    s.stderr_cost = mc.stderr_;
    s.mean_n_tests = mn.mean;
    s.stderr_n_tests = mn.stderr_;
    s.mean_tau_detect = mt.mean;
    s.stderr_tau_detect = mt.stderr_;

    if (static_cast<double>(s.n_censored) > 1e-3 * static_cast<double>(n))
        throw SimulationError("censored fraction " + std::to_string(s.n_censored) + "/" +
                              std::to_string(n) + " exceeds 0.1%");
    return s;
}

DetectionTimeReport detection_time_check(const ModelParams& p, const McSummary& mc,
                                         const SimConfig& cfg, const QuadratureConfig& quad) {
    const double a = cfg.threshold;
    const double ga = posterior_after_negative(a, p.epsilon);
    const double expected_tests = 1.0 / ((1.0 - p.epsilon) * a);
    const double analytic = expected_hitting_time(std::min(cfg.pi0, a), a, p, quad) +
                            (expected_tests - 1.0) * expected_hitting_time(ga, a, p, quad);
    DetectionTimeReport r;
    r.empirical_mean = mc.mean_tau_detect;
    r.empirical_stderr = mc.stderr_tau_detect;
    r.analytic_mean = analytic;
    r.z_score = (r.empirical_mean - analytic) / r.empirical_stderr;
    return r;
}

}  // namespace qdet
