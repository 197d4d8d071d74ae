#pragma once

#include <cstdint>
#include <vector>

#include "qdet/model.hpp"
#include "qdet/specfun.hpp"

namespace qdet {

class SimulationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// xoshiro256++ with the state derived from (seed, stream) through splitmix64,
// so per-path substreams are reproducible independently of scheduling.
class Rng {
  public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    std::uint64_t next();
    double u01();     // uniform on [0, 1)
    double normal();  // standard normal, polar method with cached spare

  private:
    std::uint64_t s_[4];
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct SimConfig {
    double pi0 = 0.1;
    double dt = 1e-3;
    double horizon_cap = 0.0;  // 0 picks the default 1e3 / lam
    std::int64_t n_paths = 1;
    std::uint64_t seed = 0;
    double threshold = 0.0;  // inspection threshold, usually a_star
    int threads = 0;         // 0 = hardware concurrency
    bool collect_inspections = false;
};

struct Inspection {
    double time;
    double posterior_before;  // posterior at the instant the test is run
    bool positive;
};

struct PathOutcome {
    double theta;
    int n_tests;
    double tau_detect;
    double cost;  // n_tests + beta * (tau_detect - theta)+
    bool censored;
    int tests_after_theta;
    int false_negatives;          // negative outcomes among tests after theta
    double max_clamp_excursion;   // worst pre-clamp overshoot of [0, 1]
    std::vector<Inspection> inspections;
};

struct McSummary {
    double mean_cost, stderr_cost;
    double mean_n_tests, stderr_n_tests;
    double mean_tau_detect, stderr_tau_detect;
    std::int64_t n_paths;
    std::int64_t n_censored;
    std::int64_t tests_after_theta;
    std::int64_t false_negatives_after_theta;
    double max_clamp_excursion;
    std::vector<std::int64_t> n_tests_histogram;  // index = N_Y, 0 unused
};

// Change time: 0 with probability pi0, else exponential(lam).
double sample_theta(double pi0, double lam, Rng& rng);

// One episode of the threshold policy: Euler steps of the observation and
// posterior, an inspection loop whenever the posterior reaches the threshold
// (several tests can fire at one instant), negative outcomes reset the
// posterior through the Bayes update. Stops at detection or the horizon cap.
PathOutcome simulate_path(const ModelParams& p, const SimConfig& cfg, Rng& rng);

// Same with the change time pinned; used by simulate_path and by tests.
PathOutcome simulate_path_given_theta(const ModelParams& p, const SimConfig& cfg, double theta,
                                      Rng& rng);

struct TracePoint {
    double t;
    double pi;  // posterior at the grid time, before any tests fire
};

// As above, additionally recording the posterior at every grid time.
PathOutcome simulate_path_traced(const ModelParams& p, const SimConfig& cfg, double theta,
                                 Rng& rng, std::vector<TracePoint>& trace);

// Independent paths with per-path substreams of cfg.seed; reduction is
// deterministic regardless of thread count. Throws SimulationError if more
// than 0.1% of paths are censored.
McSummary monte_carlo(const ModelParams& p, const SimConfig& cfg);

struct DetectionTimeReport {
    double empirical_mean;
    double empirical_stderr;
    double analytic_mean;  // hitting-time decomposition via quadrature
    double z_score;
};

// Compares the simulated mean detection time against
//   E[tau] = E_pi0[tau_a] + (1/((1-eps) a) - 1) E_g(a)[tau_a].
DetectionTimeReport detection_time_check(const ModelParams& p, const McSummary& mc,
                                         const SimConfig& cfg,
                                         const QuadratureConfig& quad = {});

}  // namespace qdet
