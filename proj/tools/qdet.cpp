// Command-line front end: solve the inspection threshold, tabulate the value
// function, sweep the false-negative rate, and run Monte Carlo simulations.
//
// Exit codes: 0 success, 2 argument error, 3 solver/quadrature error,
// 4 simulation quality error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "qdet/boundary.hpp"
#include "qdet/model.hpp"
#include "qdet/simulator.hpp"
#include "qdet/value.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitArgs = 2;
constexpr int kExitSolver = 3;
constexpr int kExitSimQuality = 4;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

struct ModelFlags {
    double lambda = 0.0;
    double mu = 0.0;
    double sigma = 1.0;
    std::optional<double> gamma;
    double beta = 0.0;
    double eps = 0.0;
    double quad_tol = 1e-10;
    double tol = 1e-10;

    bool uses_gamma() const { return gamma.has_value(); }

    qdet::ModelParams params() const {
        if (uses_gamma()) return qdet::make_params_from_gamma(lambda, *gamma, beta, eps);
        return qdet::make_params(lambda, mu, sigma, beta, eps);
    }
    qdet::QuadratureConfig quad() const { return {quad_tol, quad_tol, 60}; }

    void append_config(std::ostringstream& os) const {
        os << "\"lambda\":" << fmt(lambda) << ",";
        if (uses_gamma())
            os << "\"gamma\":" << fmt(*gamma) << ",";
        else
            os << "\"mu\":" << fmt(mu) << ",\"sigma\":" << fmt(sigma) << ",";
        os << "\"beta\":" << fmt(beta) << ",\"eps\":" << fmt(eps) << ",\"quad_tol\":"
           << fmt(quad_tol) << ",\"tol\":" << fmt(tol);
    }
};

// Registers the shared model options on a subcommand.
void add_model_flags(CLI::App* cmd, ModelFlags& mf) {
    cmd->add_option("--lambda", mf.lambda, "change-time rate (> 0)");
    cmd->add_option("--mu", mf.mu, "drift magnitude (nonzero)");
    cmd->add_option("--sigma", mf.sigma, "observation volatility (> 0)");
    cmd->add_option("--gamma", mf.gamma, "signal-to-noise mu^2/(2 sigma^2); overrides mu/sigma");
    cmd->add_option("--beta", mf.beta, "delay cost rate (> 0)");
    cmd->add_option("--eps", mf.eps, "false-negative probability in [0, 1)");
    cmd->add_option("--quad-tol", mf.quad_tol, "quadrature tolerance");
    cmd->add_option("--tol", mf.tol, "boundary bracket tolerance");
}

// Fills options that the command line left untouched from a JSON config file.
void merge_config(CLI::App* cmd, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
    nlohmann::json j;
    in >> j;
    for (auto& [key, val] : j.items()) {
        CLI::Option* opt = cmd->get_option_no_throw("--" + key);
        if (opt == nullptr || opt->count() > 0) continue;  // unknown key or flag wins
        if (val.is_boolean()) {
            if (val.get<bool>()) opt->add_result("true");
        } else {
            opt->add_result(val.dump());
        }
    }
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

int run_solve(const ModelFlags& mf, const std::string& out_path) {
    const qdet::ModelParams p = mf.params();
    const qdet::Solution sol = qdet::solve_boundary(p, mf.quad(), mf.tol);
    const double ga = qdet::posterior_after_negative(sol.a_star, p.epsilon);
    std::ostringstream os;
    os << "{\"config\":{";
    mf.append_config(os);
    os << "},\"a_star\":" << fmt(sol.a_star) << ",\"C\":" << fmt(sol.value_at_zero)
       << ",\"residual\":" << fmt(sol.residual) << ",\"g_a_star\":" << fmt(ga)
       << ",\"expected_n_tests\":" << fmt(1.0 / ((1.0 - p.epsilon) * sol.a_star)) << "}\n";
    write_output(os.str(), out_path);
    return kExitOk;
}

int run_value(const ModelFlags& mf, double grid_start, double grid_step, double grid_end,
              const std::string& out_path) {
    const qdet::ModelParams p = mf.params();
    const qdet::Solution sol = qdet::solve_boundary(p, mf.quad(), mf.tol);
    qdet::PsiCache cache(p, mf.quad());
    std::ostringstream os;
    os << "pi,value,region,interval_index\n";
    for (int i = 0;; ++i) {
        const double pi = grid_start + i * grid_step;
        if (pi > grid_end + 0.5 * grid_step) break;
        const double x = std::min(pi, 1.0);
        const auto vp = qdet::value_point(sol, x, cache);
        int index;
        if (x < sol.a_star) {
            index = 0;
        } else {
            try {
                index = qdet::interval_index(std::min(x, std::nextafter(1.0, 0.0)), sol.decomp);
            } catch (const std::out_of_range&) {
                index = static_cast<int>(sol.decomp.breakpoints.size());
            }
        }
        os << fmt(x) << "," << fmt(vp.value) << ","
           << (x < sol.a_star ? "continue" : "stop") << "," << index << "\n";
    }
    write_output(os.str(), out_path);
    return kExitOk;
}

int run_sweep(const ModelFlags& mf, const std::vector<double>& betas, double eps_start,
              double eps_stop, double eps_step, const std::string& out_path) {
    std::ostringstream os;
    os << "beta,eps,a_star,g_a_star,gap,C,expected_n_tests,wait_between_tests,"
          "expected_detection_time,error\n";
    bool any_ok = false;
    for (double beta : betas) {
        for (int i = 0;; ++i) {
            const double eps = eps_start + i * eps_step;
            if (eps > eps_stop + 0.5 * eps_step) break;
            ModelFlags row = mf;
            row.beta = beta;
            row.eps = eps;
            os << fmt(beta) << "," << fmt(eps) << ",";
            try {
                const qdet::ModelParams p = row.params();
                const qdet::Solution sol = qdet::solve_boundary(p, row.quad(), row.tol);
                const double a = sol.a_star;
                const double ga = qdet::posterior_after_negative(a, eps);
                const double n_tests = 1.0 / ((1.0 - eps) * a);
                const double wait = qdet::expected_hitting_time(ga, a, p, row.quad());
                const double detect =
                    qdet::expected_hitting_time(0.0, a, p, row.quad()) + (n_tests - 1.0) * wait;
                os << fmt(a) << "," << fmt(ga) << "," << fmt(a - ga) << ","
                   << fmt(sol.value_at_zero) << "," << fmt(n_tests) << "," << fmt(wait) << ","
                   << fmt(detect) << ",\n";
                any_ok = true;
            } catch (const std::exception& e) {
                os << ",,,,,," << csv_escape(e.what()) << "\n";
            }
        }
    }
    write_output(os.str(), out_path);
    return any_ok ? kExitOk : kExitSolver;
}

struct SimFlags {
    std::int64_t paths = 10000;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    double pi0 = 0.1;
    double horizon = 0.0;
    std::optional<double> threshold;
    int threads = 0;
    bool trace = false;
};

int run_simulate(const ModelFlags& mf, const SimFlags& sf, const std::string& out_path) {
    const qdet::ModelParams p = mf.params();
    double threshold;
    if (sf.threshold.has_value()) {
        threshold = *sf.threshold;
    } else {
        threshold = qdet::solve_boundary(p, mf.quad(), mf.tol).a_star;
    }

    qdet::SimConfig cfg;
    cfg.pi0 = sf.pi0;
    cfg.dt = sf.dt;
    cfg.horizon_cap = sf.horizon;
    cfg.n_paths = sf.paths;
    cfg.seed = sf.seed;
    cfg.threshold = threshold;
    cfg.threads = sf.threads;

    if (sf.trace) {
        // one path, full trajectory
        qdet::SimConfig one = cfg;
        one.n_paths = 1;
        one.collect_inspections = true;
        qdet::Rng rng(cfg.seed, 0);
        const double theta = qdet::sample_theta(cfg.pi0, p.lam, rng);
        std::vector<qdet::TracePoint> trace;
        const auto po = qdet::simulate_path_traced(p, one, theta, rng, trace);

        std::ostringstream os;
        os << "# theta=" << fmt(theta) << ",censored=" << (po.censored ? 1 : 0) << "\n";
        os << "t,pi,inspection,outcome,pi_after\n";
        std::size_t insp = 0;
        for (const auto& tp : trace) {
            os << fmt(tp.t) << "," << fmt(tp.pi) << ",0,," << fmt(tp.pi) << "\n";
            while (insp < po.inspections.size() && po.inspections[insp].time == tp.t) {
                const auto& e = po.inspections[insp];
                const double after =
                    e.positive ? e.posterior_before
                               : qdet::posterior_after_negative(e.posterior_before, p.epsilon);
                os << fmt(tp.t) << "," << fmt(e.posterior_before) << ",1," << (e.positive ? 1 : 0)
                   << "," << fmt(after) << "\n";
                ++insp;
            }
        }
        write_output(os.str(), out_path);
        return kExitOk;
    }

    const qdet::McSummary s = qdet::monte_carlo(p, cfg);
    std::ostringstream os;
    os << "{\"config\":{";
    ModelFlags echo = mf;
    echo.append_config(os);
    os << ",\"paths\":" << s.n_paths << ",\"dt\":" << fmt(cfg.dt) << ",\"seed\":" << cfg.seed
       << ",\"pi0\":" << fmt(cfg.pi0) << ",\"threshold\":" << fmt(cfg.threshold) << "},";
    os << "\"mean_cost\":" << fmt(s.mean_cost) << ",\"stderr_cost\":" << fmt(s.stderr_cost)
       << ",\"mean_n_tests\":" << fmt(s.mean_n_tests) << ",\"stderr_n_tests\":"
       << fmt(s.stderr_n_tests) << ",\"mean_tau_detect\":" << fmt(s.mean_tau_detect)
       << ",\"stderr_tau_detect\":" << fmt(s.stderr_tau_detect) << ",\"n_paths\":" << s.n_paths
       << ",\"censored\":" << s.n_censored << ",\"tests_after_theta\":" << s.tests_after_theta
       << ",\"false_negatives_after_theta\":" << s.false_negatives_after_theta
       << ",\"histogram\":[";
    for (std::size_t k = 1; k < s.n_tests_histogram.size(); ++k) {
        if (k > 1) os << ",";
        os << s.n_tests_histogram[k];
    }
    os << "]}\n";
    write_output(os.str(), out_path);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian quickest detection with unreliable inspections"};
    app.require_subcommand(1);

    ModelFlags mf_solve, mf_value, mf_sweep, mf_sim;
    std::string cfg_solve, cfg_value, cfg_sweep, cfg_sim;
    std::string out_solve, out_value, out_sweep, out_sim;

    CLI::App* solve = app.add_subcommand("solve", "solve for the inspection threshold");
    add_model_flags(solve, mf_solve);
    solve->add_option("--config", cfg_solve, "JSON config file (flags win)");
    solve->add_option("--out", out_solve, "output path (default stdout)");

    CLI::App* value = app.add_subcommand("value", "tabulate the value function");
    add_model_flags(value, mf_value);
    double grid_start = 0.0, grid_step = 0.01, grid_end = 1.0;
    value->add_option("--grid-start", grid_start, "first pi");
    value->add_option("--grid-step", grid_step, "pi increment");
    value->add_option("--grid-end", grid_end, "last pi");
    value->add_option("--config", cfg_value, "JSON config file (flags win)");
    value->add_option("--out", out_value, "output path (default stdout)");

    CLI::App* sweep = app.add_subcommand("sweep", "solve across an epsilon grid");
    add_model_flags(sweep, mf_sweep);
    std::vector<double> betas;
    double eps_start = 0.0, eps_stop = 0.9, eps_step = 0.1;
    sweep->add_option("--betas", betas, "comma-separated beta values")->delimiter(',');
    sweep->add_option("--eps-start", eps_start, "first epsilon");
    sweep->add_option("--eps-stop", eps_stop, "last epsilon");
    sweep->add_option("--eps-step", eps_step, "epsilon increment");
    sweep->add_option("--config", cfg_sweep, "JSON config file (flags win)");
    sweep->add_option("--out", out_sweep, "output path (default stdout)");

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo under the threshold policy");
    add_model_flags(simulate, mf_sim);
    SimFlags sf;
    simulate->add_option("--paths", sf.paths, "number of paths");
    simulate->add_option("--dt", sf.dt, "Euler step");
    simulate->add_option("--seed", sf.seed, "RNG seed");
    simulate->add_option("--pi0", sf.pi0, "initial belief");
    simulate->add_option("--horizon", sf.horizon, "time cap per path (0 = default)");
    simulate->add_option("--threshold", sf.threshold, "policy threshold (default: solve a*)");
    simulate->add_option("--threads", sf.threads, "worker threads (0 = auto)");
    simulate->add_flag("--trace", sf.trace, "emit one path's trajectory as CSV");
    simulate->add_option("--config", cfg_sim, "JSON config file (flags win)");
    simulate->add_option("--out", out_sim, "output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (*solve && !cfg_solve.empty()) merge_config(solve, cfg_solve);
        if (*value && !cfg_value.empty()) merge_config(value, cfg_value);
        if (*sweep && !cfg_sweep.empty()) merge_config(sweep, cfg_sweep);
        if (*simulate && !cfg_sim.empty()) merge_config(simulate, cfg_sim);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitArgs;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    }

    try {
        if (*solve) return run_solve(mf_solve, out_solve);
        if (*value) return run_value(mf_value, grid_start, grid_step, grid_end, out_value);
        if (*sweep) {
            if (betas.empty()) betas = {mf_sweep.beta};
            return run_sweep(mf_sweep, betas, eps_start, eps_stop, eps_step, out_sweep);
        }
        if (*simulate) return run_simulate(mf_sim, sf, out_sim);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitArgs;
    } catch (const qdet::SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSimQuality;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitArgs;
}
