#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "momentum/config.hpp"
#include "momentum/io.hpp"
#include "momentum/lyapunov.hpp"
#include "momentum/methods.hpp"
#include "momentum/ode.hpp"
#include "momentum/quadratic.hpp"
#include "momentum/verlet.hpp"

namespace momentum {

// Exit-code contract shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitCertificateViolated = 2;

inline QuadraticObjective build_objective(const ExperimentConfig& cfg) {
    switch (cfg.problem) {
        case ExperimentConfig::ProblemKind::WorstCase:
            return nesterov_worst_case(cfg.d, cfg.smoothness);
        case ExperimentConfig::ProblemKind::Regression:
            return ill_conditioned_regression(cfg.d, cfg.kappa, cfg.seed);
        case ExperimentConfig::ProblemKind::Identity:
            if (cfg.d < 1) throw config_error("identity problem needs d >= 1");
            return QuadraticObjective(Eigen::MatrixXd::Identity(cfg.d, cfg.d),
                                      Eigen::VectorXd::Zero(cfg.d), 0.0);
    }
    throw config_error("unhandled problem kind");
}

inline double effective_h2(const ExperimentConfig& cfg, const QuadraticObjective& obj) {
    if (cfg.h2_absolute) return *cfg.h2_absolute;
    return cfg.h2_fraction / obj.lambda_max();
}

inline MethodSpec resolve_method(const MethodEntry& entry, const QuadraticObjective& obj) {
    MethodSpec spec = entry.spec;
    if (entry.mu) {
        spec.beta = polyak_momentum(obj.lambda_max(), *entry.mu);
    }
    spec.validate();
    return spec;
}

inline Eigen::VectorXd build_start(const ExperimentConfig& cfg, int d) {
    if (cfg.q0 == ExperimentConfig::StartKind::Zeros) return Eigen::VectorXd::Zero(d);
    std::mt19937_64 rng(cfg.q0_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd q0(d);
    for (int i = 0; i < d; ++i) q0[i] = gauss(rng);
    return q0;
}

/// Desk-scale reproductions of the harness experiments.
inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig cfg;
    if (name == "fig1") {
        // Worst-case instance: increasing-momentum heavy ball matches the
        // accelerated envelope, plain gradient descent does not.
        cfg.problem = ExperimentConfig::ProblemKind::WorstCase;
        cfg.d = 200;
        cfg.smoothness = 1.0;
        cfg.h2_fraction = 1.0;
        cfg.iterations = 1000;
        cfg.q0 = ExperimentConfig::StartKind::Gauss;
        cfg.q0_seed = 13;  // a start that spreads energy across the spectrum
        cfg.methods = {{MethodSpec::gd()}, {MethodSpec::hb()}, {MethodSpec::agd()}};
        cfg.slope_window = {{20, 100}};
        cfg.out_dir = "fig1_out";
    } else if (name == "fig2") {
        // One-dimensional oscillator: total energy oscillates, the modified
        // energy does not drift.
        cfg.problem = ExperimentConfig::ProblemKind::Identity;
        cfg.d = 1;
        cfg.h2_absolute = 1.0;
        cfg.iterations = 60;
        cfg.energy = true;
        cfg.out_dir = "fig2_out";
    } else if (name == "fig3") {
        // Lyapunov traces on ill-conditioned regression: constant at r = 2,
        // decreasing at r = 3.
        cfg.problem = ExperimentConfig::ProblemKind::Regression;
        cfg.d = 50;
        cfg.kappa = 1e6;
        cfg.seed = 0;
        cfg.h2_fraction = 1.0;
        cfg.iterations = 10000;
        cfg.methods = {{MethodSpec::hbr(2.0)}, {MethodSpec::hbr(3.0)}};
        cfg.lyapunov = true;
        cfg.out_dir = "fig3_out";
    } else if (name == "fig4") {
        // Same setting, r = 3 only; the summary reports where the
        // cross-term-free value v11 + v2 increases while full V does not.
        cfg.problem = ExperimentConfig::ProblemKind::Regression;
        cfg.d = 50;
        cfg.kappa = 1e6;
        cfg.seed = 0;
        cfg.h2_fraction = 1.0;
        cfg.iterations = 10000;
        cfg.methods = {{MethodSpec::hbr(3.0)}};
        cfg.lyapunov = true;
        cfg.out_dir = "fig4_out";
    } else if (name == "fig5") {
        // Large steps: friction-3 heavy ball stays stable at h^2 = 3.9/L;
        // competitor behavior is recorded, not asserted.
        cfg.problem = ExperimentConfig::ProblemKind::Regression;
        cfg.d = 50;
        cfg.kappa = 1e6;
        cfg.seed = 0;
        cfg.h2_fraction = 3.9;
        cfg.iterations = 10000;
        cfg.methods = {{MethodSpec::hbr(3.0)}, {MethodSpec::hb2()}, {MethodSpec::agd()}};
        cfg.out_dir = "fig5_out";
    } else {
        throw config_error("unknown preset '" + name + "'");
    }
    return cfg;
}

namespace detail {

inline long plot_stride(long rows) { return std::max<long>(1, rows / 512); }

inline std::filesystem::path prepare_out_dir(const ExperimentConfig& cfg) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    auto os = open_output(dir / "config_used.txt");
    write_config(os, cfg);
    return dir;
}

struct TruncatedScan {
    long first_increase_k = -1;  // first k where v11 + v2 increases
    double max_full_increase = 0.0;
    bool full_nonincreasing = true;
};

inline TruncatedScan scan_truncated(const LyapunovTrace& trace) {
    TruncatedScan scan;
    for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
        const auto& a = trace.records[i];
        const auto& b = trace.records[i + 1];
        const double tol = 1e-12 * (1.0 + std::abs(a.v));
        const double truncated_step = (b.v11 + b.v2) - (a.v11 + a.v2);
        if (scan.first_increase_k < 0 && truncated_step > tol) {
            scan.first_increase_k = a.k;
        }
        const double full_step = b.v - a.v;
        scan.max_full_increase = std::max(scan.max_full_increase, full_step);
        if (full_step > tol) scan.full_nonincreasing = false;
    }
    return scan;
}

} // namespace detail

inline int cmd_run(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.methods.empty()) throw config_error("'run' needs at least one method");
    const QuadraticObjective obj = build_objective(cfg);
    const double h2 = effective_h2(cfg, obj);
    const double h = std::sqrt(h2);
    const auto dir = detail::prepare_out_dir(cfg);

    auto summary = open_output(dir / "summary.txt");
    auto note = [&](const std::string& s) {
        summary << s << '\n';
        log << s << '\n';
    };
    note("problem dim " + std::to_string(obj.dim()) + ", lambda_max " +
         sci(obj.lambda_max()) + ", h^2 " + sci(h2));

    for (const auto& entry : cfg.methods) {
        const MethodSpec spec = resolve_method(entry, obj);
        const std::string label = spec.label();
        const Trajectory traj = run(spec, obj, build_start(cfg, obj.dim()), h,
                                    cfg.iterations);
        {
            auto os = open_output(dir / (label + "_trajectory.csv"));
            write_trajectory_csv(os, traj);
        }
        if (cfg.plot_data) {
            auto os = open_output(dir / (label + "_trajectory_plot.csv"));
            write_trajectory_csv(os, traj, detail::plot_stride(traj.last_k() + 1));
        }
        note(label + ": ran " + std::to_string(traj.last_k()) + " iterations, " +
             (traj.stable ? "stable" : "UNSTABLE (truncated)") + ", final f_gap " +
             sci(traj.f_gap.back()));

        if (cfg.lyapunov && traj.last_k() >= 2) {
            const bool has_r =
                spec.kind == MethodKind::HBR || spec.kind == MethodKind::AGDR;
            const double r_monitor =
                cfg.lyapunov_r ? *cfg.lyapunov_r : (has_r ? spec.r : 2.0);
            const LyapunovTrace trace = hbr_lyapunov_trace(traj, obj, r_monitor);
            {
                auto os = open_output(dir / (label + "_lyapunov.csv"));
                write_lyapunov_csv(os, trace);
            }
            if (cfg.plot_data) {
                auto os = open_output(dir / (label + "_lyapunov_plot.csv"));
                write_lyapunov_csv(os, trace,
                                   detail::plot_stride(static_cast<long>(trace.records.size())));
            }
            const auto scan = detail::scan_truncated(trace);
            note(label + ": V0 " + sci(trace.initial()) + ", max dV " +
                 sci(scan.max_full_increase) + ", full V non-increasing: " +
                 (scan.full_nonincreasing ? "yes" : "no"));
            note(label + ": cross-term-free v11+v2 first increases at k = " +
                 (scan.first_increase_k >= 0 ? std::to_string(scan.first_increase_k)
                                             : std::string("never")));
        }

        if (cfg.slope_window) {
            const auto fit = rate_slope(traj, cfg.slope_window->first, cfg.slope_window->second);
            note(label + ": log-log slope " + sci(fit.slope) + " over k in [" +
                 std::to_string(fit.k_lo) + ", " + std::to_string(fit.k_hi) + "] (" +
                 std::to_string(fit.points) + " points)");
        }
    }
    return kExitOk;
}

inline int cmd_energy(const ExperimentConfig& cfg, std::ostream& log) {
    const QuadraticObjective obj = build_objective(cfg);
    const double h2 = effective_h2(cfg, obj);
    const double h = std::sqrt(h2);
    const auto dir = detail::prepare_out_dir(cfg);

    const OscillatorState start{Eigen::VectorXd::Ones(obj.dim()),
                                Eigen::VectorXd::Zero(obj.dim()), h};
    const auto states = simulate_oscillator(obj.hessian(), start, cfg.iterations);

    {
        auto os = open_output(dir / "energy.csv");
        write_energy_csv(os, obj.hessian(), states);
    }
    if (cfg.plot_data) {
        auto os = open_output(dir / "energy_plot.csv");
        write_energy_csv(os, obj.hessian(), states, 0,
                         detail::plot_stride(static_cast<long>(states.size())));
    }

    double e_min = 0.0, e_max = 0.0, drift = 0.0;
    const double v0 = modified_energy(obj.hessian(), states.front());
    for (std::size_t i = 0; i < states.size(); ++i) {
        const double e = total_energy(obj.hessian(), states[i]);
        if (i == 0) {
            e_min = e_max = e;
        } else {
            e_min = std::min(e_min, e);
            e_max = std::max(e_max, e);
        }
        drift = std::max(drift, std::abs(modified_energy(obj.hessian(), states[i]) - v0));
    }

    auto summary = open_output(dir / "summary.txt");
    const std::string line = "oscillation amplitude " + sci(e_max - e_min) +
                             ", modified-energy max drift " + sci(drift) + ", h " + sci(h) +
                             ", steps " + std::to_string(states.size() - 1);
    summary << line << '\n';
    log << line << '\n';
    return kExitOk;
}

inline int cmd_certify(const ExperimentConfig& cfg, std::ostream& log) {
    if (cfg.methods.empty()) throw config_error("'certify' needs at least one method");
    const QuadraticObjective obj = build_objective(cfg);
    const double h2 = effective_h2(cfg, obj);
    const double h = std::sqrt(h2);
    const auto dir = detail::prepare_out_dir(cfg);

    auto report = open_output(dir / "certificate.txt");
    auto note = [&](const std::string& s) {
        report << s << '\n';
        log << s << '\n';
    };

    bool all_passed = true;
    for (const auto& entry : cfg.methods) {
        const MethodSpec spec = resolve_method(entry, obj);
        double r = 0.0;
        if (spec.kind == MethodKind::HBR) {
            r = spec.r;
        } else if (spec.kind == MethodKind::HB2) {
            r = 2.0;
        } else {
            throw config_error("'certify' covers the friction-r heavy-ball family only, got '" +
                               spec.label() + "'");
        }

        note("== " + spec.label() + ": r " + sci(r) + ", c " + sci(cfg.lyapunov_c) +
             ", h^2 " + sci(h2) + ", lambda_max " + sci(obj.lambda_max()));

        const Trajectory traj = run(spec, obj, build_start(cfg, obj.dim()), h,
                                    cfg.iterations);
        const LyapunovTrace trace = hbr_lyapunov_trace(traj, obj, r);
        const auto& recs = trace.records;

        if (r == 2.0) {
            // Conservation mode: V is an invariant of the r = 2 recursion.
            double worst = 0.0;
            for (const auto& rec : recs) worst = std::max(worst, std::abs(rec.v - recs[0].v));
            const double tol = 1e-9 * std::max(1.0, std::abs(recs[0].v));
            const bool ok = worst <= tol;
            all_passed = all_passed && ok;
            note(std::string(ok ? "[PASS]" : "[FAIL]") + " conservation: max |V_k - V0| " +
                 sci(worst) + " (tolerance " + sci(tol) + ")");
        } else {
            double worst_excess = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
                const double tol = 1e-12 * (1.0 + std::abs(recs[i].v));
                worst_excess =
                    std::max(worst_excess, (recs[i + 1].v - recs[i].v) - tol);
            }
            const bool ok = worst_excess <= 0.0;
            all_passed = all_passed && ok;
            note(std::string(ok ? "[PASS]" : "[FAIL]") +
                 " monotonicity: max (dV - tolerance) " + sci(worst_excess));
        }

        // Closed-form differences against direct differences.
        double worst_rel = 0.0;
        for (std::size_t i = 0; i + 1 < recs.size(); ++i) {
            const long k = recs[i].k;
            const double scale = 1.0 + std::abs(recs[i].v);
            const double dv_direct = recs[i + 1].v - recs[i].v;
            const double dv1_direct =
                (recs[i + 1].v11 + recs[i + 1].v12) - (recs[i].v11 + recs[i].v12);
            const double dv2_direct = recs[i + 1].v2 - recs[i].v2;
            worst_rel = std::max(
                worst_rel,
                std::abs(v_difference_closed_form(traj, obj, r, k) - dv_direct) / scale);
            worst_rel = std::max(
                worst_rel,
                std::abs(v1_difference_closed_form(traj, obj, r, k) - dv1_direct) / scale);
            worst_rel = std::max(
                worst_rel,
                std::abs(v2_difference_closed_form(traj, obj, r, k) - dv2_direct) / scale);
        }
        const bool lemma_ok = worst_rel <= 1e-9;
        all_passed = all_passed && lemma_ok;
        note(std::string(lemma_ok ? "[PASS]" : "[FAIL]") +
             " difference identities: max relative deviation " + sci(worst_rel));

        try {
            const auto check = rate_certificate_check(traj, obj, r, cfg.lyapunov_c);
            all_passed = all_passed && check.passed;
            note(std::string(check.passed ? "[PASS]" : "[FAIL]") + " rate bound: min margin " +
                 sci(check.min_margin) + " at k = " + std::to_string(check.min_margin_k) +
                 (check.passed
                      ? ""
                      : ", first violation at k = " + std::to_string(check.first_violation_k)));
        } catch (const certificate_refusal& refusal) {
            note(std::string("refused: ") + refusal.what());
            return kExitError;
        }
    }

    note(all_passed ? "overall: PASS" : "overall: FAIL");
    return all_passed ? kExitOk : kExitCertificateViolated;
}

} // namespace momentum
