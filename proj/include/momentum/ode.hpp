#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "momentum/io.hpp"
#include "momentum/quadratic.hpp"

namespace momentum {

/// Sampled solution of a continuous-time companion flow. `damping` is the
/// friction coefficient r of q'' + (r/t) q' + grad f(q) = 0, or 0 for the
/// gradient flow q' = -grad f(q).
struct OdeTrajectory {
    std::vector<double> t;
    std::vector<Eigen::VectorXd> q;
    std::vector<Eigen::VectorXd> q_dot;
    double damping = 0.0;
    double dt = 0.0;
    bool stable = true;
};

using GradientField = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Fixed-step classical 4th-order integration of the damped oscillator flow
/// q'' + (r/t) q' + grad f(q) = 0 from rest: q(t0) = q0, q'(t0) = 0.
/// t0 must be positive (the damping is singular at t = 0).
inline OdeTrajectory integrate_agd_ode(const GradientField& grad, Eigen::VectorXd q0,
                                       double r, double t0, double t_end, double dt) {
    if (!(t0 > 0.0)) throw std::invalid_argument("start time must be positive, got " + sci(t0));
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    if (dt > (t0 / 10.0) * (1.0 + 1e-12)) {
        throw std::invalid_argument("time step " + sci(dt) + " too coarse for start time " +
                                    sci(t0) + " (need dt <= t0/10)");
    }
    if (!(t_end > t0)) throw std::invalid_argument("end time must exceed start time");

    const long steps = std::llround((t_end - t0) / dt);

    OdeTrajectory traj;
    traj.damping = r;
    traj.dt = dt;
    traj.t.reserve(steps + 1);
    traj.q.reserve(steps + 1);
    traj.q_dot.reserve(steps + 1);

    Eigen::VectorXd q = std::move(q0);
    Eigen::VectorXd w =Eigen::VectorXd::Zero(q.size());
    traj.t.push_back(t0);
    traj.q.push_back(q);
    traj.q_dot.push_back(w);

    auto accel = [&](double t, const Eigen::VectorXd& qq, const Eigen::VectorXd& ww) {
        return Eigen::VectorXd(-(r / t) * ww - grad(qq));
    };

    for (long i = 0; i < steps; ++i) {
        const double t = t0 + static_cast<double>(i) * dt;

        const Eigen::VectorXd k1q = w;
        const Eigen::VectorXd k1w = accel(t, q, w);
        const Eigen::VectorXd k2q = w + 0.5 * dt * k1w;
        const Eigen::VectorXd k2w = accel(t + 0.5 * dt, q + 0.5 * dt * k1q, k2q);
        const Eigen::VectorXd k3q = w + 0.5 * dt * k2w;
        const Eigen::VectorXd k3w = accel(t + 0.5 * dt, q + 0.5 * dt * k2q, k3q);
        const Eigen::VectorXd k4q = w + dt * k3w;
        const Eigen::VectorXd k4w = accel(t + dt, q + dt * k3q, k4q);

        q += (dt / 6.0) * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        w += (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);

        if (!q.allFinite() || !w.allFinite()) {
            traj.stable = false;
            break;
        }
        traj.t.push_back(t0 + static_cast<double>(i + 1) * dt);
        traj.q.push_back(q);
        traj.q_dot.push_back(w);
    }
    return traj;
}

inline OdeTrajectory integrate_agd_ode(const QuadraticObjective& obj,
                                       const Eigen::VectorXd& q0, double r, double t0,
                                       double t_end, double dt) {
    const double lam = obj.lambda_max();
    if (lam > 0.0 && dt > (0.1 / std::sqrt(lam)) * (1.0 + 1e-12)) {
        throw std::invalid_argument("time step " + sci(dt) +
                                    " too coarse for the stiffest mode (need dt <= 0.1/sqrt(lambda_max))");
    }
    return integrate_agd_ode([&obj](const Eigen::VectorXd& q) { return obj.grad(q); }, q0,
                             r, t0, t_end, dt);
}

/// Fixed-step classical 4th-order integration of the gradient flow
/// q' = -grad f(q). f is non-increasing along the exact solution.
inline OdeTrajectory integrate_gd_ode(const QuadraticObjective& obj, Eigen::VectorXd q0,
                                      double t0, double t_end, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
    const double lam = obj.lambda_max();
    if (lam > 0.0 && dt > (0.1 / lam) * (1.0 + 1e-12)) {
        throw std::invalid_argument("time step " + sci(dt) +
                                    " too coarse for the stiffest mode (need dt <= 0.1/lambda_max)");
    }
    if (!(t_end > t0)) throw std::invalid_argument("end time must exceed start time");

    const long steps = std::llround((t_end - t0) / dt);

    OdeTrajectory traj;
    traj.damping = 0.0;
    traj.dt = dt;

    Eigen::VectorXd q = std::move(q0);
    traj.t.push_back(t0);
    traj.q.push_back(q);
    traj.q_dot.push_back(-obj.grad(q));

    auto rhs = [&](const Eigen::VectorXd& qq) { return Eigen::VectorXd(-obj.grad(qq)); };

    for (long i = 0; i < steps; ++i) {
        const Eigen::VectorXd k1 = rhs(q);
        const Eigen::VectorXd k2 = rhs(q + 0.5 * dt * k1);
        const Eigen::VectorXd k3 = rhs(q + 0.5 * dt * k2);
        const Eigen::VectorXd k4 = rhs(q + dt * k3);
        q += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!q.allFinite()) {
            traj.stable = false;
            break;
        }
        traj.t.push_back(t0 + static_cast<double>(i + 1) * dt);
        traj.q.push_back(q);
        traj.q_dot.push_back(-obj.grad(q));
    }
    return traj;
}

/// Continuous-time Lyapunov value 2 t^2 (f(q) - f*) + |t q' + (r-1)(q - q*)|^2.
/// Constant along the r = 2 quadratic flow, non-increasing for r >= 3.
inline double v_continuous(const Eigen::VectorXd& q, const Eigen::VectorXd& q_dot,
                           double t, double r, const QuadraticObjective& obj) {
    if (!(t > 0.0)) throw std::invalid_argument("time must be positive");
    return 2.0 * t * t * obj.gap(q) +
           (t * q_dot + (r - 1.0) * (q - obj.minimizer())).squaredNorm();
}

/// CSV columns: t, f_gap, V_continuous (using the trajectory's damping).
inline void write_ode_csv(std::ostream& os, const OdeTrajectory& traj,
                          const QuadraticObjective& obj, long stride = 1) {
    if (stride < 1) stride = 1;
    os << "t,f_gap,V_continuous\n";
    const long n = static_cast<long>(traj.t.size());
    for (long i = 0; i < n; ++i) {
        if (i % stride != 0 && i != n - 1) continue;
        const double v =
            traj.t[i] > 0.0
                ? v_continuous(traj.q[i], traj.q_dot[i], traj.t[i], traj.damping, obj)
                : std::numeric_limits<double>::quiet_NaN();
        os << sci(traj.t[i]) << ',' << sci(obj.gap(traj.q[i])) << ',' << sci(v) << '\n';
    }
}

} // namespace momentum
