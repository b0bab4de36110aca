#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "momentum/io.hpp"
#include "momentum/methods.hpp"
#include "momentum/quadratic.hpp"

namespace momentum {

/// Phase-space state of the discretized oscillator u'' = -A u, with the
/// backward-difference velocity v_k = (u_k - u_{k-1})/h.
struct OscillatorState {
    Eigen::VectorXd u;
    Eigen::VectorXd v;
    double h = 1.0;
};

/// One-step transition matrix [[I - h^2 A, h I], [-h A, I]]; unit determinant.
inline Eigen::MatrixXd one_step_map(const Eigen::MatrixXd& a, double h) {
    const auto n = a.rows();
    Eigen::MatrixXd f(2 * n, 2 * n);
    f.topLeftCorner(n, n) = Eigen::MatrixXd::Identity(n, n) - h * h * a;
    f.topRightCorner(n, n) = h * Eigen::MatrixXd::Identity(n, n);
    f.bottomLeftCorner(n, n) = -h * a;
    f.bottomRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    return f;
}

inline OscillatorState verlet_step(const Eigen::MatrixXd& a, const OscillatorState& s) {
    const Eigen::VectorXd au = a * s.u;
    const double h = s.h;
    Eigen::VectorXd u_next = s.u + h * s.v - (h * h) * au;
    Eigen::VectorXd v_next = s.v - h * au;
    return {std::move(u_next), std::move(v_next), h};
}

/// <u, A u> + |v|^2 — twice the oscillator energy. Only oscillates under the
/// discrete map; it is not conserved.
inline double total_energy(const Eigen::MatrixXd& a, const OscillatorState& s) {
    return s.u.dot(a * s.u) + s.v.squaredNorm();
}

/// Total energy minus the cross-term h <v, A u>; conserved exactly by the
/// discrete map on quadratic potentials.
inline double modified_energy(const Eigen::MatrixXd& a, const OscillatorState& s) {
    const Eigen::VectorXd au = a * s.u;
    return s.u.dot(au) + s.v.squaredNorm() - s.h * s.v.dot(au);
}

inline std::vector<OscillatorState> simulate_oscillator(const Eigen::MatrixXd& a,
                                                        OscillatorState s0, long steps) {
    if (steps < 0) throw std::invalid_argument("step count must be non-negative");
    std::vector<OscillatorState> states;
    states.reserve(steps + 1);
    states.push_back(std::move(s0));
    for (long k = 0; k < steps; ++k) {
        states.push_back(verlet_step(a, states.back()));
        if (!states.back().u.allFinite()) break;
    }
    return states;
}

/// Oscillator image u_k = k (q_k - q*) of an optimizer trajectory, indices
/// k = 1..K. residual[i] holds |u_{k+1} - 2 u_k + u_{k-1} + h^2 A u_k| at
/// k = i + 1; it vanishes (to roundoff) iff the source trajectory follows the
/// friction-2 recursion. Callers check max_relative_residual rather than
/// trusting the mapping blindly.
struct OscillatorTrajectory {
    std::vector<Eigen::VectorXd> u;
    std::vector<Eigen::VectorXd> v;
    double h = 1.0;
    std::vector<double> residual;
    double max_relative_residual = 0.0;

    OscillatorState state(std::size_t i) const { return {u[i], v[i], h}; }
    std::size_t size() const { return u.size(); }
};

inline OscillatorTrajectory hb2_to_oscillator(const Trajectory& traj,
                                              const QuadraticObjective& obj) {
    const long last = traj.last_k();
    if (last < 1) throw std::invalid_argument("trajectory too short to map");

    OscillatorTrajectory osc;
    osc.h = traj.h;
    osc.u.reserve(last);
    osc.v.reserve(last);

    Eigen::VectorXd u_prev = Eigen::VectorXd::Zero(obj.dim());  // u_0 = 0 (q - q*)
    for (long k = 1; k <= last; ++k) {
        Eigen::VectorXd u_k = static_cast<double>(k) * (traj.iterates[k] - obj.minimizer());
        osc.v.push_back((u_k - u_prev) / traj.h);
        osc.u.push_back(u_k);
        u_prev = std::move(u_k);
    }

    // Three-term residual at k = 1..last-1; osc.u[i] holds u at k = i + 1.
    const double h2 = traj.h * traj.h;
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(obj.dim());
    for (std::size_t i = 0; i + 1 < osc.u.size(); ++i) {
        const Eigen::VectorXd& u_mid = osc.u[i];
        const Eigen::VectorXd& u_before = (i == 0) ? u0 : osc.u[i - 1];
        const double res =
            (osc.u[i + 1] - 2.0 * u_mid + u_before + h2 * (obj.hessian() * u_mid)).norm();
        osc.residual.push_back(res);
        osc.max_relative_residual =
            std::max(osc.max_relative_residual, res / (1.0 + u_mid.norm()));
    }
    return osc;
}

/// CSV columns: k, total_energy, modified_energy.
inline void write_energy_csv(std::ostream& os, const Eigen::MatrixXd& a,
                             const std::vector<OscillatorState>& states,
                             long first_index = 0, long stride = 1) {
    if (stride < 1) stride = 1;
    os << "k,total_energy,modified_energy\n";
    const long n = static_cast<long>(states.size());
    for (long i = 0; i < n; ++i) {
        if (i % stride != 0 && i != n - 1) continue;
        os << (first_index + i) << ',' << sci(total_energy(a, states[i])) << ','
           << sci(modified_energy(a, states[i])) << '\n';
    }
}

} // namespace momentum
