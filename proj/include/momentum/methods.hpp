#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "momentum/io.hpp"
#include "momentum/quadratic.hpp"

namespace momentum {

enum class MethodKind {
    GD,
    HB_CONST,              // heavy ball, constant momentum
    HB_NESTEROV_MOMENTUM,  // heavy ball, momentum (k-1)/(k+2)
    AGD,
    HB2,
    HBR,
    AGDR,
};

/// Increasing momentum schedule (k-1)/(k+2).
inline double nesterov_momentum(long k) {
    return static_cast<double>(k - 1) / static_cast<double>(k + 2);
}

/// Constant momentum ((sqrt(L) - sqrt(mu)) / (sqrt(L) + sqrt(mu)))^2 for
/// mu-strongly-convex problems.
inline double polyak_momentum(double smoothness, double mu) {
    const double ratio = (std::sqrt(smoothness) - std::sqrt(mu)) /
                         (std::sqrt(smoothness) + std::sqrt(mu));
    return ratio * ratio;
}

/// Momentum coefficient (k-1)/(k+r-1) of the friction-r family.
inline double friction_momentum(long k, double r) {
    return static_cast<double>(k - 1) / (static_cast<double>(k) + r - 1.0);
}

/// Gradient scale (k + (r-2)/2)/(k+r-1); rises from 1/2 toward 1 as k grows.
inline double friction_gradient_scale(long k, double r) {
    return (static_cast<double>(k) + 0.5 * (r - 2.0)) / (static_cast<double>(k) + r - 1.0);
}

struct MethodSpec {
    MethodKind kind = MethodKind::GD;
    double r = 3.0;     // friction parameter, HBR / AGDR only
    double beta = 0.0;  // constant momentum, HB_CONST only

    static MethodSpec gd() { return {MethodKind::GD}; }
    static MethodSpec hb() { return {MethodKind::HB_NESTEROV_MOMENTUM}; }
    static MethodSpec agd() { return {MethodKind::AGD}; }
    static MethodSpec hb2() { return {MethodKind::HB2}; }
    static MethodSpec hb_const(double beta) {
        MethodSpec m{MethodKind::HB_CONST};
        m.beta = beta;
        m.validate();
        return m;
    }
    static MethodSpec hbr(double r) {
        MethodSpec m{MethodKind::HBR};
        m.r = r;
        m.validate();
        return m;
    }
    static MethodSpec agdr(double r) {
        MethodSpec m{MethodKind::AGDR};
        m.r = r;
        m.validate();
        return m;
    }

    void validate() const {
        if ((kind == MethodKind::HBR || kind == MethodKind::AGDR) && !(r >= 2.0)) {
            throw std::invalid_argument("friction parameter must satisfy r >= 2, got " + sci(r));
        }
        if (kind == MethodKind::HB_CONST && !(beta >= 0.0 && beta < 1.0)) {
            throw std::invalid_argument("constant momentum must lie in [0,1), got " + sci(beta));
        }
    }

    std::string label() const {
        auto trim = [](double x) {
            std::string s = std::to_string(x);
            s.erase(s.find_last_not_of('0') + 1);
            if (!s.empty() && s.back() == '.') s.pop_back();
            return s;
        };
        switch (kind) {
            case MethodKind::GD: return "gd";
            case MethodKind::HB_CONST: return "hb_const";
            case MethodKind::HB_NESTEROV_MOMENTUM: return "hb";
            case MethodKind::AGD: return "agd";
            case MethodKind::HB2: return "hb2";
            case MethodKind::HBR: return "hbr_r" + trim(r);
            case MethodKind::AGDR: return "agdr_r" + trim(r);
        }
        return "unknown";
    }
};

/// One optimizer step of state: the pair (q_k, q_{k-1}), the iteration index
/// k >= 1, and the step-size root h (the effective step size is h^2).
struct OptimizerState {
    long k = 1;
    Eigen::VectorXd q_curr;
    Eigen::VectorXd q_prev;
    double h = 1.0;

    Eigen::VectorXd velocity() const { return (q_curr - q_prev) / h; }
};

inline OptimizerState hb_step(const QuadraticObjective& obj, const OptimizerState& s,
                              double momentum) {
    const double h2 = s.h * s.h;
    Eigen::VectorXd q_next =
        s.q_curr + momentum * (s.q_curr - s.q_prev) - h2 * obj.grad(s.q_curr);
    return {s.k + 1, std::move(q_next), s.q_curr, s.h};
}

inline OptimizerState gd_step(const QuadraticObjective& obj, const OptimizerState& s) {
    return hb_step(obj, s, 0.0);
}

inline OptimizerState hbr_step(const QuadraticObjective& obj, const OptimizerState& s,
                               double r) {
    const double h2 = s.h * s.h;
    Eigen::VectorXd q_next = s.q_curr +
                             friction_momentum(s.k, r) * (s.q_curr - s.q_prev) -
                             h2 * friction_gradient_scale(s.k, r) * obj.grad(s.q_curr);
    return {s.k + 1, std::move(q_next), s.q_curr, s.h};
}

inline OptimizerState hb2_step(const QuadraticObjective& obj, const OptimizerState& s) {
    return hbr_step(obj, s, 2.0);
}

inline OptimizerState agdr_step(const QuadraticObjective& obj, const OptimizerState& s,
                                double r) {
    const double h2 = s.h * s.h;
    const Eigen::VectorXd y = s.q_curr + friction_momentum(s.k, r) * (s.q_curr - s.q_prev);
    Eigen::VectorXd q_next = y - h2 * obj.grad(y);
    return {s.k + 1, std::move(q_next), s.q_curr, s.h};
}

inline OptimizerState agd_step(const QuadraticObjective& obj, const OptimizerState& s) {
    return agdr_step(obj, s, 3.0);
}

inline OptimizerState advance(const MethodSpec& method, const QuadraticObjective& obj,
                              const OptimizerState& s) {
    switch (method.kind) {
        case MethodKind::GD: return gd_step(obj, s);
        case MethodKind::HB_CONST: return hb_step(obj, s, method.beta);
        case MethodKind::HB_NESTEROV_MOMENTUM: return hb_step(obj, s, nesterov_momentum(s.k));
        case MethodKind::AGD: return agd_step(obj, s);
        case MethodKind::HB2: return hb2_step(obj, s);
        case MethodKind::HBR: return hbr_step(obj, s, method.r);
        case MethodKind::AGDR: return agdr_step(obj, s, method.r);
    }
    throw std::logic_error("unhandled method kind");
}

/// Iterates q_0, ..., q_K with the seeding q_1 = q_0 (zero initial velocity),
/// plus per-iterate suboptimality and gradient norm. A non-finite iterate
/// truncates the run and clears `stable`; divergence is recorded, not raised.
struct Trajectory {
    std::vector<Eigen::VectorXd> iterates;
    std::vector<double> f_gap;
    std::vector<double> grad_norm;
    double h = 1.0;
    bool stable = true;

    long last_k() const { return static_cast<long>(iterates.size()) - 1; }
};

inline Trajectory run(const MethodSpec& method, const QuadraticObjective& obj,
                      const Eigen::VectorXd& q0, double h, long iterations) {
    method.validate();
    if (iterations < 1) throw std::invalid_argument("iteration count must be >= 1");
    if (!(h > 0.0)) throw std::invalid_argument("step-size root must be positive");
    if (q0.size() != obj.dim()) {
        throw std::invalid_argument("start point has dimension " +
                                    std::to_string(q0.size()) + ", objective expects " +
                                    std::to_string(obj.dim()));
    }

    Trajectory traj;
    traj.h = h;
    traj.iterates.reserve(iterations + 1);
    traj.iterates.push_back(q0);
    traj.iterates.push_back(q0);

    OptimizerState state{1, q0, q0, h};
    for (long k = 1; k < iterations; ++k) {
        state = advance(method, obj, state);
        if (!state.q_curr.allFinite()) {
            traj.stable = false;
            break;
        }
        traj.iterates.push_back(state.q_curr);
    }

    traj.f_gap.reserve(traj.iterates.size());
    traj.grad_norm.reserve(traj.iterates.size());
    for (const auto& q : traj.iterates) {
        traj.f_gap.push_back(obj.gap(q));
        traj.grad_norm.push_back(obj.grad(q).norm());
    }
    return traj;
}

/// CSV columns: k, f_gap, grad_norm, stable.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 long stride = 1) {
    if (stride < 1) stride = 1;
    os << "k,f_gap,grad_norm,stable\n";
    const long n = static_cast<long>(traj.iterates.size());
    for (long k = 0; k < n; ++k) {
        if (k % stride != 0 && k != n - 1) continue;
        os << k << ',' << sci(traj.f_gap[k]) << ',' << sci(traj.grad_norm[k]) << ','
           << (traj.stable ? 1 : 0) << '\n';
    }
}

} // namespace momentum
