#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "momentum/io.hpp"
#include "momentum/methods.hpp"
#include "momentum/quadratic.hpp"

namespace momentum {

namespace detail {

inline void require_symmetric(const Eigen::MatrixXd& p, const char* what) {
    if (p.rows() != p.cols()) {
        throw std::invalid_argument(std::string(what) + " must be square");
    }
    const double scale = p.cwiseAbs().maxCoeff();
    const double asym = (p - p.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * std::max(1.0, scale)) {
        throw std::invalid_argument(std::string(what) + " is not symmetric, max |P - P^T| = " +
                                    sci(asym));
    }
}

inline void require_same_dim(const Eigen::MatrixXd& p, const Eigen::MatrixXd& f,
                             const Eigen::MatrixXd& q) {
    if (f.rows() != f.cols() || p.rows() != f.rows() || q.rows() != f.rows() ||
        q.cols() != f.cols()) {
        throw std::invalid_argument("Lyapunov equation operands must share one square dimension");
    }
}

} // namespace detail

/// Frobenius norm of P F + F^T P + Q; zero iff P solves the continuous
/// Lyapunov equation for the flow y' = F y.
inline double continuous_lyapunov_residual(const Eigen::MatrixXd& p,
                                           const Eigen::MatrixXd& f,
                                           const Eigen::MatrixXd& q) {
    detail::require_symmetric(p, "Lyapunov candidate P");
    detail::require_same_dim(p, f, q);
    return (p * f + f.transpose() * p + q).norm();
}

/// Frobenius norm of F^T P F - P + Q; zero iff P solves the discrete
/// Lyapunov equation for the map y+ = F y.
inline double discrete_lyapunov_residual(const Eigen::MatrixXd& p,
                                         const Eigen::MatrixXd& f,
                                         const Eigen::MatrixXd& q) {
    detail::require_symmetric(p, "Lyapunov candidate P");
    detail::require_same_dim(p, f, q);
    return (f.transpose() * p * f - p + q).norm();
}

/// Orthonormal basis (Frobenius inner product) of the symmetric solutions of
/// the homogeneous Lyapunov equation, i.e. the quadratic invariants of F.
/// Vectorizes symmetric matrices with sqrt(2)-scaled off-diagonals so the SVD
/// null space maps to a Frobenius-orthonormal basis. Desk-scale only.
inline std::vector<Eigen::MatrixXd> lyapunov_nullspace(const Eigen::MatrixXd& f,
                                                       bool discrete,
                                                       double sv_tol = 1e-10) {
    if (f.rows() != f.cols()) throw std::invalid_argument("F must be square");
    const int n = static_cast<int>(f.rows());
    if (n > 64) {
        throw std::invalid_argument("nullspace solver capped at dimension 64, got " +
                                    std::to_string(n));
    }

    std::vector<std::pair<int, int>> pairs;
    pairs.reserve(n * (n + 1) / 2);
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) pairs.emplace_back(i, j);
    const int m = static_cast<int>(pairs.size());
    const double inv_sqrt2 = 1.0 / std::sqrt(2.0);

    auto unpack = [&](const Eigen::VectorXd& x) {
        Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
        for (int c = 0; c < m; ++c) {
            const auto [i, j] = pairs[c];
            if (i == j) {
                s(i, i) = x[c];
            } else {
                s(i, j) = x[c] * inv_sqrt2;
                s(j, i) = x[c] * inv_sqrt2;
            }
        }
        return s;
    };
    auto pack = [&](const Eigen::MatrixXd& s) {
        Eigen::VectorXd x(m);
        for (int c = 0; c < m; ++c) {
            const auto [i, j] = pairs[c];
            x[c] = (i == j) ? s(i, i) : s(i, j) * std::sqrt(2.0);
        }
        return x;
    };

    Eigen::MatrixXd op(m, m);
    for (int c = 0; c < m; ++c) {
        Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
        e[c] = 1.0;
        const Eigen::MatrixXd s = unpack(e);
        const Eigen::MatrixXd image =
            discrete ? Eigen::MatrixXd(f.transpose() * s * f - s)
                     : Eigen::MatrixXd(s * f + f.transpose() * s);
        op.col(c) = pack(image);
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(op, Eigen::ComputeFullV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double sv_max = sv.size() > 0 ? sv[0] : 0.0;
    std::vector<Eigen::MatrixXd> basis;
    for (int c = 0; c < m; ++c) {
        if (sv[c] <= sv_tol * sv_max) basis.push_back(unpack(svd.matrixV().col(c)));
    }
    return basis;
}

/// Quadratic invariant of the discrete oscillator map: the block matrix
/// [[A, -hA/2], [-hA/2, I]] whose form is the modified energy.
inline Eigen::MatrixXd stormer_p(const Eigen::MatrixXd& a, double h) {
    detail::require_symmetric(a, "oscillator matrix A");
    const auto n = a.rows();
    Eigen::MatrixXd p(2 * n, 2 * n);
    p.topLeftCorner(n, n) = a;
    p.topRightCorner(n, n) = -(h / 2.0) * a;
    p.bottomLeftCorner(n, n) = -(h / 2.0) * a;
    p.bottomRightCorner(n, n) = Eigen::MatrixXd::Identity(n, n);
    return p;
}

/// Schur complement A - (h^2/4) A^2 of the identity block in stormer_p;
/// PSD exactly when h^2 <= 4 / lambda_max(A).
inline Eigen::MatrixXd b_matrix(const Eigen::MatrixXd& a, double h) {
    detail::require_symmetric(a, "oscillator matrix A");
    return a - (h * h / 4.0) * (a * a);
}

/// Slack-c variant h^2 A ((1-c) I - (h^2/4) A); PSD exactly when
/// h^2 <= 4 (1-c) / lambda_max(A).
inline Eigen::MatrixXd tilde_b_matrix(const Eigen::MatrixXd& a, double h, double c) {
    detail::require_symmetric(a, "oscillator matrix A");
    if (!(c > 0.0 && c < 1.0)) {
        throw std::invalid_argument("slack parameter c must lie in (0,1), got " + sci(c));
    }
    const double h2 = h * h;
    const auto n = a.rows();
    return h2 * (a * ((1.0 - c) * Eigen::MatrixXd::Identity(n, n) - (h2 / 4.0) * a));
}

inline bool is_psd(const Eigen::MatrixXd& m, double rel_tol = 1e-10) {
    detail::require_symmetric(m, "matrix");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    return lo >= -rel_tol * std::max(1.0, scale);
}

// ---------------------------------------------------------------------------
// Discrete Lyapunov function of the friction-r heavy-ball family.
//
// With the weight vector w_k = (k-1)(q_k - q_{k-1}) + (r-1)(q_k - q*):
//   v11 = 2 (k+r-2)^2 h^2 (f(q_k) - f*)
//   v12 = -h^2 (k+r-2) <grad f(q_k), w_k>       (the cross-term)
//   v2  = |w_k|^2
// and V = v11 + v12 + v2. V is conserved at r = 2 and non-increasing for
// r > 2 whenever h^2 <= 4 / lambda_max(A).
// ---------------------------------------------------------------------------

struct LyapunovRecord {
    long k = 0;
    double v11 = 0.0;
    double v12 = 0.0;
    double v2 = 0.0;
    double v = 0.0;
};

struct LyapunovTrace {
    std::vector<LyapunovRecord> records;
    double r = 2.0;
    double h = 1.0;

    /// V at the first monitored iterate (k = 1); the certificate's V0.
    double initial() const { return records.front().v; }
};

inline LyapunovRecord lyapunov_record(const QuadraticObjective& obj,
                                      const Eigen::VectorXd& q,
                                      const Eigen::VectorXd& q_prev, long k, double r,
                                      double h) {
    const double h2 = h * h;
    const double weight = static_cast<double>(k) + r - 2.0;
    const Eigen::VectorXd g = obj.grad(q);
    const Eigen::VectorXd w = static_cast<double>(k - 1) * (q - q_prev) +
                              (r - 1.0) * (q - obj.minimizer());
    LyapunovRecord rec;
    rec.k = k;
    rec.v11 = 2.0 * weight * weight * h2 * obj.gap(q);
    rec.v12 = -h2 * weight * g.dot(w);
    rec.v2 = w.squaredNorm();
    rec.v = rec.v11 + rec.v12 + rec.v2;
    return rec;
}

/// Monitor V along any trajectory (the monitor is method-agnostic; the
/// conservation/monotonicity guarantees hold along friction-r runs).
inline LyapunovTrace hbr_lyapunov_trace(const Trajectory& traj,
                                        const QuadraticObjective& obj, double r) {
    const long last = traj.last_k();
    if (last < 1) throw std::invalid_argument("trajectory too short to monitor");
    LyapunovTrace trace;
    trace.r = r;
    trace.h = traj.h;
    trace.records.reserve(last);
    for (long k = 1; k <= last; ++k) {
        trace.records.push_back(
            lyapunov_record(obj, traj.iterates[k], traj.iterates[k - 1], k, r, traj.h));
    }
    return trace;
}

// Coefficients of <grad f(q_k), q_k - q_{k-1}> in the two difference formulas
// below. They are exact negatives of one another; the gradient-momentum inner
// product changes sign along the trajectory and must drop out of the total.
inline double v1_difference_momentum_coefficient(long k, double r, double h) {
    return (h * h) * static_cast<double>(k - 1) * (2.0 * static_cast<double>(k) + r - 2.0);
}
inline double v2_difference_momentum_coefficient(long k, double r, double h) {
    return -v1_difference_momentum_coefficient(k, r, h);
}

namespace detail {

struct StepView {
    const Eigen::VectorXd& q;
    const Eigen::VectorXd& q_prev;
};

inline StepView step_view(const Trajectory& traj, long k) {
    if (k < 1 || k > traj.last_k()) {
        throw std::invalid_argument("iteration index " + std::to_string(k) +
                                    " outside trajectory range [1, " +
                                    std::to_string(traj.last_k()) + "]");
    }
    return {traj.iterates[k], traj.iterates[k - 1]};
}

} // namespace detail

/// Closed form of V2_{k+1} - V2_k along a friction-r run (any differentiable
/// objective; depends only on the state at k).
inline double v2_difference_closed_form(const Trajectory& traj,
                                        const QuadraticObjective& obj, double r, long k) {
    const auto [q, q_prev] = detail::step_view(traj, k);
    const double h = traj.h;
    const double h2 = h * h;
    const double s = 2.0 * static_cast<double>(k) + r - 2.0;
    const Eigen::VectorXd g = obj.grad(q);
    return -h2 * (r - 1.0) * s * g.dot(q - obj.minimizer()) +
           v2_difference_momentum_coefficient(k, r, h) * g.dot(q - q_prev) +
           (h2 * h2 / 4.0) * s * s * g.squaredNorm();
}

/// Simplified cross-term-absorbed form of V1 = v11 + v12 on quadratics:
/// h^2 (k+r-2)(k-1) <q_{k-1} - q*, A (q_k - q*)>.
inline double v1_simplified(const Trajectory& traj, const QuadraticObjective& obj,
                            double r, long k) {
    const auto [q, q_prev] = detail::step_view(traj, k);
    const double h2 = traj.h * traj.h;
    return h2 * (static_cast<double>(k) + r - 2.0) * static_cast<double>(k - 1) *
           (q_prev - obj.minimizer()).dot(obj.grad(q));
}

/// Closed form of V1_{k+1} - V1_k along a friction-r run on a quadratic.
inline double v1_difference_closed_form(const Trajectory& traj,
                                        const QuadraticObjective& obj, double r, long k) {
    const auto [q, q_prev] = detail::step_view(traj, k);
    const double h = traj.h;
    const double h2 = h * h;
    const double s = 2.0 * static_cast<double>(k) + r - 2.0;
    const Eigen::VectorXd g = obj.grad(q);
    return h2 * s * g.dot(q - obj.minimizer()) +
           v1_difference_momentum_coefficient(k, r, h) * g.dot(q - q_prev) -
           (h2 * h2 / 2.0) * s * static_cast<double>(k) * g.squaredNorm();
}

/// Closed form of the total difference V_{k+1} - V_k along a friction-r run:
/// -h^2 (r-2)(2k+r-2) <q_k - q*, B (q_k - q*)> with B = A - (h^2/4) A^2.
/// Identically zero at r = 2 and non-positive for r > 2 when B is PSD.
inline double v_difference_closed_form(const Trajectory& traj,
                                       const QuadraticObjective& obj, double r, long k) {
    const auto [q, q_prev] = detail::step_view(traj, k);
    (void)q_prev;
    const double h2 = traj.h * traj.h;
    const double s = 2.0 * static_cast<double>(k) + r - 2.0;
    const Eigen::VectorXd g = obj.grad(q);
    const double quad_b = g.dot(q - obj.minimizer()) - (h2 / 4.0) * g.squaredNorm();
    return -h2 * (r - 2.0) * s * quad_b;
}

// ---------------------------------------------------------------------------
// Rate certificate: with V non-increasing and the split-off coefficient
// c in (0,1), positivity of the remainder under h^2 <= 4(1-c)/lambda_max
// yields f(q_k) - f* <= V0 / (2 c h^2 (k+r-2)^2).
// ---------------------------------------------------------------------------

struct RateCertificate {
    double r = 3.0;
    double c = 0.5;
    double h2 = 0.0;
    double lambda_max = 0.0;
    double v0 = 0.0;

    double bound(long k) const {
        const double weight = static_cast<double>(k) + r - 2.0;
        return v0 / (2.0 * c * h2 * weight * weight);
    }
};

/// Thrown when the step-size precondition of the certificate fails. A refusal
/// is not a failed check; the certificate simply does not apply.
class certificate_refusal : public std::runtime_error {
public:
    certificate_refusal(double h2, double h2_bound)
        : std::runtime_error("certificate refused: h^2 = " + sci(h2) +
                             " exceeds 4(1-c)/lambda_max = " + sci(h2_bound)),
          h2_limit(h2_bound) {}
    double h2_limit;
};

struct CertificateCheckResult {
    RateCertificate certificate;
    bool passed = true;
    long first_violation_k = -1;
    double min_margin = 0.0;  // min over k of bound + slack - gap
    long min_margin_k = -1;
};

inline CertificateCheckResult rate_certificate_check(const Trajectory& traj,
                                                     const QuadraticObjective& obj,
                                                     double r, double c) {
    if (!(c > 0.0 && c < 1.0)) {
        throw std::invalid_argument("slack parameter c must lie in (0,1), got " + sci(c));
    }
    if (!(r >= 2.0)) {
        throw std::invalid_argument("certificate requires r >= 2, got " + sci(r));
    }
    const double h2 = traj.h * traj.h;
    const double lam = obj.lambda_max();
    const double h2_limit = 4.0 * (1.0 - c) / lam;
    if (h2 > h2_limit * (1.0 + 1e-12)) {
        throw certificate_refusal(h2, h2_limit);
    }

    CertificateCheckResult result;
    result.certificate = {r, c, h2, lam,
                          lyapunov_record(obj, traj.iterates[1], traj.iterates[0], 1, r,
                                          traj.h)
                              .v};

    bool first = true;
    for (long k = 1; k <= traj.last_k(); ++k) {
        const double b = result.certificate.bound(k);
        const double slack = 1e-12 * (1.0 + b);
        const double margin = b + slack - traj.f_gap[k];
        if (first || margin < result.min_margin) {
            result.min_margin = margin;
            result.min_margin_k = k;
            first = false;
        }
        if (margin < 0.0 && result.first_violation_k < 0) {
            result.passed = false;
            result.first_violation_k = k;
        }
    }
    return result;
}

/// Least-squares slope of log(f_gap) against log(k) over [k_lo, k_hi].
/// Non-positive gaps are skipped; the fit reports the window actually used.
struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    long k_lo = 0;
    long k_hi = 0;
    int points = 0;
};

inline SlopeFit rate_slope(const Trajectory& traj, long k_lo, long k_hi) {
    if (k_lo < 1 || k_hi < k_lo) throw std::invalid_argument("bad slope window");
    k_hi = std::min(k_hi, traj.last_k());

    SlopeFit fit;
    fit.k_lo = 0;
    fit.k_hi = 0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (long k = k_lo; k <= k_hi; ++k) {
        const double gap = traj.f_gap[k];
        if (!(gap > 0.0)) continue;  // shrink the window past zero gaps
        const double x = std::log(static_cast<double>(k));
        const double y = std::log(gap);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        if (fit.points == 0) fit.k_lo = k;
        fit.k_hi = k;
        ++fit.points;
    }
    if (fit.points < 2) {
        throw std::runtime_error("slope window [" + std::to_string(k_lo) + ", " +
                                 std::to_string(k_hi) +
                                 "] has fewer than two positive-gap samples");
    }
    const double n = fit.points;
    const double denom = n * sxx - sx * sx;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    return fit;
}

/// CSV columns: k, V11, V12, V2, V, dV (forward difference; nan on last row).
inline void write_lyapunov_csv(std::ostream& os, const LyapunovTrace& trace,
                               long stride = 1) {
    if (stride < 1) stride = 1;
    os << "k,V11,V12,V2,V,dV\n";
    const long n = static_cast<long>(trace.records.size());
    for (long i = 0; i < n; ++i) {
        if (i % stride != 0 && i != n - 1) continue;
        const auto& rec = trace.records[i];
        const double dv = (i + 1 < n)
                              ? trace.records[i + 1].v - rec.v
                              : std::numeric_limits<double>::quiet_NaN();
        os << rec.k << ',' << sci(rec.v11) << ',' << sci(rec.v12) << ',' << sci(rec.v2)
           << ',' << sci(rec.v) << ',' << sci(dv) << '\n';
    }
}

} // namespace momentum
