#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

#include "momentum/io.hpp"

namespace momentum {

namespace detail {

// Power iteration for the dominant eigenvalue of a symmetric matrix.
// Deterministic start vector; throws with the attained residual if the
// iteration does not settle within the cap.
inline double power_iteration_lambda_max(const Eigen::MatrixXd& a,
                                         int max_iterations = 10000,
                                         double rel_tol = 1e-10) {
    const auto n = a.rows();
    std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
    v.normalize();

    double lambda = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd av = a * v;
        const double norm = av.norm();
        if (norm == 0.0) return 0.0;  // v in the null space and A v = 0 everywhere we can see
        Eigen::VectorXd v_next = av / norm;
        const double lambda_next = v_next.dot(a * v_next);
        if (it > 0 && std::abs(lambda_next - lambda) <= rel_tol * std::abs(lambda_next)) {
            return lambda_next;
        }
        lambda = lambda_next;
        v = std::move(v_next);
    }
    const double residual = (a * v - lambda * v).norm();
    throw std::runtime_error(
        "power iteration did not converge after " + std::to_string(max_iterations) +
        " iterations; residual " + sci(residual));
}

} // namespace detail

/// Largest eigenvalue of a symmetric matrix (relative accuracy ~1e-8 or
/// better): dense solve at desk scale, power iteration beyond it.
inline double largest_eigenvalue(const Eigen::MatrixXd& a) {
    if (a.rows() <= 512) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
        return es.eigenvalues().maxCoeff();
    }
    return detail::power_iteration_lambda_max(a);
}

/// Convex quadratic f(q) = f* + 1/2 <q - q*, A (q - q*)> with A symmetric PSD.
/// The minimizer and optimal value are oracle fields fixed at construction;
/// instances are immutable and safe to share across threads.
class QuadraticObjective {
public:
    QuadraticObjective(Eigen::MatrixXd hessian, Eigen::VectorXd minimizer,
                       double optimal_value)
        : a_(std::move(hessian)), q_star_(std::move(minimizer)), f_star_(optimal_value) {
        if (a_.rows() != a_.cols()) {
            throw std::invalid_argument("hessian must be square, got " +
                                        std::to_string(a_.rows()) + "x" +
                                        std::to_string(a_.cols()));
        }
        if (q_star_.size() != a_.rows()) {
            throw std::invalid_argument("minimizer has dimension " +
                                        std::to_string(q_star_.size()) +
                                        ", hessian is " + std::to_string(a_.rows()) +
                                        "x" + std::to_string(a_.cols()));
        }
        const double scale = a_.cwiseAbs().maxCoeff();
        const double asym = (a_ - a_.transpose()).cwiseAbs().maxCoeff();
        if (asym > 1e-12 * std::max(1.0, scale)) {
            throw std::invalid_argument("hessian is not symmetric, max |A - A^T| = " +
                                        sci(asym));
        }
        if (a_.rows() <= 512) {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a_, Eigen::EigenvaluesOnly);
            lambda_max_ = es.eigenvalues().maxCoeff();
            const double lo = es.eigenvalues().minCoeff();
            if (lo < -1e-10 * std::max(lambda_max_, 0.0)) {
                throw std::invalid_argument("hessian is not positive semidefinite, "
                                            "min eigenvalue " + sci(lo));
            }
        } else {
            lambda_max_ = detail::power_iteration_lambda_max(a_);
            // Sylvester signature check: A + shift I must factor with a
            // non-negative diagonal.
            const double shift = 1e-10 * std::max(lambda_max_, 1.0);
            const Eigen::MatrixXd shifted =
                a_ + shift * Eigen::MatrixXd::Identity(a_.rows(), a_.cols());
            Eigen::LDLT<Eigen::MatrixXd> ldlt(shifted);
            if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < 0.0) {
                throw std::invalid_argument("hessian is not positive semidefinite "
                                            "(indefinite LDLT signature)");
            }
        }
    }

    int dim() const { return static_cast<int>(a_.rows()); }
    const Eigen::MatrixXd& hessian() const { return a_; }
    const Eigen::VectorXd& minimizer() const { return q_star_; }
    double optimal_value() const { return f_star_; }
    double lambda_max() const { return lambda_max_; }

    /// Suboptimality f(q) - f*, computed directly as the quadratic form so it
    /// stays accurate when |f*| dwarfs the gap.
    double gap(const Eigen::VectorXd& q) const {
        check_dim(q);
        const Eigen::VectorXd e = q - q_star_;
        return 0.5 * e.dot(a_ * e);
    }

    double eval(const Eigen::VectorXd& q) const { return f_star_ + gap(q); }

    Eigen::VectorXd grad(const Eigen::VectorXd& q) const {
        check_dim(q);
        return a_ * (q - q_star_);
    }

private:
    void check_dim(const Eigen::VectorXd& q) const {
        if (q.size() != a_.rows()) {
            throw std::invalid_argument("point has dimension " +
                                        std::to_string(q.size()) +
                                        ", objective expects " +
                                        std::to_string(a_.rows()));
        }
    }

    Eigen::MatrixXd a_;
    Eigen::VectorXd q_star_;
    double f_star_;
    double lambda_max_ = 0.0;
};

/// The classical hard instance for smooth convex first-order methods:
/// A = (L/4) tridiag(-1, 2, -1) with the minimizer solving A q* = (L/4) e1.
/// q* has the closed form q*_i = (d - i) / (d + 1) (0-based).
inline QuadraticObjective nesterov_worst_case(int d, double smoothness) {
    if (d < 2) throw std::invalid_argument("worst-case instance needs d >= 2, got " +
                                           std::to_string(d));
    if (!(smoothness > 0.0)) throw std::invalid_argument("smoothness bound must be positive");

    const double s = smoothness / 4.0;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < d; ++i) {
        a(i, i) = 2.0 * s;
        if (i + 1 < d) {
            a(i, i + 1) = -s;
            a(i + 1, i) = -s;
        }
    }
    Eigen::VectorXd q_star(d);
    for (int i = 0; i < d; ++i) q_star[i] = static_cast<double>(d - i) / (d + 1);
    // f* makes the instance identical to (L/4)(1/2 <q, T q> - q_1), whose
    // minimum is -(L/8) d/(d+1).
    const double f_star = -(smoothness / 8.0) * static_cast<double>(d) / (d + 1);
    return QuadraticObjective(std::move(a), std::move(q_star), f_star);
}

/// Ill-conditioned regression Hessian: A = Q D Q^T with a geometric spectrum
/// from 1 down to 1/kappa and Q a seeded Haar-random rotation. q* is a seeded
/// Gaussian vector and f* = 0. Deterministic per (d, kappa, seed).
inline QuadraticObjective ill_conditioned_regression(int d, double kappa,
                                                     std::uint64_t seed) {
    if (d < 2) throw std::invalid_argument("regression instance needs d >= 2, got " +
                                           std::to_string(d));
    if (!(kappa >= 1.0)) throw std::invalid_argument("condition number must be >= 1, got " +
                                                     sci(kappa));

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = gauss(rng);

    Eigen::VectorXd q_star(d);
    for (int i = 0; i < d; ++i) q_star[i] = gauss(rng);

    if (kappa == 1.0) {
        return QuadraticObjective(Eigen::MatrixXd::Identity(d, d), std::move(q_star), 0.0);
    }

    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < d; ++j) {
        if (r(j, j) < 0.0) q.col(j) = -q.col(j);
    }

    Eigen::VectorXd spectrum(d);
    for (int i = 0; i < d; ++i) {
        spectrum[i] = std::pow(kappa, -static_cast<double>(i) / (d - 1));
    }
    Eigen::MatrixXd a = q * spectrum.asDiagonal() * q.transpose();
    a = 0.5 * (a + a.transpose()).eval();
    return QuadraticObjective(std::move(a), std::move(q_star), 0.0);
}

/// Plain-text format: dimension line, Hessian rows, minimizer, optimal value.
inline void save_objective(std::ostream& os, const QuadraticObjective& obj) {
    const int d = obj.dim();
    os << d << '\n';
    char buf[40];
    auto put = [&](double x, char sep) {
        std::snprintf(buf, sizeof(buf), "%.17g", x);
        os << buf << sep;
    };
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) put(obj.hessian()(i, j), j + 1 == d ? '\n' : ' ');
    for (int i = 0; i < d; ++i) put(obj.minimizer()[i], i + 1 == d ? '\n' : ' ');
    put(obj.optimal_value(), '\n');
}

inline QuadraticObjective load_objective(std::istream& is) {
    int d = 0;
    if (!(is >> d) || d < 1) {
        throw std::runtime_error("objective file: bad or missing dimension header");
    }
    Eigen::MatrixXd a(d, d);
    Eigen::VectorXd q_star(d);
    double f_star = 0.0;
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (!(is >> a(i, j))) throw std::runtime_error("objective file: truncated hessian");
    for (int i = 0; i < d; ++i)
        if (!(is >> q_star[i])) throw std::runtime_error("objective file: truncated minimizer");
    if (!(is >> f_star)) throw std::runtime_error("objective file: missing optimal value");
    return QuadraticObjective(std::move(a), std::move(q_star), f_star);
}

} // namespace momentum
