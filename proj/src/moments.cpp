#include "rdme/moments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rdme {
namespace {

Eigen::MatrixXd symmetrized(const DiffusionOperator& op) {
    const Eigen::VectorXd inv_sqrt = op.A.cwiseSqrt().cwiseInverse();
    Eigen::MatrixXd G = op.gamma * Eigen::MatrixXd(op.S);
    G = inv_sqrt.asDiagonal() * G * inv_sqrt.asDiagonal();
    return 0.5 * (G + G.transpose());   // kill assembly round-off asymmetry
}

double spectral_bound(const DiffusionOperator& op) {
    // Gershgorin estimate of |lambda|_max for the step-size choice
    double bound = 0.0;
    const Eigen::MatrixXd G = symmetrized(op);
    for (int j = 0; j < G.rows(); ++j) bound = std::max(bound, G.row(j).cwiseAbs().sum());
    return std::max(bound, 1e-300);
}

void check_times(const std::vector<double>& times) {
    if (times.empty()) throw std::runtime_error("moments: no output times");
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (times[i] < 0.0) throw std::runtime_error("moments: negative output time");
        if (i > 0 && times[i] < times[i - 1])
            throw std::runtime_error("moments: output times must be ascending");
    }
}

}  // namespace

Eigen::MatrixXd driving_term(const DiffusionOperator& op, const Eigen::VectorXd& xbar) {
    const int K = op.size();
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(K, K);
    for (int col = 0; col < op.Q.outerSize(); ++col)
        for (SparseMat::InnerIterator it(op.Q, col); it; ++it) {
            const int j = static_cast<int>(it.row()), k = col;
            if (j == k) continue;
            const double contrib = it.value() * xbar(k);   // Q_jk xbar_k
            F(j, k) -= contrib;
            F(k, j) -= contrib;
            F(j, j) += contrib;
            F(k, k) += contrib;
        }
    return F;
}

Eigen::MatrixXd mean_evolve(const DiffusionOperator& op, const Eigen::VectorXd& xbar0,
                            const std::vector<double>& times) {
    check_times(times);
    const int K = op.size();
    const int T = static_cast<int>(times.size());
    Eigen::MatrixXd out(K, T);

    if (K <= 200) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(op));
        const Eigen::VectorXd w = es.eigenvectors().transpose() *
                                  (op.A.cwiseSqrt().cwiseInverse().asDiagonal() * xbar0);
        for (int t = 0; t < T; ++t) {
            const Eigen::VectorXd decayed =
                (es.eigenvalues().array() * times[static_cast<std::size_t>(t)]).exp() * w.array();
            out.col(t) = op.A.cwiseSqrt().asDiagonal() * (es.eigenvectors() * decayed);
        }
        return out;
    }

    // large systems: classical RK4 on xbar' = Q xbar
    const double dt_max = 0.02 / spectral_bound(op);
    Eigen::VectorXd x = xbar0;
    double t = 0.0;
    for (int i = 0; i < T; ++i) {
        const double target = times[static_cast<std::size_t>(i)];
        while (t < target) {
            const double dt = std::min(dt_max, target - t);
            const Eigen::VectorXd k1 = op.Q * x;
            const Eigen::VectorXd k2 = op.Q * (x + 0.5 * dt * k1);
            const Eigen::VectorXd k3 = op.Q * (x + 0.5 * dt * k2);
            const Eigen::VectorXd k4 = op.Q * (x + dt * k3);
            x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            t += dt;
        }
        out.col(i) = x;
    }
    return out;
}

CovarianceSolution covariance_evolve(const DiffusionOperator& op, const Eigen::VectorXd& xbar0,
                                     const Eigen::MatrixXd& C0,
                                     const std::vector<double>& times) {
    check_times(times);
    const int K = op.size();
    if (C0.rows() != K || C0.cols() != K)
        throw std::runtime_error("moments: initial covariance shape mismatch");
    CovarianceSolution sol;
    sol.mean.resize(K, static_cast<int>(times.size()));
    sol.covariance.reserve(times.size());

    const double dt_max = 0.02 / spectral_bound(op);
    Eigen::VectorXd x = xbar0;
    Eigen::MatrixXd C = 0.5 * (C0 + C0.transpose());
    double t = 0.0;

    auto rhs = [&](const Eigen::VectorXd& xv, const Eigen::MatrixXd& Cv, Eigen::VectorXd& dx,
                   Eigen::MatrixXd& dC) {
        dx = op.Q * xv;
        const Eigen::MatrixXd QC = op.Q * Cv;
        dC = QC + QC.transpose() + driving_term(op, xv);
    };

    Eigen::VectorXd k1x, k2x, k3x, k4x;
    Eigen::MatrixXd k1c, k2c, k3c, k4c;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double target = times[i];
        while (t < target) {
            const double dt = std::min(dt_max, target - t);
            rhs(x, C, k1x, k1c);
            rhs(x + 0.5 * dt * k1x, C + 0.5 * dt * k1c, k2x, k2c);
            rhs(x + 0.5 * dt * k2x, C + 0.5 * dt * k2c, k3x, k3c);
            rhs(x + dt * k3x, C + dt * k3c, k4x, k4c);
            x += dt / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            C += dt / 6.0 * (k1c + 2.0 * k2c + 2.0 * k3c + k4c);
            C = 0.5 * (C + C.transpose());
            t += dt;
        }
        sol.mean.col(static_cast<int>(i)) = x;
        sol.covariance.push_back(C);
    }
    return sol;
}

Eigen::VectorXd stationary_mean(const DiffusionOperator& op, const Eigen::VectorXd& xbar0) {
    const double kappa = xbar0.sum() / op.A.sum();
    return kappa * op.A;
}

Eigen::VectorXd diffusion_spectrum(const DiffusionOperator& op) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrized(op));
    return es.eigenvalues();
}

}  // namespace rdme
