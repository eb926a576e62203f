#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rdme/fem.hpp"

namespace rdme {

// First and second moments of the pure-diffusion master equation on count
// scale: mean obeys xbar' = Q xbar, covariance obeys
// C' = Q C + C Q^T + F(xbar) with the driving term F built from the jump
// rates. Solved exactly via the eigendecomposition of the symmetrized
// operator A^{-1/2} (gamma S) A^{-1/2} for the mean, and a joint RK4 sweep
// for the covariance.

// F(xbar): off-diagonals -(Q_jk xbar_k + Q_kj xbar_j); rows sum to zero.
// At the stationary mean kappa*A this collapses to -2*gamma*kappa*S.
Eigen::MatrixXd driving_term(const DiffusionOperator& op, const Eigen::VectorXd& xbar);

// Mean counts at the requested times (columns ordered like `times`).
Eigen::MatrixXd mean_evolve(const DiffusionOperator& op, const Eigen::VectorXd& xbar0,
                            const std::vector<double>& times);

struct CovarianceSolution {
    Eigen::MatrixXd mean;                    // K x T
    std::vector<Eigen::MatrixXd> covariance; // T symmetric K x K matrices
};

CovarianceSolution covariance_evolve(const DiffusionOperator& op,
                                     const Eigen::VectorXd& xbar0,
                                     const Eigen::MatrixXd& C0,
                                     const std::vector<double>& times);

// kappa * dual areas, with kappa = total molecules / total area.
Eigen::VectorXd stationary_mean(const DiffusionOperator& op, const Eigen::VectorXd& xbar0);

// Eigenvalues of the symmetrized diffusion operator, ascending (all <= 0;
// the largest is 0 on a connected mesh). Governs relaxation rates.
Eigen::VectorXd diffusion_spectrum(const DiffusionOperator& op);

}  // namespace rdme
