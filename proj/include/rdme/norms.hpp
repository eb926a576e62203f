#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace rdme {

// Dual-cell weighted l2 norm: ||u||^2 = sum_j u_j^2 |C_j|.
inline double weighted_l2(const Eigen::VectorXd& u, const Eigen::VectorXd& areas) {
    return std::sqrt((u.array().square() * areas.array()).sum());
}

inline double weighted_linf(const Eigen::VectorXd& u) {
    return u.size() ? u.cwiseAbs().maxCoeff() : 0.0;
}

inline double weighted_l2_error(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                                const Eigen::VectorXd& areas) {
    return weighted_l2(u - v, areas);
}

}  // namespace rdme
