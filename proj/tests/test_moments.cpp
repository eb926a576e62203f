#include <doctest.h>

#include "rdme/fem.hpp"
#include "rdme/mesh.hpp"
#include "rdme/moments.hpp"

#include <cmath>

using namespace rdme;

TEST_CASE("mean relaxes to dual-area-weighted uniform concentration") {
    Mesh mesh = build_1d_mesh({0.0, 0.5, 1.0});
    DiffusionOperator op = build_operator(mesh, 0.01);
    Eigen::Vector3d x0(10.0, 0.0, 0.0);

    Eigen::VectorXd stat = stationary_mean(op, x0);
    CHECK(stat(0) == doctest::Approx(2.5));
    CHECK(stat(1) == doctest::Approx(5.0));
    CHECK(stat(2) == doctest::Approx(2.5));

    Eigen::MatrixXd mean = mean_evolve(op, x0, {0.0, 1.0, 200.0});
    CHECK((mean.col(0) - x0).cwiseAbs().maxCoeff() < 1e-12);
    for (int t = 0; t < 3; ++t)
        CHECK(mean.col(t).sum() == doctest::Approx(10.0).epsilon(1e-10));
    CHECK((mean.col(2) - stat).cwiseAbs().maxCoeff() < 1e-6);
    // monotone mixing: the initially loaded cell only loses molecules
    CHECK(mean(0, 1) < 10.0);
    CHECK(mean(0, 1) > 2.5);
}

TEST_CASE("driving term rows sum to zero and match the stationary identity") {
    Mesh mesh = build_1d_mesh({0.0, 0.2, 0.5, 1.0});
    DiffusionOperator op = build_operator(mesh, 0.03);
    Eigen::VectorXd x(4);
    x << 3.0, 1.0, 0.5, 7.0;

    Eigen::MatrixXd f = driving_term(op, x);
    CHECK((f - f.transpose()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((f * Eigen::VectorXd::Ones(4)).cwiseAbs().maxCoeff() < 1e-12);

    const double kappa = x.sum() / op.A.sum();
    Eigen::MatrixXd f_stat = driving_term(op, stationary_mean(op, x));
    Eigen::MatrixXd expected = -2.0 * op.gamma * kappa * Eigen::MatrixXd(op.S);
    CHECK((f_stat - expected).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("covariance solution reproduces the multinomial law") {
    // N independent molecules started in one cell: counts are multinomial,
    // so C(t) = N (diag(p) - p p^T) with p the single-molecule law. This is
    // the exact solution of the moment system and pins both integrators.
    Mesh mesh = build_1d_mesh({0.0, 0.4, 0.7, 1.0});
    DiffusionOperator op = build_operator(mesh, 0.05);
    const double n_mol = 50.0;
    Eigen::VectorXd e0 = Eigen::VectorXd::Zero(4);
    e0(0) = 1.0;

    std::vector<double> times{0.5, 2.0, 10.0};
    Eigen::MatrixXd p = mean_evolve(op, e0, times);
    CovarianceSolution sol =
        covariance_evolve(op, n_mol * e0, Eigen::MatrixXd::Zero(4, 4), times);

    for (std::size_t t = 0; t < times.size(); ++t) {
        Eigen::VectorXd pt = p.col(static_cast<Eigen::Index>(t));
        CHECK((sol.mean.col(static_cast<Eigen::Index>(t)) - n_mol * pt).cwiseAbs().maxCoeff() < 1e-6);
        Eigen::MatrixXd c_exact =
            n_mol * (Eigen::MatrixXd(pt.asDiagonal()) - pt * pt.transpose());
        CHECK((sol.covariance[t] - c_exact).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((sol.covariance[t] - sol.covariance[t].transpose()).cwiseAbs().maxCoeff() < 1e-12);
    }
}

TEST_CASE("spectrum has a zero mode and the slow rate of the unit square") {
    Mesh mesh = build_structured_unit_square(16);
    const double gamma = 1e-3;
    DiffusionOperator op = build_operator(mesh, gamma);
    Eigen::VectorXd ev = diffusion_spectrum(op);

    CHECK(ev.size() == op.size());
    CHECK(std::abs(ev(ev.size() - 1)) < 1e-12);           // conservation mode
    CHECK(ev(0) < ev(ev.size() - 1));                     // ascending order
    // slowest decaying mode of the reflecting unit square: -gamma pi^2
    CHECK(ev(ev.size() - 2) == doctest::Approx(-gamma * M_PI * M_PI).epsilon(0.03));
}

TEST_CASE("large meshes fall back to time stepping and stay conservative") {
    Mesh mesh = build_structured_unit_square(15);   // 256 cells > eigen cutoff
    DiffusionOperator op = build_operator(mesh, 1e-3);
    Eigen::VectorXd x0 = Eigen::VectorXd::Zero(op.size());
    x0(0) = 30.0;
    Eigen::MatrixXd mean = mean_evolve(op, x0, {5.0});
    CHECK(mean.col(0).sum() == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(mean.col(0).minCoeff() > -1e-9);
}
