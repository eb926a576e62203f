#include <doctest.h>

#include "rdme/fem.hpp"
#include "rdme/hybrid.hpp"
#include "rdme/mesh.hpp"
#include "rdme/model.hpp"
#include "rdme/moments.hpp"
#include "rdme/rng.hpp"
#include "rdme/ssa.hpp"

#include <cmath>

using namespace rdme;

namespace {

Eigen::VectorXd bump_state(const DiffusionOperator& op) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(op.size());
    x(0) = 120.0;
    x(op.size() / 2) = 60.0;
    return x;
}

double scheme_error(const DiffusionOperator& op, const Eigen::VectorXd& x0,
                    double t_end, double dt, MacroScheme scheme,
                    const Eigen::VectorXd& exact) {
    Eigen::VectorXd x = integrate_macro(op, x0, t_end, dt, scheme);
    return (x - exact).cwiseAbs().maxCoeff();
}

} // namespace

TEST_CASE("macro steps conserve total molecules to rounding") {
    Mesh mesh = perturb_interior_vertices(build_structured_unit_square(6), 0.2, 3);
    DiffusionOperator op = build_operator(mesh, 1e-3);
    Eigen::VectorXd x0 = bump_state(op);
    for (MacroScheme scheme : {MacroScheme::Trapezoidal, MacroScheme::BackwardEuler}) {
        Eigen::VectorXd x = integrate_macro(op, x0, 7.3, 0.4, scheme);
        CHECK(std::abs(x.sum() - x0.sum()) < 1e-10 * x0.sum());
    }
}

TEST_CASE("convergence orders: trapezoidal is second order, backward euler first") {
    Mesh mesh = build_1d_mesh({0.0, 0.15, 0.35, 0.6, 0.8, 1.0});
    DiffusionOperator op = build_operator(mesh, 0.02);
    Eigen::VectorXd x0(6);
    x0 << 9, 1, 0, 4, 0, 2;
    const double t_end = 4.0;
    Eigen::VectorXd exact = mean_evolve(op, x0, {t_end}).col(0);

    const double e_trap_1 = scheme_error(op, x0, t_end, 0.5, MacroScheme::Trapezoidal, exact);
    const double e_trap_2 = scheme_error(op, x0, t_end, 0.25, MacroScheme::Trapezoidal, exact);
    CHECK(e_trap_1 / e_trap_2 == doctest::Approx(4.0).epsilon(0.15));

    const double e_be_1 = scheme_error(op, x0, t_end, 0.5, MacroScheme::BackwardEuler, exact);
    const double e_be_2 = scheme_error(op, x0, t_end, 0.25, MacroScheme::BackwardEuler, exact);
    CHECK(e_be_1 / e_be_2 == doctest::Approx(2.0).epsilon(0.2));
    CHECK(e_be_1 > e_trap_1);
}

TEST_CASE("implicit solves respect dirichlet reservoirs") {
    Mesh mesh = build_1d_mesh({0.0, 0.25, 0.5, 0.75, 1.0});
    DiffusionOperator op = build_operator(mesh, 0.1, BoundaryCondition::Dirichlet);
    Eigen::VectorXd x0(5);
    x0 << 8.0, 0.0, 0.0, 0.0, 2.0;
    Eigen::VectorXd x = integrate_macro(op, x0, 50.0, 0.5, MacroScheme::Trapezoidal);
    CHECK(x(0) == 8.0);   // reservoir values are pinned bitwise
    CHECK(x(4) == 2.0);
    // interior relaxes to the linear steady profile between the reservoir
    // concentrations 8/0.125 = 64 and 2/0.125 = 16
    Eigen::VectorXd conc = x.cwiseQuotient(op.A);
    CHECK(conc(1) == doctest::Approx(52.0).epsilon(1e-6));
    CHECK(conc(2) == doctest::Approx(40.0).epsilon(1e-6));
    CHECK(conc(3) == doctest::Approx(28.0).epsilon(1e-6));
}

TEST_CASE("trapezoidal step keeps states nonnegative at the altitude bound") {
    // the preserved-positivity argument needs the angle condition (jump
    // rates nonnegative), so use conforming meshes; an irregular disk gets
    // there with the clamp policy
    std::vector<Mesh> meshes;
    meshes.push_back(build_crisscross_unit_square(8));
    meshes.push_back(build_structured_unit_square(8));
    meshes.push_back(build_disk_mesh({8, 16, 24, 31}, 1.0));
    const double gamma = 1e-3;

    Rng rng(404);
    for (const Mesh& mesh : meshes) {
        DiffusionOperator op =
            build_operator(mesh, gamma, BoundaryCondition::Reflecting, SignPolicy::Clamp);
        const double dt = op.h_min * op.h_min / (6.0 * gamma);
        for (int trial = 0; trial < 20; ++trial) {
            Eigen::VectorXd x = Eigen::VectorXd::Zero(op.size());
            for (int j = 0; j < op.size(); ++j)
                if (rng.uniform() < 0.3) x(j) = 100.0 * rng.uniform();
            Eigen::VectorXd out = integrate_macro(op, x, dt, dt, MacroScheme::Trapezoidal);
            CHECK(out.minCoeff() > -1e-12);
        }
        // backward euler has no step restriction at all
        Eigen::VectorXd spike = Eigen::VectorXd::Zero(op.size());
        spike(3) = 1000.0;
        Eigen::VectorXd out =
            integrate_macro(op, spike, 1e6 * dt, 1e6 * dt, MacroScheme::BackwardEuler);
        CHECK(out.minCoeff() > -1e-12);
    }
}

TEST_CASE("all-stochastic hybrid replays the plain ssa stream event for event") {
    Mesh mesh = build_structured_unit_square(4);
    Model model = parse_model(R"(species A
species B
reaction birth : 0 -> A : 3
reaction conv : A -> B : massaction(1, A)
reaction deg : B -> 0 : massaction(0.4, B)
)");
    DiffusionOperator op = build_operator(mesh, 0.02);
    Eigen::MatrixXd init = Eigen::MatrixXd::Zero(2, op.size());
    init.row(0).setConstant(2.0);

    HybridConfig cfg;
    cfg.dt = 0.7;
    HybridSimulator hybrid(model, op, mesh, cfg);
    Rng rng_h(123);
    hybrid.set_state(init, 0.0, rng_h);
    hybrid.advance_to(5.0, rng_h);

    SsaOptions opt;
    opt.diffuse_deterministic = false;   // same engine configuration
    SsaEngine plain(model, op, mesh, opt);
    Rng rng_p(123);
    plain.set_state(init, 0.0);
    plain.refresh_all(rng_p);
    plain.run_until(5.0, rng_p);

    CHECK(hybrid.timings().events == plain.events_fired());
    CHECK((hybrid.counts() - plain.counts()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("all-deterministic hybrid equals the bare macro integrator") {
    Mesh mesh = build_structured_unit_square(5);
    Model model = parse_model("species U deterministic\n");
    DiffusionOperator op = build_operator(mesh, 1e-3);
    Eigen::MatrixXd init(1, op.size());
    init.row(0) = bump_state(op).transpose();

    HybridConfig cfg;
    cfg.dt = 0.5;
    cfg.guard = NonnegGuard::Off;
    HybridSimulator hybrid(model, op, mesh, cfg);
    Rng rng(9);
    hybrid.set_state(init, 0.0, rng);
    hybrid.advance_to(4.0, rng);
    CHECK(hybrid.timings().events == 0);

    // Strang halves of width dt/2 must reproduce plain stepping at dt/2
    Eigen::VectorXd direct =
        integrate_macro(op, init.row(0).transpose(), 4.0, 0.25, MacroScheme::Trapezoidal);
    CHECK((hybrid.counts().row(0).transpose() - direct).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("reactions keep firing on fractional macro states") {
    Mesh mesh = build_1d_mesh({0.0, 0.5, 1.0});
    Model model = parse_model("species U deterministic\nreaction deg : U -> 0 : massaction(2, U)\n");
    DiffusionOperator op = build_operator(mesh, 0.05);
    Eigen::MatrixXd init(1, 3);
    init << 40.0, 0.0, 0.0;

    HybridConfig cfg;
    cfg.dt = 0.25;
    HybridSimulator hybrid(model, op, mesh, cfg);
    Rng rng(77);
    hybrid.set_state(init, 0.0, rng);
    hybrid.advance_to(3.0, rng);

    CHECK(hybrid.timings().events > 10);          // decays fired
    const Eigen::MatrixXd& counts = hybrid.counts();
    CHECK(counts.sum() < 40.0);
    for (Eigen::Index j = 0; j < 3; ++j) {
        CHECK(counts(0, j) >= 0.0);
        // macro diffusion makes the state genuinely fractional
        CHECK(counts(0, j) != std::floor(counts(0, j)));
    }
}

TEST_CASE("nonnegativity guards catch or repair macro overshoot") {
    // backward Euler cannot go negative, trapezoidal with a huge step can:
    // drive it with a delta spike and a step far above the altitude bound
    Mesh mesh = build_structured_unit_square(10);
    Model model = parse_model("species U deterministic\n");
    const double gamma = 1.0;
    DiffusionOperator op = build_operator(mesh, gamma);
    Eigen::MatrixXd init = Eigen::MatrixXd::Zero(1, op.size());
    init(0, 0) = 1.0;   // corner spike

    const double dt = 40.0 * op.h_min * op.h_min / gamma;

    {
        Eigen::VectorXd probe =
            integrate_macro(op, init.row(0).transpose(), dt / 2, dt / 2, MacroScheme::Trapezoidal);
        REQUIRE(probe.minCoeff() < -1e-9);   // the configuration really overshoots
    }

    HybridConfig cfg;
    cfg.dt = dt;
    cfg.guard = NonnegGuard::Check;
    HybridSimulator checking(model, op, mesh, cfg);
    Rng rng(1);
    checking.set_state(init, 0.0, rng);
    CHECK_THROWS(checking.strang_step(rng));

    cfg.guard = NonnegGuard::Clamp;
    HybridSimulator clamping(model, op, mesh, cfg);
    Rng rng2(1);
    clamping.set_state(init, 0.0, rng2);
    clamping.strang_step(rng2);
    CHECK(clamping.timings().clamped_entries > 0);
    CHECK(clamping.counts().minCoeff() == 0.0);

    cfg.guard = NonnegGuard::Off;
    HybridSimulator loose(model, op, mesh, cfg);
    Rng rng3(1);
    loose.set_state(init, 0.0, rng3);
    loose.strang_step(rng3);
    CHECK(loose.counts().minCoeff() < 0.0);
}

TEST_CASE("advance_to lands exactly on the requested time") {
    Mesh mesh = build_1d_mesh({0.0, 0.5, 1.0});
    Model model = parse_model("species U deterministic\nspecies V\n");
    DiffusionOperator op = build_operator(mesh, 0.05);
    Eigen::MatrixXd init(2, 3);
    init << 12, 0, 0,
            30, 0, 0;
    HybridConfig cfg;
    cfg.dt = 0.3;
    HybridSimulator hybrid(model, op, mesh, cfg);
    Rng rng(6);
    hybrid.set_state(init, 0.0, rng);
    hybrid.advance_to(0.95, rng);
    CHECK(hybrid.time() == doctest::Approx(0.95).epsilon(1e-14));
    CHECK(hybrid.timings().macro_steps > 0);
    // stochastic species count stays integral, macro species does not
    CHECK(hybrid.counts()(1, 0) == std::floor(hybrid.counts()(1, 0)));
}
