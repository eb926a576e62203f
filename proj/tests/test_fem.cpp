#include <doctest.h>

#include "rdme/fem.hpp"
#include "rdme/mesh.hpp"

#include <cmath>

using namespace rdme;

namespace {

const char* kObtusePair = R"(2 4 2
0 0
1 0
0.5 0.08
0.5 -0.08
0 1 2
0 3 1
)";

Eigen::MatrixXd dense(const SparseMat& s) { return Eigen::MatrixXd(s); }

} // namespace

TEST_CASE("1d stiffness, mass and jump operators on a three node mesh") {
    Mesh m = build_1d_mesh({0.0, 0.5, 1.0});
    DiffusionOperator op = build_operator(m, 1.0);

    Eigen::Matrix3d s_ref;
    s_ref << -2, 2, 0,
              2, -4, 2,
              0, 2, -2;
    CHECK((dense(op.S) - s_ref).cwiseAbs().maxCoeff() == 0.0);

    CHECK(op.A(0) == doctest::Approx(0.25));
    CHECK(op.A(1) == doctest::Approx(0.5));
    CHECK(op.A(2) == doctest::Approx(0.25));

    Eigen::Matrix3d d_ref;
    d_ref << -8, 8, 0,
              4, -8, 4,
              0, 8, -8;
    CHECK((dense(op.D) - d_ref).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((dense(op.Q) - d_ref.transpose()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("nonuniform 1d jump rates depend on both neighbouring intervals") {
    // intervals 0.1 and 0.2 around the middle vertex
    Mesh m = build_1d_mesh({0.0, 0.1, 0.3});
    DiffusionOperator op = build_operator(m, 1.0);
    Eigen::MatrixXd d = dense(op.D);
    CHECK(d(1, 0) == doctest::Approx(2.0 / (0.1 * (0.1 + 0.2)))); // 66.666...
    CHECK(d(1, 2) == doctest::Approx(2.0 / (0.2 * (0.1 + 0.2)))); // 33.333...
}

TEST_CASE("reference triangle element matrix") {
    Mesh m = parse_mesh("2 3 1\n0 0\n1 0\n0 1\n0 1 2\n");
    SparseMat s = assemble_stiffness(m);
    Eigen::Matrix3d ref;
    ref << -1.0, 0.5, 0.5,
            0.5, -0.5, 0.0,
            0.5, 0.0, -0.5;
    CHECK((dense(s) - ref).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("operator invariants hold on generated meshes") {
    std::vector<Mesh> meshes;
    meshes.push_back(build_structured_unit_square(5));
    meshes.push_back(build_crisscross_unit_square(4));
    meshes.push_back(perturb_interior_vertices(build_structured_unit_square(7), 0.2, 99));
    meshes.push_back(build_disk_mesh({6, 12, 17}, 0.75));
    meshes.push_back(build_hex_disk_mesh(4, 2.0));
    meshes.push_back(build_1d_mesh({0.0, 0.05, 0.2, 0.5, 0.55, 1.0}));

    for (const Mesh& m : meshes) {
        double gamma = 0.37;
        DiffusionOperator op = build_operator(m, gamma);
        Eigen::Index k = op.size();
        Eigen::VectorXd ones = Eigen::VectorXd::Ones(k);

        // conservation: stiffness row sums vanish, so do jump-rate row sums
        CHECK((dense(op.S) * ones).cwiseAbs().maxCoeff() < 1e-12);
        CHECK((dense(op.D) * ones).cwiseAbs().maxCoeff() < 1e-10);
        // dual areas are a left null vector of D
        CHECK((op.A.transpose() * dense(op.D)).cwiseAbs().maxCoeff() < 1e-10);
        // Q is the transposed jump matrix scaled by gamma
        CHECK((dense(op.Q) - gamma * dense(op.D).transpose()).cwiseAbs().maxCoeff() < 1e-12);
        // S stays symmetric negative semi-definite
        CHECK((dense(op.S) - dense(op.S).transpose()).cwiseAbs().maxCoeff() < 1e-12);
        Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(k, -1.0, 2.0);
        CHECK(x.dot(dense(op.S) * x) <= 1e-10);
        CHECK(op.h_min > 0.0);
    }
}

TEST_CASE("angle violations show up as negative off-diagonal stiffness entries") {
    Mesh m = parse_mesh(kObtusePair);
    SparseMat s = assemble_stiffness(m);
    SignReport rep = sign_report(s);
    CHECK(rep.negative_offdiagonals == 1);
    REQUIRE(rep.edges.size() == 1);
    CHECK(rep.edges[0].first == 0);
    CHECK(rep.edges[0].second == 1);
    CHECK(rep.worst < 0.0);

    // quality report flags exactly the same edge
    QualityReport q = quality_report(m);
    REQUIRE(q.violations.size() == 1);
    CHECK(std::min(q.violations[0].v0, q.violations[0].v1) == rep.edges[0].first);
    CHECK(std::max(q.violations[0].v0, q.violations[0].v1) == rep.edges[0].second);

    // same cross-check on an irregular disk: the geometric and the algebraic
    // detector must agree edge for edge
    Mesh disk = build_disk_mesh({8, 16, 24, 31}, 1.0);
    QualityReport qd = quality_report(disk);
    SignReport rd = sign_report(assemble_stiffness(disk));
    REQUIRE(qd.violations.size() == rd.edges.size());
    for (std::size_t i = 0; i < rd.edges.size(); ++i) {
        CHECK(std::min(qd.violations[i].v0, qd.violations[i].v1) == rd.edges[i].first);
        CHECK(std::max(qd.violations[i].v0, qd.violations[i].v1) == rd.edges[i].second);
    }
}

TEST_CASE("clamping removes negative rates but keeps conservation") {
    Mesh m = parse_mesh(kObtusePair);
    DiffusionOperator kept = build_operator(m, 1.0, BoundaryCondition::Reflecting, SignPolicy::Keep);
    CHECK(kept.sign.negative_offdiagonals == 1);
    CHECK(dense(kept.D)(0, 1) < 0.0);

    DiffusionOperator fixed = build_operator(m, 1.0, BoundaryCondition::Reflecting, SignPolicy::Clamp);
    CHECK(fixed.sign.clamped == 1);
    Eigen::MatrixXd d = dense(fixed.D);
    CHECK(d(0, 1) == 0.0);
    CHECK(d(1, 0) == 0.0);
    for (Eigen::Index i = 0; i < d.rows(); ++i)
        for (Eigen::Index j = 0; j < d.cols(); ++j)
            if (i != j) CHECK(d(i, j) >= 0.0);
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(4);
    CHECK((dense(fixed.S) * ones).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((d * ones).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dirichlet operators list every boundary vertex as fixed") {
    Mesh m = build_structured_unit_square(4);
    DiffusionOperator op = build_operator(m, 1.0, BoundaryCondition::Dirichlet);
    CHECK(op.fixed_cells.size() == 16);
    for (int c : op.fixed_cells) CHECK(m.on_boundary[c] == 1);
    CHECK(op.is_fixed(op.fixed_cells[0]));
    CHECK_FALSE(op.is_fixed(12)); // centre vertex of the 5x5 grid
}

TEST_CASE("jump matrix sparsity follows the edge graph") {
    Mesh m = build_structured_unit_square(4);
    DiffusionOperator op = build_operator(m, 1.0);
    Eigen::MatrixXd d = dense(op.D);
    // vertex 0 is the corner (0,0): axis neighbours 1 and 5 carry positive
    // rates; the diagonal edge to 6 sits exactly at the angle threshold
    // (two opposing right angles), so its rate is exactly zero
    for (Eigen::Index j = 1; j < d.cols(); ++j) {
        if (j == 1 || j == 5) CHECK(d(0, j) > 0.0);
        else CHECK(d(0, j) == 0.0);
    }
}

TEST_CASE("operators reject nonpositive diffusion constants") {
    Mesh m = build_1d_mesh({0.0, 1.0});
    CHECK_THROWS(build_operator(m, 0.0));
    CHECK_THROWS(build_operator(m, -1.0));
}
