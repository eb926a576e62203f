#include <doctest.h>

#include "rdme/ensemble.hpp"
#include "rdme/experiments.hpp"
#include "rdme/io.hpp"
#include "rdme/norms.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

using namespace rdme;

TEST_CASE("area-weighted norms") {
    Eigen::VectorXd u(3), areas(3);
    u << 3.0, -4.0, 1.0;
    areas << 0.25, 0.5, 0.25;
    CHECK(weighted_l2(u, areas) == doctest::Approx(std::sqrt(9 * 0.25 + 16 * 0.5 + 0.25)));
    CHECK(weighted_linf(u) == doctest::Approx(4.0));
    Eigen::VectorXd v = u.array() + 1.0;
    CHECK(weighted_l2_error(u, v, areas) == doctest::Approx(1.0));
}

TEST_CASE("largest remainder rounding is exact and order stable") {
    Eigen::VectorXd w(3);
    w << 1.0, 1.0, 1.0;
    Eigen::VectorXd n = largest_remainder_rounding(w, 10);
    CHECK(n.sum() == 10.0);
    CHECK(n(0) == 4.0);   // ties feed the lowest index first
    CHECK(n(1) == 3.0);
    CHECK(n(2) == 3.0);

    Eigen::VectorXd w2(4);
    w2 << 0.1, 0.7, 0.15, 0.05;
    Eigen::VectorXd n2 = largest_remainder_rounding(w2, 1000);
    CHECK(n2.sum() == 1000.0);
    CHECK(n2(1) == 700.0);
    for (int i = 0; i < 4; ++i)
        CHECK(std::abs(n2(i) - 1000.0 * w2(i)) < 1.0);

    CHECK(largest_remainder_rounding(w2, 0).sum() == 0.0);
}

TEST_CASE("log-log slope recovers power laws") {
    std::vector<double> x{100, 1000, 10000, 100000};
    std::vector<double> y;
    for (double v : x) y.push_back(3.2 * std::pow(v, -0.5));
    CHECK(loglog_slope(x, y) == doctest::Approx(-0.5).epsilon(1e-10));
}

TEST_CASE("closed-form relaxation mode values") {
    Mesh mesh = build_1d_mesh({0.0, 0.5, 1.0});
    // u(x,t) = 100 (1 - cos(2 pi x) e^{-4 pi^2 gamma t})
    Eigen::VectorXd u0 = cosine_mode_solution(mesh, 1e-3, 0.0);
    CHECK(u0(0) == doctest::Approx(0.0));
    CHECK(u0(1) == doctest::Approx(200.0));
    Eigen::VectorXd u1 = cosine_mode_solution(mesh, 1e-3, 1.0);
    CHECK(u1(0) == doctest::Approx(3.8709303).epsilon(1e-6));
    CHECK(u1(1) == doctest::Approx(196.1290697).epsilon(1e-6));
    // mean value is preserved by the reflecting dynamics
    CHECK(u1(0) + u1(1) == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("grid refinement drives the macro solution to the closed form") {
    ConvergenceResult res = run_diffusion_convergence({8, 16}, 0.01, "");
    REQUIRE(res.l2_error.size() == 2);
    CHECK(res.l2_error[0] > res.l2_error[1]);
    CHECK(res.l2_error[1] < 0.01);   // relative to ||u|| ~ 100
    REQUIRE(res.rates.size() == 1);
    CHECK(res.rates[0] > 1.5);
    CHECK(res.rates[0] < 2.3);
}

TEST_CASE("stochastic diffusion table produces sane errors") {
    Mesh mesh = load_mesh(std::string(RDME_DATA_DIR) + "/meshes/square_h05.txt");
    StochasticTableResult res =
        run_stochastic_diffusion_table(mesh, {1000.0}, 4242, Placement::Rounded, "");
    REQUIRE(res.rows.size() == 1);
    CHECK(res.rows[0].trajectories == 10);
    CHECK(res.rows[0].delta_d_l2 > 0.0);
    CHECK(res.rows[0].delta_d_l2 < 0.2);
    CHECK(res.rows[0].delta_a_l2 > 0.0);
    CHECK(res.rows[0].mc_stderr > 0.0);
    CHECK(res.rows[0].delta_d_linf >= res.rows[0].delta_d_l2 * 0.1);
}

TEST_CASE("initial state builders") {
    Model model = parse_model("species A deterministic\nspecies B\n");
    Eigen::VectorXd areas(3);
    areas << 0.25, 0.5, 0.25;

    Eigen::MatrixXd conc = uniform_concentration_initial(areas, model, {{"A", 12.0}});
    CHECK(conc(0, 0) == doctest::Approx(3.0));
    CHECK(conc(0, 1) == doctest::Approx(6.0));
    CHECK(conc.row(1).sum() == 0.0);

    Eigen::MatrixXd spread = spread_counts_initial(areas, model, {{"B", 11}});
    CHECK(spread.row(1).sum() == 11.0);
    CHECK(spread.row(0).sum() == 0.0);
    for (int j = 0; j < 3; ++j) CHECK(spread(1, j) == std::floor(spread(1, j)));
    CHECK_THROWS(spread_counts_initial(areas, model, {{"C", 1}}));
}

TEST_CASE("csv and field writers emit readable files") {
    std::string dir = (std::filesystem::temp_directory_path() / "rdme_io_test").string();
    ensure_directory(dir);

    CsvTable t({"a", "b"});
    t.add_row({1.0, 2.5});
    t.add_row({3.0, -1.0});
    t.write(dir + "/table.csv");
    std::string text = read_text_file(dir + "/table.csv");
    CHECK(text.find("a,b") != std::string::npos);
    CHECK(text.find("2.5") != std::string::npos);

    Mesh mesh = build_1d_mesh({0.0, 1.0});
    Eigen::VectorXd areas(2);
    areas << 0.5, 0.5;
    Eigen::VectorXd u(2), v(2);
    u << 1, 2;
    v << 3, 4;
    write_field_csv(dir + "/field.csv", mesh.vertices, areas, {"u", "v"}, {u, v});
    std::string ftext = read_text_file(dir + "/field.csv");
    CHECK(ftext.find("u,v") != std::string::npos);

    std::filesystem::remove_all(dir);
}

TEST_CASE("ensemble runner is deterministic across thread counts") {
    auto body = [](long long index, Rng& rng, std::vector<double>& acc) {
        double s = 0.0;
        for (int i = 0; i < 10; ++i) s += rng.uniform();
        acc.push_back(static_cast<double>(index) + s);
    };
    auto merge = [](std::vector<double>& into, const std::vector<double>& part) {
        into.insert(into.end(), part.begin(), part.end());
    };

    std::vector<double> one = run_ensemble<std::vector<double>>(64, 777, 1, body, merge, {});
    std::vector<double> two = run_ensemble<std::vector<double>>(64, 777, 2, body, merge, {});
    std::vector<double> four = run_ensemble<std::vector<double>>(64, 777, 4, body, merge, {});
    REQUIRE(one.size() == 64);
    CHECK(one == two);
    CHECK(one == four);
}

TEST_CASE("running moments merge like a single stream") {
    RunningMoments a, b, all;
    for (int i = 0; i < 10; ++i) {
        Eigen::VectorXd v(2);
        v << std::sin(static_cast<double>(i)), std::cos(static_cast<double>(i));
        all.add(v);
        (i < 4 ? a : b).add(v);
    }
    a.merge(b);
    CHECK(a.n == all.n);
    CHECK((a.mean - all.mean).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((a.variance() - all.variance()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("bistable driver runs a short trajectory to completion") {
    Mesh mesh = build_hex_disk_mesh(4, 3e-6);
    Model model = load_model(std::string(RDME_DATA_DIR) + "/models/bistable.txt");
    Eigen::MatrixXd init = spread_counts_initial(dual_areas(mesh).areas, model,
                                                 {{"EA", 15}, {"EB", 15}});
    BistableResult res = run_bistable(mesh, model, init, 2e-13, 0.02, 99, "");
    CHECK(res.finite);
    CHECK(res.min_count >= 0.0);
    CHECK(res.max_count > 0.0);
    CHECK(res.events > 0);
    CHECK(res.separation_index >= -1.0);
    CHECK(res.separation_index <= 1.0);
}
