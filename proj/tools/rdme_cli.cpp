#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "rdme/experiments.hpp"
#include "rdme/io.hpp"
#include "rdme/moments.hpp"
#include "rdme/norms.hpp"
#include "rdme/ssa.hpp"

using namespace rdme;
using json = nlohmann::json;

namespace {

struct MeshOptions {
    std::string file;
    int grid = 0;
    int crisscross = 0;
    std::vector<int> disk_rings;
    double disk_radius = 1.0;
    int hex_rings = 0;
    std::vector<double> line;   // 1d node positions

    void attach(CLI::App* cmd) {
        cmd->add_option("--mesh", file, "mesh file (text format)");
        cmd->add_option("--grid", grid, "structured unit square with n x n cells");
        cmd->add_option("--crisscross", crisscross, "criss-cross unit square with n x n cells");
        cmd->add_option("--disk-rings", disk_rings, "ring vertex counts for a disk mesh");
        cmd->add_option("--disk-radius", disk_radius, "disk radius");
        cmd->add_option("--hex-disk", hex_rings, "hexagonal disk with n rings");
        cmd->add_option("--line", line, "1d node positions");
    }

    Mesh build() const {
        if (!file.empty()) return load_mesh(file);
        if (grid > 0) return build_structured_unit_square(grid);
        if (crisscross > 0) return build_crisscross_unit_square(crisscross);
        if (!disk_rings.empty()) return build_disk_mesh(disk_rings, disk_radius);
        if (hex_rings > 0) return build_hex_disk_mesh(hex_rings, disk_radius);
        if (!line.empty()) return build_1d_mesh(line);
        throw CLI::ValidationError("no mesh source given (use --mesh/--grid/--disk-rings/...)");
    }
};

Model load_model_for(const Mesh& mesh, const std::string& path) {
    const DualGeometry dual = dual_areas(mesh);
    // bind the average cell size so model files can reference it by name
    return load_model(path, {{"zeta", dual.total / mesh.num_vertices()}});
}

// NAME=CONC pairs -> counts; stochastic species get integer totals spread by
// largest remainder, deterministic ones keep fractional per-cell values
Eigen::MatrixXd initial_from_pairs(const Mesh& mesh, const Model& model,
                                  const std::vector<std::string>& pairs) {
    const Eigen::VectorXd areas = dual_areas(mesh).areas;
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(model.num_species(), mesh.num_vertices());
    std::vector<std::string> items;
    for (const auto& chunk : pairs) {   // accept both space- and comma-separated pairs
        std::istringstream cs(chunk);
        std::string piece;
        while (std::getline(cs, piece, ','))
            if (!piece.empty()) items.push_back(piece);
    }
    for (const auto& item : items) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw CLI::ValidationError("--init expects NAME=CONCENTRATION, got " + item);
        const std::string name = item.substr(0, eq);
        std::size_t used = 0;
        const double conc = std::stod(item.substr(eq + 1), &used);
        if (used != item.size() - eq - 1)
            throw CLI::ValidationError("--init: bad number in " + item);
        const int id = model.species_index(name);
        if (id < 0) throw CLI::ValidationError("--init: unknown species " + name);
        if (model.species[static_cast<std::size_t>(id)].mode == DiffusionMode::Deterministic)
            counts.row(id) = (conc * areas.array()).transpose();
        else
            counts.row(id) =
                largest_remainder_rounding(areas, std::llround(conc * areas.sum())).transpose();
    }
    return counts;
}

void write_state(const std::string& out_dir, const std::string& name, const Mesh& mesh,
                 const Model& model, const Eigen::MatrixXd& counts) {
    if (out_dir.empty()) return;
    ensure_directory(out_dir);
    const Eigen::VectorXd areas = dual_areas(mesh).areas;
    std::vector<std::string> labels;
    std::vector<Eigen::VectorXd> fields;
    for (int i = 0; i < model.num_species(); ++i) {
        labels.push_back(model.species[static_cast<std::size_t>(i)].name);
        fields.push_back(counts.row(i).transpose());
    }
    write_field_csv(out_dir + "/" + name + ".csv", mesh.vertices, areas, labels, fields);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"reaction-diffusion master equation toolkit"};
    app.require_subcommand(1);

    // ---- assemble ----
    auto* assemble = app.add_subcommand("assemble", "build diffusion operators for a mesh");
    MeshOptions assemble_mesh;
    assemble_mesh.attach(assemble);
    double as_gamma = 1.0;
    bool as_dirichlet = false, as_clamp = false;
    std::string as_export;
    assemble->add_option("--gamma", as_gamma, "diffusion coefficient");
    assemble->add_flag("--dirichlet", as_dirichlet, "treat boundary cells as fixed reservoirs");
    assemble->add_flag("--clamp", as_clamp, "zero negative off-diagonal stiffness entries");
    assemble->add_option("--export", as_export, "write S/A/D/Q as row-col-value text files");

    // ---- quality ----
    auto* quality = app.add_subcommand("quality", "mesh quality and edge angle report");
    MeshOptions quality_mesh;
    quality_mesh.attach(quality);

    // ---- simulate ----
    auto* simulate = app.add_subcommand("simulate", "single stochastic trajectory");
    MeshOptions sim_mesh;
    sim_mesh.attach(simulate);
    std::string sim_model, sim_out, sim_events;
    std::vector<std::string> sim_init;
    double sim_t = 1.0;
    std::uint64_t sim_seed = 1;
    bool sim_dirichlet = false;
    simulate->add_option("--model", sim_model, "model file")->required();
    simulate->add_option("--t", sim_t, "end time");
    simulate->add_option("--seed", sim_seed, "random seed");
    simulate->add_option("--init", sim_init, "initial concentrations NAME=VALUE");
    simulate->add_option("--out", sim_out, "output directory");
    simulate->add_option("--events", sim_events, "write an event log CSV to this file");
    simulate->add_flag("--dirichlet", sim_dirichlet, "fixed boundary cells");

    // ---- hybrid ----
    auto* hybrid = app.add_subcommand("hybrid", "strang-split meso/macro trajectory");
    MeshOptions hyb_mesh;
    hyb_mesh.attach(hybrid);
    std::string hyb_model, hyb_out, hyb_scheme = "trap", hyb_guard = "check";
    std::vector<std::string> hyb_init;
    std::vector<double> hyb_snapshots;
    double hyb_t = 1.0, hyb_dt = 0.1;
    std::uint64_t hyb_seed = 1;
    hybrid->add_option("--model", hyb_model, "model file")->required();
    hybrid->add_option("--t", hyb_t, "end time");
    hybrid->add_option("--dt", hyb_dt, "splitting interval");
    hybrid->add_option("--scheme", hyb_scheme, "macro scheme: trap|be");
    hybrid->add_option("--guard", hyb_guard, "negativity guard: check|clamp|off");
    hybrid->add_option("--seed", hyb_seed, "random seed");
    hybrid->add_option("--init", hyb_init, "initial concentrations NAME=VALUE");
    hybrid->add_option("--snapshots", hyb_snapshots, "state dump times");
    hybrid->add_option("--out", hyb_out, "output directory");

    // ---- moments ----
    auto* moments = app.add_subcommand("moments", "mean and covariance of pure diffusion");
    MeshOptions mom_mesh;
    mom_mesh.attach(moments);
    double mom_gamma = 1.0;
    std::vector<double> mom_times{1.0};
    int mom_cell = 0;
    long long mom_total = 100;
    std::string mom_out;
    moments->add_option("--gamma", mom_gamma, "diffusion coefficient");
    moments->add_option("--times", mom_times, "output times");
    moments->add_option("--cell", mom_cell, "cell holding the initial molecules");
    moments->add_option("--total", mom_total, "initial molecule count");
    moments->add_option("--out", mom_out, "output directory");

    // ---- experiment ----
    auto* experiment = app.add_subcommand("experiment", "bundled study drivers");
    std::string exp_id, exp_out = "out";
    std::uint64_t exp_seed = 20240814;
    long long exp_ensemble = 0;
    double exp_gamma = 0.0;
    experiment->add_option("id", exp_id,
                           "diffusion-convergence | stochastic-diffusion-table | "
                           "hybrid-benchmark | bistable")
        ->required();
    experiment->add_option("--out", exp_out, "output directory");
    experiment->add_option("--seed", exp_seed, "master seed");
    experiment->add_option("--ensemble", exp_ensemble, "trajectory count override");
    experiment->add_option("--gamma", exp_gamma, "diffusion coefficient override");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*assemble) {
            const Mesh mesh = assemble_mesh.build();
            const DiffusionOperator op =
                build_operator(mesh, as_gamma,
                               as_dirichlet ? BoundaryCondition::Dirichlet
                                            : BoundaryCondition::Reflecting,
                               as_clamp ? SignPolicy::Clamp : SignPolicy::Keep);
            std::cout << "cells: " << op.size() << "\n"
                      << "gamma: " << op.gamma << "\n"
                      << "negative off-diagonals: " << op.sign.negative_offdiagonals
                      << " (worst " << op.sign.worst << ", clamped " << op.sign.clamped << ")\n"
                      << "h_min: " << op.h_min << "\n"
                      << "fixed cells: " << op.fixed_cells.size() << "\n";
            if (op.sign.negative_offdiagonals > 0 && !as_clamp)
                std::cout << "warning: mesh violates the edge angle condition; jump rates on "
                             "the listed edges are negative and will be sampled as zero\n";
            if (!as_export.empty()) {
                ensure_directory(as_export);
                export_operator(op, as_export);
                std::cout << "operators written to " << as_export << "\n";
            }
        } else if (*quality) {
            const Mesh mesh = quality_mesh.build();
            const QualityReport rep = quality_report(mesh);
            std::cout << "vertices: " << mesh.num_vertices()
                      << "  elements: " << mesh.num_elements() << "\n"
                      << "h_min: " << rep.h_min << "  h_max: " << rep.h_max << "\n"
                      << "angles: [" << rep.min_angle << ", " << rep.max_angle << "] rad\n"
                      << "area: " << rep.total_area << "\n"
                      << "interior edges: " << rep.interior_edges << "\n"
                      << "angle-condition violations: " << rep.violations.size() << "\n";
            for (const auto& v : rep.violations)
                std::cout << "  edge (" << v.v0 << "," << v.v1 << "): alpha+beta = "
                          << v.alpha + v.beta << " > pi\n";
        } else if (*simulate) {
            const Mesh mesh = sim_mesh.build();
            const Model model = load_model_for(mesh, sim_model);
            const DiffusionOperator op =
                build_operator(mesh, model.gamma,
                               sim_dirichlet ? BoundaryCondition::Dirichlet
                                             : BoundaryCondition::Reflecting);
            SsaEngine engine(model, op, mesh);
            Rng rng = Rng::for_trajectory(sim_seed, 0);
            engine.set_state(initial_from_pairs(mesh, model, sim_init), 0.0);
            engine.refresh_all(rng);

            std::ostringstream log;
            long long events = 0;
            if (!sim_events.empty()) {
                log << "t,kind,cell,species_or_reaction,target_cell\n";
                while (engine.next_time() <= sim_t) {
                    const Event ev = engine.step(rng);
                    log << ev.t << ',' << (ev.kind == Event::Kind::Reaction ? "reaction" : "diffusion")
                        << ',' << ev.cell << ',' << ev.index << ',' << ev.target << '\n';
                    ++events;
                }
                write_text_file(sim_events, log.str());
            } else {
                events = engine.run_until(sim_t, rng);
            }
            std::cout << "events: " << events << "\ntotal molecules: "
                      << engine.counts().sum() << "\n";
            write_state(sim_out, "final_state", mesh, model, engine.counts());
        } else if (*hybrid) {
            const Mesh mesh = hyb_mesh.build();
            const Model model = load_model_for(mesh, hyb_model);
            const DiffusionOperator op = build_operator(mesh, model.gamma);
            HybridConfig cfg;
            cfg.dt = hyb_dt;
            if (hyb_scheme == "trap") cfg.scheme = MacroScheme::Trapezoidal;
            else if (hyb_scheme == "be") cfg.scheme = MacroScheme::BackwardEuler;
            else throw CLI::ValidationError("--scheme must be trap or be");
            if (hyb_guard == "check") cfg.guard = NonnegGuard::Check;
            else if (hyb_guard == "clamp") cfg.guard = NonnegGuard::Clamp;
            else if (hyb_guard == "off") cfg.guard = NonnegGuard::Off;
            else throw CLI::ValidationError("--guard must be check, clamp or off");

            HybridSimulator sim(model, op, mesh, cfg);
            Rng rng = Rng::for_trajectory(hyb_seed, 0);
            sim.set_state(initial_from_pairs(mesh, model, hyb_init), 0.0, rng);
            int snap = 0;
            for (double ts : hyb_snapshots) {
                sim.advance_to(ts, rng);
                write_state(hyb_out, "state_" + std::to_string(snap++), mesh, model, sim.counts());
            }
            sim.advance_to(hyb_t, rng);
            write_state(hyb_out, "final_state", mesh, model, sim.counts());
            const auto& tm = sim.timings();
            std::cout << "events: " << tm.events << "\nmacro seconds: " << tm.macro_seconds
                      << "\nssa seconds: " << tm.ssa_seconds
                      << "\nclamped entries: " << tm.clamped_entries << "\n";
        } else if (*moments) {
            const Mesh mesh = mom_mesh.build();
            const DiffusionOperator op = build_operator(mesh, mom_gamma);
            Eigen::VectorXd x0 = Eigen::VectorXd::Zero(op.size());
            if (mom_cell < 0 || mom_cell >= op.size())
                throw CLI::ValidationError("--cell outside the mesh");
            x0(mom_cell) = static_cast<double>(mom_total);
            const CovarianceSolution sol =
                covariance_evolve(op, x0, Eigen::MatrixXd::Zero(op.size(), op.size()), mom_times);
            ensure_directory(mom_out.empty() ? "." : mom_out);
            const std::string dir = mom_out.empty() ? "." : mom_out;
            const Eigen::VectorXd areas = dual_areas(mesh).areas;
            for (std::size_t i = 0; i < mom_times.size(); ++i) {
                write_field_csv(dir + "/mean_t" + std::to_string(mom_times[i]) + ".csv",
                                mesh.vertices, areas, {"mean"},
                                {sol.mean.col(static_cast<int>(i))});
                std::ostringstream cov;
                cov.precision(12);
                cov << "row,col,value\n";
                const auto& C = sol.covariance[i];
                for (int r = 0; r < C.rows(); ++r)
                    for (int c = 0; c < C.cols(); ++c) cov << r << ',' << c << ',' << C(r, c) << '\n';
                write_text_file(dir + "/cov_t" + std::to_string(mom_times[i]) + ".csv", cov.str());
            }
            std::cout << "stationary mean head: "
                      << stationary_mean(op, x0).head(std::min<int>(5, op.size())).transpose()
                      << "\n";
        } else if (*experiment) {
            ensure_directory(exp_out);
            if (exp_id == "diffusion-convergence") {
                const auto res = run_diffusion_convergence({8, 16, 32}, 0.005, exp_out);
                for (std::size_t i = 0; i < res.l2_error.size(); ++i)
                    std::cout << "h_max " << res.h_max[i] << "  l2 error " << res.l2_error[i]
                              << (i ? "  rate " + std::to_string(res.rates[i - 1]) : "") << "\n";
                const Mesh bundled = load_mesh(std::string(RDME_DATA_DIR) + "/meshes/square_h025.txt");
                std::cout << "bundled h025 mesh error: " << diffusion_l2_error_on_mesh(bundled, 0.005)
                          << "\n";
            } else if (exp_id == "stochastic-diffusion-table") {
                const Mesh mesh = load_mesh(std::string(RDME_DATA_DIR) + "/meshes/square_h05.txt");
                const auto res = run_stochastic_diffusion_table(
                    mesh, {1e2, 1e3, 1e4, 1e5, 1e6}, exp_seed, Placement::Rounded, exp_out);
                for (const auto& row : res.rows)
                    std::cout << "m " << row.molecules << "  delta_d " << row.delta_d_l2
                              << " +- " << row.mc_stderr << "\n";
                std::cout << "log-log slope: " << res.loglog_slope << "\n";
            } else if (exp_id == "hybrid-benchmark") {
                const Mesh mesh = build_disk_mesh({8, 16, 24, 31}, std::pow(M_PI, -0.5));
                Model model = load_model_for(mesh, std::string(RDME_DATA_DIR) + "/models/metabolites.txt");
                if (exp_gamma > 0.0) model.gamma = exp_gamma;
                const Eigen::VectorXd areas = dual_areas(mesh).areas;
                const double zeta = areas.sum() / mesh.num_vertices();
                const Eigen::MatrixXd init = uniform_concentration_initial(
                    areas, model, {{"A", 30.0 / zeta}, {"B", 30.0 / zeta}});
                const long long M = exp_ensemble > 0 ? exp_ensemble : 200;
                const auto res =
                    run_hybrid_benchmark(mesh, model, init, {0.1, 1.0, 5.0}, M, 10.0, exp_seed, exp_out);
                for (std::size_t i = 0; i < res.dts.size(); ++i)
                    std::cout << "dt " << res.dts[i] << "  delta_t " << res.delta_t[i]
                              << "  macro s " << res.macro_seconds[i] << "\n";
                std::cout << "full SSA seconds: " << res.full_ssa_seconds
                          << "  hybrid (largest dt) seconds: " << res.hybrid_seconds_at_largest_dt
                          << "\n";
            } else if (exp_id == "bistable") {
                const Mesh mesh = build_hex_disk_mesh(18, 3e-6);
                const Model model =
                    load_model_for(mesh, std::string(RDME_DATA_DIR) + "/models/bistable.txt");
                const Eigen::VectorXd areas = dual_areas(mesh).areas;
                const Eigen::MatrixXd init =
                    spread_counts_initial(areas, model, {{"EA", 15}, {"EB", 15}});
                for (double g : {2e-13, 1e-12}) {
                    if (exp_gamma > 0.0 && g != exp_gamma) continue;
                    const auto res = run_bistable(mesh, model, init, g, 2.0, exp_seed, exp_out);
                    std::cout << "gamma " << g << "  events " << res.events << "  separation "
                              << res.separation_index << "  counts [" << res.min_count << ", "
                              << res.max_count << "]\n";
                }
            } else {
                throw CLI::ValidationError("unknown experiment id: " + exp_id);
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
