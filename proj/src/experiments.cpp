#include "rdme/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "rdme/ensemble.hpp"
#include "rdme/io.hpp"
#include "rdme/moments.hpp"
#include "rdme/norms.hpp"
#include "rdme/ssa.hpp"

namespace rdme {
namespace {

using json = nlohmann::json;

constexpr double kDiffusionGamma = 1e-3;   // relaxation-mode studies

double now_seconds() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

void write_summary(const std::string& out_dir, const std::string& name, const json& summary) {
    if (out_dir.empty()) return;
    ensure_directory(out_dir);
    write_text_file(out_dir + "/" + name + ".json", summary.dump(2) + "\n");
}

std::string num_tag(double v) {   // short round-trippable number for names
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

Model pure_diffusion_model(double gamma) {
    return parse_model("species U\ngamma = " + num_tag(gamma) + "\n");
}

}  // namespace

Eigen::VectorXd cosine_mode_solution(const Mesh& mesh, double gamma, double t) {
    const double decay = std::exp(-4.0 * gamma * M_PI * M_PI * t);
    Eigen::VectorXd u(mesh.num_vertices());
    for (int j = 0; j < mesh.num_vertices(); ++j)
        u(j) = 100.0 * (1.0 - std::cos(2.0 * M_PI * mesh.vertices(j, 0)) * decay);
    return u;
}

Eigen::VectorXd largest_remainder_rounding(const Eigen::VectorXd& weights, long long total) {
    const double sum = weights.sum();
    if (!(sum > 0.0)) throw std::runtime_error("rounding: weights must have positive sum");
    const int K = static_cast<int>(weights.size());
    Eigen::VectorXd out(K);
    std::vector<std::pair<double, int>> rema(static_cast<std::size_t>(K));
    long long placed = 0;
    for (int j = 0; j < K; ++j) {
        const double ideal = static_cast<double>(total) * weights(j) / sum;
        out(j) = std::floor(ideal);
        placed += static_cast<long long>(out(j));
        rema[static_cast<std::size_t>(j)] = {ideal - out(j), j};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    for (long long i = 0; i < total - placed; ++i) out(rema[static_cast<std::size_t>(i)].second) += 1.0;
    return out;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw std::runtime_error("slope: need >= 2 points");
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double lx = std::log10(x[i]), ly = std::log10(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ConvergenceResult run_diffusion_convergence(const std::vector<int>& grid_sizes, double dt,
                                            const std::string& out_dir) {
    ConvergenceResult res;
    for (int n : grid_sizes) {
        const Mesh mesh = build_structured_unit_square(n);
        res.h_max.push_back(quality_report(mesh).h_max);
        res.l2_error.push_back(diffusion_l2_error_on_mesh(mesh, dt));
    }
    for (std::size_t i = 0; i + 1 < res.l2_error.size(); ++i)
        res.rates.push_back(std::log2(res.l2_error[i] / res.l2_error[i + 1]));

    if (!out_dir.empty()) {
        ensure_directory(out_dir);
        CsvTable table;
        table.columns = {"n", "h_max", "l2_error", "rate_vs_previous"};
        for (std::size_t i = 0; i < grid_sizes.size(); ++i)
            table.add_row({static_cast<double>(grid_sizes[i]), res.h_max[i], res.l2_error[i],
                           i ? res.rates[i - 1] : std::nan("")});
        table.write(out_dir + "/convergence.csv");
        json summary = {{"experiment", "diffusion-convergence"},
                        {"gamma", kDiffusionGamma},
                        {"t_end", 1.0},
                        {"dt", dt},
                        {"grids", grid_sizes},
                        {"l2_error", res.l2_error},
                        {"rates", res.rates}};
        write_summary(out_dir, "convergence_summary", summary);
    }
    return res;
}

double diffusion_l2_error_on_mesh(const Mesh& mesh, double dt) {
    const DiffusionOperator op = build_operator(mesh, kDiffusionGamma);
    const Eigen::VectorXd u0 = cosine_mode_solution(mesh, kDiffusionGamma, 0.0);
    const Eigen::VectorXd x1 =
        integrate_macro(op, op.A.asDiagonal() * u0, 1.0, dt, MacroScheme::Trapezoidal);
    const Eigen::VectorXd u1 = x1.array() / op.A.array();
    // relative to the mode amplitude 100, like the stochastic-table deltas
    return weighted_l2_error(u1, cosine_mode_solution(mesh, kDiffusionGamma, 1.0), op.A) / 100.0;
}

StochasticTableResult run_stochastic_diffusion_table(const Mesh& mesh,
                                                     const std::vector<double>& molecule_counts,
                                                     std::uint64_t seed, Placement placement,
                                                     const std::string& out_dir) {
    constexpr long long kPerTrajectory = 100;
    const Model model = pure_diffusion_model(kDiffusionGamma);
    const DiffusionOperator op = build_operator(mesh, kDiffusionGamma);
    const int K = op.size();

    const Eigen::VectorXd u0 = cosine_mode_solution(mesh, kDiffusionGamma, 0.0);
    const Eigen::VectorXd weights = op.A.asDiagonal() * u0;
    const Eigen::VectorXd rounded = largest_remainder_rounding(weights, kPerTrajectory);
    const Eigen::VectorXd probs = weights / weights.sum();
    const Eigen::VectorXd u_exact = cosine_mode_solution(mesh, kDiffusionGamma, 1.0);

    // the deterministic reference starts from the ensemble-expected initial
    // state, so the measured deviation is pure Monte Carlo noise
    const Eigen::VectorXd expected0 =
        placement == Placement::Rounded
            ? rounded
            : Eigen::VectorXd(static_cast<double>(kPerTrajectory) * probs);
    const Eigen::VectorXd xbar1 = mean_evolve(op, expected0, {1.0}).col(0);
    const Eigen::VectorXd u_ref = xbar1.array() / op.A.array();

    StochasticTableResult res;
    SsaEngine engine(model, op, mesh);
    std::vector<double> delta_for_slope;

    for (double m : molecule_counts) {
        const long long M = std::max<long long>(1, std::llround(m / kPerTrajectory));
        const int B = static_cast<int>(std::min<long long>(10, M));
        std::vector<Eigen::VectorXd> batch_sum(static_cast<std::size_t>(B),
                                               Eigen::VectorXd::Zero(K));
        std::vector<long long> batch_n(static_cast<std::size_t>(B), 0);

        for (long long i = 0; i < M; ++i) {
            Rng rng = Rng::for_trajectory(seed, static_cast<std::uint64_t>(i));
            Eigen::MatrixXd n0(1, K);
            if (placement == Placement::Rounded) {
                n0.row(0) = rounded.transpose();
            } else {
                n0.setZero();
                for (long long mol = 0; mol < kPerTrajectory; ++mol) {
                    double u = rng.uniform();
                    int cell = K - 1;
                    for (int j = 0; j < K; ++j) {
                        if (u < probs(j)) {
                            cell = j;
                            break;
                        }
                        u -= probs(j);
                    }
                    n0(0, cell) += 1.0;
                }
            }
            engine.set_state(n0, 0.0);
            engine.refresh_all(rng);
            engine.run_until(1.0, rng);
            const int b = static_cast<int>(i % B);
            batch_sum[static_cast<std::size_t>(b)] += engine.counts().row(0).transpose();
            ++batch_n[static_cast<std::size_t>(b)];
        }

        Eigen::VectorXd mean_counts = Eigen::VectorXd::Zero(K);
        for (const auto& s : batch_sum) mean_counts += s;
        mean_counts /= static_cast<double>(M);
        const Eigen::VectorXd u_m = mean_counts.array() / op.A.array();

        StochasticTableRow row;
        row.molecules = static_cast<double>(M * kPerTrajectory);
        row.trajectories = M;
        row.delta_d_l2 = weighted_l2_error(u_m, u_ref, op.A) / 100.0;
        row.delta_d_linf = weighted_linf(u_m - u_ref) / 100.0;
        row.delta_a_l2 = weighted_l2_error(u_m, u_exact, op.A) / 100.0;
        row.delta_a_linf = weighted_linf(u_m - u_exact) / 100.0;
        if (B > 1) {
            // delta on a batch mean scales like sqrt(B) * delta on the full
            // mean, so the spread of batch deltas over B estimates the
            // standard error of the reported value
            double acc = 0.0, acc2 = 0.0;
            for (int b = 0; b < B; ++b) {
                const Eigen::VectorXd ub =
                    batch_sum[static_cast<std::size_t>(b)].array() /
                    (static_cast<double>(batch_n[static_cast<std::size_t>(b)]) * op.A.array());
                const double d = weighted_l2_error(ub, u_ref, op.A) / 100.0;
                acc += d;
                acc2 += d * d;
            }
            const double sd = std::sqrt(std::max(0.0, acc2 / B - (acc / B) * (acc / B)));
            row.mc_stderr = sd / static_cast<double>(B);
        }
        res.rows.push_back(row);
        delta_for_slope.push_back(row.delta_d_l2);
    }

    std::vector<double> ms;
    for (const auto& row : res.rows) ms.push_back(row.molecules);
    res.loglog_slope = ms.size() >= 2 ? loglog_slope(ms, delta_for_slope) : 0.0;

    if (!out_dir.empty()) {
        ensure_directory(out_dir);
        CsvTable table;
        table.columns = {"molecules",  "trajectories", "delta_d_l2", "delta_d_linf",
                         "delta_a_l2", "delta_a_linf", "mc_stderr"};
        for (const auto& r : res.rows)
            table.add_row({r.molecules, static_cast<double>(r.trajectories), r.delta_d_l2,
                           r.delta_d_linf, r.delta_a_l2, r.delta_a_linf, r.mc_stderr});
        table.write(out_dir + "/stochastic_table.csv");
        json summary = {{"experiment", "stochastic-diffusion-table"},
                        {"gamma", kDiffusionGamma},
                        {"seed", seed},
                        {"placement", placement == Placement::Rounded ? "rounded" : "multinomial"},
                        {"loglog_slope", res.loglog_slope}};
        write_summary(out_dir, "stochastic_table_summary", summary);
    }
    return res;
}

Eigen::MatrixXd uniform_concentration_initial(const Eigen::VectorXd& areas, const Model& model,
                                              const std::map<std::string, double>& concentrations) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(model.num_species(), areas.size());
    for (const auto& [name, conc] : concentrations) {
        const int id = model.species_index(name);
        if (id < 0) throw std::runtime_error("initial state: unknown species " + name);
        counts.row(id) = (conc * areas.array()).transpose();
    }
    return counts;
}

Eigen::MatrixXd spread_counts_initial(const Eigen::VectorXd& areas, const Model& model,
                                      const std::map<std::string, long long>& totals) {
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(model.num_species(), areas.size());
    for (const auto& [name, total] : totals) {
        const int id = model.species_index(name);
        if (id < 0) throw std::runtime_error("initial state: unknown species " + name);
        counts.row(id) = largest_remainder_rounding(areas, total).transpose();
    }
    return counts;
}

HybridBenchmarkResult run_hybrid_benchmark(const Mesh& mesh, const Model& model,
                                           const Eigen::MatrixXd& initial,
                                           const std::vector<double>& dts,
                                           long long trajectories, double t_end,
                                           std::uint64_t seed, const std::string& out_dir) {
    const DiffusionOperator op = build_operator(mesh, model.gamma);
    const int S = model.num_species();
    const int K = op.size();

    // ensemble-mean concentration fields per species
    auto mean_fields = [&](const Eigen::MatrixXd& sum_counts, long long M) {
        Eigen::MatrixXd phi = sum_counts / static_cast<double>(M);
        for (int j = 0; j < K; ++j) phi.col(j) /= op.A(j);
        return phi;
    };

    HybridBenchmarkResult res;
    Eigen::MatrixXd phi_ref;
    {
        SsaEngine engine(model, op, mesh);
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(S, K);
        const double t0 = now_seconds();
        for (long long i = 0; i < trajectories; ++i) {
            Rng rng = Rng::for_trajectory(seed, static_cast<std::uint64_t>(i));
            engine.set_state(initial, 0.0);
            engine.refresh_all(rng);
            res.full_ssa_events += engine.run_until(t_end, rng);
            sum += engine.counts();
        }
        res.full_ssa_seconds = now_seconds() - t0;
        phi_ref = mean_fields(sum, trajectories);
    }

    CsvTable table;
    table.columns = {"dt",          "delta_t",      "macro_seconds", "ssa_seconds",
                     "total_seconds", "events_per_run", "delta_t_stderr"};

    for (std::size_t r = 0; r < dts.size(); ++r) {
        const double dt = dts[r];
        Rng derive(seed + 1000003ULL * (r + 1));
        const std::uint64_t run_seed = derive.next_u64();

        HybridSimulator sim(model, op, mesh, HybridConfig{dt, MacroScheme::Trapezoidal,
                                                          NonnegGuard::Check});
        const int B = static_cast<int>(std::min<long long>(10, trajectories));
        std::vector<Eigen::MatrixXd> batch_sum(static_cast<std::size_t>(B),
                                               Eigen::MatrixXd::Zero(S, K));
        std::vector<long long> batch_n(static_cast<std::size_t>(B), 0);
        const double t0 = now_seconds();
        for (long long i = 0; i < trajectories; ++i) {
            Rng rng = Rng::for_trajectory(run_seed, static_cast<std::uint64_t>(i));
            sim.set_state(initial, 0.0, rng);
            sim.advance_to(t_end, rng);
            batch_sum[static_cast<std::size_t>(i % B)] += sim.counts();
            ++batch_n[static_cast<std::size_t>(i % B)];
        }
        const double total_seconds = now_seconds() - t0;

        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(S, K);
        for (const auto& b : batch_sum) sum += b;
        const Eigen::MatrixXd phi = mean_fields(sum, trajectories);

        // largest per-species discrepancy, normalized by the reference range
        auto delta_against_ref = [&](const Eigen::MatrixXd& fields) {
            double worst = 0.0;
            for (int i = 0; i < S; ++i) {
                const double range = phi_ref.row(i).maxCoeff() - phi_ref.row(i).minCoeff();
                if (range <= 0.0) continue;
                const double d =
                    weighted_l2_error(fields.row(i).transpose(), phi_ref.row(i).transpose(), op.A) /
                    range;
                worst = std::max(worst, d);
            }
            return worst;
        };
        const double delta_t = delta_against_ref(phi);
        double stderr_dt = 0.0;
        if (B > 1) {
            double acc = 0.0, acc2 = 0.0;
            for (int b = 0; b < B; ++b) {
                Eigen::MatrixXd pb = batch_sum[static_cast<std::size_t>(b)] /
                                     static_cast<double>(batch_n[static_cast<std::size_t>(b)]);
                for (int j = 0; j < K; ++j) pb.col(j) /= op.A(j);
                const double d = delta_against_ref(pb);
                acc += d;
                acc2 += d * d;
            }
            const double sd = std::sqrt(std::max(0.0, acc2 / B - (acc / B) * (acc / B)));
            stderr_dt = sd / static_cast<double>(B);
        }

        res.dts.push_back(dt);
        res.delta_t.push_back(delta_t);
        res.macro_seconds.push_back(sim.timings().macro_seconds);
        res.ssa_seconds.push_back(sim.timings().ssa_seconds);
        if (r + 1 == dts.size()) res.hybrid_seconds_at_largest_dt = total_seconds;
        table.add_row({dt, delta_t, sim.timings().macro_seconds, sim.timings().ssa_seconds,
                       total_seconds,
                       static_cast<double>(sim.timings().events) / static_cast<double>(trajectories),
                       stderr_dt});
    }

    if (!out_dir.empty()) {
        ensure_directory(out_dir);
        table.write(out_dir + "/hybrid_benchmark.csv");
        json summary = {{"experiment", "hybrid-benchmark"},
                        {"gamma", model.gamma},
                        {"trajectories", trajectories},
                        {"t_end", t_end},
                        {"seed", seed},
                        {"full_ssa_seconds", res.full_ssa_seconds},
                        {"full_ssa_events", res.full_ssa_events},
                        {"dts", res.dts},
                        {"delta_t", res.delta_t},
                        {"macro_seconds", res.macro_seconds},
                        {"ssa_seconds", res.ssa_seconds}};
        write_summary(out_dir, "hybrid_benchmark_summary", summary);
    }
    return res;
}

BistableResult run_bistable(const Mesh& mesh, const Model& model, const Eigen::MatrixXd& initial,
                            double gamma_override, double t_end, std::uint64_t seed,
                            const std::string& out_dir) {
    const DiffusionOperator op = build_operator(mesh, gamma_override);
    const int K = op.size();
    const int ia = model.species_index("A"), ib = model.species_index("B");
    if (ia < 0 || ib < 0)
        throw std::runtime_error("bistable: model must define species A and B");

    SsaEngine engine(model, op, mesh);
    Rng rng = Rng::for_trajectory(seed, 0);
    engine.set_state(initial, 0.0);
    engine.refresh_all(rng);

    BistableResult res;
    res.gamma = gamma_override;
    std::vector<double> snapshot_times = {0.5 * t_end, t_end};
    std::vector<Eigen::VectorXd> fields;
    std::vector<std::string> labels;
    for (double ts : snapshot_times) {
        res.events += engine.run_until(ts, rng);
        Eigen::VectorXd a = engine.counts().row(ia).transpose();
        Eigen::VectorXd b = engine.counts().row(ib).transpose();
        labels.push_back("A_t" + num_tag(ts));
        labels.push_back("B_t" + num_tag(ts));
        fields.push_back(a.array() / op.A.array());
        fields.push_back(b.array() / op.A.array());
    }

    res.min_count = engine.counts().minCoeff();
    res.max_count = engine.counts().maxCoeff();
    res.finite = engine.counts().allFinite();

    // Pearson correlation of the final A and B concentration fields: strongly
    // negative when the species occupy separated regions
    {
        const Eigen::VectorXd& a = fields[fields.size() - 2];
        const Eigen::VectorXd& b = fields[fields.size() - 1];
        const double ma = a.mean(), mb = b.mean();
        const double cov = ((a.array() - ma) * (b.array() - mb)).sum();
        const double va = (a.array() - ma).square().sum(), vb = (b.array() - mb).square().sum();
        res.separation_index = va > 0 && vb > 0 ? cov / std::sqrt(va * vb) : 0.0;
    }

    if (!out_dir.empty()) {
        ensure_directory(out_dir);
        write_field_csv(out_dir + "/bistable_fields_gamma" + num_tag(gamma_override) + ".csv",
                        mesh.vertices, op.A, labels, fields);
        json summary = {{"experiment", "bistable"},
                        {"gamma", gamma_override},
                        {"t_end", t_end},
                        {"seed", seed},
                        {"events", res.events},
                        {"K", K},
                        {"min_count", res.min_count},
                        {"max_count", res.max_count},
                        {"separation_index", res.separation_index}};
        write_summary(out_dir, "bistable_summary_gamma" + num_tag(gamma_override), summary);
    }
    return res;
}

}  // namespace rdme
