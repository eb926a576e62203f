#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rdme/fem.hpp"
#include "rdme/hybrid.hpp"
#include "rdme/mesh.hpp"
#include "rdme/model.hpp"

namespace rdme {

// The study drivers write their tables/summaries under out_dir (empty string
// disables file output) and return the numbers the acceptance gate asserts.

struct ConvergenceResult {
    std::vector<double> h_max;       // per refinement level
    std::vector<double> l2_error;    // against the closed-form solution at t=1
    std::vector<double> rates;       // log2(err[i]/err[i+1])
};

// Deterministic diffusion of u0(x,y) = 100(1 - cos(2 pi x)) with gamma=1e-3
// on structured unit squares; trapezoidal time stepping to t=1.
ConvergenceResult run_diffusion_convergence(const std::vector<int>& grid_sizes,
                                            double dt, const std::string& out_dir);

// Same closed-form field on an externally supplied mesh (used for the
// bundled anisotropic mesh with h_max ~ 0.25).
double diffusion_l2_error_on_mesh(const Mesh& mesh, double dt);

struct StochasticTableRow {
    double molecules = 0.0;          // total across the ensemble (100 per trajectory)
    long long trajectories = 0;
    double delta_d_l2 = 0.0;         // vs the FEM mean on the same mesh
    double delta_d_linf = 0.0;
    double delta_a_l2 = 0.0;         // vs the closed-form solution
    double delta_a_linf = 0.0;
    double mc_stderr = 0.0;          // std error of delta_d_l2 over batches
};

enum class Placement { Rounded, Multinomial };

struct StochasticTableResult {
    std::vector<StochasticTableRow> rows;
    double loglog_slope = 0.0;       // of delta_d_l2 against molecule count
};

StochasticTableResult run_stochastic_diffusion_table(const Mesh& mesh,
                                                     const std::vector<double>& molecule_counts,
                                                     std::uint64_t seed,
                                                     Placement placement,
                                                     const std::string& out_dir);

struct HybridBenchmarkResult {
    std::vector<double> dts;
    std::vector<double> delta_t;          // ensemble-mean discrepancy vs full SSA
    std::vector<double> macro_seconds;    // deterministic phase per dt
    std::vector<double> ssa_seconds;
    double full_ssa_seconds = 0.0;
    double hybrid_seconds_at_largest_dt = 0.0;
    long long full_ssa_events = 0;
};

HybridBenchmarkResult run_hybrid_benchmark(const Mesh& mesh, const Model& model,
                                           const Eigen::MatrixXd& initial,
                                           const std::vector<double>& dts,
                                           long long trajectories, double t_end,
                                           std::uint64_t seed, const std::string& out_dir);

struct BistableResult {
    double gamma = 0.0;
    double min_count = 0.0;
    double max_count = 0.0;
    bool finite = false;
    double separation_index = 0.0;   // spatial correlation of the A and B fields
    long long events = 0;
};

BistableResult run_bistable(const Mesh& mesh, const Model& model,
                            const Eigen::MatrixXd& initial, double gamma_override,
                            double t_end, std::uint64_t seed, const std::string& out_dir);

// Initial-state builders: constant concentration fields (counts = conc *
// |C_j|, fractional allowed) and integer totals spread over cells by
// largest-remainder rounding of the area weights.
Eigen::MatrixXd uniform_concentration_initial(const Eigen::VectorXd& areas, const Model& model,
                                              const std::map<std::string, double>& concentrations);
Eigen::MatrixXd spread_counts_initial(const Eigen::VectorXd& areas, const Model& model,
                                      const std::map<std::string, long long>& totals);

// Shared helpers.

// Closed-form relaxation mode used by the convergence studies.
Eigen::VectorXd cosine_mode_solution(const Mesh& mesh, double gamma, double t);

// Deterministic largest-remainder placement of `total` molecules with weights
// w_j (>= 0); returns integer counts summing exactly to total.
Eigen::VectorXd largest_remainder_rounding(const Eigen::VectorXd& weights, long long total);

// Least-squares slope of log10(y) against log10(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace rdme
