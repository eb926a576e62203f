#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <memory>
#include <vector>

#include "rdme/fem.hpp"
#include "rdme/model.hpp"
#include "rdme/rng.hpp"
#include "rdme/ssa.hpp"

namespace rdme {

enum class MacroScheme { Trapezoidal, BackwardEuler };
enum class NonnegGuard { Off, Check, Clamp };

// Implicit step for the macroscopic diffusion ODE x' = scale * Q x on count
// scale, advancing one interval s per advance() call. Substituting x = A y
// turns both schemes into SPD solves with (A - c * scale * gamma * S),
// factored once: c = s/2 for the trapezoidal rule, c = s for backward
// Euler. Row sums of S are zero, so e1^T x is conserved exactly; the
// M-matrix structure keeps the implicit solve nonnegativity-preserving.
class MacroStepper {
  public:
    MacroStepper(const DiffusionOperator& op, MacroScheme scheme, double interval,
                 double diffscale = 1.0);

    void advance(Eigen::Ref<Eigen::VectorXd> x) const;
    double interval() const { return interval_; }

  private:
    const DiffusionOperator& op_;
    MacroScheme scheme_;
    double interval_;
    double c_;                      // implicit coefficient
    double scale_;                  // species diffscale
    Eigen::SimplicialLDLT<SparseMat> solver_;   // A - c*scale*gamma*S (free cells)
    std::vector<int> free_;         // solve unknowns when Dirichlet cells exist
    SparseMat coupling_;            // free x fixed block of -c*scale*gamma*S
    std::vector<int> fixed_list_;
    bool reduced_ = false;
};

// Whole-interval integration with repeated MacroStepper steps; the last step
// shrinks to land exactly on t_end.
Eigen::VectorXd integrate_macro(const DiffusionOperator& op, const Eigen::VectorXd& x0,
                                double t_end, double dt, MacroScheme scheme,
                                double diffscale = 1.0);

struct HybridConfig {
    double dt = 1.0;
    MacroScheme scheme = MacroScheme::Trapezoidal;
    NonnegGuard guard = NonnegGuard::Check;
};

struct PhaseTimings {
    double macro_seconds = 0.0;
    double ssa_seconds = 0.0;
    long long events = 0;
    long long macro_steps = 0;
    long long clamped_entries = 0;   // NonnegGuard::Clamp interventions
};

// Strang-split meso/macro integrator: half-interval macro diffusion for
// Deterministic species, a full-interval SSA sweep (stochastic diffusion +
// all reactions at possibly fractional copy numbers), then the second macro
// half. SSA propensities are refreshed after macro halves only when a
// deterministic species exists, so the all-stochastic configuration
// consumes the exact same random stream as plain SSA.
class HybridSimulator {
  public:
    HybridSimulator(const Model& model, const DiffusionOperator& op, const Mesh& mesh,
                    HybridConfig config);

    void set_state(const Eigen::MatrixXd& counts, double t, Rng& rng);
    void strang_step(Rng& rng);              // advance exactly config.dt
    void step_interval(double s, Rng& rng);  // reduced final step
    void advance_to(double t_end, Rng& rng);

    const Eigen::MatrixXd& counts() const { return engine_.counts(); }
    double time() const { return t_; }
    const PhaseTimings& timings() const { return timings_; }

  private:
    void macro_half(double s);
    void apply_guard(Eigen::MatrixXd& counts);

    const Model& model_;
    const DiffusionOperator& op_;
    HybridConfig cfg_;
    SsaEngine engine_;
    std::vector<int> det_species_;
    // one factorization per (species, interval); rebuilt on interval change
    std::vector<std::unique_ptr<MacroStepper>> steppers_;
    double stepper_interval_ = -1.0;
    double t_ = 0.0;
    PhaseTimings timings_;
};

}  // namespace rdme
