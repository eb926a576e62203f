#include "rdme/hybrid.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace rdme {
namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

MacroStepper::MacroStepper(const DiffusionOperator& op, MacroScheme scheme, double interval,
                           double diffscale)
    : op_(op), scheme_(scheme), interval_(interval), scale_(diffscale) {
    if (!(interval > 0.0)) throw std::runtime_error("macro: step interval must be positive");
    c_ = scheme == MacroScheme::Trapezoidal ? 0.5 * interval : interval;

    const int K = op.size();
    const double w = c_ * scale_ * op.gamma;
    SparseMat M = -w * op.S;
    for (int j = 0; j < K; ++j) M.coeffRef(j, j) += op.A(j);   // M = A - c*scale*gamma*S, SPD

    if (op.fixed_cells.empty()) {
        solver_.compute(M);
    } else {
        fixed_list_ = op.fixed_cells;
        std::vector<char> is_fixed(static_cast<std::size_t>(K), 0);
        for (int f : fixed_list_) is_fixed[static_cast<std::size_t>(f)] = 1;
        std::vector<int> local(static_cast<std::size_t>(K), -1);
        for (int j = 0; j < K; ++j)
            if (!is_fixed[static_cast<std::size_t>(j)]) {
                local[static_cast<std::size_t>(j)] = static_cast<int>(free_.size());
                free_.push_back(j);
            }
        std::vector<int> fixed_local(static_cast<std::size_t>(K), -1);
        for (std::size_t i = 0; i < fixed_list_.size(); ++i)
            fixed_local[static_cast<std::size_t>(fixed_list_[i])] = static_cast<int>(i);

        std::vector<Eigen::Triplet<double>> ff, fx;
        for (int col = 0; col < M.outerSize(); ++col)
            for (SparseMat::InnerIterator it(M, col); it; ++it) {
                const int r = static_cast<int>(it.row());
                if (is_fixed[static_cast<std::size_t>(r)]) continue;
                if (!is_fixed[static_cast<std::size_t>(col)])
                    ff.emplace_back(local[static_cast<std::size_t>(r)],
                                    local[static_cast<std::size_t>(col)], it.value());
                else
                    fx.emplace_back(local[static_cast<std::size_t>(r)],
                                    fixed_local[static_cast<std::size_t>(col)], it.value());
            }
        SparseMat Mff(static_cast<int>(free_.size()), static_cast<int>(free_.size()));
        Mff.setFromTriplets(ff.begin(), ff.end());
        coupling_.resize(static_cast<int>(free_.size()), static_cast<int>(fixed_list_.size()));
        coupling_.setFromTriplets(fx.begin(), fx.end());
        solver_.compute(Mff);
        reduced_ = true;
    }
    if (solver_.info() != Eigen::Success)
        throw std::runtime_error("macro: factorization of the implicit system failed");
}

void MacroStepper::advance(Eigen::Ref<Eigen::VectorXd> x) const {
    // substitute x = A y; both schemes solve (A - c*scale*gamma*S) y+ = b
    Eigen::VectorXd b = x;
    if (scheme_ == MacroScheme::Trapezoidal) b += c_ * scale_ * (op_.Q * x);

    if (!reduced_) {
        const Eigen::VectorXd y = solver_.solve(b);
        x = op_.A.asDiagonal() * y;
        return;
    }
    Eigen::VectorXd y_fixed(static_cast<int>(fixed_list_.size()));
    for (std::size_t i = 0; i < fixed_list_.size(); ++i)
        y_fixed(static_cast<int>(i)) = x(fixed_list_[i]) / op_.A(fixed_list_[i]);
    Eigen::VectorXd rhs(static_cast<int>(free_.size()));
    for (std::size_t i = 0; i < free_.size(); ++i) rhs(static_cast<int>(i)) = b(free_[i]);
    rhs -= coupling_ * y_fixed;
    const Eigen::VectorXd y = solver_.solve(rhs);
    for (std::size_t i = 0; i < free_.size(); ++i)
        x(free_[i]) = op_.A(free_[i]) * y(static_cast<int>(i));
    // fixed cells keep their boundary values
}

Eigen::VectorXd integrate_macro(const DiffusionOperator& op, const Eigen::VectorXd& x0,
                                double t_end, double dt, MacroScheme scheme, double diffscale) {
    if (!(dt > 0.0) || t_end < 0.0) throw std::runtime_error("macro: bad integration window");
    Eigen::VectorXd x = x0;
    const long long full = static_cast<long long>(std::floor(t_end / dt * (1.0 + 1e-12)));
    if (full > 0) {
        MacroStepper step(op, scheme, dt, diffscale);
        for (long long i = 0; i < full; ++i) step.advance(x);
    }
    const double rest = t_end - static_cast<double>(full) * dt;
    if (rest > 1e-12 * dt) MacroStepper(op, scheme, rest, diffscale).advance(x);
    return x;
}

HybridSimulator::HybridSimulator(const Model& model, const DiffusionOperator& op,
                                 const Mesh& mesh, HybridConfig config)
    : model_(model), op_(op), cfg_(config),
      engine_(model, op, mesh, SsaOptions{/*diffuse_deterministic=*/false}) {
    if (!(cfg_.dt > 0.0)) throw std::runtime_error("hybrid: dt must be positive");
    for (int i = 0; i < model.num_species(); ++i)
        if (model.species[static_cast<std::size_t>(i)].mode == DiffusionMode::Deterministic)
            det_species_.push_back(i);
}

void HybridSimulator::set_state(const Eigen::MatrixXd& counts, double t, Rng& rng) {
    engine_.set_state(counts, t);
    engine_.refresh_all(rng);
    t_ = t;
}

void HybridSimulator::macro_half(double s) {
    if (det_species_.empty()) return;
    const auto t0 = std::chrono::steady_clock::now();
    if (stepper_interval_ != s) {
        steppers_.clear();
        for (int i : det_species_)
            steppers_.push_back(std::make_unique<MacroStepper>(
                op_, cfg_.scheme, s, model_.species[static_cast<std::size_t>(i)].diffscale));
        stepper_interval_ = s;
    }
    Eigen::MatrixXd& counts = engine_.counts_mutable();
    for (std::size_t d = 0; d < det_species_.size(); ++d) {
        Eigen::VectorXd row = counts.row(det_species_[d]).transpose();
        steppers_[d]->advance(row);
        counts.row(det_species_[d]) = row.transpose();
    }
    apply_guard(counts);
    timings_.macro_seconds += seconds_since(t0);
    ++timings_.macro_steps;
}

void HybridSimulator::apply_guard(Eigen::MatrixXd& counts) {
    if (cfg_.guard == NonnegGuard::Off) return;
    for (int i : det_species_) {
        const double lo = counts.row(i).minCoeff();
        if (lo >= 0.0) continue;
        const double scale = std::max(1.0, counts.row(i).cwiseAbs().maxCoeff());
        if (cfg_.guard == NonnegGuard::Check) {
            if (lo < -1e-9 * scale)
                throw std::runtime_error(
                    "hybrid: macro step produced a negative concentration beyond tolerance; "
                    "reduce dt or switch to the backward Euler scheme");
        } else {
            for (int k = 0; k < counts.cols(); ++k)
                if (counts(i, k) < 0.0) {
                    counts(i, k) = 0.0;
                    ++timings_.clamped_entries;
                }
        }
    }
}

void HybridSimulator::step_interval(double s, Rng& rng) {
    macro_half(0.5 * s);
    const auto t0 = std::chrono::steady_clock::now();
    // propensities see the post-macro state; skipping the refresh when no
    // deterministic species exist keeps the random stream identical to
    // plain SSA
    if (!det_species_.empty()) engine_.refresh_all(rng);
    const long long before = engine_.events_fired();
    engine_.run_until(t_ + s, rng);
    timings_.events += engine_.events_fired() - before;
    timings_.ssa_seconds += seconds_since(t0);
    macro_half(0.5 * s);
    t_ += s;
}

void HybridSimulator::strang_step(Rng& rng) { step_interval(cfg_.dt, rng); }

void HybridSimulator::advance_to(double t_end, Rng& rng) {
    while (t_ + cfg_.dt <= t_end * (1.0 + 1e-12)) strang_step(rng);
    const double rest = t_end - t_;
    if (rest > 1e-12 * cfg_.dt) step_interval(rest, rng);
    t_ = t_end;
}

}  // namespace rdme
