#include "rdme/ssa.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rdme {

std::vector<EvalContext> make_cell_contexts(const Mesh& mesh, const Eigen::VectorXd& areas) {
    const int K = mesh.num_vertices();
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(mesh.dim);
    for (int j = 0; j < K; ++j) centroid += areas(j) * mesh.vertices.row(j);
    centroid /= areas.sum();
    std::vector<EvalContext> ctx(static_cast<std::size_t>(K));
    for (int j = 0; j < K; ++j) {
        auto& c = ctx[static_cast<std::size_t>(j)];
        c.vol = areas(j);
        c.cx = mesh.vertices(j, 0);
        c.cy = mesh.dim > 1 ? mesh.vertices(j, 1) : 0.0;
        c.rho = (mesh.vertices.row(j) - centroid).norm();
    }
    return ctx;
}

SsaEngine::SsaEngine(const Model& model, const DiffusionOperator& op, const Mesh& mesh,
                     SsaOptions options)
    : model_(model), op_(op), opt_(options) {
    const int K = op.size();
    const int R = static_cast<int>(model.reactions.size());
    counts_ = Eigen::MatrixXd::Zero(model.num_species(), K);
    cache_.resize(static_cast<std::size_t>(K));
    for (auto& c : cache_) c.rxn_partial.assign(static_cast<std::size_t>(R), 0.0);
    ctx_ = make_cell_contexts(mesh, op.A);

    neighbors_.resize(static_cast<std::size_t>(K));
    out_rate_.assign(static_cast<std::size_t>(K), 0.0);
    // gamma * max(D_kj, 0) is the per-molecule jump rate k -> j; negative
    // entries (bad-quality edges under SignPolicy::Keep) are sampled as zero
    for (int col = 0; col < op.D.outerSize(); ++col)
        for (SparseMat::InnerIterator it(op.D, col); it; ++it) {
            const int from = static_cast<int>(it.row());
            if (from == col) continue;
            const double rate = op.gamma * std::max(it.value(), 0.0);
            if (rate <= 0.0) continue;
            neighbors_[static_cast<std::size_t>(from)].push_back({col, rate});
            out_rate_[static_cast<std::size_t>(from)] += rate;
        }

    fixed_.assign(static_cast<std::size_t>(K), 0);
    for (int f : op.fixed_cells) fixed_[static_cast<std::size_t>(f)] = 1;

    diffusive_.assign(static_cast<std::size_t>(model.num_species()), 1);
    for (int i = 0; i < model.num_species(); ++i)
        if (model.species[static_cast<std::size_t>(i)].mode == DiffusionMode::Deterministic &&
            !opt_.diffuse_deterministic)
            diffusive_[static_cast<std::size_t>(i)] = 0;

    heap_time_.assign(static_cast<std::size_t>(K), std::numeric_limits<double>::infinity());
    heap_cell_.resize(static_cast<std::size_t>(K));
    heap_pos_.resize(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) heap_cell_[static_cast<std::size_t>(k)] = heap_pos_[static_cast<std::size_t>(k)] = k;
    rebuild_countdown_ = opt_.rebuild_interval;
}

double SsaEngine::diffusion_partial(int cell, int species) const {
    if (!diffusive_[static_cast<std::size_t>(species)]) return 0.0;
    const double x = counts_(species, cell);
    if (x < 1.0) return 0.0;
    return model_.species[static_cast<std::size_t>(species)].diffscale *
           out_rate_[static_cast<std::size_t>(cell)] * x;
}

void SsaEngine::recompute_cell(int cell) {
    auto& c = cache_[static_cast<std::size_t>(cell)];
    EvalContext ctx = ctx_[static_cast<std::size_t>(cell)];
    ctx.species = counts_.col(cell).data();
    c.reaction_total = 0.0;
    for (std::size_t r = 0; r < model_.reactions.size(); ++r) {
        const double a = fixed_[static_cast<std::size_t>(cell)]
                             ? 0.0   // reservoir cells hold their state: no reactions
                             : propensity(model_, model_.reactions[r], ctx.species, ctx);
        c.rxn_partial[r] = a;
        c.reaction_total += a;
    }
    c.diffusion_total = 0.0;
    for (int i = 0; i < model_.num_species(); ++i) c.diffusion_total += diffusion_partial(cell, i);
}

void SsaEngine::schedule(int cell, Rng& rng) {
    heap_update(cell, t_ + rng.exponential(cache_[static_cast<std::size_t>(cell)].total()));
}

void SsaEngine::set_state(const Eigen::MatrixXd& counts, double t) {
    if (counts.rows() != counts_.rows() || counts.cols() != counts_.cols())
        throw std::runtime_error("ssa: state shape mismatch");
    counts_ = counts;
    t_ = t;
    for (int k = 0; k < static_cast<int>(cache_.size()); ++k) recompute_cell(k);
}

void SsaEngine::refresh_all(Rng& rng) {
    for (int k = 0; k < static_cast<int>(cache_.size()); ++k) {
        recompute_cell(k);
        schedule(k, rng);
    }
}

double SsaEngine::next_time() const { return heap_time_[static_cast<std::size_t>(heap_cell_[0])]; }

double SsaEngine::cached_rate(int cell) const { return cache_[static_cast<std::size_t>(cell)].total(); }

double SsaEngine::fresh_rate(int cell) const {
    auto& self = const_cast<SsaEngine&>(*this);
    const CellCache saved = cache_[static_cast<std::size_t>(cell)];
    self.recompute_cell(cell);
    const double fresh = cache_[static_cast<std::size_t>(cell)].total();
    self.cache_[static_cast<std::size_t>(cell)] = saved;
    return fresh;
}

void SsaEngine::fire_reaction(int cell, int r) {
    const auto& rx = model_.reactions[static_cast<std::size_t>(r)];
    counts_.col(cell) -= rx.n.cast<double>();
    for (const auto& [id, need] : rx.consumed)
        if (counts_(id, cell) < 0.0)
            throw std::runtime_error("ssa: infeasible reaction fired (internal error)");
}

void SsaEngine::fire_diffusion(int cell, int species, int target) {
    if (!fixed_[static_cast<std::size_t>(cell)]) counts_(species, cell) -= 1.0;
    if (!fixed_[static_cast<std::size_t>(target)]) counts_(species, target) += 1.0;
}

Event SsaEngine::step(Rng& rng) {
    const int cell = heap_cell_[0];
    const double tnext = heap_time_[static_cast<std::size_t>(cell)];
    if (!std::isfinite(tnext)) throw std::runtime_error("ssa: no scheduled events left");
    t_ = tnext;
    auto& c = cache_[static_cast<std::size_t>(cell)];

    Event ev;
    ev.t = t_;
    ev.cell = cell;
    double target = rng.uniform() * c.total();

    if (target < c.reaction_total) {
        int chosen = -1;
        for (std::size_t r = 0; r < c.rxn_partial.size(); ++r) {
            if (c.rxn_partial[r] <= 0.0) continue;
            chosen = static_cast<int>(r);
            if (target < c.rxn_partial[r]) break;
            target -= c.rxn_partial[r];
        }
        if (chosen < 0) throw std::runtime_error("ssa: reaction scan failed (internal error)");
        fire_reaction(cell, chosen);
        ev.kind = Event::Kind::Reaction;
        ev.index = chosen;
        recompute_cell(cell);
        schedule(cell, rng);
    } else {
        target -= c.reaction_total;
        int species = -1;
        for (int i = 0; i < model_.num_species(); ++i) {
            const double p = diffusion_partial(cell, i);
            if (p <= 0.0) continue;
            species = i;
            if (target < p) break;
            target -= p;
        }
        if (species < 0) throw std::runtime_error("ssa: diffusion scan failed (internal error)");
        // within the species, neighbors are weighted by their jump rates
        const double per_molecule =
            target / (model_.species[static_cast<std::size_t>(species)].diffscale *
                      counts_(species, cell));
        double acc = 0.0;
        int dest = neighbors_[static_cast<std::size_t>(cell)].back().first;
        for (const auto& [j, rate] : neighbors_[static_cast<std::size_t>(cell)]) {
            acc += rate;
            if (per_molecule < acc) {
                dest = j;
                break;
            }
        }
        fire_diffusion(cell, species, dest);
        ev.kind = Event::Kind::Diffusion;
        ev.index = species;
        ev.target = dest;
        recompute_cell(cell);
        schedule(cell, rng);
        if (!fixed_[static_cast<std::size_t>(dest)]) {
            recompute_cell(dest);
            schedule(dest, rng);
        }
    }

    ++events_;
    if (--rebuild_countdown_ <= 0) {
        // periodic full recompute clears accumulated floating-point drift
        for (int k = 0; k < static_cast<int>(cache_.size()); ++k) recompute_cell(k);
        rebuild_countdown_ = opt_.rebuild_interval;
    }
    return ev;
}

long long SsaEngine::run_until(double t_end, Rng& rng) {
    long long fired = 0;
    while (next_time() <= t_end) {
        step(rng);
        ++fired;
    }
    t_ = t_end;
    return fired;
}

void SsaEngine::heap_update(int cell, double t) {
    heap_time_[static_cast<std::size_t>(cell)] = t;
    heap_sift_up(heap_pos_[static_cast<std::size_t>(cell)]);
    heap_sift_down(heap_pos_[static_cast<std::size_t>(cell)]);
}

void SsaEngine::heap_sift_up(int pos) {
    while (pos > 0) {
        const int parent = (pos - 1) / 2;
        const int c = heap_cell_[static_cast<std::size_t>(pos)];
        const int p = heap_cell_[static_cast<std::size_t>(parent)];
        if (heap_time_[static_cast<std::size_t>(c)] >= heap_time_[static_cast<std::size_t>(p)]) break;
        std::swap(heap_cell_[static_cast<std::size_t>(pos)], heap_cell_[static_cast<std::size_t>(parent)]);
        heap_pos_[static_cast<std::size_t>(c)] = parent;
        heap_pos_[static_cast<std::size_t>(p)] = pos;
        pos = parent;
    }
}

void SsaEngine::heap_sift_down(int pos) {
    const int n = static_cast<int>(heap_cell_.size());
    while (true) {
        int best = pos;
        for (int child = 2 * pos + 1; child <= 2 * pos + 2 && child < n; ++child)
            if (heap_time_[static_cast<std::size_t>(heap_cell_[static_cast<std::size_t>(child)])] <
                heap_time_[static_cast<std::size_t>(heap_cell_[static_cast<std::size_t>(best)])])
                best = child;
        if (best == pos) return;
        const int a = heap_cell_[static_cast<std::size_t>(pos)];
        const int b = heap_cell_[static_cast<std::size_t>(best)];
        std::swap(heap_cell_[static_cast<std::size_t>(pos)], heap_cell_[static_cast<std::size_t>(best)]);
        heap_pos_[static_cast<std::size_t>(a)] = best;
        heap_pos_[static_cast<std::size_t>(b)] = pos;
        pos = best;
    }
}

}  // namespace rdme
