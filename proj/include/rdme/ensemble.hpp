#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

#include "rdme/rng.hpp"

namespace rdme {

// Deterministic ensemble runner. Trajectory i always gets the stream
// derived from (master_seed, i); with threads > 1 the index range is split
// into contiguous blocks, each folded sequentially into its own
// accumulator, and block results merge in block order — so results are
// bit-identical for any thread count.
template <class Acc>
Acc run_ensemble(long long trajectories, std::uint64_t master_seed, int threads,
                 const std::function<void(long long, Rng&, Acc&)>& body,
                 const std::function<void(Acc&, const Acc&)>& merge, Acc init) {
    if (threads <= 1 || trajectories < 2 * threads) {
        Acc acc = init;
        for (long long i = 0; i < trajectories; ++i) {
            Rng rng = Rng::for_trajectory(master_seed, static_cast<std::uint64_t>(i));
            body(i, rng, acc);
        }
        return acc;
    }
    const int n = threads;
    std::vector<Acc> partial(static_cast<std::size_t>(n), init);
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n));
    for (int w = 0; w < n; ++w) {
        const long long lo = trajectories * w / n;
        const long long hi = trajectories * (w + 1) / n;
        pool.emplace_back([&, w, lo, hi] {
            for (long long i = lo; i < hi; ++i) {
                Rng rng = Rng::for_trajectory(master_seed, static_cast<std::uint64_t>(i));
                body(i, rng, partial[static_cast<std::size_t>(w)]);
            }
        });
    }
    for (auto& th : pool) th.join();
    Acc acc = init;
    for (int w = 0; w < n; ++w) merge(acc, partial[static_cast<std::size_t>(w)]);
    return acc;
}

// Streaming mean/variance accumulator (Welford) over vector-valued samples.
struct RunningMoments {
    long long n = 0;
    Eigen::VectorXd mean;
    Eigen::VectorXd m2;

    void add(const Eigen::VectorXd& x) {
        if (n == 0) {
            mean = Eigen::VectorXd::Zero(x.size());
            m2 = Eigen::VectorXd::Zero(x.size());
        }
        ++n;
        Eigen::VectorXd d = x - mean;
        mean += d / static_cast<double>(n);
        m2.array() += d.array() * (x - mean).array();
    }
    void merge(const RunningMoments& o) {
        if (o.n == 0) return;
        if (n == 0) { *this = o; return; }
        const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
        Eigen::VectorXd d = o.mean - mean;
        mean = (na * mean + nb * o.mean) / (na + nb);
        m2 += o.m2 + d.array().square().matrix() * (na * nb / (na + nb));
        n += o.n;
    }
    Eigen::VectorXd variance() const {
        return n > 1 ? Eigen::VectorXd(m2 / static_cast<double>(n - 1))
                     : Eigen::VectorXd::Zero(mean.size());
    }
};

}  // namespace rdme
