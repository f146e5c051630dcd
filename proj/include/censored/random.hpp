#pragma once

// Per-path random substreams and the deterministic block reduction used by
// every estimator.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

#include "censored/point.hpp"

namespace censored {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the substream for path `index` of stream `stream` under `seed`.
/// Identical triples always give identical substreams.
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) + index);
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return Rng(substream_seed(seed, stream, index));
}

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform on (0, 1]; safe as an argument of log.
inline double uniform_pos(Rng& rng) { return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53; }

inline double standard_normal(Rng& rng) {
    std::normal_distribution<double> nd;
    return nd(rng);
}

/// Uniform direction on S^{n-1}.
inline Point random_direction(int n, Rng& rng) {
    Point d(n);
    switch (n) {
        case 1:
            d[0] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
            break;
        case 2: {
            const double th = 2.0 * M_PI * uniform01(rng);
            d[0] = std::cos(th);
            d[1] = std::sin(th);
            break;
        }
        default: {
            const double z = 2.0 * uniform01(rng) - 1.0;
            const double th = 2.0 * M_PI * uniform01(rng);
            const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
            d[0] = s * std::cos(th);
            d[1] = s * std::sin(th);
            d[2] = z;
            break;
        }
    }
    return d;
}

inline int resolve_workers(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Evaluate `fn(begin, end)` on fixed-size index blocks, possibly in
/// parallel, and fold the partial results with `combine` in block order.
/// The result is bitwise independent of the worker count.
template <class Partial, class Fn, class Combine>
Partial block_reduce(std::uint64_t n_items, std::uint64_t block_size, int workers, Fn&& fn, Combine&& combine,
                     Partial init = Partial{}) {
    if (n_items == 0) return init;
    block_size = std::max<std::uint64_t>(1, block_size);
    const std::uint64_t n_blocks = (n_items + block_size - 1) / block_size;
    std::vector<Partial> parts(n_blocks);
    std::atomic<std::uint64_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
        for (;;) {
            const std::uint64_t b = next.fetch_add(1);
            if (b >= n_blocks) return;
            const std::uint64_t lo = b * block_size;
            const std::uint64_t hi = std::min(n_items, lo + block_size);
            try {
                parts[b] = fn(lo, hi);
            } catch (...) {
                std::lock_guard<std::mutex> lk(failure_mu);
                if (!failure) failure = std::current_exception();
                next.store(n_blocks);
                return;
            }
        }
    };

    const int n_threads = static_cast<int>(std::min<std::uint64_t>(resolve_workers(workers), n_blocks));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(n_threads);
        for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    Partial acc = std::move(init);
    for (auto& p : parts) combine(acc, p);
    return acc;
}

}  // namespace censored
