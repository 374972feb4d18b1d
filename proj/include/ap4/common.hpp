#pragma once
// Shared plumbing: canonical mod-1 reduction, torus distance, complex
// exponentials, deterministic RNG, and the ordered-chunk reduction used by
// the parallel kernels.

#include <array>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

namespace ap4 {

using cd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Centralized tolerances: one slack for inequality checks, one for identities.
namespace tol {
inline constexpr double ineq = 1e-9;
inline constexpr double identity = 1e-12;
}  // namespace tol

// Single canonicalization routine for R/Z values; everything that reduces
// mod 1 goes through here so results are deterministic.
inline double mod1(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;
    if (r < 0.0) r += 1.0;
    return r;
}

// Distance to the nearest integer, ||x||_{R/Z} in [0, 1/2].
inline double torus_norm(double x) {
    double r = mod1(x);
    return r <= 0.5 ? r : 1.0 - r;
}

// Signed difference to the nearest integer, {x} in (-1/2, 1/2].
inline double signed_frac(double x) {
    double r = mod1(x);
    return r <= 0.5 ? r : r - 1.0;
}

// e(x) = exp(2 pi i x)
inline cd e_of(double x) {
    double t = 2.0 * kPi * mod1(x);
    return cd(std::cos(t), std::sin(t));
}

inline int64_t mulmod(int64_t a, int64_t b, int64_t p) {
    return static_cast<int64_t>((__int128)a * b % p);
}

inline int64_t posmod(int64_t a, int64_t p) {
    int64_t r = a % p;
    return r < 0 ? r + p : r;
}

// xoshiro256** with splitmix64 seeding.  Hand-rolled so that seeded runs are
// reproducible across standard libraries.
struct Rng {
    std::array<uint64_t, 4> s{};

    explicit Rng(uint64_t seed) {
        uint64_t z = seed;
        for (auto& si : s) {
            z += 0x9e3779b97f4a7c15ULL;
            uint64_t t = z;
            t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
            t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
            si = t ^ (t >> 31);
        }
    }

    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t next() {
        uint64_t result = rotl(s[1] * 5, 7) * 9;
        uint64_t t = s[1] << 17;
        s[2] ^= s[0];
        s[3] ^= s[1];
        s[1] ^= s[2];
        s[0] ^= s[3];
        s[2] ^= t;
        s[3] = rotl(s[3], 45);
        return result;
    }

    double uniform() { return (next() >> 11) * 0x1.0p-53; }

    uint64_t below(uint64_t n) {
        return static_cast<uint64_t>(((unsigned __int128)next() * n) >> 64);
    }

    // inclusive range
    int64_t range(int64_t lo, int64_t hi) {
        return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo + 1)));
    }

    double uniform_signed() { return 2.0 * uniform() - 1.0; }

    cd unit_disc() {
        // rejection-free polar sample; modulus <= 1
        double r = std::sqrt(uniform());
        double a = uniform();
        return r * e_of(a);
    }
};

// Worker count for the parallelizable kernels; 1 = serial.  Results are
// independent of this value because reductions always combine fixed-size
// chunks in index order.
inline std::atomic<int>& worker_count() {
    static std::atomic<int> n{1};
    return n;
}

inline void set_worker_count(int n) { worker_count() = n < 1 ? 1 : n; }

// Evaluates chunk_fn(c) for c = 0..nchunks-1 and sums the results in chunk
// order.  Chunk boundaries are caller-fixed, so the reduction is bit-stable
// for every worker count.
template <typename T, typename F>
T chunked_sum(int64_t nchunks, F&& chunk_fn) {
    int workers = worker_count();
    if (workers <= 1 || nchunks <= 1) {
        T total{};
        for (int64_t c = 0; c < nchunks; ++c) total += chunk_fn(c);
        return total;
    }
    std::vector<T> parts(static_cast<size_t>(nchunks));
    std::atomic<int64_t> idx{0};
    auto run = [&] {
        for (;;) {
            int64_t c = idx.fetch_add(1);
            if (c >= nchunks) break;
            parts[static_cast<size_t>(c)] = chunk_fn(c);
        }
    };
    std::vector<std::thread> pool;
    int nthreads = static_cast<int>(std::min<int64_t>(workers, nchunks));
    pool.reserve(static_cast<size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(run);
    for (auto& th : pool) th.join();
    T total{};
    for (auto& part : parts) total += part;
    return total;
}

// Labeled pipeline failures (expected terminations at desk scale) are kept
// apart from precondition errors and internal defects.
struct pipeline_error : std::runtime_error {
    std::string stage;
    pipeline_error(std::string stage_, const std::string& what_)
        : std::runtime_error(what_), stage(std::move(stage_)) {}
};

}  // namespace ap4
