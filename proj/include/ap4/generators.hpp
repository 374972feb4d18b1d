#pragma once
// Dataset generators for tests and the CLI: intervals, seeded random sets,
// greedy 4-AP-free sets, and planted quadratic perturbations.

#include "ap4/cyclic.hpp"

namespace ap4 {

// Does A (as integers) contain a 4-term progression with nonzero step?
inline bool has_ap4(const std::vector<int64_t>& A) {
    std::vector<int64_t> sorted = A;
    std::sort(sorted.begin(), sorted.end());
    std::vector<char> in_a;
    int64_t lo = sorted.empty() ? 0 : sorted.front();
    int64_t hi = sorted.empty() ? 0 : sorted.back();
    in_a.assign(static_cast<size_t>(hi - lo + 1), 0);
    for (int64_t a : sorted) in_a[static_cast<size_t>(a - lo)] = 1;
    auto member = [&](int64_t x) { return x >= lo && x <= hi && in_a[static_cast<size_t>(x - lo)]; };
    for (size_t i = 0; i < sorted.size(); ++i)
        for (size_t j = i + 1; j < sorted.size(); ++j) {
            int64_t h = sorted[j] - sorted[i];
            if (member(sorted[j] + h) && member(sorted[j] + 2 * h)) return true;
        }
    return false;
}

inline bool is_ap4_free(const std::vector<int64_t>& A) { return !has_ap4(A); }

inline std::vector<int64_t> gen_interval(int64_t N) {
    std::vector<int64_t> out(static_cast<size_t>(N));
    for (int64_t i = 0; i < N; ++i) out[static_cast<size_t>(i)] = i + 1;
    return out;
}

inline std::vector<int64_t> gen_random_set(int64_t N, double delta, uint64_t seed) {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw std::invalid_argument("gen_random_set: delta must lie in [0,1]");
    Rng rng(seed);
    std::vector<int64_t> out;
    for (int64_t i = 1; i <= N; ++i)
        if (rng.uniform() < delta) out.push_back(i);
    return out;
}

// Scan 1..N, adding n whenever it completes no 4-term progression inside the
// set built so far.  Verified 4-AP-free before returning.
inline std::vector<int64_t> gen_ap4free_greedy(int64_t N) {
    std::vector<int64_t> out;
    std::vector<char> in_a(static_cast<size_t>(N + 1), 0);
    for (int64_t n = 1; n <= N; ++n) {
        bool ok = true;
        for (int64_t h = 1; 3 * h < n && ok; ++h)
            if (in_a[static_cast<size_t>(n - h)] && in_a[static_cast<size_t>(n - 2 * h)] &&
                in_a[static_cast<size_t>(n - 3 * h)])
                ok = false;
        if (ok) {
            out.push_back(n);
            in_a[static_cast<size_t>(n)] = 1;
        }
    }
    if (has_ap4(out)) throw std::runtime_error("gen_ap4free_greedy: verification failed -- defect");
    return out;
}

// delta 1_[N] plus an amplitude-amp cosine of a global quadratic phase,
// supported on [N].  Real-valued; bounded by delta + amp.
inline CyclicFunction gen_planted_quadratic(const IntervalEmbedding& emb, double delta, double amp,
                                            int64_t qa, int64_t qb) {
    if (delta + amp > 1.0 + tol::identity || delta - amp < -1.0 - tol::identity)
        throw std::invalid_argument("gen_planted_quadratic: values must stay within [-1,1]");
    const int64_t p = emb.mod.p;
    std::vector<cd> vals(static_cast<size_t>(p), 0.0);
    for (int64_t x = 1; x <= emb.N; ++x) {
        int64_t v = posmod(mulmod(qa, mulmod(x, x, p), p) + mulmod(qb, x, p), p);
        double phase = static_cast<double>(v) / static_cast<double>(p);
        vals[static_cast<size_t>(x)] = delta + amp * std::cos(2.0 * kPi * phase);
    }
    return CyclicFunction(emb.mod, std::move(vals), delta + amp <= 1.0 + tol::identity);
}

}  // namespace ap4
