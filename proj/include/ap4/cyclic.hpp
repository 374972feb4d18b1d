#pragma once
// Arithmetic over Z/pZ: dense complex-valued functions, expectations, L^p
// norms, interval embeddings and prime selection.

#include <algorithm>
#include <limits>
#include <span>
#include <string>

#include "ap4/common.hpp"

namespace ap4 {

inline bool is_prime(int64_t n) {
    if (n < 2) return false;
    if (n < 4) return true;
    if (n % 2 == 0) return false;
    for (int64_t q = 3; q * q <= n; q += 2)
        if (n % q == 0) return false;
    return true;
}

struct Modulus {
    int64_t p;

    explicit Modulus(int64_t p_) : p(p_) {
        if (p < 5) throw std::invalid_argument("Modulus: p must be >= 5");
        if (!is_prime(p)) throw std::invalid_argument("Modulus: p = " + std::to_string(p) + " is not prime");
    }
};

// Smallest prime p with 4N < p <= 8N.
inline Modulus find_prime(int64_t N) {
    if (N < 1) throw std::invalid_argument("find_prime: N must be >= 1");
    for (int64_t q = 4 * N + 1; q <= 8 * N; ++q)
        if (is_prime(q)) return Modulus(q);
    // Bertrand guarantees a prime in (4N, 8N]; reaching here is a defect.
    throw std::runtime_error("find_prime: no prime in (4N, 8N] -- defect");
}

struct CyclicFunction {
    int64_t p = 0;
    std::vector<cd> v;
    bool one_bounded = false;

    CyclicFunction() = default;
    CyclicFunction(const Modulus& m, std::vector<cd> values, bool claim_one_bounded = false)
        : p(m.p), v(std::move(values)) {
        if (static_cast<int64_t>(v.size()) != p)
            throw std::invalid_argument("CyclicFunction: value count must equal p");
        if (claim_one_bounded) assert_one_bounded();
    }

    cd at(int64_t x) const { return v[static_cast<size_t>(posmod(x, p))]; }

    double max_abs() const {
        double m = 0.0;
        for (const cd& z : v) m = std::max(m, std::abs(z));
        return m;
    }

    void assert_one_bounded() {
        if (max_abs() > 1.0 + tol::identity)
            throw std::invalid_argument("CyclicFunction: 1-bounded flag asserted but max |f| exceeds 1");
        one_bounded = true;
    }
};

inline CyclicFunction constant_function(const Modulus& m, cd value) {
    CyclicFunction f(m, std::vector<cd>(static_cast<size_t>(m.p), value),
                     std::abs(value) <= 1.0 + tol::identity);
    return f;
}

// N embeddable in Z/pZ with room for 4-term progressions: 4N < p <= 8N.
struct IntervalEmbedding {
    int64_t N;
    Modulus mod;

    IntervalEmbedding(int64_t N_, Modulus m) : N(N_), mod(m) {
        if (N < 1) throw std::invalid_argument("IntervalEmbedding: N must be >= 1");
        if (!(4 * N < mod.p && mod.p <= 8 * N))
            throw std::invalid_argument("IntervalEmbedding: need 4N < p <= 8N");
    }

    std::vector<int64_t> interval() const {
        std::vector<int64_t> r(static_cast<size_t>(N));
        for (int64_t i = 0; i < N; ++i) r[static_cast<size_t>(i)] = i + 1;
        return r;
    }
};

// Expectation over an explicit domain of residues.
inline cd expectation(const CyclicFunction& f, std::span<const int64_t> domain) {
    if (domain.empty()) throw std::invalid_argument("expectation: empty domain");
    cd s = 0.0;
    for (int64_t x : domain) s += f.at(x);
    return s / static_cast<double>(domain.size());
}

// Expectation over all of Z/pZ (fixed ascending order).
inline cd expectation(const CyclicFunction& f) {
    cd s = 0.0;
    for (const cd& z : f.v) s += z;
    return s / static_cast<double>(f.p);
}

inline double lp_norm(const CyclicFunction& f, double exponent, std::span<const int64_t> domain) {
    if (domain.empty()) throw std::invalid_argument("lp_norm: empty domain");
    if (std::isinf(exponent)) {
        double m = 0.0;
        for (int64_t x : domain) m = std::max(m, std::abs(f.at(x)));
        return m;
    }
    if (exponent < 1.0) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    double s = 0.0;
    for (int64_t x : domain) s += std::pow(std::abs(f.at(x)), exponent);
    return std::pow(s / static_cast<double>(domain.size()), 1.0 / exponent);
}

inline double lp_norm(const CyclicFunction& f, double exponent) {
    if (std::isinf(exponent)) return f.max_abs();
    if (exponent < 1.0) throw std::invalid_argument("lp_norm: exponent must be >= 1");
    double s = 0.0;
    for (const cd& z : f.v) s += std::pow(std::abs(z), exponent);
    return std::pow(s / static_cast<double>(f.p), 1.0 / exponent);
}

inline double l1_norm(const CyclicFunction& f) { return lp_norm(f, 1.0); }
inline double l2_norm(const CyclicFunction& f) { return lp_norm(f, 2.0); }

// Indicator of A subseteq [1,N] as a function on Z/pZ.  N < p/4 keeps the
// embedded copy Freiman isomorphic of order 2, so 4-term progressions are
// preserved in both directions.
inline CyclicFunction embed_set(std::span<const int64_t> A, const IntervalEmbedding& emb) {
    std::vector<cd> vals(static_cast<size_t>(emb.mod.p), 0.0);
    for (int64_t a : A) {
        if (a < 1 || a > emb.N)
            throw std::invalid_argument("embed_set: element " + std::to_string(a) + " outside [1,N]");
        vals[static_cast<size_t>(a)] = 1.0;
    }
    return CyclicFunction(emb.mod, std::move(vals), true);
}

inline CyclicFunction pointwise(const CyclicFunction& a, const CyclicFunction& b,
                                cd (*op)(const cd&, const cd&)) {
    if (a.p != b.p) throw std::invalid_argument("pointwise: modulus mismatch");
    std::vector<cd> vals(a.v.size());
    for (size_t i = 0; i < vals.size(); ++i) vals[i] = op(a.v[i], b.v[i]);
    return CyclicFunction(Modulus(a.p), std::move(vals));
}

inline CyclicFunction subtract(const CyclicFunction& a, const CyclicFunction& b) {
    return pointwise(a, b, +[](const cd& x, const cd& y) { return x - y; });
}

inline CyclicFunction add(const CyclicFunction& a, const CyclicFunction& b) {
    return pointwise(a, b, +[](const cd& x, const cd& y) { return x + y; });
}

inline CyclicFunction scale(const CyclicFunction& a, cd c) {
    std::vector<cd> vals(a.v.size());
    for (size_t i = 0; i < vals.size(); ++i) vals[i] = c * a.v[i];
    return CyclicFunction(Modulus(a.p), std::move(vals));
}

}  // namespace ap4
