#pragma once
// Bohr sets in Z/pZ (centred and uncentred), the regularity test, and the
// regular-radius search.

#include <optional>

#include "ap4/cyclic.hpp"

namespace ap4 {

struct BohrSpec {
    int64_t p;
    std::vector<int64_t> freqs;    // distinct frequencies xi in Z/pZ
    std::vector<double> offsets;   // alpha_xi in [0,1); all zero for centred
    double rho;                    // radius in (0,1)

    BohrSpec(int64_t p_, std::vector<int64_t> freqs_, std::vector<double> offsets_, double rho_)
        : p(p_), freqs(std::move(freqs_)), offsets(std::move(offsets_)), rho(rho_) {
        if (freqs.size() != offsets.size())
            throw std::invalid_argument("BohrSpec: |S| must equal |alpha|");
        if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("BohrSpec: rho must be in (0,1)");
        for (auto& f : freqs) f = posmod(f, p);
        for (auto& a : offsets) a = mod1(a);
        std::vector<int64_t> sorted = freqs;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
            throw std::invalid_argument("BohrSpec: frequencies must be distinct");
    }

    int rank() const { return static_cast<int>(freqs.size()); }

    // max_xi ||xi x / p - alpha_xi||; -infinity convention (always member)
    // for the empty frequency set.
    double constraint(int64_t x) const {
        double m = -1.0;
        for (size_t i = 0; i < freqs.size(); ++i) {
            double t = torus_norm(static_cast<double>(mulmod(freqs[i], posmod(x, p), p)) /
                                      static_cast<double>(p) -
                                  offsets[i]);
            m = std::max(m, t);
        }
        return m;
    }

    bool contains(int64_t x) const { return constraint(x) < rho; }
};

struct BohrSet {
    BohrSpec spec;
    std::vector<int64_t> members;  // sorted
};

// Exact membership by scanning all p residues; strict inequality.
inline BohrSet build_bohr(const BohrSpec& spec) {
    BohrSet b{spec, {}};
    for (int64_t x = 0; x < spec.p; ++x)
        if (spec.contains(x)) b.members.push_back(x);
    return b;
}

struct RegularityReport {
    bool regular = false;
    double worst_kappa = 0.0;
    double worst_ratio = 0.0;   // max of required-bound ratios; <= 1 means regular
    double worst_excess = 0.0;  // count excess beyond the allowed bound
    int64_t base_size = 0;
};

namespace detail {
// |B(S, r)| = #{x : constraint(x) < r} via a sorted constraint table.
inline int64_t bohr_count(const std::vector<double>& sorted_constraints, double r) {
    return static_cast<int64_t>(std::lower_bound(sorted_constraints.begin(), sorted_constraints.end(), r) -
                                sorted_constraints.begin());
}
}  // namespace detail

// Regularity test: (1 - 100 d |k|) |B(rho)| <= |B((1+k) rho)| <=
// (1 + 100 d |k|) |B(rho)| for all |k| <= 1/100d.  |B(r)| is a step function
// of r, so the continuum of kappa reduces to a finite check at the membership
// breakpoints (plus the endpoints).
inline RegularityReport is_regular(const BohrSpec& spec) {
    const int d = spec.rank();
    if (d < 1) throw std::invalid_argument("is_regular: rank must be >= 1");
    if (!(spec.rho < 0.5)) throw std::invalid_argument("is_regular: definition requires rho < 1/2");
    const double kmax = 1.0 / (100.0 * d);

    std::vector<double> per_x(static_cast<size_t>(spec.p));
    for (int64_t x = 0; x < spec.p; ++x) per_x[static_cast<size_t>(x)] = spec.constraint(x);
    std::vector<double> sorted = per_x;
    std::sort(sorted.begin(), sorted.end());

    const int64_t base = detail::bohr_count(sorted, spec.rho);

    // candidate kappas: just below / at / just above every per-(x,xi)
    // breakpoint in range, plus the endpoints and zero
    std::vector<double> kappas = {-kmax, 0.0, kmax};
    const double lo = (1.0 - kmax) * spec.rho, hi = (1.0 + kmax) * spec.rho;
    for (size_t i = 0; i < spec.freqs.size(); ++i)
        for (int64_t x = 0; x < spec.p; ++x) {
            double t = torus_norm(static_cast<double>(mulmod(spec.freqs[i], x, spec.p)) /
                                      static_cast<double>(spec.p) -
                                  spec.offsets[i]);
            if (t < lo || t > hi) continue;
            double k = t / spec.rho - 1.0;
            for (double kk : {k - 1e-12, k, k + 1e-12})
                if (kk >= -kmax && kk <= kmax) kappas.push_back(kk);
        }

    RegularityReport rep;
    rep.base_size = base;
    rep.worst_excess = -std::numeric_limits<double>::infinity();
    rep.worst_ratio = 0.0;
    for (double k : kappas) {
        const int64_t n = detail::bohr_count(sorted, (1.0 + k) * spec.rho);
        const double up = (1.0 + 100.0 * d * std::abs(k)) * static_cast<double>(base);
        const double dn = (1.0 - 100.0 * d * std::abs(k)) * static_cast<double>(base);
        const double excess = std::max(static_cast<double>(n) - up, dn - static_cast<double>(n));
        double ratio = 0.0;
        if (up > 0.0) ratio = std::max(ratio, static_cast<double>(n) / up);
        else if (n > 0) ratio = std::numeric_limits<double>::infinity();
        if (n > 0) ratio = std::max(ratio, dn / static_cast<double>(n));
        else if (dn > 0.0) ratio = std::numeric_limits<double>::infinity();
        if (excess > rep.worst_excess) {
            rep.worst_excess = excess;
            rep.worst_kappa = k;
        }
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
    }
    rep.regular = rep.worst_excess <= tol::ineq;
    return rep;
}

// Some regular rho in [eps, 2 eps]: midpoints between consecutive membership
// breakpoints first, then a uniform grid of 10^4 points.  Deterministic order.
inline double find_regular_radius(int64_t p, const std::vector<int64_t>& freqs,
                                  const std::vector<double>& offsets, double eps) {
    if (!(eps > 0.0 && 2.0 * eps < 0.5))
        throw std::invalid_argument("find_regular_radius: need 0 < eps and 2 eps < 1/2");
    if (freqs.empty()) throw std::invalid_argument("find_regular_radius: rank must be >= 1");
    BohrSpec probe(p, freqs, offsets, eps);  // validates inputs; rho re-set per candidate

    std::vector<double> breaks = {eps, 2.0 * eps};
    for (int64_t x = 0; x < p; ++x) {
        double t = probe.constraint(x);
        if (t >= eps && t <= 2.0 * eps) breaks.push_back(t);
    }
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

    std::vector<double> candidates;
    for (size_t i = 0; i + 1 < breaks.size(); ++i) candidates.push_back(0.5 * (breaks[i] + breaks[i + 1]));
    constexpr int kGrid = 10000;
    for (int i = 0; i <= kGrid; ++i)
        candidates.push_back(eps + (eps * static_cast<double>(i)) / static_cast<double>(kGrid));

    for (double rho : candidates) {
        if (rho <= 0.0 || rho >= 0.5) continue;
        BohrSpec s(p, freqs, offsets, rho);
        if (is_regular(s).regular) return rho;
    }
    throw std::runtime_error("find_regular_radius: no regular radius located (numerical trouble)");
}

}  // namespace ap4
