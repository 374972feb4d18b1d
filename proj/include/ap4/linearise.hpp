#pragma once
// Partitioning quadratic Bohr atoms into disjoint arithmetic progressions,
// certificate validation, and the pigeonhole selection of a dense long part.

#include "ap4/factors.hpp"
#include "ap4/recurrence.hpp"

namespace ap4 {

struct CertReport {
    int64_t piece_count = 0;
    int64_t singleton_count = 0;
    double predicted_bound = 0.0;   // paper-shaped count bound, report-only
    std::string bound_expr;
    int64_t max_runs_per_q = 0;     // against the O(d)^d prediction
    double dd_prediction = 0.0;
    double achieved_r_value = 0.0;  // max_j ||alpha_j r^2|| from the r-search
    int64_t r = 0, s = 0;
};

struct PartitionCertificate {
    int64_t p = 0;
    std::vector<int64_t> target;  // sorted residues
    std::vector<APPiece> pieces;
    CertReport report;
};

// Pieces pairwise disjoint, every piece a genuine progression with distinct
// elements, union exactly the target.  Exact set comparison, no tolerance.
inline bool validate_partition(const PartitionCertificate& cert) {
    std::vector<int64_t> all;
    for (const auto& piece : cert.pieces) {
        if (piece.length < 1) return false;
        if (piece.length > 1 && posmod(piece.step, cert.p) == 0) return false;
        auto els = piece.elements(cert.p);
        std::vector<int64_t> sorted_els = els;
        std::sort(sorted_els.begin(), sorted_els.end());
        if (std::adjacent_find(sorted_els.begin(), sorted_els.end()) != sorted_els.end())
            return false;  // repeated element within a piece
        all.insert(all.end(), els.begin(), els.end());
    }
    std::sort(all.begin(), all.end());
    if (std::adjacent_find(all.begin(), all.end()) != all.end()) return false;  // overlap
    std::vector<int64_t> target = cert.target;
    std::sort(target.begin(), target.end());
    return all == target;
}

struct PigeonholeResult {
    int index = 0;
    double density = 0.0;  // P_B(A_i)
    double mean = 0.0;     // E_{A_i}(f)
};

// Returns a part with P_B(A_i) > eps/m and E_{A_i}(f) >= E_B(f) - eps; among
// the qualifying parts the one with the largest mean (ties -> smallest index).
inline PigeonholeResult pigeonhole_best_part(const std::vector<std::vector<int64_t>>& parts,
                                             const CyclicFunction& f, double eps) {
    if (!(eps > 0.0 && eps < 1.0))
        throw std::invalid_argument("pigeonhole_best_part: eps must lie in (0,1)");
    const int m = static_cast<int>(parts.size());
    if (m == 0) throw std::invalid_argument("pigeonhole_best_part: no parts");
    int64_t total = 0;
    std::vector<char> seen(static_cast<size_t>(f.p), 0);
    for (const auto& part : parts)
        for (int64_t x : part) {
            int64_t xm = posmod(x, f.p);
            if (seen[static_cast<size_t>(xm)])
                throw std::invalid_argument("pigeonhole_best_part: parts overlap");
            seen[static_cast<size_t>(xm)] = 1;
            ++total;
            double re = f.at(x).real();
            if (re < -tol::ineq || std::abs(f.at(x).imag()) > tol::ineq || re > 1.0 + tol::ineq)
                throw std::invalid_argument("pigeonhole_best_part: f must be 1-bounded non-negative");
        }
    if (total == 0) throw std::invalid_argument("pigeonhole_best_part: empty union");

    PigeonholeResult best;
    bool found = false;
    for (int i = 0; i < m; ++i) {
        const auto& part = parts[static_cast<size_t>(i)];
        double density = static_cast<double>(part.size()) / static_cast<double>(total);
        if (!(density > eps / static_cast<double>(m))) continue;
        double s = 0.0;
        for (int64_t x : part) s += f.at(x).real();
        double mean = s / static_cast<double>(part.size());
        if (!found || mean > best.mean) {
            best = {i, density, mean};
            found = true;
        }
    }
    if (!found)
        throw std::runtime_error("pigeonhole_best_part: no qualifying part -- defect");
    return best;
}

struct BohrAtomData {
    std::vector<int64_t> members;   // the atom, exact stored member set
    std::vector<int64_t> freqs;     // generating frequencies S
    std::vector<double> offsets;    // effective offsets (cell-shifted)
    int K = 1;
};

// Linearisation of a linear Bohr atom intersected with
// [N]: pick r with ||xi r / p|| small for all xi in S u {1}, then cut the
// full r-cycle of Z/pZ into maximal runs of the target.  Exact by
// construction; the piece count is compared with 2^{d1} N^{1 - 1/(d1+1)}.
inline PartitionCertificate linearise_linear_atom(const BohrAtomData& atom,
                                                  const IntervalEmbedding& emb) {
    const int64_t p = emb.mod.p;
    const int64_t N = emb.N;
    PartitionCertificate cert;
    cert.p = p;

    std::vector<char> in_target(static_cast<size_t>(p), 0);
    for (int64_t x : atom.members)
        if (x >= 1 && x <= N) {
            in_target[static_cast<size_t>(x)] = 1;
            cert.target.push_back(x);
        }
    std::sort(cert.target.begin(), cert.target.end());

    // r-search over S u {1}
    std::vector<double> alphas;
    bool has_one = false;
    for (int64_t xi : atom.freqs) {
        alphas.push_back(static_cast<double>(posmod(xi, p)) / static_cast<double>(p));
        if (posmod(xi, p) == 1) has_one = true;
    }
    if (!has_one) alphas.push_back(1.0 / static_cast<double>(p));
    SearchResult rsearch = kronecker_search(alphas, std::max<int64_t>(N, 1));
    const int64_t r = rsearch.n;
    if (r <= 0 || r % p == 0)
        throw std::runtime_error("linearise_linear_atom: r-search returned invalid step -- defect");
    cert.report.r = r;
    cert.report.achieved_r_value = rsearch.value;

    // walk the full r-cycle; 0 is never in the target, so no run wraps
    int64_t run_start = -1, run_len = 0;
    int64_t x = 0;
    for (int64_t j = 0; j < p; ++j) {
        if (in_target[static_cast<size_t>(x)]) {
            if (run_len == 0) run_start = x;
            ++run_len;
        } else if (run_len > 0) {
            cert.pieces.push_back({run_start, r % p, run_len});
            run_len = 0;
        }
        x += r;
        if (x >= p) x -= p;
    }
    if (run_len > 0) cert.pieces.push_back({run_start, r % p, run_len});

    const double d1 = static_cast<double>(atom.freqs.size());
    cert.report.piece_count = static_cast<int64_t>(cert.pieces.size());
    cert.report.predicted_bound =
        std::pow(2.0, d1) * std::pow(static_cast<double>(N), 1.0 - 1.0 / (d1 + 1.0));
    cert.report.bound_expr = "2^d1 * N^(1 - 1/(d1+1))";
    return cert;
}

// Linearisation of a pure quadratic Bohr set inside a progression P: a
// quadratic-recurrence step r, a Kronecker step s within each step-r class,
// then an exact membership scan along every step-rs progression.  The
// interval-counting estimate of the proof is reported, never relied on.
inline PartitionCertificate linearise_pure_quadratic(const APPiece& P,
                                                     const std::vector<QuadraticPhaseOnAP>& phases,
                                                     int K, const std::vector<int>& selector,
                                                     int64_t p) {
    if (phases.size() != selector.size())
        throw std::invalid_argument("linearise_pure_quadratic: selector size mismatch");
    for (const auto& ph : phases)
        if (ph.prog.start != P.start || ph.prog.step != P.step || ph.prog.length != P.length)
            throw std::invalid_argument("linearise_pure_quadratic: phase not defined on P");
    const int d = static_cast<int>(phases.size());
    const int64_t M = P.length;

    PartitionCertificate cert;
    cert.p = p;

    auto residue_at = [&](int64_t n) {  // position n = 1..M
        return posmod(P.start + (n - 1) * posmod(P.step, p), p);
    };
    auto member = [&](int64_t n) {
        for (int j = 0; j < d; ++j)
            if (phases[static_cast<size_t>(j)].cell(n, K) != selector[static_cast<size_t>(j)]) return false;
        return true;
    };
    for (int64_t n = 1; n <= M; ++n)
        if (member(n)) cert.target.push_back(residue_at(n));
    std::sort(cert.target.begin(), cert.target.end());

    if (d == 0) {
        cert.pieces.push_back(P);
        cert.report.piece_count = 1;
        cert.report.bound_expr = "d = 0: single piece";
        return cert;
    }

    // (1) quadratic-recurrence step r over the n^2 coefficients
    std::vector<double> quad_coeffs;
    for (const auto& ph : phases) quad_coeffs.push_back(ph.a);
    int64_t sqrtM = std::max<int64_t>(1, static_cast<int64_t>(std::floor(std::sqrt(static_cast<double>(M)))));
    SearchResult rres = schmidt_search(quad_coeffs, sqrtM);
    const int64_t r = rres.n;
    cert.report.r = r;
    cert.report.achieved_r_value = rres.value;

    // (2) step-r classes of [1,M]: n = a + i r, i = 0..k_a-1
    for (int64_t a = 1; a <= std::min(r, M); ++a) {
        int64_t k = (M - a) / r + 1;
        // (3) Kronecker step s over the linear-in-i coefficients of this class
        std::vector<double> lin_coeffs;
        for (const auto& ph : phases)
            lin_coeffs.push_back(mod1(2.0 * ph.a * static_cast<double>(a) * static_cast<double>(r) +
                                      ph.b * static_cast<double>(r)));
        int64_t sqrtk = std::max<int64_t>(1, static_cast<int64_t>(std::floor(std::sqrt(static_cast<double>(k)))));
        SearchResult sres = kronecker_search(lin_coeffs, sqrtk);
        const int64_t s = sres.n;
        cert.report.s = std::max(cert.report.s, s);

        // (4)+(5) step-rs progressions: i = b + t s; exact membership scan in t
        for (int64_t b = 0; b < std::min(s, k); ++b) {
            int64_t run_start_n = -1, run_len = 0, runs_here = 0;
            for (int64_t t = 0;; ++t) {
                int64_t i = b + t * s;
                if (i >= k) break;
                int64_t n = a + i * r;
                if (member(n)) {
                    if (run_len == 0) run_start_n = n;
                    ++run_len;
                } else if (run_len > 0) {
                    cert.pieces.push_back(
                        {residue_at(run_start_n), posmod(posmod(P.step, p) * ((r * s) % p), p), run_len});
                    ++runs_here;
                    run_len = 0;
                }
            }
            if (run_len > 0) {
                cert.pieces.push_back(
                    {residue_at(run_start_n), posmod(posmod(P.step, p) * ((r * s) % p), p), run_len});
                ++runs_here;
            }
            cert.report.max_runs_per_q = std::max(cert.report.max_runs_per_q, runs_here);
        }
    }
    cert.report.piece_count = static_cast<int64_t>(cert.pieces.size());
    cert.report.dd_prediction = std::pow(static_cast<double>(std::max(d, 2)), static_cast<double>(d));
    cert.report.predicted_bound =
        std::pow(static_cast<double>(std::max(d, 2)), static_cast<double>(d)) *
        std::pow(static_cast<double>(M), 1.0 - 1.0 / std::pow(1.0 + d, 3.0));
    cert.report.bound_expr = "d^O(d) * M^(1 - c/(1+d)^3)";
    return cert;
}

// Full linearisation of a quadratic Bohr atom: linearise the parent linear
// atom over [N], split short pieces into singletons, and run the pure
// quadratic lineariser on every long piece.
inline PartitionCertificate linearise_quadratic_atom(const QuadraticFactor& qf, int b2_atom_idx,
                                                     const IntervalEmbedding& emb,
                                                     int64_t small_piece_cutoff = 0) {
    const int64_t p = qf.p();
    if (b2_atom_idx < 0 || b2_atom_idx >= qf.b2.atom_count())
        throw std::invalid_argument("linearise_quadratic_atom: atom index out of range");
    const int parent = qf.b2_parent[static_cast<size_t>(b2_atom_idx)];
    const auto& b1_members = qf.b1.partition.atoms[static_cast<size_t>(parent)];
    const auto& b2_members = qf.b2.atoms[static_cast<size_t>(b2_atom_idx)];
    const auto& phases = qf.atom_phases[static_cast<size_t>(parent)];
    const auto& selector = qf.b2_cells[static_cast<size_t>(b2_atom_idx)];

    const double d1 = static_cast<double>(qf.b1.phases.size());
    if (small_piece_cutoff <= 0)
        small_piece_cutoff = static_cast<int64_t>(
            std::ceil(std::pow(static_cast<double>(emb.N), 1.0 / (2.0 * (d1 + 1.0)))));

    BohrAtomData atom;
    atom.members = b1_members;
    for (const auto& ph : qf.b1.phases) atom.freqs.push_back(ph.xi);
    atom.K = qf.K;
    if (parent < static_cast<int>(qf.b1.atom_cells.size()))
        for (size_t i = 0; i < qf.b1.phases.size(); ++i)
            atom.offsets.push_back(
                mod1(static_cast<double>(qf.b1.atom_cells[static_cast<size_t>(parent)][i]) / qf.K -
                     qf.b1.phases[i].alpha));
    PartitionCertificate base = linearise_linear_atom(atom, emb);

    std::vector<char> in_b2(static_cast<size_t>(p), 0);
    for (int64_t x : b2_members) in_b2[static_cast<size_t>(x)] = 1;

    PartitionCertificate cert;
    cert.p = p;
    cert.report = base.report;
    for (int64_t x : b2_members)
        if (x >= 1 && x <= emb.N) cert.target.push_back(x);
    std::sort(cert.target.begin(), cert.target.end());

    for (const auto& piece : base.pieces) {
        if (piece.length < small_piece_cutoff) {
            // trivial split into singletons, keeping those inside the B2 atom
            for (int64_t x : piece.elements(p))
                if (in_b2[static_cast<size_t>(x)]) {
                    cert.pieces.push_back({x, 0, 1});
                    ++cert.report.singleton_count;
                }
            continue;
        }
        std::vector<QuadraticPhaseOnAP> on_piece;
        for (const auto& g : phases) on_piece.push_back(restrict_quadratic_phase(g, piece, p));
        PartitionCertificate sub =
            linearise_pure_quadratic(piece, on_piece, qf.K, selector, p);
        // the recomputed membership must match the stored B2 atom exactly
        std::vector<int64_t> expect;
        for (int64_t x : piece.elements(p))
            if (in_b2[static_cast<size_t>(x)]) expect.push_back(x);
        std::sort(expect.begin(), expect.end());
        if (sub.target != expect)
            throw std::runtime_error(
                "linearise_quadratic_atom: phase-cell recomputation disagrees with stored atom -- defect");
        cert.pieces.insert(cert.pieces.end(), sub.pieces.begin(), sub.pieces.end());
        cert.report.max_runs_per_q = std::max(cert.report.max_runs_per_q, sub.report.max_runs_per_q);
        cert.report.s = std::max(cert.report.s, sub.report.s);
    }
    cert.report.piece_count = static_cast<int64_t>(cert.pieces.size());
    const double d2 = static_cast<double>(qf.d2);
    cert.report.predicted_bound =
        std::pow(std::max(d2, 2.0), d2) *
        std::pow(static_cast<double>(emb.N),
                 1.0 - 1.0 / ((d1 + 1.0) * std::pow(d2 + 1.0, 3.0)));
    cert.report.bound_expr = "d2^O(d2) * N^(1 - c/((d1+1)(d2+1)^3))";
    return cert;
}

}  // namespace ap4
