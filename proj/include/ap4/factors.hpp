#pragma once
// Finitary sigma-algebras as partitions: factors from phase functions at
// resolution K, joins, restrictions, conditional expectation and energy,
// linear and quadratic factors, and the local-quadratic identity check.

#include <functional>
#include <map>
#include <optional>

#include "ap4/bohr.hpp"

namespace ap4 {

// Resolution cell of a torus value: j with ||phi - j/K|| < 1/2K, cells
// half-open on the right so every value lands in exactly one cell.
inline int cell_index(double phi, int K) {
    double t = mod1(phi) * static_cast<double>(K) + 0.5;
    int j = static_cast<int>(std::floor(t));
    if (j >= K) j -= K;
    return j;
}

struct Partition {
    int64_t p = 0;
    std::vector<int64_t> ground;              // sorted carrier
    std::vector<int32_t> atom_of;             // size p; -1 outside ground
    std::vector<std::vector<int64_t>> atoms;  // ordered by smallest element

    bool same_ground(const Partition& o) const { return p == o.p && ground == o.ground; }

    int atom_count() const { return static_cast<int>(atoms.size()); }

    // relabels atoms canonically: ordered by smallest member
    void canonicalize() {
        for (auto& a : atoms) std::sort(a.begin(), a.end());
        std::sort(atoms.begin(), atoms.end(),
                  [](const auto& a, const auto& b) { return a.front() < b.front(); });
        for (size_t i = 0; i < atoms.size(); ++i)
            for (int64_t x : atoms[i]) atom_of[static_cast<size_t>(x)] = static_cast<int32_t>(i);
    }
};

inline Partition partition_from_labels(int64_t p, const std::vector<int64_t>& ground,
                                       const std::function<int64_t(int64_t)>& label) {
    Partition b;
    b.p = p;
    b.ground = ground;
    std::sort(b.ground.begin(), b.ground.end());
    if (std::adjacent_find(b.ground.begin(), b.ground.end()) != b.ground.end())
        throw std::invalid_argument("partition_from_labels: duplicate ground element");
    b.atom_of.assign(static_cast<size_t>(p), -1);
    std::map<int64_t, std::vector<int64_t>> groups;
    for (int64_t x : b.ground) groups[label(x)].push_back(x);
    for (auto& [key, members] : groups) b.atoms.push_back(std::move(members));
    b.canonicalize();
    return b;
}

inline std::vector<int64_t> full_ground(int64_t p) {
    std::vector<int64_t> g(static_cast<size_t>(p));
    for (int64_t i = 0; i < p; ++i) g[static_cast<size_t>(i)] = i;
    return g;
}

inline Partition one_atom_partition(int64_t p, std::vector<int64_t> ground) {
    return partition_from_labels(p, ground, [](int64_t) { return 0; });
}

inline Partition one_atom_partition(int64_t p) { return one_atom_partition(p, full_ground(p)); }

inline Partition singleton_partition(int64_t p) {
    return partition_from_labels(p, full_ground(p), [](int64_t x) { return x; });
}

// Atoms j = {x : phi(x) in [j/K - 1/2K, j/K + 1/2K)}; empty cells dropped.
inline Partition factor_from_phase(const std::function<double(int64_t)>& phi, int K,
                                   const std::vector<int64_t>& carrier, int64_t p) {
    if (K < 1) throw std::invalid_argument("factor_from_phase: K must be >= 1");
    return partition_from_labels(p, carrier, [&](int64_t x) { return cell_index(phi(x), K); });
}

// Smallest common extension: atoms are the non-empty pairwise intersections.
inline Partition join(const Partition& a, const Partition& b) {
    if (!a.same_ground(b)) throw std::invalid_argument("join: ground mismatch");
    return partition_from_labels(a.p, a.ground, [&](int64_t x) {
        return static_cast<int64_t>(a.atom_of[static_cast<size_t>(x)]) *
                   static_cast<int64_t>(b.atoms.size() + 1) +
               static_cast<int64_t>(b.atom_of[static_cast<size_t>(x)]);
    });
}

// Non-empty traces atom ∩ W'.
inline Partition restrict_to(const Partition& b, const std::vector<int64_t>& w) {
    if (w.empty()) throw std::invalid_argument("restrict_to: empty restriction set");
    for (int64_t x : w)
        if (x < 0 || x >= b.p || b.atom_of[static_cast<size_t>(x)] < 0)
            throw std::invalid_argument("restrict_to: W' must be a subset of the ground set");
    return partition_from_labels(b.p, w,
                                 [&](int64_t x) { return b.atom_of[static_cast<size_t>(x)]; });
}

// B' refines B (as sigma-algebras, B ⊆ B')?
inline bool refines(const Partition& fine, const Partition& coarse) {
    if (!fine.same_ground(coarse)) return false;
    for (const auto& atom : fine.atoms) {
        int32_t c = coarse.atom_of[static_cast<size_t>(atom.front())];
        for (int64_t x : atom)
            if (coarse.atom_of[static_cast<size_t>(x)] != c) return false;
    }
    return true;
}

// Conditional expectation: atom-wise averaging; requires a partition of the
// full group.
inline CyclicFunction cond_expect(const CyclicFunction& f, const Partition& b) {
    if (b.p != f.p || static_cast<int64_t>(b.ground.size()) != f.p)
        throw std::invalid_argument("cond_expect: partition must cover all of Z/pZ");
    std::vector<cd> vals(static_cast<size_t>(f.p));
    for (const auto& atom : b.atoms) {
        cd s = 0.0;
        for (int64_t x : atom) s += f.v[static_cast<size_t>(x)];
        s /= static_cast<double>(atom.size());
        for (int64_t x : atom) vals[static_cast<size_t>(x)] = s;
    }
    return CyclicFunction(Modulus(f.p), std::move(vals));
}

// ||E(f|B)||_{L^2}^2, the monotone quantity of the energy-increment loop.
inline double energy(const CyclicFunction& f, const Partition& b) {
    if (b.p != f.p || static_cast<int64_t>(b.ground.size()) != f.p)
        throw std::invalid_argument("energy: partition must cover all of Z/pZ");
    double total = 0.0;
    for (const auto& atom : b.atoms) {
        cd s = 0.0;
        for (int64_t x : atom) s += f.v[static_cast<size_t>(x)];
        total += std::norm(s) / static_cast<double>(atom.size());
    }
    return total / static_cast<double>(f.p);
}

// Two atoms: [N] and its complement.
inline Partition trivial_factor(const IntervalEmbedding& emb) {
    return partition_from_labels(emb.mod.p, full_ground(emb.mod.p),
                                 [&](int64_t x) { return (x >= 1 && x <= emb.N) ? 1 : 0; });
}

struct LinearPhase {
    int64_t xi;    // frequency in Z/pZ
    double alpha;  // constant offset in R/Z

    double eval(int64_t x, int64_t p) const {
        return mod1(static_cast<double>(mulmod(posmod(xi, p), posmod(x, p), p)) /
                        static_cast<double>(p) +
                    alpha);
    }
};

// A linear factor keeps its generating phases and the per-atom cell indices,
// so each atom can be read back as an uncentred Bohr set of radius 1/2K.
struct LinearFactor {
    Partition partition;
    std::vector<LinearPhase> phases;
    int K = 1;
    std::vector<std::vector<int>> atom_cells;  // per atom, per phase

    int complexity() const { return static_cast<int>(phases.size()); }

    // Bohr data of an atom: frequencies, effective offsets, radius 1/2K.
    BohrSpec atom_bohr_spec(int atom_idx, int64_t p) const {
        std::vector<int64_t> freqs;
        std::vector<double> offsets;
        for (size_t i = 0; i < phases.size(); ++i) {
            freqs.push_back(posmod(phases[i].xi, p));
            offsets.push_back(
                mod1(static_cast<double>(atom_cells[static_cast<size_t>(atom_idx)][i]) / K -
                     phases[i].alpha));
        }
        if (freqs.empty())
            return BohrSpec(p, {1}, {0.0}, 0.49);  // placeholder; rank-0 handled by callers
        return BohrSpec(p, std::move(freqs), std::move(offsets), 1.0 / (2.0 * K));
    }
};

// Join of the B_{phi,K} over a list of globally linear phases.
inline LinearFactor linear_factor(int64_t p, const std::vector<LinearPhase>& phases, int K) {
    if (K < 1) throw std::invalid_argument("linear_factor: K must be >= 1");
    LinearFactor lf;
    lf.phases = phases;
    lf.K = K;
    const int64_t d = static_cast<int64_t>(phases.size());
    lf.partition = partition_from_labels(p, full_ground(p), [&](int64_t x) {
        int64_t key = 0;
        for (int64_t i = 0; i < d; ++i)
            key = key * (K + 1) + cell_index(phases[static_cast<size_t>(i)].eval(x, p), K);
        return key;
    });
    for (const auto& atom : lf.partition.atoms) {
        std::vector<int> cells;
        for (const auto& ph : lf.phases) cells.push_back(cell_index(ph.eval(atom.front(), p), K));
        lf.atom_cells.push_back(std::move(cells));
    }
    return lf;
}

struct APPiece {
    int64_t start = 0, step = 0, length = 1;  // step 0 only for length 1

    std::vector<int64_t> elements(int64_t p) const {
        std::vector<int64_t> out(static_cast<size_t>(length));
        int64_t x = posmod(start, p);
        for (int64_t i = 0; i < length; ++i) {
            out[static_cast<size_t>(i)] = x;
            x += step;
            if (x >= p) x -= p;
        }
        return out;
    }
};

// phi(x) = (a x^2 + b x)/p on Z/pZ; evaluated exactly in integers.
struct GlobalQuadraticPhase {
    int64_t a = 0, b = 0;

    int64_t numerator(int64_t x, int64_t p) const {
        int64_t xm = posmod(x, p);
        return posmod(mulmod(a, mulmod(xm, xm, p), p) + mulmod(b, xm, p), p);
    }
    double eval(int64_t x, int64_t p) const {
        return static_cast<double>(numerator(x, p)) / static_cast<double>(p);
    }
    int cell(int64_t x, int64_t p, int K) const { return cell_index(eval(x, p), K); }
};

// phi(n-th element) = a n^2 + b n + c mod 1 along a progression, n = 1..length.
// Phases cut out of a GlobalQuadraticPhase carry exact integer numerators
// (denominator p), so restricted evaluations reproduce parent values exactly.
struct QuadraticPhaseOnAP {
    APPiece prog;
    double a = 0.0, b = 0.0, c = 0.0;
    bool exact = false;
    int64_t A = 0, B = 0, C = 0, den = 0;

    double eval(int64_t n) const {
        if (exact) {
            int64_t nm = posmod(n, den);
            int64_t v = posmod(mulmod(A, mulmod(nm, nm, den), den) + mulmod(B, nm, den) + C, den);
            return static_cast<double>(v) / static_cast<double>(den);
        }
        double nn = static_cast<double>(n);
        return mod1(a * nn * nn + b * nn + c);
    }
    int cell(int64_t n, int K) const { return cell_index(eval(n), K); }
};

// Restriction of (a x^2 + b x)/p to the progression x = s + (n-1) r:
// coefficients stay rational with denominator p.
inline QuadraticPhaseOnAP restrict_quadratic_phase(const GlobalQuadraticPhase& g,
                                                   const APPiece& piece, int64_t p) {
    QuadraticPhaseOnAP q;
    q.prog = piece;
    int64_t r = posmod(piece.step, p);
    int64_t s0 = posmod(piece.start - piece.step, p);  // s - r, so that x = s0 + n r
    q.exact = true;
    q.den = p;
    q.A = mulmod(g.a, mulmod(r, r, p), p);
    q.B = posmod(2 * mulmod(g.a, mulmod(s0, r, p), p) + mulmod(g.b, r, p), p);
    q.C = posmod(mulmod(g.a, mulmod(s0, s0, p), p) + mulmod(g.b, s0, p), p);
    q.a = static_cast<double>(q.A) / static_cast<double>(p);
    q.b = static_cast<double>(q.B) / static_cast<double>(p);
    q.c = static_cast<double>(q.C) / static_cast<double>(p);
    return q;
}

struct LocalQuadraticReport {
    bool holds = true;
    int64_t witnesses_checked = 0;
    std::optional<std::array<int64_t, 4>> counterexample;  // (x, h1, h2, h3)
    double worst_residual = 0.0;
};

// Eight-point alternating identity for locally quadratic phases, checked for
// all (x,h1,h2,h3) whose eight points lie in B.  The candidate space is
// parametrized by quadruples of points of B; exhaustive when |B|^4 <= budget,
// otherwise a seeded random sample of size budget.
inline LocalQuadraticReport verify_local_quadratic(const std::function<double(int64_t)>& phi,
                                                   const std::vector<int64_t>& B, int64_t p,
                                                   int64_t budget, uint64_t seed = 1) {
    if (budget < 1) throw std::invalid_argument("verify_local_quadratic: budget must be >= 1");
    LocalQuadraticReport rep;
    if (B.empty()) return rep;
    std::vector<char> in_b(static_cast<size_t>(p), 0);
    for (int64_t x : B) in_b[static_cast<size_t>(posmod(x, p))] = 1;

    auto check = [&](int64_t x, int64_t h1, int64_t h2, int64_t h3) {
        const int64_t pts[8] = {x,
                                x + h1,
                                x + h2,
                                x + h3,
                                x + h1 + h2,
                                x + h1 + h3,
                                x + h2 + h3,
                                x + h1 + h2 + h3};
        for (int64_t q : pts)
            if (!in_b[static_cast<size_t>(posmod(q, p))]) return;
        double s = phi(posmod(x + h1 + h2 + h3, p)) - phi(posmod(x + h1 + h2, p)) -
                   phi(posmod(x + h2 + h3, p)) - phi(posmod(x + h1 + h3, p)) +
                   phi(posmod(x + h1, p)) + phi(posmod(x + h2, p)) + phi(posmod(x + h3, p)) -
                   phi(posmod(x, p));
        ++rep.witnesses_checked;
        double r = torus_norm(s);
        rep.worst_residual = std::max(rep.worst_residual, r);
        if (r > tol::ineq && !rep.counterexample) {
            rep.holds = false;
            rep.counterexample = std::array<int64_t, 4>{x, h1, h2, h3};
        }
    };

    const int64_t n = static_cast<int64_t>(B.size());
    double quadruples = std::pow(static_cast<double>(n), 4.0);
    if (quadruples <= static_cast<double>(budget)) {
        for (int64_t i = 0; i < n; ++i)
            for (int64_t j = 0; j < n; ++j)
                for (int64_t k = 0; k < n; ++k)
                    for (int64_t l = 0; l < n; ++l)
                        check(B[static_cast<size_t>(i)], B[static_cast<size_t>(j)] - B[static_cast<size_t>(i)],
                              B[static_cast<size_t>(k)] - B[static_cast<size_t>(i)],
                              B[static_cast<size_t>(l)] - B[static_cast<size_t>(i)]);
    } else {
        Rng rng(seed);
        for (int64_t it = 0; it < budget; ++it) {
            int64_t x = B[rng.below(static_cast<uint64_t>(n))];
            int64_t b1 = B[rng.below(static_cast<uint64_t>(n))];
            int64_t b2 = B[rng.below(static_cast<uint64_t>(n))];
            int64_t b3 = B[rng.below(static_cast<uint64_t>(n))];
            check(x, b1 - x, b2 - x, b3 - x);
        }
    }
    return rep;
}

// Quadratic factor (B1, B2): a linear factor B1 and an extension B2 whose
// restriction to each B1 atom is generated by quadratic phases on that atom.
struct QuadraticFactor {
    LinearFactor b1;
    Partition b2;
    std::vector<std::vector<GlobalQuadraticPhase>> atom_phases;  // per b1 atom
    std::vector<int> b2_parent;                                  // b2 atom -> b1 atom
    std::vector<std::vector<int>> b2_cells;  // b2 atom -> cell per parent phase
    int d1 = 0, d2 = 0;
    int K = 1;

    int64_t p() const { return b2.p; }
};

inline void rebuild_quadratic_metadata(QuadraticFactor& qf) {
    qf.b2_parent.clear();
    qf.b2_cells.clear();
    const int64_t p = qf.b1.partition.p;
    for (const auto& atom : qf.b2.atoms) {
        int parent = qf.b1.partition.atom_of[static_cast<size_t>(atom.front())];
        std::vector<int> cells;
        for (const auto& ph : qf.atom_phases[static_cast<size_t>(parent)])
            cells.push_back(ph.cell(atom.front(), p, qf.K));
        // B2 atoms must sit inside one B1 atom and one cell combination
        for (int64_t x : atom) {
            if (qf.b1.partition.atom_of[static_cast<size_t>(x)] != parent)
                throw std::runtime_error("QuadraticFactor: B2 atom crosses B1 atoms -- defect");
            const auto& phs = qf.atom_phases[static_cast<size_t>(parent)];
            for (size_t i = 0; i < phs.size(); ++i)
                if (phs[i].cell(x, p, qf.K) != cells[i])
                    throw std::runtime_error("QuadraticFactor: B2 atom crosses phase cells -- defect");
        }
        qf.b2_parent.push_back(parent);
        qf.b2_cells.push_back(std::move(cells));
    }
}

inline QuadraticFactor trivial_quadratic_factor(int64_t p, int K) {
    QuadraticFactor qf;
    qf.b1 = linear_factor(p, {}, K);
    qf.b2 = one_atom_partition(p);
    qf.atom_phases.assign(qf.b1.partition.atoms.size(), {});
    qf.K = K;
    rebuild_quadratic_metadata(qf);
    return qf;
}

// Common extension (B1 v B1', B2 v B2'): complexity adds in both coordinates.
inline QuadraticFactor join_quadratic(const QuadraticFactor& x, const QuadraticFactor& y) {
    if (x.K != y.K) throw std::invalid_argument("join_quadratic: resolution mismatch");
    const int64_t p = x.p();
    QuadraticFactor qf;
    qf.K = x.K;
    qf.d1 = x.d1 + y.d1;
    qf.d2 = x.d2 + y.d2;
    qf.b1.phases = x.b1.phases;
    qf.b1.phases.insert(qf.b1.phases.end(), y.b1.phases.begin(), y.b1.phases.end());
    qf.b1 = linear_factor(p, qf.b1.phases, qf.K);
    qf.b2 = join(x.b2, y.b2);
    qf.atom_phases.clear();
    for (const auto& atom : qf.b1.partition.atoms) {
        int64_t rep = atom.front();
        std::vector<GlobalQuadraticPhase> phases;
        const auto& from_x = x.atom_phases[static_cast<size_t>(x.b1.partition.atom_of[static_cast<size_t>(rep)])];
        const auto& from_y = y.atom_phases[static_cast<size_t>(y.b1.partition.atom_of[static_cast<size_t>(rep)])];
        phases.insert(phases.end(), from_x.begin(), from_x.end());
        phases.insert(phases.end(), from_y.begin(), from_y.end());
        qf.atom_phases.push_back(std::move(phases));
    }
    // x.b2 and y.b2 refine x.b1 and y.b1, so the join refines the new B1;
    // rebuild_quadratic_metadata throws if that invariant is broken.
    rebuild_quadratic_metadata(qf);
    return qf;
}

}  // namespace ap4
