#pragma once
// The inverse-U^3 oracle (brute-force global quadratic scan, plus a per-atom
// mode), the quadratic energy-increment decomposition, the anomaly gap,
// density-increment extraction, and the top-level iteration driver.

#include "ap4/linearise.hpp"
#include "ap4/uniformity.hpp"

namespace ap4 {

struct OracleResult {
    QuadraticFactor factor;   // complexity (0,1) in global mode
    double correlation = 0.0;
    GlobalQuadraticPhase phase;
    int atom = -1;            // per-atom mode: which B1 atom the phase lives on
    double l1_projection = 0.0;  // ||E(input | B2')||_{L^1}
    double threshold = 0.0;
};

inline constexpr int64_t kOracleGuard = 512;

enum class OracleMode { global, per_atom };

// Exhaustive scan over global quadratic phases (a x^2 + b x)/p; returns a
// resolution-K factor generated by the best phase when its correlation
// with f reaches the threshold, and nothing otherwise.  O(p^3).
inline std::optional<OracleResult> brute_inverse_u3(const CyclicFunction& f, double eta, int K,
                                                    double threshold, bool guard_override = false,
                                                    OracleMode mode = OracleMode::global,
                                                    const LinearFactor* base = nullptr) {
    const int64_t p = f.p;
    if (f.max_abs() > 2.0 + tol::identity)
        throw std::invalid_argument("brute_inverse_u3: input must be bounded by 2");
    if (eta <= 0.0) throw std::invalid_argument("brute_inverse_u3: eta must be positive");
    if (K < 1) throw std::invalid_argument("brute_inverse_u3: K must be >= 1");
    if (p > kOracleGuard && !guard_override)
        throw std::invalid_argument("brute_inverse_u3: O(p^3) scan guarded to p <= 512; "
                                    "pass guard_override to lift");

    std::vector<cd> roots = root_table(p);
    // correlation of f with e(-(a x^2 + b x)/p) on a residue subset
    auto correlation_on = [&](int64_t a, int64_t b, const std::vector<int64_t>& dom) {
        cd s = 0.0;
        for (int64_t x : dom) {
            int64_t v = posmod(mulmod(a, mulmod(x, x, p), p) + mulmod(b, x, p), p);
            s += f.v[static_cast<size_t>(x)] * std::conj(roots[static_cast<size_t>(v)]);
        }
        return std::abs(s) / static_cast<double>(dom.size());
    };

    if (mode == OracleMode::global) {
        std::vector<int64_t> dom = full_ground(p);
        struct Best {
            double corr = -1.0;
            int64_t a = 0, b = 0;
            // merge keeps the earlier candidate on near-ties; chunks combine
            // in ascending a, so ties break toward the smallest (a, b)
            Best& operator+=(const Best& o) {
                if (o.corr > corr + 1e-15) *this = o;
                return *this;
            }
        };
        Best best = chunked_sum<Best>(p, [&](int64_t a) {
            Best row;
            for (int64_t b = 0; b < p; ++b) {
                double c = correlation_on(a, b, dom);
                if (c > row.corr + 1e-15) row = {c, a, b};
            }
            return row;
        });
        if (best.corr < threshold) return std::nullopt;
        OracleResult res;
        res.phase = {best.a, best.b};
        res.correlation = best.corr;
        res.threshold = threshold;
        QuadraticFactor qf;
        qf.K = K;
        qf.d1 = 0;
        qf.d2 = 1;
        qf.b1 = linear_factor(p, {}, K);
        qf.atom_phases.assign(qf.b1.partition.atoms.size(), {res.phase});
        qf.b2 = factor_from_phase([&](int64_t x) { return res.phase.eval(x, p); }, K,
                                  full_ground(p), p);
        rebuild_quadratic_metadata(qf);
        res.l1_projection = l1_norm(cond_expect(f, qf.b2));
        res.factor = std::move(qf);
        return res;
    }

    // per-atom mode: the best quadratic phase on every atom of the supplied
    // linear factor; correlation is the atom-weighted average of the maxima
    if (base == nullptr)
        throw std::invalid_argument("brute_inverse_u3: per-atom mode needs a linear factor");
    if (base->K != K)
        throw std::invalid_argument("brute_inverse_u3: base factor resolution must match K");
    const LinearFactor& lf = *base;
    std::vector<GlobalQuadraticPhase> atom_best(lf.partition.atoms.size());
    double weighted = 0.0;
    for (size_t ai = 0; ai < lf.partition.atoms.size(); ++ai) {
        const auto& dom = lf.partition.atoms[ai];
        double best_c = -1.0;
        GlobalQuadraticPhase best_phase;
        for (int64_t a = 0; a < p; ++a)
            for (int64_t b = 0; b < p; ++b) {
                double c = correlation_on(a, b, dom);
                if (c > best_c + 1e-15) {
                    best_c = c;
                    best_phase = {a, b};
                }
            }
        atom_best[ai] = best_phase;
        weighted += best_c * static_cast<double>(dom.size()) / static_cast<double>(p);
    }
    if (weighted < threshold) return std::nullopt;
    OracleResult res;
    res.correlation = weighted;
    res.threshold = threshold;
    res.phase = atom_best.front();
    QuadraticFactor qf;
    qf.K = K;
    qf.d1 = lf.complexity();
    qf.d2 = 1;
    qf.b1 = lf;
    for (const auto& ph : atom_best) qf.atom_phases.push_back({ph});
    qf.b2 = partition_from_labels(p, full_ground(p), [&](int64_t x) {
        int atom = lf.partition.atom_of[static_cast<size_t>(x)];
        return static_cast<int64_t>(atom) * (K + 1) +
               atom_best[static_cast<size_t>(atom)].cell(x, p, K);
    });
    rebuild_quadratic_metadata(qf);
    res.l1_projection = l1_norm(cond_expect(f, qf.b2));
    res.factor = std::move(qf);
    return res;
}

using InverseOracle = std::function<std::optional<OracleResult>(const CyclicFunction&)>;

inline InverseOracle make_brute_oracle(double eta, int K, double threshold,
                                       bool guard_override = false) {
    return [=](const CyclicFunction& residual) {
        return brute_inverse_u3(residual, eta, K, threshold, guard_override);
    };
}

struct KvnConfig {
    double eta = 0.1;
    int K = 0;              // 0 -> ceil(8 / eta)
    double threshold = 0.0; // 0 -> 0.1 * eta
    int max_iterations = 0; // 0 -> ceil(4 / threshold^2)
    bool guard_override = false;

    int resolved_K() const { return K > 0 ? K : static_cast<int>(std::ceil(8.0 / eta)); }
    double resolved_threshold() const { return threshold > 0.0 ? threshold : 0.1 * eta; }
    int resolved_cap() const {
        if (max_iterations > 0) return max_iterations;
        double t = resolved_threshold();
        return static_cast<int>(std::ceil(4.0 / (t * t)));
    }
};

struct KvnIteration {
    double energy_before = 0.0;
    double energy_after = 0.0;
    double u3_residual = 0.0;   // before this iteration's oracle call
    double correlation = 0.0;
};

enum class KvnOutcome { converged, oracle_none, iteration_cap, stalled };

inline const char* to_string(KvnOutcome o) {
    switch (o) {
        case KvnOutcome::converged: return "converged";
        case KvnOutcome::oracle_none: return "oracle_none";
        case KvnOutcome::iteration_cap: return "iteration_cap";
        case KvnOutcome::stalled: return "stalled";
    }
    return "?";
}

struct DecompositionTrace {
    std::vector<KvnIteration> iterations;
    KvnOutcome outcome = KvnOutcome::converged;
    double final_residual = 0.0;
    double eta = 0.0;
    int K = 0;
    double threshold = 0.0;
};

// Energy-increment decomposition: repeatedly project out the factor returned
// by the inverse oracle until the U^3 norm of the residual drops below eta.
// Factors accumulate as common extensions, so the monitored energy
// ||E(f | B2 v B_triv)||_2^2 increases strictly with every completed step.
inline std::pair<QuadraticFactor, DecompositionTrace> kvn_decompose(const CyclicFunction& f,
                                                                    const KvnConfig& cfg,
                                                                    const IntervalEmbedding& emb,
                                                                    const InverseOracle& oracle) {
    for (const cd& z : f.v)
        if (std::abs(z.imag()) > tol::identity)
            throw std::invalid_argument("kvn_decompose: f must be real-valued");
    if (f.max_abs() > 1.0 + tol::identity)
        throw std::invalid_argument("kvn_decompose: f must be 1-bounded");
    const int K = cfg.resolved_K();
    if (K < 2) throw std::invalid_argument("kvn_decompose: resolved K must be >= 2");

    DecompositionTrace trace;
    trace.eta = cfg.eta;
    trace.K = K;
    trace.threshold = cfg.resolved_threshold();
    const int cap = cfg.resolved_cap();

    QuadraticFactor qf = trivial_quadratic_factor(f.p, K);
    Partition triv = trivial_factor(emb);
    Partition measured = join(qf.b2, triv);

    for (int iter = 0;; ++iter) {
        CyclicFunction proj = cond_expect(f, measured);
        CyclicFunction residual = subtract(f, proj);
        double resid_norm = u3_norm(residual);
        if (resid_norm <= cfg.eta) {
            trace.outcome = KvnOutcome::converged;
            trace.final_residual = resid_norm;
            return {qf, trace};
        }
        if (iter >= cap) {
            trace.outcome = KvnOutcome::iteration_cap;
            trace.final_residual = resid_norm;
            return {qf, trace};
        }
        std::optional<OracleResult> found = oracle(residual);
        if (!found) {
            trace.outcome = KvnOutcome::oracle_none;
            trace.final_residual = resid_norm;
            return {qf, trace};
        }

        double energy_before = energy(f, measured);
        QuadraticFactor joined = join_quadratic(qf, found->factor);
        Partition measured_next = join(joined.b2, triv);
        double energy_after = energy(f, measured_next);

        // Pythagoras: the increment equals ||E(f|new) - E(f|old)||_2^2
        CyclicFunction diff = subtract(cond_expect(f, measured_next), proj);
        double pyth = l2_norm(diff);
        if (std::abs((energy_after - energy_before) - pyth * pyth) > 1e-10)
            throw std::runtime_error("kvn_decompose: Pythagoras identity violated -- defect");

        KvnIteration rec{energy_before, energy_after, resid_norm, found->correlation};
        trace.iterations.push_back(rec);
        if (!(energy_after > energy_before)) {
            trace.outcome = KvnOutcome::stalled;
            trace.final_residual = resid_norm;
            return {qf, trace};
        }
        qf = std::move(joined);
        measured = std::move(measured_next);
    }
}

struct AnomalyReport {
    double delta = 0.0;
    double lambda_f = 0.0;
    double lambda_model = 0.0;  // Lambda(delta 1_[N] x4)
    double gap = 0.0;
    double threshold_ratio = 0.0;  // gap / delta^4
};

// Gap between the 4-AP count of f and its density model on [N].
inline AnomalyReport anomaly_gap(const CyclicFunction& f, const IntervalEmbedding& emb) {
    const int64_t p = f.p;
    for (int64_t x = 0; x < p; ++x) {
        cd z = f.v[static_cast<size_t>(x)];
        if (std::abs(z.imag()) > tol::identity || z.real() < -tol::identity)
            throw std::invalid_argument("anomaly_gap: f must be real non-negative");
        if (z.real() > 1.0 + tol::identity)
            throw std::invalid_argument("anomaly_gap: f must be 1-bounded");
        if ((x < 1 || x > emb.N) && std::abs(z) > tol::identity)
            throw std::invalid_argument("anomaly_gap: f must vanish outside [N]");
    }
    AnomalyReport rep;
    std::vector<int64_t> interval = emb.interval();
    rep.delta = expectation(f, interval).real();
    if (rep.delta <= 0.0) throw std::invalid_argument("anomaly_gap: delta = 0");
    CyclicFunction model = scale(embed_set(interval, emb), rep.delta);
    rep.lambda_f = lambda4_diag(f).real();
    rep.lambda_model = lambda4_diag(model).real();
    rep.gap = std::abs(rep.lambda_f - rep.lambda_model);
    rep.threshold_ratio = rep.gap / std::pow(rep.delta, 4.0);
    return rep;
}

struct IncrementAtom {
    int atom_index = 0;  // in B2 v B_triv
    std::vector<int64_t> members;
    double mean = 0.0;       // E_atom(f)
    double old_density = 0.0;
};

// Largest atom of B2 v B_triv inside [N] on which the conditional mean
// reaches (1+c) delta.
inline std::optional<IncrementAtom> density_increment_atom(const CyclicFunction& f,
                                                           const QuadraticFactor& qf,
                                                           const IntervalEmbedding& emb, double c) {
    Partition joined = join(qf.b2, trivial_factor(emb));
    std::vector<int64_t> interval = emb.interval();
    double delta = expectation(f, interval).real();
    CyclicFunction g = cond_expect(f, joined);

    std::optional<IncrementAtom> best;
    for (int ai = 0; ai < joined.atom_count(); ++ai) {
        const auto& atom = joined.atoms[static_cast<size_t>(ai)];
        bool inside = true;
        for (int64_t x : atom)
            if (x < 1 || x > emb.N) {
                inside = false;
                break;
            }
        if (!inside) continue;
        double mean = g.v[static_cast<size_t>(atom.front())].real();
        if (mean < (1.0 + c) * delta) continue;
        if (!best || atom.size() > best->members.size()) {
            IncrementAtom cand;
            cand.atom_index = ai;
            cand.members = atom;
            cand.mean = mean;
            cand.old_density = delta;
            best = std::move(cand);
        }
    }
    return best;
}

// ---- single-pass pipeline (also the CLI `increment` command) ----

struct IncrementConfig {
    double eta = 0.0;          // 0 -> eta_coeff * delta
    double eta_coeff = 0.3;
    int K = 0;                 // 0 -> ceil(8 / eta)
    double threshold = 0.0;    // 0 -> 0.1 * eta
    double c = 0.1;            // density increment constant
    double eps = 0.0;          // pigeonhole epsilon; 0 -> c * delta / 2
    double gap_c = 0.001;      // require gap >= gap_c * delta^4
    int64_t cutoff = 0;        // small-piece cutoff; 0 -> N^{1/(2(d1+1))}
    int max_iterations = 0;
    bool guard_override = false;
};

struct IncrementResult {
    // progression in [1,N] as integers
    int64_t start = 0, step = 0, length = 0;
    double new_density = 0.0;
    double old_density = 0.0;

    std::vector<int64_t> elements() const {
        std::vector<int64_t> out;
        for (int64_t i = 0; i < length; ++i) out.push_back(start + i * step);
        return out;
    }
};

struct IncrementStageReport {
    AnomalyReport anomaly;
    DecompositionTrace kvn;
    bool have_atom = false;
    int64_t atom_size = 0;
    double atom_mean = 0.0;
    int64_t cert_pieces = 0;
    bool cert_valid = false;
    PigeonholeResult pigeonhole;
    std::optional<IncrementResult> increment;
    std::string failure_stage;  // empty on success
};

// Interprets a piece known to lie in [1,N] as an integer progression (the
// embedding is Freiman isomorphic of order 2, so the step un-wraps).
inline IncrementResult piece_as_integer_progression(const APPiece& piece, int64_t p, int64_t N) {
    IncrementResult out;
    out.length = piece.length;
    int64_t step = posmod(piece.step, p);
    if (step > p / 2) step -= p;  // signed representative
    std::vector<int64_t> els = piece.elements(p);
    for (int64_t x : els)
        if (x < 1 || x > N)
            throw std::invalid_argument("piece_as_integer_progression: piece leaves [1,N]");
    out.start = els.front();
    out.step = piece.length > 1 ? step : 0;
    for (size_t i = 1; i < els.size(); ++i)
        if (els[i] != out.start + static_cast<int64_t>(i) * out.step)
            throw std::runtime_error("piece_as_integer_progression: wraparound progression -- defect");
    return out;
}

inline IncrementStageReport increment_pipeline(const std::vector<int64_t>& A,
                                               const IntervalEmbedding& emb,
                                               const IncrementConfig& cfg) {
    IncrementStageReport rep;
    CyclicFunction f = embed_set(A, emb);

    rep.anomaly = anomaly_gap(f, emb);
    const double delta = rep.anomaly.delta;
    if (rep.anomaly.gap < cfg.gap_c * std::pow(delta, 4.0)) {
        rep.failure_stage = "gap condition not met";
        return rep;
    }

    KvnConfig kcfg;
    kcfg.eta = cfg.eta > 0.0 ? cfg.eta : cfg.eta_coeff * delta;
    kcfg.K = cfg.K;
    kcfg.threshold = cfg.threshold;
    kcfg.max_iterations = cfg.max_iterations;
    kcfg.guard_override = cfg.guard_override;
    InverseOracle oracle =
        make_brute_oracle(kcfg.eta, kcfg.resolved_K(), kcfg.resolved_threshold(), cfg.guard_override);
    auto [factor, trace] = kvn_decompose(f, kcfg, emb, oracle);
    rep.kvn = trace;
    if (trace.outcome == KvnOutcome::iteration_cap || trace.outcome == KvnOutcome::stalled) {
        rep.failure_stage = std::string("kvn ") + to_string(trace.outcome);
        return rep;
    }

    std::optional<IncrementAtom> atom = density_increment_atom(f, factor, emb, cfg.c);
    if (!atom) {
        rep.failure_stage = "no increment atom";
        return rep;
    }
    rep.have_atom = true;
    rep.atom_size = static_cast<int64_t>(atom->members.size());
    rep.atom_mean = atom->mean;

    // locate the chosen joined atom inside B2 (it is B2-atom intersect [N])
    int b2_idx = factor.b2.atom_of[static_cast<size_t>(atom->members.front())];
    PartitionCertificate cert = linearise_quadratic_atom(factor, b2_idx, emb, cfg.cutoff);
    rep.cert_valid = validate_partition(cert);
    rep.cert_pieces = static_cast<int64_t>(cert.pieces.size());
    if (!rep.cert_valid) throw std::runtime_error("increment_pipeline: certificate invalid -- defect");
    if (cert.target != atom->members)
        throw std::runtime_error("increment_pipeline: certificate target mismatch -- defect");

    std::vector<std::vector<int64_t>> parts;
    for (const auto& piece : cert.pieces) parts.push_back(piece.elements(emb.mod.p));
    double eps = cfg.eps > 0.0 ? cfg.eps : cfg.c * delta / 2.0;
    if (eps >= 1.0) eps = 0.5;
    rep.pigeonhole = pigeonhole_best_part(parts, f, eps);

    IncrementResult inc =
        piece_as_integer_progression(cert.pieces[static_cast<size_t>(rep.pigeonhole.index)],
                                     emb.mod.p, emb.N);
    inc.old_density = delta;
    inc.new_density = rep.pigeonhole.mean;
    if (inc.new_density < inc.old_density) {
        rep.failure_stage = "no net increment on chosen progression";
        return rep;
    }
    rep.increment = inc;
    return rep;
}

// ---- top-level iteration ----

struct R4Config {
    IncrementConfig inc;
    double bottom_out_C = 1.0;  // stop when N <= exp(C delta^-C); 0 disables
    int max_rounds = 8;
};

struct R4Round {
    int64_t N = 0;
    int64_t p = 0;
    double delta = 0.0;
    IncrementStageReport stages;
    IncrementResult chosen;
    std::string reason;  // empty when the round completed
};

struct R4Trace {
    std::vector<R4Round> rounds;
    std::string final_reason;
};

inline bool rep_ok(const IncrementStageReport& rep) { return rep.failure_stage.empty(); }

// The deduction loop: embed, test the anomaly gap, decompose, extract a dense
// atom, linearise, pigeonhole, rescale the set to the chosen progression, and
// repeat.  Every stage failure terminates with a labeled reason.
inline R4Trace r4_iterate(std::vector<int64_t> A, int64_t N, const R4Config& cfg) {
    R4Trace trace;
    for (int round = 0; round < cfg.max_rounds; ++round) {
        R4Round rec;
        rec.N = N;
        if (A.empty()) {
            rec.reason = "empty set";
            trace.rounds.push_back(rec);
            trace.final_reason = rec.reason;
            return trace;
        }
        rec.delta = static_cast<double>(A.size()) / static_cast<double>(N);
        if (cfg.bottom_out_C > 0.0) {
            double bound = std::exp(cfg.bottom_out_C * std::pow(rec.delta, -cfg.bottom_out_C));
            if (static_cast<double>(N) <= bound) {
                rec.reason = "bottom-out: N <= exp(C delta^-C)";
                trace.rounds.push_back(rec);
                trace.final_reason = rec.reason;
                return trace;
            }
        }
        if (N < 5) {
            rec.reason = "interval too short";
            trace.rounds.push_back(rec);
            trace.final_reason = rec.reason;
            return trace;
        }
        Modulus p = find_prime(N);
        rec.p = p.p;
        IntervalEmbedding emb(N, p);
        rec.stages = increment_pipeline(A, emb, cfg.inc);
        if (!rep_ok(rec.stages)) {
            rec.reason = rec.stages.failure_stage;
            trace.rounds.push_back(rec);
            trace.final_reason = rec.reason;
            return trace;
        }
        rec.chosen = *rec.stages.increment;
        trace.rounds.push_back(rec);

        // rescale A to the chosen progression
        const IncrementResult& P = rec.chosen;
        if (P.length < 5) {
            trace.final_reason = "chosen progression too short";
            return trace;
        }
        std::vector<char> in_a(static_cast<size_t>(N + 1), 0);
        for (int64_t a : A) in_a[static_cast<size_t>(a)] = 1;
        std::vector<int64_t> next;
        for (int64_t t = 1; t <= P.length; ++t) {
            int64_t x = P.start + (t - 1) * P.step;
            if (in_a[static_cast<size_t>(x)]) next.push_back(t);
        }
        A = std::move(next);
        N = P.length;
    }
    trace.final_reason = "max rounds reached";
    return trace;
}

}  // namespace ap4
