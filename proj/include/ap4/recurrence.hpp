#pragma once
// Simultaneous Diophantine machinery: Kronecker and quadratic recurrence
// searches, the averaged theta quantity F and its calculus, the large-F /
// rational-relation alternative, rational approximation of quadratic Weyl
// sums, dimension descent, and the theta-certified recurrence search.

#include <numeric>
#include <optional>
#include <sstream>

#include "ap4/lattice.hpp"

namespace ap4 {

struct SearchResult {
    int64_t n = 0;
    double value = 0.0;
};

// Exact minimizer of max_j ||n alpha_j|| over n = 1..N (ties -> smallest n).
inline SearchResult kronecker_search(const std::vector<double>& alpha, int64_t N) {
    if (alpha.empty()) throw std::invalid_argument("kronecker_search: d must be >= 1");
    if (N < 1) throw std::invalid_argument("kronecker_search: N must be >= 1");
    SearchResult best{0, std::numeric_limits<double>::infinity()};
    for (int64_t n = 1; n <= N; ++n) {
        double m = 0.0;
        for (double a : alpha) m = std::max(m, torus_norm(static_cast<double>(n) * a));
        if (m < best.value) best = {n, m};
    }
    return best;
}

// Exact minimizer of max_j ||n^2 alpha_j|| over n = 1..N.
inline SearchResult schmidt_search(const std::vector<double>& alpha, int64_t N) {
    if (alpha.empty()) throw std::invalid_argument("schmidt_search: d must be >= 1");
    if (N < 1) throw std::invalid_argument("schmidt_search: N must be >= 1");
    SearchResult best{0, std::numeric_limits<double>::infinity()};
    for (int64_t n = 1; n <= N; ++n) {
        double nn = static_cast<double>(n) * static_cast<double>(n);
        double m = 0.0;
        for (double a : alpha) m = std::max(m, torus_norm(nn * a));
        if (m < best.value) best = {n, m};
    }
    return best;
}

inline double schmidt_objective(const std::vector<double>& alpha, int64_t n) {
    double nn = static_cast<double>(n) * static_cast<double>(n);
    double m = 0.0;
    for (double a : alpha) m = std::max(m, torus_norm(nn * a));
    return m;
}

// F_{Lambda,alpha}(N) = det(Lambda) E_{-N <= n <= N} Theta_Lambda(1, n^2 alpha).
// The n and -n terms coincide.
inline double f_lattice(const Lattice& L, const std::vector<double>& alpha, int64_t N) {
    if (N < 0) throw std::invalid_argument("f_lattice: N must be >= 0");
    if (static_cast<int>(alpha.size()) != L.d) throw std::invalid_argument("f_lattice: dimension mismatch");
    Vec zero(static_cast<size_t>(L.d), 0.0);
    double sum = theta(L, 1.0, zero).value;
    for (int64_t n = 1; n <= N; ++n) {
        Vec x(static_cast<size_t>(L.d));
        double nn = static_cast<double>(n) * static_cast<double>(n);
        for (int i = 0; i < L.d; ++i) x[static_cast<size_t>(i)] = nn * alpha[static_cast<size_t>(i)];
        sum += 2.0 * theta(L, 1.0, x).value;
    }
    return L.det * sum / static_cast<double>(2 * N + 1);
}

// 0-dimensional convention used at the bottom of the descent.
inline double f_lattice_dim0() { return 1.0; }

// Fourier-side form: sum_{xi in Lambda*} e^{-pi |xi|^2} E_n e(n^2 xi . alpha).
// Cross-check route for small duals.
inline double f_lattice_fourier(const Lattice& L, const std::vector<double>& alpha, int64_t N) {
    Lattice D = dual_lattice(L);
    detail::QRData qr = detail::qr_decompose(D.basis);
    double R = std::sqrt(40.0 / kPi) + 1.0;
    double tail = detail::gaussian_tail_bound(qr, 1.0, R);
    while (tail > 1e-15) {
        R += 1.0;
        if (R > 200.0) throw std::invalid_argument("f_lattice_fourier: truncation guard");
        tail = detail::gaussian_tail_bound(qr, 1.0, R);
    }
    Vec zeroc(static_cast<size_t>(L.d), 0.0);
    Vec c = qr.q.apply_transpose(zeroc);
    cd total = 0.0;
    detail::enumerate_ball(qr, c, R, [&](const std::array<int64_t, 4>& z, double dist2) {
        Vec zz(static_cast<size_t>(L.d));
        for (int i = 0; i < L.d; ++i) zz[static_cast<size_t>(i)] = static_cast<double>(z[static_cast<size_t>(i)]);
        Vec xi = D.basis.apply(zz);
        double theta_dot = dot(xi, Vec(alpha));
        cd esum = 1.0;  // n = 0
        for (int64_t n = 1; n <= N; ++n) {
            double nn = static_cast<double>(n) * static_cast<double>(n);
            esum += 2.0 * std::cos(2.0 * kPi * mod1(nn * theta_dot));
        }
        total += std::exp(-kPi * dist2) * esum / static_cast<double>(2 * N + 1);
    });
    return total.real();
}

struct FPropertyParams {
    double c = 0.5;             // contraction factor, in (10/N, 1)
    int64_t q = 2;              // dilation integer >= 1
    double eps = 0.01;          // stability epsilon in (0,1)
    std::vector<double> alpha_tilde;  // perturbation with |alpha - alpha_tilde| <= eps N^{-2}
};

struct FPropertyReport {
    double f_value = 0.0;
    double contraction_lhs = 0.0, contraction_rhs = 0.0;
    bool contraction_holds = false;
    double dilation_lhs = 0.0, dilation_rhs = 0.0;
    bool dilation_holds = false;
    double stability_lhs = 0.0, stability_rhs = 0.0, stability_ratio = 0.0, stability_c0 = 0.0;
    bool stability_holds = false;
};

// Positivity restatements of the contraction/dilation properties (exact up to
// 1e-12 slack) plus the stability inequality with the provable constant
// e^{-4 pi} (1+eps)^{-d} from the proof's case split at distance 2.
inline FPropertyReport check_f_properties(const Lattice& L, const std::vector<double>& alpha,
                                          int64_t N, const FPropertyParams& params) {
    if (N < 1) throw std::invalid_argument("check_f_properties: N must be >= 1");
    if (!(params.c > 10.0 / static_cast<double>(N) && params.c < 1.0))
        throw std::invalid_argument("check_f_properties: c must lie in (10/N, 1)");
    if (params.q < 1) throw std::invalid_argument("check_f_properties: q must be >= 1");
    if (!(params.eps > 0.0 && params.eps < 1.0))
        throw std::invalid_argument("check_f_properties: eps must lie in (0,1)");
    std::vector<double> at = params.alpha_tilde.empty() ? alpha : params.alpha_tilde;
    if (static_cast<int>(at.size()) != L.d)
        throw std::invalid_argument("check_f_properties: alpha_tilde dimension mismatch");
    double dist = 0.0;
    for (int i = 0; i < L.d; ++i) {
        double diff = alpha[static_cast<size_t>(i)] - at[static_cast<size_t>(i)];
        dist += diff * diff;
    }
    if (std::sqrt(dist) > params.eps / (static_cast<double>(N) * static_cast<double>(N)) + tol::identity)
        throw std::invalid_argument("check_f_properties: |alpha - alpha_tilde| exceeds eps N^{-2}");

    FPropertyReport rep;
    rep.f_value = f_lattice(L, alpha, N);

    // (i) contraction: F(N) >= ((2 floor(cN) + 1)/(2N+1)) F(floor(cN))
    int64_t cn = static_cast<int64_t>(std::floor(params.c * static_cast<double>(N)));
    rep.contraction_lhs = rep.f_value;
    rep.contraction_rhs = (static_cast<double>(2 * cn + 1) / static_cast<double>(2 * N + 1)) *
                          f_lattice(L, alpha, cn);
    rep.contraction_holds = rep.contraction_lhs >= rep.contraction_rhs - tol::identity;

    // (ii) dilation: F_{alpha}(N) >= ((2 floor(N/q) + 1)/(2N+1)) F_{q^2 alpha}(floor(N/q))
    int64_t nq = N / params.q;
    std::vector<double> qa(alpha);
    for (double& v : qa) v = mod1(v * static_cast<double>(params.q) * static_cast<double>(params.q));
    rep.dilation_lhs = rep.f_value;
    rep.dilation_rhs = (static_cast<double>(2 * nq + 1) / static_cast<double>(2 * N + 1)) *
                       f_lattice(L, qa, nq);
    rep.dilation_holds = rep.dilation_lhs >= rep.dilation_rhs - tol::identity;

    // (iii) stability: F_{L,alpha}(N) >= c0 (1+eps)^{-d} F_{(1+eps)L}((1+eps) alpha~, N)
    double scale = 1.0 + params.eps;
    Lattice Ls = scaled_lattice(L, scale);
    std::vector<double> as(at);
    for (double& v : as) v *= scale;
    double fs = f_lattice(Ls, as, N);
    rep.stability_c0 = std::exp(-4.0 * kPi) * std::pow(scale, -L.d);
    rep.stability_lhs = rep.f_value;
    rep.stability_rhs = rep.stability_c0 * fs;
    rep.stability_ratio = fs > 0.0 ? rep.f_value / fs : std::numeric_limits<double>::infinity();
    rep.stability_holds = rep.stability_lhs >= rep.stability_rhs - tol::identity;
    return rep;
}

// Convergent denominators of theta up to q_bound, plus exhaustive small q;
// returns the q minimizing ||q theta|| (ties -> smallest q).
inline SearchResult weyl_rational_approx(double theta_val, int64_t N, int64_t q_bound) {
    if (N < 1) throw std::invalid_argument("weyl_rational_approx: N must be >= 1");
    if (q_bound < 1) throw std::invalid_argument("weyl_rational_approx: q_bound must be >= 1");
    std::vector<int64_t> candidates;
    constexpr int64_t kExhaustive = 100000;
    for (int64_t q = 1; q <= std::min(q_bound, kExhaustive); ++q) candidates.push_back(q);
    // continued-fraction denominators
    double x = mod1(theta_val);
    int64_t qm2 = 0, qm1 = 1;
    for (int it = 0; it < 64; ++it) {
        if (x < 1e-15) break;
        x = 1.0 / x;
        double ad = std::floor(x);
        if (ad > 1e17) break;
        int64_t a = static_cast<int64_t>(ad);
        x -= ad;
        __int128 qk_wide = (it == 0) ? (__int128)a : (__int128)a * qm1 + qm2;
        if (qk_wide > q_bound || qk_wide <= 0) break;
        int64_t qk = static_cast<int64_t>(qk_wide);
        if (it == 0) { qm2 = 1; qm1 = qk; } else { qm2 = qm1; qm1 = qk; }
        candidates.push_back(qk);
    }
    SearchResult best{0, std::numeric_limits<double>::infinity()};
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    for (int64_t q : candidates) {
        double v = torus_norm(static_cast<double>(q) * theta_val);
        if (v < best.value) best = {q, v};
    }
    return best;
}

enum class AlternativeBranch { F_large, relation_found };

struct AlternativeOutcome {
    AlternativeBranch branch = AlternativeBranch::F_large;
    double F_value = 0.0;
    Vec xi;                    // primitive dual vector (relation branch)
    std::vector<int64_t> xi_coords;  // integer coordinates in the dual basis
    int64_t q = 0;
    double residual = 0.0;     // ||q xi . alpha||
    double exp_sum = 0.0;      // |E_n e(n^2 xi . alpha)| at the chosen xi
};

struct AlternativeConfig {
    double cutoff_C = 2.0;       // M = C (sqrt(d) + sqrt(log A))
    double f_threshold = 0.5;    // branch F_large iff F >= threshold
    int64_t q_bound_cap = 1000000;
};

namespace detail {
// Nonzero dual vectors with |xi| <= M, canonical sign, sorted by (|xi|, coords).
inline std::vector<std::pair<Vec, std::vector<int64_t>>> dual_points_in_ball(const Lattice& L,
                                                                             double M) {
    Lattice D = dual_lattice(L);
    QRData qr = qr_decompose(D.basis);
    Vec zero(static_cast<size_t>(L.d), 0.0);
    Vec c = qr.q.apply_transpose(zero);
    std::vector<std::pair<Vec, std::vector<int64_t>>> pts;
    enumerate_ball(qr, c, M, [&](const std::array<int64_t, 4>& z, double) {
        std::vector<int64_t> coords(z.begin(), z.begin() + L.d);
        bool all_zero = true;
        int first_nonzero_sign = 0;
        for (int64_t v : coords)
            if (v != 0) {
                all_zero = false;
                first_nonzero_sign = v > 0 ? 1 : -1;
                break;
            }
        if (all_zero || first_nonzero_sign < 0) return;  // canonical sign: first nonzero > 0
        Vec zz(static_cast<size_t>(L.d));
        for (int i = 0; i < L.d; ++i) zz[static_cast<size_t>(i)] = static_cast<double>(coords[static_cast<size_t>(i)]);
        pts.emplace_back(D.basis.apply(zz), std::move(coords));
    });
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        double na = norm2(a.first), nb = norm2(b.first);
        if (std::abs(na - nb) > 1e-12) return na < nb;
        return a.second < b.second;
    });
    return pts;
}
}  // namespace detail

// Either F >= threshold, or a primitive dual vector xi and an integer q with
// ||q xi . alpha|| small, found via the largest quadratic exponential sum
// within the truncation ball.
inline AlternativeOutcome schmidt_alternative(const Lattice& L, const std::vector<double>& alpha,
                                              int64_t N, const AlternativeConfig& cfg = {}) {
    AlternativeOutcome out;
    out.F_value = f_lattice(L, alpha, N);
    if (out.F_value >= cfg.f_threshold) {
        out.branch = AlternativeBranch::F_large;
        return out;
    }
    const double A = a_lambda(L);
    const double M = cfg.cutoff_C * (std::sqrt(static_cast<double>(L.d)) +
                                     std::sqrt(std::log(std::max(A, 1.0))));
    auto points = detail::dual_points_in_ball(L, std::max(M, 1.0));

    double best_sum = -1.0;
    Vec best_xi;
    std::vector<int64_t> best_coords;
    for (const auto& [xi, coords] : points) {
        double th = dot(xi, Vec(alpha));
        double esum = 1.0;
        for (int64_t n = 1; n <= N; ++n) {
            double nn = static_cast<double>(n) * static_cast<double>(n);
            esum += 2.0 * std::cos(2.0 * kPi * mod1(nn * th));
        }
        double val = std::abs(esum) / static_cast<double>(2 * N + 1);
        if (val > best_sum + 1e-15) {
            best_sum = val;
            best_xi = xi;
            best_coords = coords;
        }
    }
    if (best_coords.empty() ||
        (out.F_value < 0.5 && best_sum < 1.0 / (4.0 * A) - tol::ineq)) {
        std::ostringstream msg;
        msg << "schmidt_alternative: no nontrivial exponential sum despite F = " << out.F_value
            << " (best |E e(n^2 xi.alpha)| = " << best_sum << ", cutoff M = " << M
            << "); cutoff too small";
        throw std::runtime_error(msg.str());
    }

    // rational approximation of the chosen quadratic Weyl sum phase
    double th = dot(best_xi, Vec(alpha));
    int64_t q_bound = std::min<int64_t>(
        cfg.q_bound_cap, std::max<int64_t>(16, static_cast<int64_t>(std::ceil(16.0 * A * A))));
    SearchResult weyl = weyl_rational_approx(th, std::max<int64_t>(N, 1), q_bound);

    // primitive reduction: divide the dual coordinates by their gcd, scaling q
    int64_t g = 0;
    for (int64_t z : best_coords) g = std::gcd(g, std::llabs(z));
    if (g == 0) throw std::runtime_error("schmidt_alternative: zero xi -- defect");
    std::vector<int64_t> prim_coords(best_coords);
    for (int64_t& z : prim_coords) z /= g;
    Lattice D = dual_lattice(L);
    Vec zz(static_cast<size_t>(L.d));
    for (int i = 0; i < L.d; ++i) zz[static_cast<size_t>(i)] = static_cast<double>(prim_coords[static_cast<size_t>(i)]);
    out.branch = AlternativeBranch::relation_found;
    out.xi = D.basis.apply(zz);
    out.xi_coords = prim_coords;
    out.q = weyl.n * g;
    out.exp_sum = best_sum;
    out.residual = torus_norm(static_cast<double>(out.q) * dot(out.xi, Vec(alpha)));
    return out;
}

struct DescentResult {
    int new_dim = 0;
    std::optional<Lattice> lattice;   // absent when new_dim == 0
    std::vector<double> alpha;
    int64_t N = 0;
    int64_t n_star = 0;
    double measured_ratio = 0.0;      // F_{L,alpha}(N) / F_{L',alpha'}(N')
    double descent_bound_lhs = 0.0;           // sublattice bound checked on the constructed pair
    double descent_bound_rhs = 0.0;
    bool descent_bound_holds = false;
    double dual_det_residual = 0.0;   // |det(L') det(L'*) - 1|
};

namespace detail {
// Integer kernel basis of a primitive vector w (gcd = 1), plus a vector e
// with w.e = 1; [k_1..k_{d-1} | e] is unimodular by construction (checked).
struct KernelBasis {
    std::vector<std::vector<int64_t>> kernel;
    std::vector<int64_t> e;
};

inline int64_t ext_gcd(int64_t a, int64_t b, int64_t& x, int64_t& y) {
    if (b == 0) {
        x = a >= 0 ? 1 : -1;
        y = 0;
        return std::llabs(a);
    }
    int64_t x1, y1;
    int64_t g = ext_gcd(b, a % b, x1, y1);
    x = y1;
    y = x1 - (a / b) * y1;
    return g;
}

inline KernelBasis integer_kernel(const std::vector<int64_t>& w) {
    const int d = static_cast<int>(w.size());
    KernelBasis out;
    std::vector<int64_t> e(static_cast<size_t>(d), 0);
    e[0] = 1;
    int64_t g = w[0];
    if (g < 0) { g = -g; e[0] = -1; }
    if (g == 0 && d == 1) throw std::runtime_error("integer_kernel: zero vector");
    for (int i = 1; i < d; ++i) {
        int64_t x, y;
        int64_t g2 = ext_gcd(g, w[static_cast<size_t>(i)], x, y);
        if (g2 == 0) {
            // all coordinates so far are zero: the unit vector itself lies
            // in the kernel
            std::vector<int64_t> k(static_cast<size_t>(d), 0);
            k[static_cast<size_t>(i)] = 1;
            out.kernel.push_back(std::move(k));
            continue;
        }
        std::vector<int64_t> k(static_cast<size_t>(d), 0);
        for (int j = 0; j < d; ++j) k[static_cast<size_t>(j)] = (w[static_cast<size_t>(i)] / g2) * e[static_cast<size_t>(j)];
        k[static_cast<size_t>(i)] -= g / g2;
        out.kernel.push_back(std::move(k));
        for (int j = 0; j < d; ++j) e[static_cast<size_t>(j)] = x * e[static_cast<size_t>(j)];
        e[static_cast<size_t>(i)] += y;
        g = g2;
    }
    if (g != 1) throw std::runtime_error("integer_kernel: vector is not primitive");
    out.e = std::move(e);
    // [k_1 .. k_{d-1} | e] must be unimodular, i.e. the kernel vectors span
    // the full integer kernel lattice rather than a finite-index sublattice
    Mat u;
    u.d = d;
    for (size_t col = 0; col < out.kernel.size(); ++col)
        for (int row = 0; row < d; ++row)
            u.at(row, static_cast<int>(col)) = static_cast<double>(out.kernel[col][static_cast<size_t>(row)]);
    for (int row = 0; row < d; ++row)
        u.at(row, d - 1) = static_cast<double>(out.e[static_cast<size_t>(row)]);
    if (std::abs(std::abs(mat_det(u)) - 1.0) > 1e-6)
        throw std::runtime_error("integer_kernel: completion is not unimodular -- defect");
    return out;
}
}  // namespace detail

// One descent level: rotate xi onto the last axis, correct alpha to a nearby
// beta with xi.beta integral, and drop to the sublattice in the hyperplane.
inline DescentResult descent_step(const Lattice& L, const std::vector<double>& alpha, int64_t N,
                                  const AlternativeOutcome& outcome) {
    if (outcome.branch != AlternativeBranch::relation_found)
        throw std::invalid_argument("descent_step: outcome must be relation_found");
    const int d = L.d;
    if (d < 1) throw std::invalid_argument("descent_step: d must be >= 1");

    // Householder reflection sending xi to |xi| e_d (or identity if aligned).
    Vec xi = outcome.xi;
    double xin = std::sqrt(norm2(xi));
    Mat H = Mat::identity(d);
    {
        Vec target(static_cast<size_t>(d), 0.0);
        target[static_cast<size_t>(d - 1)] = xin;
        Vec u(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) u[static_cast<size_t>(i)] = xi[static_cast<size_t>(i)] - target[static_cast<size_t>(i)];
        double un = norm2(u);
        if (un > 1e-24) {
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j)
                    H.at(i, j) -= 2.0 * u[static_cast<size_t>(i)] * u[static_cast<size_t>(j)] / un;
        }
    }
    Vec xi_rot = H.apply(xi);
    for (int i = 0; i + 1 < d; ++i)
        if (std::abs(xi_rot[static_cast<size_t>(i)]) > 1e-10 * std::max(1.0, xin))
            throw std::runtime_error("descent_step: xi not aligned after reflection -- defect");
    const double xd = xi_rot[static_cast<size_t>(d - 1)];

    Lattice L_rot = make_lattice(d, H.times(L.basis));
    Vec alpha_rot = H.apply(Vec(alpha));

    // beta: agree with q^2 alpha except the last coordinate snaps so that
    // xi . beta is an integer
    const int64_t q = outcome.q;
    const double q2 = static_cast<double>(q) * static_cast<double>(q);
    Vec beta(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) beta[static_cast<size_t>(i)] = q2 * alpha_rot[static_cast<size_t>(i)];
    double t_real = xd * beta[static_cast<size_t>(d - 1)];
    double t_round = std::nearbyint(t_real);
    beta[static_cast<size_t>(d - 1)] = t_round / xd;
    double D = std::abs(t_real - t_round) / std::abs(xd);  // |beta - q^2 alpha|

    // N_* chosen so the stability hypothesis |q^2 alpha - beta| <= (1/d)(N_*/q)^{-2} holds
    int64_t n_star = N;
    if (D > 0.0) {
        double bound = static_cast<double>(q) / std::sqrt(static_cast<double>(d) * D);
        n_star = std::min<int64_t>(N, std::max<int64_t>(1, static_cast<int64_t>(std::floor(bound))));
    }
    int64_t n_next = n_star / q;

    DescentResult res;
    res.new_dim = d - 1;
    res.n_star = n_star;
    res.N = n_next;

    // m in Lambda with xi.m = xi.beta, via the primitive coordinate vector
    // w = B^T xi (w.z = t has a solution because gcd(w) = 1)
    std::vector<int64_t> w(static_cast<size_t>(d));
    {
        Vec wr = mat_transpose(L.basis).apply(xi);
        for (int i = 0; i < d; ++i) {
            double r = std::nearbyint(wr[static_cast<size_t>(i)]);
            if (std::abs(wr[static_cast<size_t>(i)] - r) > 1e-8)
                throw std::runtime_error("descent_step: xi has non-integer dual coordinates -- defect");
            w[static_cast<size_t>(i)] = static_cast<int64_t>(r);
        }
    }
    detail::KernelBasis kb = detail::integer_kernel(w);
    int64_t t_int = static_cast<int64_t>(t_round);
    std::vector<int64_t> z(static_cast<size_t>(d), 0);
    for (int i = 0; i < d; ++i) z[static_cast<size_t>(i)] = kb.e[static_cast<size_t>(i)] * t_int;

    Vec zf(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) zf[static_cast<size_t>(i)] = static_cast<double>(z[static_cast<size_t>(i)]);
    Vec m = L_rot.basis.apply(zf);
    Vec beta_prime(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) beta_prime[static_cast<size_t>(i)] = beta[static_cast<size_t>(i)] - m[static_cast<size_t>(i)];
    if (std::abs(beta_prime[static_cast<size_t>(d - 1)]) > 1e-8 * std::max(1.0, std::abs(t_real)))
        throw std::runtime_error("descent_step: beta' has nonzero last coordinate -- defect");
    beta_prime[static_cast<size_t>(d - 1)] = 0.0;

    const double scale = 1.0 + 1.0 / static_cast<double>(d);
    // full-rank side of the constructed descent pair
    Lattice L_full = scaled_lattice(L_rot, scale);
    std::vector<double> alpha_full(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) alpha_full[static_cast<size_t>(i)] = scale * beta[static_cast<size_t>(i)];

    double F_orig = f_lattice(L, alpha, N);

    if (d == 1) {
        // descent bottoms out; F = 1 by convention in dimension 0
        res.lattice.reset();
        res.alpha.clear();
        double F_sub = f_lattice_dim0();
        res.measured_ratio = F_orig / F_sub;
        res.descent_bound_lhs = f_lattice(L_full, alpha_full, n_next);
        res.descent_bound_rhs = L_full.det * F_sub;  // det ratio with the 0-dim convention det = 1
        res.descent_bound_holds = res.descent_bound_lhs >= res.descent_bound_rhs - 1e-10;
        res.dual_det_residual = 0.0;
        return res;
    }

    // sublattice (1 + 1/d) Lambda_rot intersected with the hyperplane x_d = 0
    Mat sub;
    sub.d = d - 1;
    for (size_t kcol = 0; kcol < kb.kernel.size(); ++kcol) {
        Vec kf(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) kf[static_cast<size_t>(i)] = static_cast<double>(kb.kernel[kcol][static_cast<size_t>(i)]);
        Vec v = L_rot.basis.apply(kf);
        if (std::abs(v[static_cast<size_t>(d - 1)]) > 1e-10 * (1.0 + std::sqrt(norm2(v))))
            throw std::runtime_error("descent_step: kernel vector leaves the hyperplane -- defect");
        for (int i = 0; i < d - 1; ++i) sub.at(i, static_cast<int>(kcol)) = scale * v[static_cast<size_t>(i)];
    }
    Lattice L_sub = make_lattice(d - 1, sub);
    res.lattice = L_sub;
    res.alpha.assign(static_cast<size_t>(d - 1), 0.0);
    for (int i = 0; i < d - 1; ++i) res.alpha[static_cast<size_t>(i)] = scale * beta_prime[static_cast<size_t>(i)];

    double F_sub = f_lattice(L_sub, res.alpha, n_next);
    res.measured_ratio = F_sub > 0.0 ? F_orig / F_sub : std::numeric_limits<double>::infinity();

    // exact sublattice inequality on the constructed pair:
    // F_{(1+1/d)L, (1+1/d)beta}(N') >= (det/det') F_{L', alpha'}(N')
    res.descent_bound_lhs = f_lattice(L_full, alpha_full, n_next);
    res.descent_bound_rhs = (L_full.det / L_sub.det) * F_sub;
    res.descent_bound_holds = res.descent_bound_lhs >= res.descent_bound_rhs - 1e-10;

    Lattice L_sub_dual = dual_lattice(L_sub);
    res.dual_det_residual = std::abs(L_sub.det * L_sub_dual.det - 1.0);
    return res;
}

struct TraceLevel {
    int d = 0;
    double det = 0.0;
    double A = 0.0;
    double F = 0.0;
    double trivial_bound = 0.0;  // det / (2N+1)
    bool trivial_bound_holds = false;
    int64_t N = 0;
    AlternativeBranch branch = AlternativeBranch::F_large;
    int64_t q = 0;
    double residual = 0.0;
    double descent_ratio = 0.0;
    bool descent_bound_holds = true;
};

struct FTrace {
    std::vector<TraceLevel> levels;
    bool reached_dim0 = false;
    bool stopped_f_large = false;
};

// Iterate alternative + descent until F is large or the dimension hits 0,
// checking the trivial bound F >= det/(2N+1) at every level.
inline FTrace f_lower_bound_trace(const Lattice& L0, const std::vector<double>& alpha0, int64_t N0,
                                  const AlternativeConfig& cfg = {}) {
    if (L0.det < 1.0 - tol::identity)
        throw std::invalid_argument("f_lower_bound_trace: requires det(Lambda) >= 1");
    if (L0.d > 4) throw std::invalid_argument("f_lower_bound_trace: d <= 4 guard");
    FTrace trace;
    Lattice L = L0;
    std::vector<double> alpha = alpha0;
    int64_t N = N0;
    for (int level = 0; level <= L0.d; ++level) {
        AlternativeOutcome alt = schmidt_alternative(L, alpha, N, cfg);
        TraceLevel rec;
        rec.d = L.d;
        rec.det = L.det;
        rec.A = a_lambda(L);
        rec.F = alt.F_value;
        rec.N = N;
        rec.trivial_bound = L.det / static_cast<double>(2 * N + 1);
        rec.trivial_bound_holds = rec.F >= rec.trivial_bound - tol::identity;
        if (!rec.trivial_bound_holds)
            throw std::runtime_error("f_lower_bound_trace: trivial lower bound violated -- defect");
        rec.branch = alt.branch;
        if (alt.branch == AlternativeBranch::F_large) {
            trace.levels.push_back(rec);
            trace.stopped_f_large = true;
            return trace;
        }
        rec.q = alt.q;
        rec.residual = alt.residual;
        DescentResult desc = descent_step(L, alpha, N, alt);
        rec.descent_ratio = desc.measured_ratio;
        rec.descent_bound_holds = desc.descent_bound_holds;
        trace.levels.push_back(rec);
        if (desc.new_dim == 0) {
            TraceLevel bottom;
            bottom.d = 0;
            bottom.det = 1.0;
            bottom.A = 1.0;
            bottom.F = f_lattice_dim0();
            bottom.N = desc.N;
            bottom.trivial_bound = 0.0;
            bottom.trivial_bound_holds = true;
            trace.levels.push_back(bottom);
            trace.reached_dim0 = true;
            return trace;
        }
        L = *desc.lattice;
        alpha = desc.alpha;
        N = std::max<int64_t>(desc.N, 0);
    }
    throw std::runtime_error("f_lower_bound_trace: level cap exceeded -- defect");
}

struct ThetaRecurrenceResult {
    int64_t n = 0;
    bool certified = false;
    double theta_value = 0.0;       // max Theta over the scan
    double distance = 0.0;          // dist(n^2 R alpha, R Z^d)
    std::vector<double> coord_norms;  // torus_norm(n^2 alpha_j) per coordinate
    double threshold = 0.0;
};

struct ThetaRecurrenceConfig {
    double threshold = 0.0;  // 0 -> 1e-3 * R^{-d}
    double c0 = 3.0;         // requires R >= c0 * d
};

// Recurrence search through the theta machinery: Lambda = R Z^d with target
// vector R alpha; a theta value above threshold certifies
// dist(n^2 R alpha, R Z^d) <= sqrt(R), i.e. ||n^2 alpha_j|| <= 1/sqrt(R).
inline ThetaRecurrenceResult schmidt_via_theta(const std::vector<double>& alpha, int64_t N,
                                               double R, const ThetaRecurrenceConfig& cfg = {}) {
    const int d = static_cast<int>(alpha.size());
    if (d < 1 || d > 3) throw std::invalid_argument("schmidt_via_theta: d <= 3 guard");
    if (N < 1) throw std::invalid_argument("schmidt_via_theta: N must be >= 1");
    if (R < cfg.c0 * d)
        throw std::invalid_argument("schmidt_via_theta: requires R >= C0 d");
    Lattice L = scaled_lattice(integer_lattice(d), R);
    double threshold = cfg.threshold > 0.0 ? cfg.threshold : 1e-3 * std::pow(R, -d);

    ThetaRecurrenceResult best;
    best.threshold = threshold;
    best.theta_value = -1.0;
    for (int64_t n = 1; n <= N; ++n) {
        double nn = static_cast<double>(n) * static_cast<double>(n);
        Vec x(static_cast<size_t>(d));
        for (int i = 0; i < d; ++i) x[static_cast<size_t>(i)] = nn * R * alpha[static_cast<size_t>(i)];
        double v = theta(L, 1.0, x).value;
        if (v > best.theta_value + 1e-15) {
            best.theta_value = v;
            best.n = n;
        }
    }
    double nn = static_cast<double>(best.n) * static_cast<double>(best.n);
    double dist2 = 0.0;
    best.coord_norms.resize(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i) {
        double tn = torus_norm(nn * alpha[static_cast<size_t>(i)]);
        best.coord_norms[static_cast<size_t>(i)] = tn;
        dist2 += (R * tn) * (R * tn);
    }
    best.distance = std::sqrt(dist2);
    best.certified = best.theta_value >= threshold && best.distance <= std::sqrt(R);
    return best;
}

}  // namespace ap4
