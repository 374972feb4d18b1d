#pragma once
// The quadrilinear 4-AP counting form, the Gowers U^2/U^3 norms (direct and
// composed algorithms), and empirical checks of the two control inequalities.

#include "ap4/cyclic.hpp"

namespace ap4 {

// Fourier coefficients f^(xi) = E_x f(x) e(-xi x / p), naive O(p^2).
struct Spectrum {
    int64_t p = 0;
    std::vector<cd> coef;
};

inline std::vector<cd> root_table(int64_t p) {
    std::vector<cd> w(static_cast<size_t>(p));
    for (int64_t k = 0; k < p; ++k)
        w[static_cast<size_t>(k)] = e_of(static_cast<double>(k) / static_cast<double>(p));
    return w;
}

inline Spectrum analyze(const CyclicFunction& f) {
    const int64_t p = f.p;
    std::vector<cd> w = root_table(p);
    Spectrum s;
    s.p = p;
    s.coef.resize(static_cast<size_t>(p));
    for (int64_t xi = 0; xi < p; ++xi) {
        cd acc = 0.0;
        int64_t k = 0;  // (-xi * x) mod p, updated incrementally
        for (int64_t x = 0; x < p; ++x) {
            acc += f.v[static_cast<size_t>(x)] * std::conj(w[static_cast<size_t>(k)]);
            k += xi;
            if (k >= p) k -= p;
        }
        s.coef[static_cast<size_t>(xi)] = acc / static_cast<double>(p);
    }
    return s;
}

inline CyclicFunction synthesize(const Spectrum& s) {
    const int64_t p = s.p;
    std::vector<cd> w = root_table(p);
    std::vector<cd> vals(static_cast<size_t>(p));
    for (int64_t x = 0; x < p; ++x) {
        cd acc = 0.0;
        int64_t k = 0;
        for (int64_t xi = 0; xi < p; ++xi) {
            acc += s.coef[static_cast<size_t>(xi)] * w[static_cast<size_t>(k)];
            k += x;
            if (k >= p) k -= p;
        }
        vals[static_cast<size_t>(x)] = acc;
    }
    return CyclicFunction(Modulus(p), std::move(vals));
}

// Lambda(f0,f1,f2,f3) = E_{x,h} f0(x) f1(x+h) f2(x+2h) f3(x+3h).
// Exact double loop, h = 0 and wraparound included.
inline cd lambda4(const CyclicFunction& f0, const CyclicFunction& f1, const CyclicFunction& f2,
                  const CyclicFunction& f3) {
    const int64_t p = f0.p;
    if (f1.p != p || f2.p != p || f3.p != p)
        throw std::invalid_argument("lambda4: modulus mismatch");
    cd total = chunked_sum<cd>(p, [&](int64_t x) {
        cd row = 0.0;
        int64_t x1 = x, x2 = x, x3 = x;
        for (int64_t h = 0; h < p; ++h) {
            row += f0.v[static_cast<size_t>(x)] * f1.v[static_cast<size_t>(x1)] *
                   f2.v[static_cast<size_t>(x2)] * f3.v[static_cast<size_t>(x3)];
            x1 += 1; if (x1 >= p) x1 -= p;
            x2 += 2; if (x2 >= p) x2 -= p;
            x3 += 3; if (x3 >= p) x3 -= p;
        }
        return row;
    });
    return total / (static_cast<double>(p) * static_cast<double>(p));
}

inline cd lambda4_diag(const CyclicFunction& f) { return lambda4(f, f, f, f); }

// |Lambda(f1,..,f4)| <= ||f_j||_1 * max_i ||f_i||_inf^3, valid for each j.
inline std::array<double, 4> lambda4_l1_bounds(const CyclicFunction& f1, const CyclicFunction& f2,
                                               const CyclicFunction& f3, const CyclicFunction& f4) {
    double m = std::max(std::max(f1.max_abs(), f2.max_abs()), std::max(f3.max_abs(), f4.max_abs()));
    double m3 = m * m * m;
    return {l1_norm(f1) * m3, l1_norm(f2) * m3, l1_norm(f3) * m3, l1_norm(f4) * m3};
}

// U^2 norm via the spectrum: (sum_xi |f^(xi)|^4)^{1/4}.
inline double u2_norm(const CyclicFunction& f) {
    Spectrum s = analyze(f);
    double acc = 0.0;
    for (const cd& c : s.coef) {
        double a2 = std::norm(c);
        acc += a2 * a2;
    }
    return std::pow(acc, 0.25);
}

// O(p^3) parallelepiped average, the independent route to the same value.
inline double u2_norm_direct(const CyclicFunction& f) {
    const int64_t p = f.p;
    cd total = chunked_sum<cd>(p, [&](int64_t x) {
        cd row = 0.0;
        for (int64_t h1 = 0; h1 < p; ++h1) {
            cd a = f.v[static_cast<size_t>(x)] * std::conj(f.at(x + h1));
            for (int64_t h2 = 0; h2 < p; ++h2)
                row += a * std::conj(f.at(x + h2)) * f.at(x + h1 + h2);
        }
        return row;
    });
    double val = total.real() / (static_cast<double>(p) * static_cast<double>(p) * static_cast<double>(p));
    return std::pow(std::max(val, 0.0), 0.25);
}

enum class U3Algorithm { direct, composed };

inline constexpr int64_t kU3DirectGuard = 64;

// ||f||_{U^3}^8 as an eightfold average (direct, O(p^4)) or via
// ||f||_{U^3}^8 = E_h ||g_h||_{U^2}^4 with g_h(x) = f(x) conj(f(x+h)).
inline double u3_norm(const CyclicFunction& f, U3Algorithm alg = U3Algorithm::composed,
                      bool guard_override = false) {
    const int64_t p = f.p;
    if (alg == U3Algorithm::direct) {
        if (p > kU3DirectGuard && !guard_override)
            throw std::invalid_argument("u3_norm: direct algorithm guarded to p <= 64 (O(p^4)); "
                                        "pass guard_override to lift");
        cd total = chunked_sum<cd>(p, [&](int64_t x) {
            cd row = 0.0;
            for (int64_t h1 = 0; h1 < p; ++h1)
                for (int64_t h2 = 0; h2 < p; ++h2) {
                    cd a = f.v[static_cast<size_t>(x)] * std::conj(f.at(x + h1)) *
                           std::conj(f.at(x + h2)) * f.at(x + h1 + h2);
                    for (int64_t h3 = 0; h3 < p; ++h3)
                        row += a * std::conj(f.at(x + h3)) * f.at(x + h2 + h3) * f.at(x + h1 + h3) *
                               std::conj(f.at(x + h1 + h2 + h3));
                }
            return row;
        });
        double val = total.real() / std::pow(static_cast<double>(p), 4.0);
        return std::pow(std::max(val, 0.0), 0.125);
    }
    // composed path: one U^2^4 evaluation per shift h
    double total = chunked_sum<double>(p, [&](int64_t h) {
        std::vector<cd> gh(static_cast<size_t>(p));
        for (int64_t x = 0; x < p; ++x)
            gh[static_cast<size_t>(x)] = f.v[static_cast<size_t>(x)] * std::conj(f.at(x + h));
        CyclicFunction g(Modulus(p), std::move(gh));
        Spectrum s = analyze(g);
        double acc = 0.0;
        for (const cd& c : s.coef) {
            double a2 = std::norm(c);
            acc += a2 * a2;
        }
        return acc;
    });
    return std::pow(std::max(total / static_cast<double>(p), 0.0), 0.125);
}

struct L1ControlReport {
    double lhs = 0.0;          // |Lambda(f^4) - Lambda(g^4)|
    double rhs = 0.0;          // 4 alpha^3 ||f-g||_1
    bool holds = false;
    std::array<cd, 4> telescope{};       // Lambda with f-g in slot j
    std::array<double, 4> slot_bounds{}; // ||f-g||_1 * alpha^3 per slot
};

// |Lambda(f,f,f,f) - Lambda(g,g,g,g)| <= 4 alpha^3 ||f-g||_{L^1}.
inline L1ControlReport check_l1_control(const CyclicFunction& f, const CyclicFunction& g,
                                        double bound_alpha) {
    if (f.p != g.p) throw std::invalid_argument("check_l1_control: modulus mismatch");
    if (f.max_abs() > bound_alpha + tol::identity || g.max_abs() > bound_alpha + tol::identity)
        throw std::invalid_argument("check_l1_control: pointwise bound alpha violated");
    CyclicFunction d = subtract(f, g);
    L1ControlReport r;
    r.lhs = std::abs(lambda4_diag(f) - lambda4_diag(g));
    double d1 = l1_norm(d);
    r.rhs = 4.0 * bound_alpha * bound_alpha * bound_alpha * d1;
    r.telescope = {lambda4(d, f, f, f), lambda4(g, d, f, f), lambda4(g, g, d, f), lambda4(g, g, g, d)};
    double a3 = bound_alpha * bound_alpha * bound_alpha;
    r.slot_bounds = {d1 * a3, d1 * a3, d1 * a3, d1 * a3};
    r.holds = r.lhs <= r.rhs + tol::ineq;
    return r;
}

struct GvnReport {
    double lambda_abs = 0.0;
    double min_u3 = 0.0;
    std::array<double, 4> u3{};
    bool holds = false;
};

// Generalized von Neumann: |Lambda(f1..f4)| <= min_j ||f_j||_{U^3}.
inline GvnReport check_gvn(const CyclicFunction& f1, const CyclicFunction& f2,
                           const CyclicFunction& f3, const CyclicFunction& f4) {
    for (const CyclicFunction* f : {&f1, &f2, &f3, &f4})
        if (f->max_abs() > 1.0 + tol::identity)
            throw std::invalid_argument("check_gvn: inputs must be 1-bounded");
    GvnReport r;
    r.lambda_abs = std::abs(lambda4(f1, f2, f3, f4));
    r.u3 = {u3_norm(f1), u3_norm(f2), u3_norm(f3), u3_norm(f4)};
    r.min_u3 = *std::min_element(r.u3.begin(), r.u3.end());
    r.holds = r.lambda_abs <= r.min_u3 + tol::ineq;
    return r;
}

struct U3PairReport {
    double lhs = 0.0;  // |Lambda(f^4) - Lambda(g^4)|
    double rhs = 0.0;  // 4 ||f-g||_{U^3}
    bool holds = false;
};

// Pair form of the control bound: |Lambda(f^4) - Lambda(g^4)| <= 4 ||f-g||_{U^3} for
// 1-bounded f, g.
inline U3PairReport check_u3_control(const CyclicFunction& f, const CyclicFunction& g) {
    if (f.p != g.p) throw std::invalid_argument("check_u3_control: modulus mismatch");
    for (const CyclicFunction* h : {&f, &g})
        if (h->max_abs() > 1.0 + tol::identity)
            throw std::invalid_argument("check_u3_control: inputs must be 1-bounded");
    U3PairReport r;
    r.lhs = std::abs(lambda4_diag(f) - lambda4_diag(g));
    r.rhs = 4.0 * u3_norm(subtract(f, g));
    r.holds = r.lhs <= r.rhs + tol::ineq;
    return r;
}

}  // namespace ap4
