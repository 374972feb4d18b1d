#pragma once
// Full-rank lattices in R^d (d <= 4): duals, Gaussian theta sums with
// certified truncation tails, and the Poisson-summation dual evaluation.

#include <functional>
#include <numeric>

#include "ap4/common.hpp"

namespace ap4 {

using Vec = std::vector<double>;

// Row-major square matrix, d <= 4.
struct Mat {
    int d = 0;
    std::array<double, 16> a{};

    double& at(int i, int j) { return a[static_cast<size_t>(i * d + j)]; }
    double at(int i, int j) const { return a[static_cast<size_t>(i * d + j)]; }

    static Mat identity(int d) {
        Mat m;
        m.d = d;
        for (int i = 0; i < d; ++i) m.at(i, i) = 1.0;
        return m;
    }

    Vec apply(const Vec& x) const {
        Vec y(static_cast<size_t>(d), 0.0);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) y[static_cast<size_t>(i)] += at(i, j) * x[static_cast<size_t>(j)];
        return y;
    }

    Vec apply_transpose(const Vec& x) const {
        Vec y(static_cast<size_t>(d), 0.0);
        for (int j = 0; j < d; ++j)
            for (int i = 0; i < d; ++i) y[static_cast<size_t>(j)] += at(i, j) * x[static_cast<size_t>(i)];
        return y;
    }

    Mat times(const Mat& o) const {
        Mat r;
        r.d = d;
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                double s = 0.0;
                for (int k = 0; k < d; ++k) s += at(i, k) * o.at(k, j);
                r.at(i, j) = s;
            }
        return r;
    }

    Mat scaled(double c) const {
        Mat r = *this;
        for (auto& v : r.a) v *= c;
        return r;
    }
};

inline double dot(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const Vec& a) { return dot(a, a); }

// Gaussian elimination with partial pivoting: determinant and inverse.
inline double mat_det(const Mat& m) {
    Mat w = m;
    const int d = m.d;
    double det = 1.0;
    for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r)
            if (std::abs(w.at(r, col)) > std::abs(w.at(piv, col))) piv = r;
        if (std::abs(w.at(piv, col)) < 1e-300) return 0.0;
        if (piv != col) {
            for (int j = 0; j < d; ++j) std::swap(w.at(piv, j), w.at(col, j));
            det = -det;
        }
        det *= w.at(col, col);
        for (int r = col + 1; r < d; ++r) {
            double f = w.at(r, col) / w.at(col, col);
            for (int j = col; j < d; ++j) w.at(r, j) -= f * w.at(col, j);
        }
    }
    return det;
}

inline Mat mat_inverse(const Mat& m) {
    const int d = m.d;
    Mat w = m;
    Mat inv = Mat::identity(d);
    for (int col = 0; col < d; ++col) {
        int piv = col;
        for (int r = col + 1; r < d; ++r)
            if (std::abs(w.at(r, col)) > std::abs(w.at(piv, col))) piv = r;
        if (std::abs(w.at(piv, col)) < 1e-300)
            throw std::invalid_argument("mat_inverse: singular matrix");
        if (piv != col)
            for (int j = 0; j < d; ++j) {
                std::swap(w.at(piv, j), w.at(col, j));
                std::swap(inv.at(piv, j), inv.at(col, j));
            }
        double pv = w.at(col, col);
        for (int j = 0; j < d; ++j) {
            w.at(col, j) /= pv;
            inv.at(col, j) /= pv;
        }
        for (int r = 0; r < d; ++r) {
            if (r == col) continue;
            double f = w.at(r, col);
            if (f == 0.0) continue;
            for (int j = 0; j < d; ++j) {
                w.at(r, j) -= f * w.at(col, j);
                inv.at(r, j) -= f * inv.at(col, j);
            }
        }
    }
    return inv;
}

inline Mat mat_transpose(const Mat& m) {
    Mat r;
    r.d = m.d;
    for (int i = 0; i < m.d; ++i)
        for (int j = 0; j < m.d; ++j) r.at(i, j) = m.at(j, i);
    return r;
}

struct Lattice {
    int d = 0;
    Mat basis;       // columns are basis vectors
    double det = 0;  // |det(basis)| > 0
    Mat dual_basis;  // inverse-transpose: <b_i, b*_j> = delta_ij
};

inline Lattice make_lattice(int d, const Mat& basis) {
    if (d < 1 || d > 4) throw std::invalid_argument("make_lattice: d must be in 1..4");
    Lattice L;
    L.d = d;
    L.basis = basis;
    double det = mat_det(basis);
    if (std::abs(det) < 1e-12) throw std::invalid_argument("make_lattice: basis is singular");
    L.det = std::abs(det);
    L.dual_basis = mat_transpose(mat_inverse(basis));
    return L;
}

inline Lattice make_lattice(int d, const std::vector<double>& entries_rowmajor) {
    if (d < 1 || d > 4) throw std::invalid_argument("make_lattice: d must be in 1..4");
    if (static_cast<int>(entries_rowmajor.size()) != d * d)
        throw std::invalid_argument("make_lattice: need d*d entries");
    Mat m;
    m.d = d;
    for (int i = 0; i < d * d; ++i) m.a[static_cast<size_t>(i)] = entries_rowmajor[static_cast<size_t>(i)];
    return make_lattice(d, m);
}

inline Lattice integer_lattice(int d) { return make_lattice(d, Mat::identity(d)); }

inline Lattice scaled_lattice(const Lattice& L, double c) {
    if (c <= 0.0) throw std::invalid_argument("scaled_lattice: scale must be positive");
    return make_lattice(L.d, L.basis.scaled(c));
}

inline Lattice dual_lattice(const Lattice& L) {
    Lattice D;
    D.d = L.d;
    D.basis = L.dual_basis;
    D.det = 1.0 / L.det;
    D.dual_basis = L.basis;
    return D;
}

namespace detail {

// QR by modified Gram-Schmidt; returns upper-triangular R with positive
// diagonal and Q implicitly via c = Q^T x.
struct QRData {
    int d;
    Mat q;  // orthonormal columns
    Mat r;  // upper triangular
};

inline QRData qr_decompose(const Mat& basis) {
    const int d = basis.d;
    QRData out;
    out.d = d;
    out.r.d = d;
    out.q.d = d;
    std::array<Vec, 4> cols;
    for (int j = 0; j < d; ++j) {
        cols[static_cast<size_t>(j)].assign(static_cast<size_t>(d), 0.0);
        for (int i = 0; i < d; ++i) cols[static_cast<size_t>(j)][static_cast<size_t>(i)] = basis.at(i, j);
    }
    for (int j = 0; j < d; ++j) {
        Vec v = cols[static_cast<size_t>(j)];
        for (int k = 0; k < j; ++k) {
            Vec qk(static_cast<size_t>(d));
            for (int i = 0; i < d; ++i) qk[static_cast<size_t>(i)] = out.q.at(i, k);
            double proj = dot(qk, v);
            out.r.at(k, j) = proj;
            for (int i = 0; i < d; ++i) v[static_cast<size_t>(i)] -= proj * qk[static_cast<size_t>(i)];
        }
        double nv = std::sqrt(norm2(v));
        if (nv < 1e-12) throw std::invalid_argument("qr_decompose: ill-conditioned basis");
        out.r.at(j, j) = nv;
        for (int i = 0; i < d; ++i) out.q.at(i, j) = v[static_cast<size_t>(i)] / nv;
    }
    return out;
}

// Tail bound for sum over lattice points at distance >= R from the center:
// shells [R+k, R+k+1) hold at most prod_i (2(R+k+1)/l_i + 1) points, each
// contributing at most e^{-pi t (R+k)^2}.
inline double gaussian_tail_bound(const QRData& qr, double t, double R) {
    double tail = 0.0;
    for (int k = 0;; ++k) {
        double rad = R + k;
        double cnt = 1.0;
        for (int i = 0; i < qr.d; ++i) cnt *= (2.0 * (rad + 1.0) / qr.r.at(i, i) + 1.0);
        double term = cnt * std::exp(-kPi * t * rad * rad);
        tail += term;
        if (term < 1e-30 || k > 400) break;
    }
    return tail;
}

// All z in Z^d with |c - R z| <= radius (upper-triangular R); visitor gets
// (z, squared distance).  Deterministic ascending order.
template <typename Visitor>
void enumerate_ball(const QRData& qr, const Vec& c, double radius, Visitor&& visit) {
    const int d = qr.d;
    std::array<int64_t, 4> z{};
    std::array<double, 5> partial{};  // accumulated squared residual from levels > i
    std::function<void(int)> rec = [&](int i) {
        // residual budget at level i
        double remaining = radius * radius - partial[static_cast<size_t>(i + 1)];
        if (remaining < 0.0) return;
        double ci = c[static_cast<size_t>(i)];
        for (int j = i + 1; j < d; ++j) ci -= qr.r.at(i, j) * static_cast<double>(z[static_cast<size_t>(j)]);
        double center = ci / qr.r.at(i, i);
        double half = std::sqrt(remaining) / qr.r.at(i, i);
        int64_t lo = static_cast<int64_t>(std::ceil(center - half - 1e-12));
        int64_t hi = static_cast<int64_t>(std::floor(center + half + 1e-12));
        for (int64_t zi = lo; zi <= hi; ++zi) {
            double resid = ci - qr.r.at(i, i) * static_cast<double>(zi);
            double acc = partial[static_cast<size_t>(i + 1)] + resid * resid;
            if (acc > radius * radius + 1e-9) continue;
            z[static_cast<size_t>(i)] = zi;
            if (i == 0) {
                visit(z, acc);
            } else {
                partial[static_cast<size_t>(i)] = acc;
                rec(i - 1);
            }
        }
    };
    partial[static_cast<size_t>(d)] = 0.0;
    rec(d - 1);
}

}  // namespace detail

struct ThetaEval {
    double value = 0.0;
    double truncation_radius = 0.0;
    double tail_bound = 0.0;
};

// Reduce x modulo the lattice (nearest-plane rounding); theta is invariant
// and the enumeration stays well-conditioned for large shifts.
inline Vec reduce_mod_lattice(const Lattice& L, const Vec& x) {
    Vec z = L.dual_basis.apply_transpose(x);  // B^{-1} x
    Vec rounded(static_cast<size_t>(L.d));
    for (int i = 0; i < L.d; ++i) rounded[static_cast<size_t>(i)] = std::nearbyint(z[static_cast<size_t>(i)]);
    Vec shift = L.basis.apply(rounded);
    Vec out(static_cast<size_t>(L.d));
    for (int i = 0; i < L.d; ++i) out[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] - shift[static_cast<size_t>(i)];
    return out;
}

// Theta_Lambda(t, x) = sum_{m in Lambda} e^{-pi t |x - m|^2}, truncated where
// the covering-estimate tail is <= 1e-15 absolute.
inline ThetaEval theta(const Lattice& L, double t, const Vec& x) {
    if (!(t > 0.0)) throw std::invalid_argument("theta: t must be positive");
    if (static_cast<int>(x.size()) != L.d) throw std::invalid_argument("theta: dimension mismatch");
    detail::QRData qr = detail::qr_decompose(L.basis);
    for (int i = 0; i < L.d; ++i)
        if (qr.r.at(i, i) < 1e-3)
            throw std::invalid_argument("theta: basis condition guard (Gram-Schmidt length < 1e-3)");

    Vec xr = reduce_mod_lattice(L, x);
    double R = std::sqrt(std::max(40.0 / (kPi * t), 1.0)) + 1.0;
    double tail = detail::gaussian_tail_bound(qr, t, R);
    while (tail > 1e-15) {
        R += 1.0;
        if (R > 200.0) throw std::invalid_argument("theta: truncation radius guard exceeded");
        tail = detail::gaussian_tail_bound(qr, t, R);
    }

    Vec c = qr.q.apply_transpose(xr);
    double sum = 0.0;
    detail::enumerate_ball(qr, c, R, [&](const std::array<int64_t, 4>&, double dist2) {
        sum += std::exp(-kPi * t * dist2);
    });
    return ThetaEval{sum, R, tail};
}

struct ThetaDualEval {
    double value = 0.0;
    double imag_residual = 0.0;
    double truncation_radius = 0.0;
    double tail_bound = 0.0;
};

// Right side of the Poisson identity:
// (1 / (t^{d/2} det L)) sum_{xi in L*} e^{-pi |xi|^2 / t} e(xi . x).
inline ThetaDualEval theta_dual(const Lattice& L, double t, const Vec& x) {
    if (!(t > 0.0)) throw std::invalid_argument("theta_dual: t must be positive");
    Lattice D = dual_lattice(L);
    detail::QRData qr = detail::qr_decompose(D.basis);
    for (int i = 0; i < L.d; ++i)
        if (qr.r.at(i, i) < 1e-3)
            throw std::invalid_argument("theta_dual: dual basis condition guard");

    Vec xr = reduce_mod_lattice(L, x);  // e(xi . x) is Lambda-periodic in x
    const double invt = 1.0 / t;
    double R = std::sqrt(std::max(40.0 / (kPi * invt), 1.0)) + 1.0;
    double tail = detail::gaussian_tail_bound(qr, invt, R);
    while (tail > 1e-15) {
        R += 1.0;
        if (R > 200.0) throw std::invalid_argument("theta_dual: truncation radius guard exceeded");
        tail = detail::gaussian_tail_bound(qr, invt, R);
    }

    Vec zero(static_cast<size_t>(L.d), 0.0);
    Vec c = qr.q.apply_transpose(zero);
    cd sum = 0.0;
    detail::enumerate_ball(qr, c, R, [&](const std::array<int64_t, 4>& z, double dist2) {
        Vec zz(static_cast<size_t>(L.d));
        for (int i = 0; i < L.d; ++i) zz[static_cast<size_t>(i)] = static_cast<double>(z[static_cast<size_t>(i)]);
        Vec xi = D.basis.apply(zz);
        sum += std::exp(-kPi * dist2 * invt) * e_of(dot(xi, xr));
    });
    double pref = 1.0 / (std::pow(t, L.d / 2.0) * L.det);
    ThetaDualEval out;
    out.value = pref * sum.real();
    out.imag_residual = std::abs(pref * sum.imag());
    out.truncation_radius = R;
    out.tail_bound = pref * tail;
    if (out.imag_residual > 1e-8)
        throw std::runtime_error("theta_dual: imaginary residue exceeds 1e-8 (enumeration defect)");
    return out;
}

// A_Lambda = sum_{xi in Lambda*} e^{-pi |xi|^2}, cross-checked against the
// primal form det(Lambda) sum_{m in Lambda} e^{-pi |m|^2}.
inline double a_lambda(const Lattice& L) {
    Vec zero(static_cast<size_t>(L.d), 0.0);
    double dual_side = theta(dual_lattice(L), 1.0, zero).value;
    double primal_side = L.det * theta(L, 1.0, zero).value;
    if (std::abs(dual_side - primal_side) > 1e-9 * std::max(1.0, std::abs(dual_side)))
        throw std::runtime_error("a_lambda: primal/dual cross-check failed");
    return dual_side;
}

}  // namespace ap4
