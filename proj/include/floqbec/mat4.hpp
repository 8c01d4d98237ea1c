#ifndef FLOQBEC_MAT4_HPP
#define FLOQBEC_MAT4_HPP

#include <array>
#include <cmath>

#include "floqbec/constants.hpp"

namespace floqbec {

/// Dense 4x4 complex matrix, row-major. Small enough that everything is
/// hand-rolled; no external linear algebra needed.
struct Mat4 {
    std::array<cplx, 16> a{};

    cplx& operator()(int r, int c) { return a[static_cast<std::size_t>(4 * r + c)]; }
    const cplx& operator()(int r, int c) const {
        return a[static_cast<std::size_t>(4 * r + c)];
    }

    static Mat4 identity() {
        Mat4 m;
        for (int i = 0; i < 4; ++i) m(i, i) = 1.0;
        return m;
    }

    cplx trace() const { return a[0] + a[5] + a[10] + a[15]; }

    bool finite() const {
        for (const cplx& v : a)
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
        return true;
    }

    Mat4& operator+=(const Mat4& o) {
        for (int i = 0; i < 16; ++i) a[static_cast<std::size_t>(i)] += o.a[static_cast<std::size_t>(i)];
        return *this;
    }
    friend Mat4 operator+(Mat4 x, const Mat4& y) { return x += y; }
    friend Mat4 operator*(const cplx& s, Mat4 m) {
        for (auto& v : m.a) v *= s;
        return m;
    }
    friend Mat4 operator*(double s, Mat4 m) {
        for (auto& v : m.a) v *= s;
        return m;
    }

    friend Mat4 operator*(const Mat4& x, const Mat4& y) {
        Mat4 r;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) {
                cplx s = 0.0;
                for (int k = 0; k < 4; ++k) s += x(i, k) * y(k, j);
                r(i, j) = s;
            }
        return r;
    }
};

inline cplx det4(const Mat4& m) {
    // cofactor expansion via 2x2 minors (Laplace along first two rows)
    auto m2 = [&](int r0, int r1, int c0, int c1) {
        return m(r0, c0) * m(r1, c1) - m(r0, c1) * m(r1, c0);
    };
    return m2(0, 1, 0, 1) * m2(2, 3, 2, 3) - m2(0, 1, 0, 2) * m2(2, 3, 1, 3) +
           m2(0, 1, 0, 3) * m2(2, 3, 1, 2) + m2(0, 1, 1, 2) * m2(2, 3, 0, 3) -
           m2(0, 1, 1, 3) * m2(2, 3, 0, 2) + m2(0, 1, 2, 3) * m2(2, 3, 0, 1);
}

/// Eigenvalues of a 4x4 complex matrix via its characteristic polynomial
/// (Faddeev-LeVerrier coefficients, Durand-Kerner iteration, Newton polish).
inline std::array<cplx, 4> eigenvalues4(const Mat4& m) {
    // Newton's identities from power-sum traces
    const Mat4 m2 = m * m;
    const Mat4 m3 = m2 * m;
    const Mat4 m4 = m3 * m;
    const cplx t1 = m.trace(), t2 = m2.trace(), t3 = m3.trace(), t4 = m4.trace();
    const cplx e1 = t1;
    const cplx e2 = (e1 * t1 - t2) / 2.0;
    const cplx e3 = (e2 * t1 - e1 * t2 + t3) / 3.0;
    const cplx e4 = (e3 * t1 - e2 * t2 + e1 * t3 - t4) / 4.0;
    // p(x) = x^4 - e1 x^3 + e2 x^2 - e3 x + e4
    const std::array<cplx, 5> c{e4, -e3, e2, -e1, cplx(1.0, 0.0)};

    auto eval = [&c](const cplx& x, cplx* dp) {
        cplx p = c[4], d = 0.0;
        for (int i = 3; i >= 0; --i) {
            d = d * x + p;
            p = p * x + c[static_cast<std::size_t>(i)];
        }
        if (dp) *dp = d;
        return p;
    };

    // scale estimate for starting circle
    double scale = 0.0;
    for (int i = 0; i < 4; ++i) {
        const double mag = std::abs(c[static_cast<std::size_t>(i)]);
        if (mag > 0.0) scale = std::max(scale, std::pow(mag, 1.0 / (4 - i)));
    }
    if (scale == 0.0) return {cplx(0.0), cplx(0.0), cplx(0.0), cplx(0.0)};

    std::array<cplx, 4> z;
    const cplx seed = scale * cplx(0.4, 0.9);
    z[0] = seed;
    for (int i = 1; i < 4; ++i) z[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i - 1)] * cplx(0.4, 0.9);

    // Durand-Kerner
    for (int it = 0; it < 400; ++it) {
        double move = 0.0;
        for (int i = 0; i < 4; ++i) {
            cplx denom = 1.0;
            for (int j = 0; j < 4; ++j)
                if (j != i) denom *= z[static_cast<std::size_t>(i)] - z[static_cast<std::size_t>(j)];
            if (denom == cplx(0.0)) {
                z[static_cast<std::size_t>(i)] += 1e-8 * scale * cplx(1.0, 1.0);
                move = 1.0;
                continue;
            }
            const cplx delta = eval(z[static_cast<std::size_t>(i)], nullptr) / denom;
            z[static_cast<std::size_t>(i)] -= delta;
            move = std::max(move, std::abs(delta));
        }
        if (move < 1e-15 * scale) break;
    }
    // Newton polish (helps simple roots; harmless for near-degenerate ones)
    for (int i = 0; i < 4; ++i)
        for (int it = 0; it < 3; ++it) {
            cplx d;
            const cplx p = eval(z[static_cast<std::size_t>(i)], &d);
            if (std::abs(d) < 1e-30) break;
            const cplx step = p / d;
            if (std::abs(step) > 0.5 * scale) break;
            z[static_cast<std::size_t>(i)] -= step;
        }
    return z;
}

}  // namespace floqbec

#endif
