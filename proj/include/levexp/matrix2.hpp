// Copyright 2026 The levexp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LEVEXP_MATRIX2_HPP
#define LEVEXP_MATRIX2_HPP

#include <algorithm>
#include <cmath>

namespace levexp {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
};

/// Row-major 2x2 real matrix [[a, b], [c, d]].
struct Mat2 {
    double a = 0.0, b = 0.0;
    double c = 0.0, d = 0.0;

    static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }

    constexpr double trace() const { return a + d; }
    constexpr double det() const { return a * d - b * c; }
    constexpr Mat2 transposed() const { return {a, c, b, d}; }

    friend constexpr Mat2 operator+(const Mat2& m, const Mat2& n) {
        return {m.a + n.a, m.b + n.b, m.c + n.c, m.d + n.d};
    }
    friend constexpr Mat2 operator-(const Mat2& m, const Mat2& n) {
        return {m.a - n.a, m.b - n.b, m.c - n.c, m.d - n.d};
    }
    friend constexpr Mat2 operator*(double s, const Mat2& m) {
        return {s * m.a, s * m.b, s * m.c, s * m.d};
    }
    friend constexpr Mat2 operator*(const Mat2& m, const Mat2& n) {
        return {m.a * n.a + m.b * n.c, m.a * n.b + m.b * n.d,
                m.c * n.a + m.d * n.c, m.c * n.b + m.d * n.d};
    }
    friend constexpr Vec2 operator*(const Mat2& m, Vec2 v) {
        return {m.a * v.x + m.b * v.y, m.c * v.x + m.d * v.y};
    }
};

/// Matrix exponential of a general real 2x2 matrix.
///
/// Cayley-Hamilton gives (M - tr/2)^2 = s^2 I with s^2 = tr^2/4 - det, so
/// exp(M) = e^{tr/2} [cosh(s) I + sinh(s)/s (M - tr/2 I)], continued to
/// cos/sin for s^2 < 0.
inline Mat2 expm(const Mat2& m) {
    const double half_tr = 0.5 * m.trace();
    const double s2 = half_tr * half_tr - m.det();
    const Mat2 shifted = m - half_tr * Mat2::identity();
    double ch = 1.0;
    double sh_over_s = 1.0;
    if (s2 > 0.0) {
        const double s = std::sqrt(s2);
        ch = std::cosh(s);
        sh_over_s = std::sinh(s) / s;
    } else if (s2 < 0.0) {
        const double s = std::sqrt(-s2);
        ch = std::cos(s);
        sh_over_s = std::sin(s) / s;
    }
    // Series tail for tiny |s| keeps sinh(s)/s accurate.
    if (std::abs(s2) < 1e-16) {
        ch = 1.0 + 0.5 * s2;
        sh_over_s = 1.0 + s2 / 6.0;
    }
    return std::exp(half_tr) * (ch * Mat2::identity() + sh_over_s * shifted);
}

/// Lower Cholesky factor of a symmetric positive semidefinite matrix,
/// tolerant of exact or rounding-level singularity.
inline Mat2 cholesky_psd(const Mat2& q) {
    const double l11 = std::sqrt(std::max(q.a, 0.0));
    const double l21 = l11 > 0.0 ? q.c / l11 : 0.0;
    const double l22 = std::sqrt(std::max(q.d - l21 * l21, 0.0));
    return {l11, 0.0, l21, l22};
}

}  // namespace levexp

#endif  // LEVEXP_MATRIX2_HPP
