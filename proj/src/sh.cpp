/*
 * Copyright (C) 2026 The rtsplat Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "rtsplat/sh.hpp"

#include "rtsplat/errors.hpp"

#include <array>

namespace rtsplat {
namespace {

// Forward-mode number carrying d/dx, d/dy, d/dz.
struct Dual3 {
    double v = 0;
    std::array<double, 3> d{};

    Dual3() = default;
    Dual3(double value) : v(value) {}
};

inline Dual3 operator+(const Dual3& a, const Dual3& b) {
    Dual3 r(a.v + b.v);
    for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] + b.d[i];
    return r;
}
inline Dual3 operator-(const Dual3& a, const Dual3& b) {
    Dual3 r(a.v - b.v);
    for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] - b.d[i];
    return r;
}
inline Dual3 operator*(const Dual3& a, const Dual3& b) {
    Dual3 r(a.v * b.v);
    for (int i = 0; i < 3; ++i) r.d[i] = a.d[i] * b.v + a.v * b.d[i];
    return r;
}
inline Dual3 operator*(double s, const Dual3& a) {
    Dual3 r(s * a.v);
    for (int i = 0; i < 3; ++i) r.d[i] = s * a.d[i];
    return r;
}

template <class T>
void basis(int degree, const T& x, const T& y, const T& z, T* out) {
    out[0] = T(0.28209479177387814);
    if (degree < 1) return;
    out[1] = -0.4886025119029199 * y;
    out[2] = 0.4886025119029199 * z;
    out[3] = -0.4886025119029199 * x;
    if (degree < 2) return;
    const T xx = x * x, yy = y * y, zz = z * z;
    const T xy = x * y, yz = y * z, xz = x * z;
    out[4] = 1.0925484305920792 * xy;
    out[5] = -1.0925484305920792 * yz;
    out[6] = 0.31539156525252005 * (3.0 * zz - T(1.0));
    out[7] = -1.0925484305920792 * xz;
    out[8] = 0.5462742152960396 * (xx - yy);
    if (degree < 3) return;
    out[9] = -0.5900435899266435 * (y * (3.0 * xx - yy));
    out[10] = 2.890611442640554 * (xy * z);
    out[11] = -0.4570457994644658 * (y * (5.0 * zz - T(1.0)));
    out[12] = 0.3731763325901154 * (z * (5.0 * zz - T(3.0)));
    out[13] = -0.4570457994644658 * (x * (5.0 * zz - T(1.0)));
    out[14] = 1.445305721320277 * (z * (xx - yy));
    out[15] = -0.5900435899266435 * (x * (xx - 3.0 * yy));
    if (degree < 4) return;
    out[16] = 2.5033429417967046 * (xy * (xx - yy));
    out[17] = -1.7701307697799304 * (yz * (3.0 * xx - yy));
    out[18] = 0.9461746957575601 * (xy * (7.0 * zz - T(1.0)));
    out[19] = -0.6690465435572892 * (yz * (7.0 * zz - T(3.0)));
    out[20] = 0.10578554691520431 * (zz * (35.0 * zz - T(30.0)) + T(3.0));
    out[21] = -0.6690465435572892 * (xz * (7.0 * zz - T(3.0)));
    out[22] = 0.47308734787878004 * ((xx - yy) * (7.0 * zz - T(1.0)));
    out[23] = -1.7701307697799304 * (xz * (xx - 3.0 * yy));
    out[24] = 0.6258357354491761 * (xx * (xx - 3.0 * yy) - yy * (3.0 * xx - yy));
}

void check_degree(int degree, std::size_t n) {
    if (degree < 0 || degree > kMaxShDegree)
        throw InvalidParameter("spherical harmonic degree must be in [0, 4], got " + std::to_string(degree));
    if (n < static_cast<std::size_t>(sh_count(degree))) throw DimensionMismatch("sh_basis output span too small");
}

} // namespace

void sh_basis(int degree, const Vec3& d, std::span<double> out) {
    check_degree(degree, out.size());
    basis<double>(degree, d.x(), d.y(), d.z(), out.data());
}

void sh_basis_grad(int degree, const Vec3& d, std::span<double> out, std::span<Vec3> grad) {
    check_degree(degree, out.size());
    check_degree(degree, grad.size());
    Dual3 x(d.x()), y(d.y()), z(d.z());
    x.d[0] = 1;
    y.d[1] = 1;
    z.d[2] = 1;
    std::array<Dual3, sh_count(kMaxShDegree)> vals;
    basis<Dual3>(degree, x, y, z, vals.data());
    for (int k = 0; k < sh_count(degree); ++k) {
        out[k] = vals[k].v;
        grad[k] = Vec3(vals[k].d[0], vals[k].d[1], vals[k].d[2]);
    }
}

} // namespace rtsplat
