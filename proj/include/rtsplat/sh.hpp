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

#pragma once

#include "rtsplat/math.hpp"

#include <span>

namespace rtsplat {

inline constexpr int kMaxShDegree = 4;

constexpr int sh_count(int degree) { return (degree + 1) * (degree + 1); }

/// Real orthonormal spherical-harmonic basis up to `degree` (<= 4) at the unit
/// direction d. Band l occupies indices [l*l, (l+1)*(l+1)).
void sh_basis(int degree, const Vec3& d, std::span<double> out);

/// Basis values plus their gradients with respect to the (x, y, z) components of d,
/// treating each basis function as the polynomial it is on the sphere.
void sh_basis_grad(int degree, const Vec3& d, std::span<double> out, std::span<Vec3> grad);

/// Band index l of the flat coefficient index k.
constexpr int sh_band(int k) {
    int l = 0;
    while ((l + 1) * (l + 1) <= k) ++l;
    return l;
}

} // namespace rtsplat
