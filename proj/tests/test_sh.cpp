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

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

using namespace rtsplat;

TEST_CASE("basis is orthonormal on the sphere") {
    // Fibonacci quadrature is accurate enough for polynomials of degree <= 8.
    const int n = 20000, count = sh_count(kMaxShDegree);
    std::vector<double> gram(count * count, 0.0), b(count);
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < n; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / n;
        const double r = std::sqrt(1 - z * z);
        const Vec3 d(r * std::cos(golden * i), r * std::sin(golden * i), z);
        sh_basis(kMaxShDegree, d, b);
        for (int p = 0; p < count; ++p)
            for (int q = 0; q < count; ++q) gram[p * count + q] += b[p] * b[q];
    }
    for (int p = 0; p < count; ++p)
        for (int q = 0; q < count; ++q)
            CHECK(gram[p * count + q] * 4 * std::numbers::pi / n == doctest::Approx(p == q ? 1.0 : 0.0).epsilon(2e-3).scale(1));
}

TEST_CASE("basis gradient matches finite differences") {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    const int count = sh_count(kMaxShDegree);
    std::vector<double> b(count), bp(count), bm(count);
    std::vector<Vec3> grad(count);
    for (int trial = 0; trial < 10; ++trial) {
        const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
        sh_basis_grad(kMaxShDegree, d, b, grad);
        for (int axis = 0; axis < 3; ++axis) {
            Vec3 e = Vec3::Zero();
            e[axis] = 1e-6;
            sh_basis(kMaxShDegree, d + e, bp);
            sh_basis(kMaxShDegree, d - e, bm);
            for (int k = 0; k < count; ++k) CHECK(grad[k][axis] == doctest::Approx((bp[k] - bm[k]) / 2e-6).epsilon(1e-5).scale(1));
        }
    }
}

TEST_CASE("band index") {
    CHECK(sh_band(0) == 0);
    CHECK(sh_band(3) == 1);
    CHECK(sh_band(4) == 2);
    CHECK(sh_band(24) == 4);
    CHECK(sh_count(2) == 9);
}
