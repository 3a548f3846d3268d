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

#include "rtsplat/errors.hpp"
#include "rtsplat/shading.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace rtsplat;

TEST_CASE("mirror reflection") {
    CHECK((reflect_dir(Vec3::UnitZ(), Vec3::UnitZ()) - Vec3::UnitZ()).norm() < 1e-15);
    const double s = 1 / std::sqrt(2.0);
    CHECK((reflect_dir(Vec3::UnitZ(), Vec3(s, 0, s)) - Vec3(-s, 0, s)).norm() < 1e-12);

    std::mt19937_64 rng(8);
    std::normal_distribution<double> g;
    for (int i = 0; i < 50; ++i) {
        const Vec3 n = Vec3(g(rng), g(rng), g(rng)).normalized(), v = Vec3(g(rng), g(rng), g(rng)).normalized();
        const Vec3 r = reflect_dir(n, v);
        CHECK(n.dot(r) == doctest::Approx(n.dot(v)));
        CHECK(r.norm() == doctest::Approx(1.0));
    }
    CHECK_THROWS_AS(reflect_dir(Vec3(0, 0, 2), Vec3::UnitZ()), InvalidParameter);
}

TEST_CASE("prefiltered environment lookup") {
    Eigen::Matrix<double, ShadingParams::kEnvCoeffs, 3> env;
    env.setZero();
    env.row(0).setConstant(2 * std::sqrt(std::numbers::pi));
    for (const Vec3& r : {Vec3(0, 0, 1), Vec3(1, 0, 0), Vec3(0.6, -0.8, 0)})
        CHECK((env_eval(env, r, 0.3) - Vec3::Ones()).norm() < 1e-12);

    for (double rho : {0.0, 0.5, 1.0}) CHECK(env_band_attenuation(0, rho) == 1.0);
    CHECK(env_band_attenuation(1, 1.0) == doctest::Approx(0.13534).epsilon(1e-4));

    env.row(0).setConstant(-1.0);
    CHECK(env_eval(env, Vec3::UnitZ(), 0.1) == Vec3::Zero());
}

TEST_CASE("specular head") {
    ShadingParams zero;
    const std::array<double, ShadingParams::kFeatureDim> feature{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
    const SpecularOutput out = spec_head(zero, Vec3(0.3, 0.2, 0.1), feature, 0.7);
    CHECK((out.specular - Vec3::Constant(0.5)).norm() < 1e-15);
    CHECK(out.attenuation == 0.5);

    std::mt19937_64 a(42), b(42);
    const ShadingParams pa = ShadingParams::initialized(a), pb = ShadingParams::initialized(b);
    const SpecularOutput oa = spec_head(pa, Vec3(0.3, 0.2, 0.1), feature, 0.7);
    const SpecularOutput ob = spec_head(pb, Vec3(0.3, 0.2, 0.1), feature, 0.7);
    CHECK(oa.specular == ob.specular);
    CHECK(oa.attenuation == ob.attenuation);

    CHECK_THROWS_AS(spec_head(pa, Vec3(NAN, 0, 0), feature, 0.7, 12), InvalidParameter);
}

TEST_CASE("batched head matches single evaluation and its gradient") {
    std::mt19937_64 rng(5);
    ShadingParams params = ShadingParams::initialized(rng);
    std::uniform_real_distribution<double> uni(-1, 1);
    for (int i = 0; i < params.b1.size(); ++i) params.b1[i] = 0.1 * uni(rng);
    HeadBatch batch;
    batch.inputs.resize(ShadingParams::kInput, 4);
    for (int c = 0; c < 4; ++c)
        for (int r = 0; r < ShadingParams::kInput; ++r) batch.inputs(r, c) = uni(rng);
    batch.forward(params);
    for (int c = 0; c < 4; ++c) {
        std::array<double, ShadingParams::kFeatureDim> f{};
        for (int k = 0; k < ShadingParams::kFeatureDim; ++k) f[k] = batch.inputs(3 + k, c);
        const SpecularOutput single = spec_head(
            params, Vec3(batch.inputs(0, c), batch.inputs(1, c), batch.inputs(2, c)), f, batch.inputs(11, c));
        CHECK(single.specular[0] == doctest::Approx(batch.outputs(0, c)));
        CHECK(single.attenuation == doctest::Approx(batch.outputs(3, c)));
    }

    // Weighted output sum as the scalar objective.
    Eigen::MatrixXd weights(ShadingParams::kOutput, 4);
    for (int i = 0; i < weights.size(); ++i) weights.data()[i] = uni(rng);
    ShadingParams grad;
    const Eigen::MatrixXd grad_in = batch.backward(params, weights, grad);
    auto objective = [&](const ShadingParams& p, const Eigen::MatrixXd& in) {
        HeadBatch h;
        h.inputs = in;
        h.forward(p);
        return (h.outputs.array() * weights.array()).sum();
    };
    const double step = 1e-6;
    for (int r = 0; r < ShadingParams::kInput; ++r) {
        Eigen::MatrixXd plus = batch.inputs, minus = batch.inputs;
        plus(r, 1) += step;
        minus(r, 1) -= step;
        const double numeric = (objective(params, plus) - objective(params, minus)) / (2 * step);
        CHECK(grad_in(r, 1) == doctest::Approx(numeric).epsilon(1e-6).scale(1e-3));
    }
    std::vector<double> flat(ShadingParams::size()), gflat(ShadingParams::size());
    params.pack(flat);
    grad.pack(gflat);
    for (std::size_t i = ShadingParams::head_offset(); i < flat.size(); i += 97) {
        ShadingParams pp = params, pm = params;
        std::vector<double> f = flat;
        f[i] += step;
        pp.unpack(f);
        f[i] -= 2 * step;
        pm.unpack(f);
        const double numeric = (objective(pp, batch.inputs) - objective(pm, batch.inputs)) / (2 * step);
        CHECK(gflat[i] == doctest::Approx(numeric).epsilon(1e-6).scale(1e-3));
    }
}

TEST_CASE("shading parameter packing") {
    std::mt19937_64 rng(1);
    ShadingParams p = ShadingParams::initialized(rng);
    p.env(3, 1) = 0.75;
    std::vector<double> flat(ShadingParams::size());
    p.pack(flat);
    CHECK(flat[3 * 3 + 1] == 0.75);
    ShadingParams q;
    q.unpack(flat);
    CHECK(q.w2 == p.w2);
    CHECK(q.env == p.env);
}
