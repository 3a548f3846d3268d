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

#include "helpers.hpp"
#include "rtsplat/errors.hpp"
#include "rtsplat/gradcheck.hpp"
#include "rtsplat/objective.hpp"
#include "rtsplat/pipeline.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace rtsplat;

TEST_CASE("backward needs a recorded forward") {
    const Scene scene = test::random_scene(1, 3);
    const Camera cam = test::test_camera(8);
    CHECK_THROWS_AS(backward(scene, cam, RenderOutputs{}, PixelGrads::zeros(8, 8)), ContractViolation);
}

TEST_CASE("zero upstream gives zero gradients") {
    const Scene scene = test::random_scene(2, 8);
    const Camera cam = test::test_camera(12);
    const RenderOutputs out = render(scene, cam);
    const GradientBundle g = backward(scene, cam, out, PixelGrads::zeros(12, 12));
    std::vector<double> flat(surfel_param_count(scene.sh_degree));
    for (const GaussianSurfel& s : g.surfels) {
        pack_surfel(s, flat);
        for (double v : flat) CHECK(v == 0.0);
    }
    std::vector<double> shading(ShadingParams::size());
    g.shading.pack(shading);
    for (double v : shading) CHECK(v == 0.0);
}

TEST_CASE("gated render is forward invariant") {
    const Scene scene = test::random_scene(3, 20);
    const Camera cam = test::test_camera(16);
    RenderSettings gated, plain;
    gated.gating_k = 4;
    plain.gating_k = 0;
    const RenderOutputs a = render(scene, cam, gated), b = render(scene, cam, plain);
    CHECK(a.color.data == b.color.data);

    PixelGrads up = PixelGrads::zeros(16, 16);
    for (std::size_t i = 0; i < up.color.data.size(); ++i) up.color.data[i] = std::sin(0.37 * i);
    const GradientBundle g = backward(scene, cam, a, up, gated);
    double err = 0;
    for (std::size_t p = 0; p < a.gate.pixels(); ++p)
        for (int c = 0; c < 3; ++c)
            err = std::max(err, std::abs(g.transmission_grad.at(p, c) - a.gate.at(p, 0) * g.transmission_grad_ungated.at(p, c)));
    CHECK(err <= 1e-10);
}

TEST_CASE("finite differences agree with the analytic gradient") {
    const GradCheckCase c = make_gradcheck_case(11, 6, 10);
    for (double k : {4.0, 0.0}) {
        RenderSettings settings;
        settings.gating_k = k;
        LossWeights w;
        w.gating_k = k;
        const GradCheckReport report = finite_diff_check(c.scene, c.camera, c.target, w, settings);
        INFO(report.table());
        CHECK(report.pass());
        for (const GroupReport& g : report.groups) CHECK(g.checked > 0);
    }
}

TEST_CASE("occluded surfel has zero color gradient") {
    GradCheckCase c = make_gradcheck_case(4, 4, 10);
    // Opaque screen right in front of the camera, and a surfel hidden behind everything.
    std::mt19937_64 rng(1);
    GaussianSurfel screen = init_surfel(Vec3(0, 0, -2), Vec3(0, 0, -1), 50.0, Vec3(0.5, 0.5, 0.5), c.scene.sh_degree, rng);
    screen.occupancy_raw = screen.opacity_raw = 30;
    GaussianSurfel hidden = init_surfel(Vec3(0, 0, 0.5), Vec3(0, 0, -1), 0.3, Vec3(0.2, 0.7, 0.4), c.scene.sh_degree, rng);
    c.scene.surfels.push_back(screen);
    c.scene.surfels.push_back(hidden);
    const std::size_t idx = c.scene.surfels.size() - 1;

    const ObjectiveResult res = evaluate_objective(c.scene, c.camera, c.target, LossWeights{}, RenderSettings{}, true);
    REQUIRE(res.grads);
    for (double v : res.grads->surfels[idx].sh_color) CHECK(std::abs(v) <= 1e-8);

    Scene moved = c.scene;
    moved.surfels[idx].sh_color[0] += 1e-3;
    const double shifted = evaluate_objective(moved, c.camera, c.target, LossWeights{}, RenderSettings{}, false).total;
    CHECK(std::abs(shifted - res.total) <= 1e-8 * 1e-3);
}

TEST_CASE("branch signature changes when fragments change") {
    const GradCheckCase c = make_gradcheck_case(5, 6, 10);
    const LossWeights w;
    auto sig = [&](const Scene& s) {
        const ObjectiveResult r = evaluate_objective(s, c.camera, c.target, w, RenderSettings{}, false);
        return branch_signature(s, c.camera, r, c.target, w);
    };
    CHECK(sig(c.scene) == sig(c.scene));
    Scene far = c.scene;
    far.surfels[0].position.x() += 50;
    CHECK(sig(far) != sig(c.scene));
}

namespace {

double color_sum(const Scene& scene, const Camera& cam, const RenderSettings& settings) {
    double sum = 0;
    for (double v : render(scene, cam, settings).color.data) sum += v;
    return sum;
}

} // namespace

TEST_CASE("single surfel opacity gradient of the color sum") {
    std::mt19937_64 rng(3);
    Scene scene;
    scene.sh_degree = 1;
    scene.shading = ShadingParams::initialized(rng);
    GaussianSurfel s = init_surfel(Vec3(0.1, -0.05, 0), Vec3(0.2, 0.1, -1).normalized(), 0.4, Vec3(0.8, 0.3, 0.6), 1, rng);
    s.opacity_raw = 0.4;
    s.occupancy_raw = 0.9;
    s.transmissivity_raw = -0.3;
    scene.surfels.push_back(s);
    const Camera cam = test::test_camera(12);
    RenderSettings settings;
    settings.gating_k = 0;

    const RenderOutputs out = render(scene, cam, settings);
    PixelGrads up = PixelGrads::zeros(12, 12);
    std::fill(up.color.data.begin(), up.color.data.end(), 1.0);
    const double analytic = backward(scene, cam, out, up, settings).surfels[0].opacity_raw;

    const double h = 1e-5;
    Scene plus = scene, minus = scene;
    plus.surfels[0].opacity_raw += h;
    minus.surfels[0].opacity_raw -= h;
    const double numeric = (color_sum(plus, cam, settings) - color_sum(minus, cam, settings)) / (2 * h);
    CHECK(std::abs(analytic) > 1e-3);
    CHECK(std::abs(analytic - numeric) <= 1e-4 * std::abs(numeric));
}

TEST_CASE("closed gate keeps only deferred occupancy gradients") {
    const Scene scene = test::random_scene(21, 8);
    const Camera cam = test::test_camera(12);
    RenderOutputs out = render(scene, cam, RenderSettings{});
    std::fill(out.gate.data.begin(), out.gate.data.end(), 0.0);
    PixelGrads up = PixelGrads::zeros(12, 12);
    std::fill(up.color.data.begin(), up.color.data.end(), 1.0);
    const GradientBundle g = backward(scene, cam, out, up);

    // Oracle: the frozen-gate objective with g = 0 holds C_trans constant.
    GatingFreeze freeze{Image(12, 12, 1), out.transmission};
    RenderSettings frozen;
    frozen.freeze = &freeze;
    const double h = 1e-5;
    double largest = 0;
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        for (double v : g.surfels[i].sh_color) CHECK(v == 0.0);
        Scene plus = scene, minus = scene;
        plus.surfels[i].occupancy_raw += h;
        minus.surfels[i].occupancy_raw -= h;
        const double numeric = (color_sum(plus, cam, frozen) - color_sum(minus, cam, frozen)) / (2 * h);
        const double analytic = g.surfels[i].occupancy_raw;
        CHECK(std::abs(analytic - numeric) <= 1e-4 * std::max(std::abs(numeric), 1e-6));
        largest = std::max(largest, std::abs(analytic));
    }
    CHECK(largest > 1e-3);
}
