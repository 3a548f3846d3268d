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
#include "reference.hpp"
#include "rtsplat/rasterizer.hpp"

#include <doctest.h>

#include <cmath>

using namespace rtsplat;

namespace {

constexpr double kY00 = 0.28209479177387814;

// 9x9 camera at the origin looking down +z; pixel (4, 4) looks straight ahead.
Camera center_camera() {
    Camera c;
    c.width = c.height = 9;
    c.fx = c.fy = 9;
    c.cx = c.cy = 4.5;
    return c;
}

// Large degree-0 surfel facing the camera at depth z.
GaussianSurfel flat(double z, const Vec3& rgb, double occupancy, double opacity) {
    GaussianSurfel s = zero_surfel(0);
    s.position = Vec3(0, 0, z);
    s.rotation = Vec4(1, 0, 0, 0);
    s.log_scale = Vec2(std::log(50.0), std::log(50.0));
    for (int c = 0; c < 3; ++c) s.sh_color[c] = (rgb[c] - 0.5) / kY00;
    s.occupancy_raw = inverse_activation(occupancy);
    s.opacity_raw = inverse_activation(opacity);
    return s;
}

struct Passes {
    PreparedView view;
    FragmentList fragments;
    VolumetricImage vol;
    GBuffer gbuf;
};

Passes run(const Scene& scene, const Camera& cam, int workers = 1) {
    Passes p;
    p.view = prepare_view(scene, cam);
    p.fragments = build_fragments(p.view, cam, workers);
    p.vol = volumetric_forward(p.fragments, p.view, workers);
    p.gbuf = deferred_aggregate(p.fragments, p.view, cam, workers);
    return p;
}

constexpr std::size_t kCenter = 4 * 9 + 4;

} // namespace

TEST_CASE("kernel evaluation") {
    const Camera cam = center_camera();
    const Ray ray = camera_ray(cam, 4, 4);
    CHECK((ray.dir - Vec3::UnitZ()).norm() < 1e-15);
    const SurfelFrame frame{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()};

    auto hit = intersect_kernel(Vec3(0, 0, 2), frame, Vec2(1, 1), ray);
    REQUIRE(hit);
    CHECK(hit->u == doctest::Approx(0));
    CHECK(hit->v == doctest::Approx(0));
    CHECK(hit->kernel == doctest::Approx(1.0));
    CHECK(hit->depth == doctest::Approx(2.0));

    hit = intersect_kernel(Vec3(-0.5, 0, 2), frame, Vec2(0.5, 1), ray);
    REQUIRE(hit);
    CHECK(hit->u == doctest::Approx(1.0));
    CHECK(hit->kernel == doctest::Approx(0.60653).epsilon(1e-5));

    const SurfelFrame edge_on{Vec3::UnitX(), Vec3::UnitZ(), Vec3::UnitY()};
    CHECK_FALSE(intersect_kernel(Vec3(0, 0, 2), edge_on, Vec2(1, 1), ray));
    CHECK_FALSE(intersect_kernel(Vec3(0, 0, -2), frame, Vec2(1, 1), ray));
    CHECK_FALSE(intersect_kernel(Vec3(3.5, 0, 2), frame, Vec2(1, 1), ray));
}

TEST_CASE("fragments follow global depth order") {
    Scene scene;
    scene.sh_degree = 0;
    scene.surfels = {flat(2, Vec3(0, 1, 0), 0.5, 0.5), flat(1, Vec3(1, 0, 0), 0.5, 0.5)};
    const Camera cam = center_camera();
    Passes p = run(scene, cam);
    for (std::size_t px = 0; px < cam.width * std::size_t(cam.height); ++px) {
        auto list = p.fragments.at(px);
        REQUIRE(list.size() == 2);
        CHECK(list[0].surfel == 1);
        CHECK(list[1].surfel == 0);
    }

    scene.surfels[0].position.z() = 1;
    p = run(scene, cam);
    CHECK(p.fragments.at(kCenter)[0].surfel == 0);
    CHECK(p.view.order == std::vector<std::uint32_t>{0, 1});

    scene.surfels.clear();
    p = run(scene, cam);
    CHECK(p.fragments.fragments.empty());
    CHECK(p.vol.weight(kCenter) == 0.0);
}

TEST_CASE("volumetric compositing") {
    const Camera cam = center_camera();
    Scene scene;
    scene.sh_degree = 0;

    scene.surfels = {flat(2, Vec3(1, 0, 0), 1.0, 0.8)};
    Passes p = run(scene, cam);
    CHECK((p.vol.color(kCenter) - Vec3(0.8, 0, 0)).norm() < 1e-5);
    CHECK(p.vol.weight(kCenter) == doctest::Approx(0.8).epsilon(1e-5));

    scene.surfels = {flat(1, Vec3(1, 0, 0), 1.0, 0.5), flat(2, Vec3(0, 1, 0), 1.0, 1.0)};
    p = run(scene, cam);
    CHECK((p.vol.color(kCenter) - Vec3(0.5, 0.5, 0)).norm() < 1e-5);

    // High occupancy with low opacity lets the background dominate.
    scene.surfels = {flat(1, Vec3(1, 0, 0), 0.99, 0.05), flat(2, Vec3(0, 1, 0), 1.0, 1.0)};
    p = run(scene, cam);
    CHECK(p.vol.color(kCenter)[0] == doctest::Approx(0.0495).epsilon(1e-4));
    CHECK(p.vol.color(kCenter)[1] == doctest::Approx(0.9505).epsilon(1e-4));
}

TEST_CASE("deferred first-surface aggregation") {
    const Camera cam = center_camera();
    Scene scene;
    scene.sh_degree = 0;

    GaussianSurfel single = flat(2, Vec3(0.2, 0.2, 0.2), 1.0, 0.3);
    single.roughness_raw = inverse_activation(0.4);
    single.transmissivity_raw = inverse_activation(0.7);
    single.material[3] = 0.25;
    scene.surfels = {single};
    Passes p = run(scene, cam);
    const GSums& s = p.gbuf.sums[kCenter];
    CHECK(s[gattr::kProbability] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(s[gattr::kRoughness] == doctest::Approx(0.4).epsilon(1e-5));
    CHECK(s[gattr::kTransmissivity] == doctest::Approx(0.7).epsilon(1e-5));
    CHECK(s[gattr::kOpacity] == doctest::Approx(0.3).epsilon(1e-5));
    CHECK(s[gattr::kFeature + 3] == doctest::Approx(0.25).epsilon(1e-5));
    CHECK((p.gbuf.normal[kCenter] - Vec3(0, 0, -1)).norm() < 1e-9);
    CHECK(p.gbuf.depth[kCenter] == doctest::Approx(2.0));

    GaussianSurfel glass = flat(1, Vec3(0.5, 0.5, 0.5), 0.99, 0.05);
    GaussianSurfel back = flat(2, Vec3(0.5, 0.5, 0.5), 1.0, 1.0);
    back.rotation = quat_from_normal(Vec3(0.6, 0, -0.8));
    scene.surfels = {glass, back};
    p = run(scene, cam);
    const auto list = p.fragments.at(kCenter);
    REQUIRE(list.size() == 2);
    CHECK(p.gbuf.probability(kCenter) == doctest::Approx(1.0).epsilon(1e-5));
    const test::ReferencePixel ref = test::reference_render(scene, cam)[kCenter];
    REQUIRE(ref.probabilities.size() == 2);
    CHECK(ref.probabilities[0] == doctest::Approx(0.99));
    CHECK(ref.probabilities[1] == doctest::Approx(0.01).epsilon(1e-4));
    CHECK(p.gbuf.normal[kCenter].dot(Vec3(0, 0, -1)) > 0.99);

    scene.surfels = {flat(1, Vec3(1, 1, 1), 0.0, 1.0), flat(2, Vec3(1, 1, 1), 0.0, 1.0)};
    p = run(scene, cam);
    CHECK(p.gbuf.probability(kCenter) < 1e-5);
    CHECK(p.gbuf.background(kCenter));
}

TEST_CASE("early termination includes the terminating fragment") {
    const Camera cam = center_camera();
    Scene scene;
    scene.sh_degree = 0;
    for (int i = 0; i < 5; ++i) scene.surfels.push_back(flat(1 + i, Vec3(0.5, 0.5, 0.5), 0.999, 0.999));
    const Passes p = run(scene, cam);
    // Transmittance after two near-opaque fragments is ~4e-6 < 1e-4.
    CHECK(p.vol.used[kCenter] == 2);
    CHECK(p.gbuf.used[kCenter] == 2);
}

TEST_CASE("production rasterizer matches the naive reference") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Scene scene = test::random_scene(seed, 25);
        const Camera cam = test::test_camera(16);
        const Passes p = run(scene, cam, 2);
        const auto ref = test::reference_render(scene, cam);
        double err = 0;
        for (std::size_t px = 0; px < ref.size(); ++px) {
            const Vec3 c = p.vol.color(px);
            err = std::max(err, (c - ref[px].transmission).cwiseAbs().maxCoeff());
            err = std::max(err, std::abs(p.vol.weight(px) - ref[px].weight));
            err = std::max(err, std::abs(p.gbuf.probability(px) - ref[px].probability));
            err = std::max(err, std::abs(p.gbuf.opacity(px) - ref[px].opacity));
            CHECK(p.vol.weight(px) <= 1.0);
            CHECK(p.gbuf.probability(px) <= 1.0);
        }
        CHECK(err < 1e-6);
    }
}

TEST_CASE("unit opacity reduces the volumetric pass to the deferred pass") {
    const Scene scene = test::random_scene(77, 30);
    const Camera cam = test::test_camera(16);
    PreparedView view = prepare_view(scene, cam);
    for (ViewSurfel& v : view.surfels) {
        v.act.opacity = 1.0;
        v.effective_opacity = v.act.occupancy;
    }
    const FragmentList frags = build_fragments(view, cam, 1);
    const VolumetricImage vol = volumetric_forward(frags, view, 1);
    const GBuffer gbuf = deferred_aggregate(frags, view, cam, 1);
    for (std::size_t px = 0; px < vol.sums.size(); ++px) {
        CHECK(std::abs(vol.weight(px) - gbuf.probability(px)) <= 1e-12);
        CHECK(std::abs(vol.sums[px][vattr::kDepth] - gbuf.sums[px][gattr::kDepth]) <= 1e-12);
        CHECK(vol.used[px] == gbuf.used[px]);
    }
}

TEST_CASE("worker count does not change the passes") {
    const Scene scene = test::random_scene(12, 40);
    const Camera cam = test::test_camera(24);
    const Passes a = run(scene, cam, 1), b = run(scene, cam, 4);
    CHECK(a.fragments.offsets == b.fragments.offsets);
    for (std::size_t px = 0; px < a.vol.sums.size(); ++px) {
        CHECK(a.vol.sums[px] == b.vol.sums[px]);
        CHECK(a.gbuf.sums[px] == b.gbuf.sums[px]);
    }
}

TEST_CASE("shared opacity matches a single-opacity volumetric pass") {
    Scene scene = test::random_scene(31, 30);
    const Camera cam = test::test_camera(16);
    PreparedView baseline = prepare_view(scene, cam);
    for (ViewSurfel& v : baseline.surfels) v.effective_opacity = v.act.occupancy;
    const VolumetricImage expect = volumetric_forward(build_fragments(baseline, cam, 1), baseline, 1);

    scene.variant.shared_opacity = true;
    const PreparedView shared = prepare_view(scene, cam);
    const VolumetricImage got = volumetric_forward(build_fragments(shared, cam, 1), shared, 1);
    CHECK(got.sums == expect.sums);
    CHECK(got.used == expect.used);

    const auto ref = test::reference_render(scene, cam);
    double err = 0;
    for (std::size_t px = 0; px < ref.size(); ++px) {
        err = std::max(err, (got.color(px) - ref[px].transmission).cwiseAbs().maxCoeff());
        err = std::max(err, std::abs(got.weight(px) - ref[px].weight));
    }
    CHECK(err < 1e-12);
}
