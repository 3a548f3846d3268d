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
#include "rtsplat/metrics.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace rtsplat;

TEST_CASE("psnr closed forms") {
    Image a(8, 8, 3, 0.4), b(8, 8, 3, 0.5);
    CHECK(psnr(a, a) == kPsnrCap);
    CHECK(psnr(a, b) == doctest::Approx(20.0));

    Image mask(8, 8, 1, 0.0), half = a;
    for (std::size_t p = 0; p < 32; ++p) {
        mask.at(p, 0) = 1.0;
        for (int c = 0; c < 3; ++c) half.at(p, c) = 0.5;
    }
    CHECK(psnr(a, half, &mask) == doctest::Approx(20.0));
    CHECK(psnr(a, half) == doctest::Approx(23.0103).epsilon(1e-5));
}

TEST_CASE("empty regions and shape errors") {
    Image a(4, 4, 3, 0.2);
    const Image empty_mask(4, 4, 1, 0.0);
    CHECK_THROWS_AS(psnr(a, a, &empty_mask), UndefinedRegion);
    CHECK_THROWS_AS(ssim_metric(a, a, &empty_mask), UndefinedRegion);
    CHECK_THROWS_AS(psnr(a, Image(4, 5, 3)), DimensionMismatch);
}

TEST_CASE("psnr decreases with error and ssim of identical images is one") {
    Image a(8, 8, 3, 0.3);
    double last = kPsnrCap + 1;
    for (double off : {0.01, 0.05, 0.1, 0.3}) {
        const double v = psnr(a, Image(8, 8, 3, 0.3 + off));
        CHECK(v < last);
        last = v;
    }
    CHECK(ssim_metric(a, a) == doctest::Approx(1.0));
}

namespace {

struct SlabCase {
    Camera camera;
    Image glass, background, mask;
};

SlabCase slab() {
    SlabCase s;
    s.camera = Camera::look_at(Vec3::Zero(), Vec3(0, 0, 1), Vec3::UnitY(), 8, 8, 8);
    s.glass = Image(8, 8, 1, 1.0);
    s.background = Image(8, 8, 1, 3.0);
    s.mask = Image(8, 8, 1, 1.0);
    return s;
}

GaussianSurfel wall(double z, double occupancy, double opacity) {
    GaussianSurfel g = zero_surfel(0);
    g.rotation = Vec4(1, 0, 0, 0);
    g.position = Vec3(0, 0, z);
    g.log_scale = Vec2::Constant(std::log(500.0));
    g.occupancy_raw = inverse_activation(occupancy);
    g.opacity_raw = inverse_activation(opacity);
    return g;
}

} // namespace

TEST_CASE("floater energy") {
    const SlabCase c = slab();
    Scene scene;
    scene.sh_degree = 0;
    CHECK(floater_energy(scene, c.camera, c.glass, c.background, c.mask) == 0.0);

    scene.surfels = {wall(2.0, 0.6, 0.5)};
    CHECK(floater_energy(scene, c.camera, c.glass, c.background, c.mask) == doctest::Approx(0.3).epsilon(1e-4));

    scene.surfels = {wall(1.0, 0.9, 0.2), wall(3.0, 0.99, 0.99)};
    CHECK(floater_energy(scene, c.camera, c.glass, c.background, c.mask) == 0.0);

    Image off_glass = c.glass;
    for (double& v : off_glass.data) v = std::numeric_limits<double>::infinity();
    scene.surfels = {wall(2.0, 0.6, 0.5)};
    CHECK(floater_energy(scene, c.camera, off_glass, c.background, c.mask) == 0.0);
}

TEST_CASE("evaluation report") {
    const Dataset data = synthesize(test::small_spec());
    const Scene scene = init_scene(data, 1, 0);
    const EvalReport report = evaluate(scene, data, data.test_indices());
    REQUIRE(report.views.size() == 1);
    CHECK(std::isfinite(report.mean.psnr));
    CHECK(std::isfinite(report.views[0].psnr_masked));
    CHECK(report.views[0].floater >= 0.0);
    CHECK(report.views[0].floater <= 1.0);
    CHECK(report.csv().rfind("view,psnr", 0) == 0);
    CHECK(report.table().find("mean") != std::string::npos);
}
