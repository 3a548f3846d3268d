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
#include "rtsplat/config.hpp"
#include "rtsplat/editing.hpp"
#include "rtsplat/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace rtsplat;

namespace {

// Pixels whose first surface is the glass pane almost surely.
Image glass_mask(const test::GlassScene& g) {
    Scene glass_only = g.scene;
    glass_only.surfels.resize(g.glass_count);
    const RenderOutputs out = render(glass_only, g.camera);
    Image mask(g.camera.width, g.camera.height, 1);
    for (std::size_t p = 0; p < mask.pixels(); ++p) mask.at(p, 0) = out.gbuffer.probability(p) > 0.999 ? 1.0 : 0.0;
    return mask;
}

// Pixels where any selected surfel leaves a fragment.
std::vector<bool> footprint(const Scene& scene, const Camera& cam, const std::vector<std::size_t>& selected) {
    std::vector<bool> chosen(scene.surfels.size(), false), hit(static_cast<std::size_t>(cam.width) * cam.height, false);
    for (auto i : selected) chosen[i] = true;
    const PreparedView view = prepare_view(scene, cam);
    const FragmentList frags = build_fragments(view, cam);
    for (std::size_t p = 0; p < hit.size(); ++p)
        for (const Fragment& f : frags.at(p))
            if (chosen[f.surfel]) hit[p] = true;
    return hit;
}

} // namespace

TEST_CASE("reflection removal with full transmissivity shows the transmitted layer") {
    test::GlassScene g = test::glass_scene();
    const Image mask = glass_mask(g);
    std::size_t masked = 0;
    for (double v : mask.data) masked += v > 0.5;
    REQUIRE(masked > 100);

    const RenderOutputs before = render(g.scene, g.camera);
    EditSpec spec;
    spec.selection.kind = SelectionKind::Box;
    spec.selection.box_min = Vec3(-1, -1, 1.9);
    spec.selection.box_max = Vec3(1, 1, 2.1);
    spec.remove_reflection = true;
    spec.set_tau = 1.0;
    const EditResult res = apply_edit(g.scene, spec);
    CHECK(res.selected.size() == g.glass_count);

    const RenderOutputs after = render(g.scene, g.camera);
    const std::vector<bool> touched = footprint(g.scene, g.camera, res.selected);
    double inside = 0, outside = 0;
    for (std::size_t p = 0; p < mask.pixels(); ++p)
        for (int c = 0; c < 3; ++c) {
            if (mask.at(p, 0) > 0.5) inside = std::max(inside, std::abs(after.color.at(p, c) - after.transmission.at(p, c)));
            if (!touched[p]) outside = std::max(outside, std::abs(after.color.at(p, c) - before.color.at(p, c)));
        }
    CHECK(inside <= 1.0 / 255.0);
    CHECK(outside <= 1.0 / 255.0);
    CHECK(res.warnings.size() == 1); // tau = 1 is clamped into the open interval

    clear_reflection_removal(g.scene);
    for (const auto& s : g.scene.surfels) CHECK_FALSE(s.reflection_removed);
}

TEST_CASE("mask selection keeps surfels with a large first-hit share") {
    const test::GlassScene g = test::glass_scene();
    Image mask(g.camera.width, g.camera.height, 1);
    mask.at(16, 16, 0) = 1.0;
    const auto chosen = select_by_mask(g.scene, g.camera, mask);
    REQUIRE(!chosen.empty());
    for (auto i : chosen) CHECK(i < g.glass_count);

    // The same rule by hand: p = sigma G T over the pixel's fragments.
    const PreparedView view = prepare_view(g.scene, g.camera);
    const FragmentList frags = build_fragments(view, g.camera);
    std::vector<std::size_t> expected;
    double t = 1.0;
    for (const Fragment& f : frags.at(16 * 32 + 16)) {
        const double a = view.surfels[f.surfel].act.occupancy * f.kernel;
        if (a * t > 0.1) expected.push_back(f.surfel);
        t *= 1.0 - a;
    }
    std::sort(expected.begin(), expected.end());
    CHECK(chosen == expected);
    CHECK_THROWS_AS(select_by_mask(g.scene, g.camera, Image(8, 8, 1)), DimensionMismatch);
}

TEST_CASE("attribute edits") {
    test::GlassScene g = test::glass_scene(1);
    EditSpec spec;
    spec.selection.kind = SelectionKind::Box;
    spec.selection.box_min = Vec3(-1, -1, 1.9);
    spec.selection.box_max = Vec3(1, 1, 2.1);
    spec.tint = Vec3(1, 0.5, 0.5);
    spec.roughness_scale = 0.0;
    const Scene original = g.scene;
    const EditResult res = apply_edit(g.scene, spec);
    CHECK(res.selected.size() == g.glass_count);
    for (std::size_t i = 0; i < g.glass_count; ++i) {
        const ActivatedSurfel a = activate(original.surfels[i]), b = activate(g.scene.surfels[i]);
        CHECK(b.scatter[0] == doctest::Approx(a.scatter[0]));
        CHECK(b.scatter[1] == doctest::Approx(0.5 * a.scatter[1]));
        CHECK(b.scatter[2] == doctest::Approx(0.5 * a.scatter[2]));
        CHECK(b.roughness == doctest::Approx(kActivationFloor));
    }
    for (std::size_t i = g.glass_count; i < g.scene.surfels.size(); ++i)
        CHECK(g.scene.surfels[i].scatter_raw == original.surfels[i].scatter_raw);

    // The tint shows up only where the glass is drawn.
    const RenderOutputs a = render(original, g.camera), b = render(g.scene, g.camera);
    const std::vector<bool> touched = footprint(original, g.camera, res.selected);
    for (std::size_t p = 0; p < touched.size(); ++p)
        if (!touched[p]) CHECK(a.color.rgb(p) == b.color.rgb(p));
}

TEST_CASE("opacity edits and limits") {
    test::GlassScene g = test::glass_scene(2);
    EditSpec spec;
    spec.selection.kind = SelectionKind::Box;
    spec.selection.box_min = Vec3(-1, -1, 1.9);
    spec.selection.box_max = Vec3(1, 1, 2.1);
    spec.set_opacity = 1.5;
    const EditResult res = apply_edit(g.scene, spec);
    CHECK(res.warnings.size() == 1);
    CHECK(activate(g.scene.surfels[0]).opacity == doctest::Approx(1 - kActivationFloor));

    spec.selection.box_min = Vec3(5, 5, 5);
    spec.selection.box_max = Vec3(6, 6, 6);
    CHECK_THROWS_AS(apply_edit(g.scene, spec), InvalidParameter);
}

TEST_CASE("edit files") {
    const EditSpec e = edit_spec_from_config(Config::parse("box_min = -1 -1 0\nbox_max = 1, 1, 3\nset_tau = 0.9\nremove_reflection = true\n"));
    CHECK(e.selection.kind == SelectionKind::Box);
    CHECK(e.selection.box_max == Vec3(1, 1, 3));
    CHECK(*e.set_tau == 0.9);
    CHECK(e.remove_reflection);
    CHECK_FALSE(e.roughness_scale);
    CHECK(edit_spec_from_config(Config::parse("")).empty());
    CHECK_THROWS(edit_spec_from_config(Config::parse("colour = 1\n")));
    CHECK_THROWS(edit_spec_from_config(Config::parse("select = box\n")));
}
