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

#include "rtsplat/editing.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/parallel.hpp"
#include "rtsplat/rasterizer.hpp"

#include <algorithm>
#include <cstdio>

namespace rtsplat {
namespace {

constexpr double kSelectProbability = 0.1;

double clamp_target(double value, double lo, double hi, const char* what, std::vector<std::string>& warnings) {
    const double c = std::clamp(value, lo, hi);
    if (c != value) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s %.6g is outside [%g, %g]; clamped to %.6g", what, value, lo, hi, c);
        warnings.emplace_back(buf);
    }
    return c;
}

} // namespace

std::vector<std::size_t> select_by_mask(const Scene& scene, const Camera& camera, const Image& mask, int workers) {
    camera.validate();
    if (mask.width != camera.width || mask.height != camera.height || mask.channels != 1)
        throw DimensionMismatch("selection mask does not match the camera");
    const PreparedView view = prepare_view(scene, camera);
    const FragmentList frags = build_fragments(view, camera, workers);
    const std::size_t n = mask.pixels();
    std::vector<std::vector<std::uint32_t>> hits(n);
    parallel_for(n, workers, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            if (mask.at(p, 0) < 0.5) continue;
            double t = 1.0;
            for (const Fragment& f : frags.at(p)) {
                const double a = view.surfels[f.surfel].act.occupancy * f.kernel;
                if (a * t > kSelectProbability) hits[p].push_back(f.surfel);
                t *= 1.0 - a;
                if (t < kTerminationTransmittance) break;
            }
        }
    });
    std::vector<std::uint8_t> chosen(scene.surfels.size(), 0);
    for (const auto& h : hits)
        for (auto i : h) chosen[i] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < chosen.size(); ++i)
        if (chosen[i]) out.push_back(i);
    return out;
}

std::vector<std::size_t> select(const Scene& scene, const Selection& selection, int workers) {
    std::vector<std::size_t> out;
    switch (selection.kind) {
    case SelectionKind::All:
        for (std::size_t i = 0; i < scene.surfels.size(); ++i) out.push_back(i);
        break;
    case SelectionKind::Box:
        for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
            const Vec3& p = scene.surfels[i].position;
            if ((p.array() >= selection.box_min.array()).all() && (p.array() <= selection.box_max.array()).all())
                out.push_back(i);
        }
        break;
    case SelectionKind::Mask:
        out = select_by_mask(scene, selection.camera, selection.mask, workers);
        break;
    }
    return out;
}

EditResult apply_edit(Scene& scene, const EditSpec& spec, int workers) {
    EditResult res;
    res.selected = select(scene, spec.selection, workers);
    if (res.selected.empty()) throw InvalidParameter("edit: the selection contains no surfels");
    constexpr double lo = kActivationFloor, hi = 1.0 - kActivationFloor;

    std::optional<double> tau, opacity;
    if (spec.set_tau) tau = clamp_target(*spec.set_tau, lo, hi, "set_tau", res.warnings);
    if (spec.set_opacity) opacity = clamp_target(*spec.set_opacity, lo, hi, "set_opacity", res.warnings);
    if (spec.roughness_scale && *spec.roughness_scale < 0)
        res.warnings.push_back("roughness_scale is negative; clamped to 0");
    const double rscale = spec.roughness_scale ? std::max(0.0, *spec.roughness_scale) : 1.0;
    Vec3 tint = spec.tint.value_or(Vec3::Ones());
    if ((tint.array() < 0).any()) {
        res.warnings.push_back("tint has negative channels; clamped to 0");
        tint = tint.cwiseMax(0.0);
    }

    bool clamped_roughness = false, clamped_tint = false;
    for (std::size_t i : res.selected) {
        GaussianSurfel& s = scene.surfels[i];
        const ActivatedSurfel a = activate(s, i);
        if (spec.roughness_scale) {
            const double target = a.roughness * rscale;
            clamped_roughness = clamped_roughness || target < lo || target > hi;
            s.roughness_raw = inverse_activation(target);
        }
        if (tau) s.transmissivity_raw = inverse_activation(*tau);
        if (spec.tint) {
            for (int c = 0; c < 3; ++c) {
                const double target = a.scatter[c] * tint[c];
                clamped_tint = clamped_tint || target < lo || target > hi;
                s.scatter_raw[c] = inverse_activation(target);
            }
        }
        if (opacity) {
            if (scene.variant.shared_opacity) s.occupancy_raw = inverse_activation(*opacity);
            else s.opacity_raw = inverse_activation(*opacity);
        }
        if (spec.remove_reflection) s.reflection_removed = true;
    }
    if (clamped_roughness) res.warnings.push_back("roughness_scale pushed some roughness values out of range; clamped");
    if (clamped_tint) res.warnings.push_back("tint pushed some scatter channels out of range; clamped");
    return res;
}

void clear_reflection_removal(Scene& scene) {
    for (auto& s : scene.surfels) s.reflection_removed = false;
}

EditSpec edit_spec_from_config(const Config& cfg) {
    cfg.require_known({"select", "mask", "mask_view", "box_min", "box_max", "roughness_scale", "set_tau",
                       "remove_reflection", "tint", "set_opacity"});
    EditSpec e;
    const std::string sel = cfg.get_string("select", cfg.has("mask") ? "mask" : (cfg.has("box_min") ? "box" : "all"));
    if (sel == "all") e.selection.kind = SelectionKind::All;
    else if (sel == "box") {
        e.selection.kind = SelectionKind::Box;
        if (!cfg.has("box_min") || !cfg.has("box_max")) throw InvalidParameter("box selection needs box_min and box_max");
        e.selection.box_min = cfg.get_vec3("box_min", Vec3::Zero());
        e.selection.box_max = cfg.get_vec3("box_max", Vec3::Zero());
    } else if (sel == "mask") {
        e.selection.kind = SelectionKind::Mask;
    } else {
        throw InvalidParameter("unknown selection '" + sel + "' (expected all, box or mask)");
    }
    if (cfg.has("roughness_scale")) e.roughness_scale = cfg.get_double("roughness_scale", 1.0);
    if (cfg.has("set_tau")) e.set_tau = cfg.get_double("set_tau", 1.0);
    e.remove_reflection = cfg.get_bool("remove_reflection", false);
    if (cfg.has("tint")) e.tint = cfg.get_vec3("tint", Vec3::Ones());
    if (cfg.has("set_opacity")) e.set_opacity = cfg.get_double("set_opacity", 1.0);
    return e;
}

} // namespace rtsplat
