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

#include "rtsplat/gradcheck.hpp"

#include "rtsplat/errors.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <random>

namespace rtsplat {
namespace {

class Fnv {
public:
    void mix(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h_ ^= (v >> (8 * i)) & 0xff;
            h_ *= 1099511628211ull;
        }
    }
    void flag(bool b) { mix(b ? 1 : 0); }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 1469598103934665603ull;
};

bool clamped(double raw) {
    const double s = sigmoid(raw);
    return s <= kActivationFloor || s >= 1.0 - kActivationFloor;
}

} // namespace

std::uint64_t branch_signature(const Scene& scene, const Camera& camera, const ObjectiveResult& result,
                               const ViewTarget& target, const LossWeights& weights) {
    const RenderOutputs& out = result.outputs;
    Fnv h;
    for (auto idx : out.view.order) h.mix(idx);
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        const auto& s = scene.surfels[i];
        const auto& v = out.view.surfels[i];
        for (bool a : v.color_active) h.flag(a);
        h.flag(clamped(s.occupancy_raw));
        h.flag(clamped(s.opacity_raw));
        h.flag(clamped(s.roughness_raw));
        h.flag(clamped(s.transmissivity_raw));
        for (int c = 0; c < 3; ++c) h.flag(clamped(s.scatter_raw[c]));
    }
    const std::size_t n = static_cast<std::size_t>(out.width) * out.height;
    for (std::size_t p = 0; p < n; ++p) {
        const Ray ray = camera_ray(camera, static_cast<int>(p % out.width), static_cast<int>(p / out.width));
        const auto list = out.fragments.at(p);
        h.mix(list.size());
        for (const Fragment& f : list) {
            h.mix(f.surfel);
            h.flag(out.view.surfels[f.surfel].frame.normal.dot(ray.dir) <= 0.0);
        }
        h.mix(out.volumetric.used[p]);
        h.mix(out.gbuffer.used[p]);
        const double prob = out.gbuffer.probability(p);
        h.flag(prob > kShadingMinProbability);
        h.flag(prob > 1e-8);
        h.flag(prob > 0.5);
        const int col = out.head_column[p];
        if (col >= 0) {
            for (int c = 0; c < 3; ++c) h.flag(out.env_radiance_raw[p][c] > 0.0);
            for (Eigen::Index k = 0; k < out.head.hidden1.rows(); ++k) h.flag(out.head.hidden1(k, col) > 0.0);
            for (Eigen::Index k = 0; k < out.head.hidden2.rows(); ++k) h.flag(out.head.hidden2(k, col) > 0.0);
        }
        for (int c = 0; c < 3; ++c) {
            const double d = out.color.at(p, c) - target.image.at(p, c);
            h.mix(d > 0 ? 2 : (d < 0 ? 1 : 0));
        }
        if (weights.lambda_mask > 0 && !target.mask.data.empty()) {
            const double a = out.gbuffer.opacity(p);
            h.flag(a > weights.bce_epsilon && a < 1.0 - weights.bce_epsilon);
        }
    }
    if (weights.lambda_normal > 0) {
        for (int y = 1; y + 1 < out.height; ++y)
            for (int x = 1; x + 1 < out.width; ++x) {
                Vec3 nw;
                h.flag(depth_normal(out.surface_depth, camera, x, y, nw));
            }
    }
    return h.value();
}

bool GradCheckReport::pass() const {
    for (const auto& g : groups)
        if (!g.pass) return false;
    return true;
}

std::string GradCheckReport::table() const {
    std::string s = "group        checked  zero  nonsmooth  max_rel_err   status\n";
    char line[256];
    for (const auto& g : groups) {
        std::snprintf(line, sizeof line, "%-12s %7zu %5zu %10zu  %11.3e   %s\n", g.name.c_str(), g.checked, g.zero,
                      g.nonsmooth, g.max_rel_error, g.pass ? "pass" : "FAIL");
        s += line;
    }
    return s;
}

GradCheckCase make_gradcheck_case(std::uint64_t seed, int surfels, int size, int workers) {
    if (surfels < 0 || size <= 0) throw InvalidParameter("gradient check case: invalid size");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    GradCheckCase c;
    c.camera = Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3::UnitY(), size, size, 1.2 * size);
    c.scene.sh_degree = 2;
    c.scene.shading = ShadingParams::initialized(rng);
    c.scene.shading.env.row(0) = Vec3(1.5, 1.4, 1.3).transpose();
    for (int k = 1; k < ShadingParams::kEnvCoeffs; ++k)
        for (int ch = 0; ch < 3; ++ch) c.scene.shading.env(k, ch) = 0.3 * uni(rng);
    for (int i = 0; i < surfels; ++i) {
        const Vec3 pos(0.8 * uni(rng), 0.8 * uni(rng), 0.8 * uni(rng));
        const Vec3 normal = Vec3(0.6 * uni(rng), 0.6 * uni(rng), uni(rng) < 0 ? -1.0 : 1.0).normalized();
        GaussianSurfel s = init_surfel(pos, normal, 0.25 + 0.15 * uni(rng), Vec3(0.5 + 0.4 * uni(rng),
                                       0.5 + 0.4 * uni(rng), 0.5 + 0.4 * uni(rng)), 2, rng);
        s.log_scale[1] += 0.3 * uni(rng);
        s.rotation += Vec4(0.1 * uni(rng), 0.1 * uni(rng), 0.1 * uni(rng), 0.1 * uni(rng));
        for (std::size_t k = 3; k < s.sh_color.size(); ++k) s.sh_color[k] = 0.2 * uni(rng);
        s.occupancy_raw = 1.5 * uni(rng);
        s.opacity_raw = 1.5 * uni(rng);
        s.roughness_raw = uni(rng);
        for (double& z : s.material) z = uni(rng);
        for (int ch = 0; ch < 3; ++ch) s.scatter_raw[ch] = uni(rng);
        s.transmissivity_raw = uni(rng);
        c.scene.surfels.push_back(std::move(s));
    }
    RenderSettings settings;
    settings.workers = workers;
    const RenderOutputs out = render(c.scene, c.camera, settings);
    c.target.image = Image(size, size, 3);
    for (std::size_t i = 0; i < c.target.image.data.size(); ++i) {
        const double offset = 0.05 + 0.15 * (0.5 + 0.5 * uni(rng));
        c.target.image.data[i] = out.color.data[i] + (uni(rng) < 0 ? -offset : offset);
    }
    c.target.mask = Image(size, size, 1);
    for (double& m : c.target.mask.data) m = uni(rng) < 0 ? 1.0 : 0.0;
    return c;
}

GradCheckReport finite_diff_check(const Scene& scene, const Camera& camera, const ViewTarget& target,
                                  const LossWeights& weights, const RenderSettings& settings,
                                  const GradCheckOptions& options) {
    const auto t0 = std::chrono::steady_clock::now();
    const ObjectiveResult base = evaluate_objective(scene, camera, target, weights, settings, true);
    const GradientBundle& analytic = *base.grads;
    const std::uint64_t base_sig = branch_signature(scene, camera, base, target, weights);

    GatingFreeze freeze;
    RenderSettings fd_settings = settings;
    if (settings.gating_k > 0) {
        freeze.gate = base.outputs.gate;
        freeze.transmission = base.outputs.transmission;
        fd_settings.freeze = &freeze;
    }

    std::map<std::string, GroupReport> groups;
    std::vector<std::string> order;
    auto record = [&](const std::string& name, double a, double num, bool smooth) {
        if (!groups.count(name)) {
            groups[name].name = name;
            order.push_back(name);
        }
        GroupReport& g = groups[name];
        if (!smooth) {
            ++g.nonsmooth;
            return;
        }
        ++g.checked;
        if (std::abs(a) <= options.zero_tolerance && std::abs(num) <= options.zero_tolerance) {
            ++g.zero;
            return;
        }
        const double rel = std::abs(a - num) / std::max({std::abs(a), std::abs(num), options.scale_floor});
        if (rel > g.max_rel_error) {
            g.max_rel_error = rel;
            g.worst_analytic = a;
            g.worst_numeric = num;
        }
        if (rel >= options.tolerance) g.pass = false;
    };

    // Returns (numeric derivative, smooth) for a perturbation applied through `set`.
    Scene work = scene;
    auto probe = [&](auto&& set) {
        set(work, options.step);
        const ObjectiveResult plus = evaluate_objective(work, camera, target, weights, fd_settings, false);
        const bool s1 = branch_signature(work, camera, plus, target, weights) == base_sig;
        set(work, -options.step);
        const ObjectiveResult minus = evaluate_objective(work, camera, target, weights, fd_settings, false);
        const bool s2 = branch_signature(work, camera, minus, target, weights) == base_sig;
        set(work, 0.0);
        return std::make_pair((plus.total - minus.total) / (2.0 * options.step), s1 && s2);
    };

    const std::size_t count = surfel_param_count(scene.sh_degree);
    std::vector<double> flat(count), grad_flat(count);
    const std::size_t stride = std::max<std::size_t>(1, options.stride);
    std::map<ParamGroup, std::size_t> seen;
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        pack_surfel(scene.surfels[i], flat);
        pack_surfel(analytic.surfels[i], grad_flat);
        for (std::size_t j = 0; j < count; ++j) {
            const ParamGroup grp = surfel_param_group(j, scene.sh_degree);
            if (seen[grp]++ % stride != 0) continue;
            std::vector<double> tmp = flat;
            auto [num, smooth] = probe([&](Scene& s, double delta) {
                tmp[j] = flat[j] + delta;
                unpack_surfel(tmp, s.surfels[i]);
            });
            record(param_group_name(grp), grad_flat[j], num, smooth);
        }
    }
    std::vector<double> sp(ShadingParams::size()), sg(ShadingParams::size());
    scene.shading.pack(sp);
    analytic.shading.pack(sg);
    std::size_t env_seen = 0, head_seen = 0;
    for (std::size_t j = 0; j < sp.size(); ++j) {
        const bool env = j < ShadingParams::head_offset();
        if ((env ? env_seen++ : head_seen++) % stride != 0) continue;
        std::vector<double> tmp = sp;
        auto [num, smooth] = probe([&](Scene& s, double delta) {
            tmp[j] = sp[j] + delta;
            s.shading.unpack(tmp);
        });
        record(env ? "environment" : "head", sg[j], num, smooth);
    }

    GradCheckReport report;
    for (const auto& name : order) report.groups.push_back(groups[name]);
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

} // namespace rtsplat
