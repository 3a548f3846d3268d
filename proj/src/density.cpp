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

#include "rtsplat/density.hpp"

#include "rtsplat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rtsplat {
namespace {

// Composes two source maps: first maps stage-1 surfels to originals, second maps stage-2 to stage-1.
std::vector<std::int64_t> compose(const std::vector<std::int64_t>& first, const std::vector<std::int64_t>& second) {
    if (first.empty()) return second;
    if (second.empty()) return first;
    std::vector<std::int64_t> out(second.size());
    for (std::size_t i = 0; i < second.size(); ++i) out[i] = second[i] < 0 ? -1 : first[second[i]];
    return out;
}

} // namespace

void DensityConfig::validate() const {
    if (interval <= 0 || reset_interval <= 0) throw InvalidParameter("density intervals must be positive");
    if (!(grad_threshold > 0 && grad_threshold < 1)) throw InvalidParameter("densify threshold must be in (0, 1)");
    if (!(prune_occupancy > 0 && prune_occupancy < 1)) throw InvalidParameter("prune threshold must be in (0, 1)");
    if (!(reset_ceiling > 0 && reset_ceiling < 1)) throw InvalidParameter("reset ceiling must be in (0, 1)");
    if (!(until_fraction >= 0 && until_fraction <= 1)) throw InvalidParameter("densify window fraction must be in [0, 1]");
}

std::int64_t DensityConfig::until(std::int64_t max_iterations) const {
    return static_cast<std::int64_t>(std::floor(until_fraction * static_cast<double>(max_iterations)));
}

void DensityStats::resize(std::size_t n) {
    grad_sum.assign(n, 0.0);
    views.assign(n, 0);
}

void DensityStats::accumulate(const GradientBundle& grads) {
    if (grads.screen_grad.size() != grad_sum.size()) throw DimensionMismatch("density stats: surfel count changed");
    for (std::size_t i = 0; i < grad_sum.size(); ++i)
        if (grads.visible[i]) {
            grad_sum[i] += grads.screen_grad[i];
            ++views[i];
        }
}

void DensityStats::remap(const std::vector<std::int64_t>& source) {
    std::vector<double> g(source.size(), 0.0);
    std::vector<std::uint32_t> v(source.size(), 0);
    for (std::size_t i = 0; i < source.size(); ++i)
        if (source[i] >= 0) {
            g[i] = grad_sum[source[i]];
            v[i] = views[source[i]];
        }
    grad_sum = std::move(g);
    views = std::move(v);
}

ResetKind reset_kind(std::int64_t iteration, std::int64_t interval) {
    if (iteration <= 0 || interval <= 0 || iteration % interval != 0) return ResetKind::None;
    return (iteration / interval) % 2 == 1 ? ResetKind::Opacity : ResetKind::Occupancy;
}

void apply_reset(Scene& scene, ResetKind kind, double ceiling) {
    if (kind == ResetKind::None) return;
    const double raw_ceiling = logit(ceiling);
    for (auto& s : scene.surfels) {
        double& raw =
            (kind == ResetKind::Occupancy || scene.variant.shared_opacity) ? s.occupancy_raw : s.opacity_raw;
        raw = std::min(raw, raw_ceiling);
    }
}

std::vector<std::int64_t> prune(Scene& scene, double min_occupancy) {
    std::vector<std::int64_t> source;
    std::vector<GaussianSurfel> kept;
    kept.reserve(scene.surfels.size());
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        if (activate(scene.surfels[i], i).occupancy < min_occupancy) continue;
        kept.push_back(std::move(scene.surfels[i]));
        source.push_back(static_cast<std::int64_t>(i));
    }
    scene.surfels = std::move(kept);
    return source;
}

std::vector<std::int64_t> densify(Scene& scene, const DensityStats& stats, const DensityConfig& config,
                                  double extent, std::mt19937_64& rng) {
    const std::size_t n = scene.surfels.size();
    if (stats.grad_sum.size() != n) throw DimensionMismatch("densify: statistics do not match the scene");
    std::vector<GaussianSurfel> out;
    std::vector<std::int64_t> source;
    out.reserve(n);
    std::vector<GaussianSurfel> added;
    std::size_t budget = config.max_surfels > n ? config.max_surfels - n : 0;
    std::normal_distribution<double> normal(0.0, 1.0);
    const double split_scale = config.split_fraction * extent;
    for (std::size_t i = 0; i < n; ++i) {
        const GaussianSurfel& s = scene.surfels[i];
        if (budget == 0 || stats.mean(i) <= config.grad_threshold) {
            out.push_back(s);
            source.push_back(static_cast<std::int64_t>(i));
            continue;
        }
        const Vec2 scale = s.log_scale.array().exp();
        if (scale.maxCoeff() > split_scale) {
            const SurfelFrame f = surfel_frame(s);
            for (int k = 0; k < 2; ++k) {
                GaussianSurfel child = s;
                child.position += normal(rng) * scale[0] * f.tangent_u + normal(rng) * scale[1] * f.tangent_v;
                child.log_scale.array() -= std::log(1.6);
                if (k == 0) {
                    out.push_back(child);
                    source.push_back(-1);
                } else {
                    added.push_back(child);
                }
            }
        } else {
            out.push_back(s);
            source.push_back(static_cast<std::int64_t>(i));
            added.push_back(s);
        }
        --budget;
    }
    for (auto& s : added) {
        out.push_back(std::move(s));
        source.push_back(-1);
    }
    scene.surfels = std::move(out);
    return source;
}

DensityEvent density_control(Scene& scene, DensityStats& stats, std::int64_t iteration,
                             std::int64_t max_iterations, const DensityConfig& config, double extent,
                             std::mt19937_64& rng) {
    config.validate();
    DensityEvent ev;
    const std::int64_t until = config.until(max_iterations);
    if (iteration > until) return ev;
    if (iteration >= config.start && iteration % config.interval == 0) {
        const auto grown = densify(scene, stats, config, extent, rng);
        ev.densified = grown.size() != stats.grad_sum.size();
        const auto kept = prune(scene, config.prune_occupancy);
        ev.pruned = kept.size() != grown.size();
        ev.source = compose(grown, kept);
        stats.resize(scene.surfels.size());
    }
    ev.reset = reset_kind(iteration, config.reset_interval);
    apply_reset(scene, ev.reset, config.reset_ceiling);
    return ev;
}

} // namespace rtsplat
