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

#include "rtsplat/pipeline.hpp"
#include "rtsplat/scene.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace rtsplat {

struct DensityConfig {
    std::int64_t interval = 100;
    std::int64_t start = 300;
    double until_fraction = 0.6;     ///< window end as a fraction of the iteration budget
    double grad_threshold = 2e-4;    ///< mean view-space positional gradient
    double split_fraction = 0.01;    ///< split when max scale exceeds this fraction of the extent
    double prune_occupancy = 0.005;  ///< remove surfels with sigma below this
    std::int64_t reset_interval = 1500;
    double reset_ceiling = 0.01;
    std::size_t max_surfels = 6000;

    void validate() const;
    std::int64_t until(std::int64_t max_iterations) const;
};

/// Running positional-gradient statistics since the last densification.
struct DensityStats {
    std::vector<double> grad_sum;
    std::vector<std::uint32_t> views;

    void resize(std::size_t n);
    void accumulate(const GradientBundle& grads);
    double mean(std::size_t i) const { return views[i] ? grad_sum[i] / views[i] : 0.0; }
    /// Keeps statistics aligned with a surfel remap (new surfels start at zero).
    void remap(const std::vector<std::int64_t>& source);
};

enum class ResetKind { None, Opacity, Occupancy };

/// Which reset the schedule applies after `iteration`: alpha at odd multiples of
/// the interval, sigma at even multiples.
ResetKind reset_kind(std::int64_t iteration, std::int64_t interval);

/// Clamps alpha or sigma to `ceiling` on the raw logits. With a shared opacity
/// both kinds act on the shared parameter.
void apply_reset(Scene& scene, ResetKind kind, double ceiling);

/// Removes surfels with sigma below `min_occupancy`; returns the source map.
std::vector<std::int64_t> prune(Scene& scene, double min_occupancy);

/// Clones or splits surfels whose mean gradient exceeds the threshold. Returns
/// the source map: kept surfels map to themselves, new ones to -1.
std::vector<std::int64_t> densify(Scene& scene, const DensityStats& stats, const DensityConfig& config,
                                  double extent, std::mt19937_64& rng);

struct DensityEvent {
    bool densified = false;
    bool pruned = false;
    ResetKind reset = ResetKind::None;
    std::vector<std::int64_t> source; ///< empty when the surfel list is unchanged
};

/// Full schedule after the optimizer step of `iteration` (1-based): densify and
/// prune every `interval` inside the window, then the interleaved resets, which
/// also stop at the window end.
DensityEvent density_control(Scene& scene, DensityStats& stats, std::int64_t iteration,
                             std::int64_t max_iterations, const DensityConfig& config, double extent,
                             std::mt19937_64& rng);

} // namespace rtsplat
