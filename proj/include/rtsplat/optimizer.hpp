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
#include <span>
#include <vector>

namespace rtsplat {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-15;
};

/// One bias-corrected Adam update of `params` in place. `step` is the 1-based
/// step count used for bias correction. Throws DimensionMismatch on size mismatch.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m, std::span<double> v,
                 double lr, std::int64_t step, const AdamHyper& hyper = {});

/// Learning rates per parameter group. Position rates are multiplied by the
/// scene extent and decay exponentially from `position` to `position_final`.
struct LearningRates {
    double position = 1.6e-4;
    double position_final = 1.6e-6;
    double rotation = 1e-3;
    double scale = 5e-3;
    double opacity = 5e-2; ///< sigma and alpha
    double sh_color = 2.5e-3;
    double surface = 2.5e-3;
    double shading = 1e-3;

    double for_group(ParamGroup g) const;
    /// Decayed position rate at `iteration` of `max_iterations`, before extent scaling.
    double position_at(std::int64_t iteration, std::int64_t max_iterations) const;
};

/// Adam state for a whole scene. Moments are kept per surfel so density control
/// can reorder them along with the surfels.
class SceneOptimizer {
public:
    SceneOptimizer() = default;
    SceneOptimizer(const Scene& scene, AdamHyper hyper = {});

    /// Applies one update with the given rates; `position_lr` replaces rates.position
    /// (already decayed and extent-scaled).
    void step(Scene& scene, const GradientBundle& grads, const LearningRates& rates, double position_lr);

    /// Rebuilds surfel moments after density control: new surfel i inherits the
    /// moments of old surfel source[i], or zeros when source[i] < 0.
    void remap(const std::vector<std::int64_t>& source);

    std::int64_t steps() const { return step_; }
    std::size_t surfel_count() const { return m_.size(); }

private:
    AdamHyper hyper_;
    std::size_t width_ = 0;
    std::vector<std::vector<double>> m_, v_;
    std::vector<double> shading_m_, shading_v_;
    std::int64_t step_ = 0;
};

} // namespace rtsplat
