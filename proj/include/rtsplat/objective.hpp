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

#include "rtsplat/losses.hpp"
#include "rtsplat/pipeline.hpp"

#include <optional>

namespace rtsplat {

/// Supervision for one view. An empty mask disables the mask term.
struct ViewTarget {
    Image image;
    Image mask;
};

struct ObjectiveResult {
    LossComponents components;
    double total = 0;
    RenderOutputs outputs;
    std::optional<GradientBundle> grads;
};

/// Render, score, and optionally differentiate the full training objective for one view.
ObjectiveResult evaluate_objective(const Scene& scene, const Camera& camera, const ViewTarget& target,
                                   const LossWeights& weights, const RenderSettings& settings, bool with_grad);

} // namespace rtsplat
