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

#include "rtsplat/objective.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rtsplat {

struct GradCheckOptions {
    double step = 1e-5;
    double tolerance = 1e-4;
    /// Denominator floor of the relative error; below it the check is absolute.
    double scale_floor = 1e-6;
    /// Analytic and numeric both below this count as a matching zero.
    double zero_tolerance = 1e-8;
    /// Check every k-th scalar of each group (1 = all).
    std::size_t stride = 1;
};

struct GroupReport {
    std::string name;
    double max_rel_error = 0;
    std::size_t checked = 0;
    std::size_t zero = 0;       ///< analytic and numeric both ~0
    std::size_t nonsmooth = 0;  ///< step crossed a branch (cutoff, ReLU, clamp, sort); excluded
    double worst_analytic = 0, worst_numeric = 0;
    bool pass = true;
};

struct GradCheckReport {
    std::vector<GroupReport> groups;
    double seconds = 0;

    bool pass() const;
    std::string table() const;
};

/// Hash of every discrete decision taken by the forward pass and the losses:
/// fragment membership and order, early termination, normal orientation, ReLU
/// patterns, clamps, L1 signs. Equal signatures mean the objective is smooth
/// between the two evaluation points.
std::uint64_t branch_signature(const Scene& scene, const Camera& camera, const ObjectiveResult& result,
                               const ViewTarget& target, const LossWeights& weights);

/// Small randomized scene for the gradient harness: `surfels` surfels in front
/// of a size x size camera, a supervision image kept away from the rendered
/// color so the L1 term stays differentiable, and a random mask.
struct GradCheckCase {
    Scene scene;
    Camera camera;
    ViewTarget target;
};
GradCheckCase make_gradcheck_case(std::uint64_t seed, int surfels = 10, int size = 16, int workers = 0);

/// Central finite differences of the full objective against the analytic
/// gradient for every scalar parameter. With settings.gating_k > 0 the numeric
/// side differentiates the frozen-gate surrogate, whose true gradient is the gated one.
GradCheckReport finite_diff_check(const Scene& scene, const Camera& camera, const ViewTarget& target,
                                  const LossWeights& weights, const RenderSettings& settings,
                                  const GradCheckOptions& options = {});

} // namespace rtsplat
