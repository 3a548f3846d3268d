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

#include "rtsplat/dataset.hpp"
#include "rtsplat/image.hpp"
#include "rtsplat/pipeline.hpp"

#include <string>
#include <vector>

namespace rtsplat {

inline constexpr double kPsnrCap = 99.0;

/// PSNR in dB of images clamped to [0,1], over pixels where `mask` >= 0.5 (all
/// pixels when mask is null). Identical inputs give the 99 dB cap. Throws
/// UndefinedRegion when the mask selects nothing.
double psnr(const Image& a, const Image& b, const Image* mask = nullptr);

/// Mean SSIM of clamped images over the selected pixels.
double ssim_metric(const Image& a, const Image& b, const Image* mask = nullptr);

/// Mean over masked pixels of the volumetric weight carried by fragments strictly
/// inside (glass depth + delta, background depth - delta), delta = 1% of the local
/// slab width. Pixels without finite oracle depths are skipped.
double floater_energy(const Scene& scene, const Camera& camera, const Image& glass_depth,
                      const Image& background_depth, const Image& mask, int workers = 0);

struct ViewMetrics {
    std::size_t view = 0;
    double psnr = 0, ssim = 0;
    double psnr_masked = 0, ssim_masked = 0; ///< NaN when the view has no masked pixels
    double floater = 0;                      ///< NaN without oracle depths
    double render_ms = 0;
};

struct EvalReport {
    std::vector<ViewMetrics> views;
    ViewMetrics mean; ///< view field unused; NaN entries are skipped in the mean

    std::string csv() const;
    std::string table() const;
};

/// Renders and scores the listed views.
EvalReport evaluate(const Scene& scene, const Dataset& data, const std::vector<std::size_t>& views,
                    const RenderSettings& settings = {});

} // namespace rtsplat
