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

#include "rtsplat/image.hpp"
#include "rtsplat/scene.hpp"

#include <string>

namespace rtsplat {

struct RenderOutputs;

/// Loss weights. lambda_perc is reserved and must stay 0: no perceptual term is implemented.
struct LossWeights {
    double lambda_dssim = 0.2;
    double lambda_perc = 0.0;
    double lambda_normal = 0.05;
    double lambda_mask = 0.01;
    double gating_k = 4.0;
    double bce_epsilon = 1e-6;

    void validate() const;
};

/// A scalar term and its gradient with respect to the image it was computed from.
struct LossTerm {
    double value = 0;
    Image grad;
};

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2,
/// replicate padding. Optional gradient w.r.t. `a`.
double ssim(const Image& a, const Image& b, Image* grad_a = nullptr);

/// Per-pixel SSIM averaged over channels (same window and constants as ssim).
Image ssim_map(const Image& a, const Image& b);

/// (1 - lambda) L1 + lambda (1 - SSIM) / 2. Throws DimensionMismatch on size mismatch.
LossTerm image_loss(const Image& render, const Image& target, double lambda_dssim);

/// Mean binary cross-entropy pushing A_alpha toward 1 - M (M = 1 on transparent pixels).
LossTerm mask_loss(const Image& opacity, const Image& mask, double epsilon = 1e-6);

/// 1 - A_n . N over pixels with P > 0.5, where N is the normal of the expected
/// surface depth map back-projected through the camera.
struct NormalTerm {
    double value = 0;
    Image grad_normal;
    Image grad_depth;
    std::size_t pixels = 0;
};
NormalTerm normal_consistency(const RenderOutputs& outputs, const Camera& camera);

/// Camera-facing normal of the back-projected depth map at interior pixel (x, y);
/// false when the local cross product degenerates.
bool depth_normal(const Image& depth, const Camera& camera, int x, int y, Vec3& world_normal);

struct LossComponents {
    double image = 0;
    double normal = 0;
    double mask = 0;
};

/// L_img + lambda_n L_n + lambda_mask L_mask. Throws InvalidParameter naming the
/// first non-finite term.
double total_loss(const LossComponents& c, const LossWeights& w);

} // namespace rtsplat
