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

#include "rtsplat/compositor.hpp"
#include "rtsplat/image.hpp"
#include "rtsplat/rasterizer.hpp"
#include "rtsplat/scene.hpp"
#include "rtsplat/shading.hpp"

#include <cstdint>
#include <vector>

namespace rtsplat {

/// Frozen gate and stop-gradient operand. When set, the forward pass evaluates
/// (1 - g0) C_trans0 + g0 C_trans, whose plain derivative is the gated one; used
/// as the finite-difference oracle for the gating contract.
struct GatingFreeze {
    Image gate;
    Image transmission;
};

struct RenderSettings {
    double gating_k = 4.0;
    int workers = 0;
    const GatingFreeze* freeze = nullptr;
};

/// Everything a render produces, plus the intermediates the backward pass needs.
struct RenderOutputs {
    int width = 0, height = 0;
    Image specular;          ///< C_spec
    Image attenuation;       ///< beta
    Image transmission;      ///< C_trans
    Image subsurface;        ///< C_sub
    Image color;             ///< C
    Image gate;              ///< g
    Image normal;            ///< A_n
    Image surface_depth;     ///< deferred expected depth
    Image volumetric_depth;  ///< volumetric expected depth

    // Recorded forward state.
    bool recorded = false;
    PreparedView view;
    FragmentList fragments;
    VolumetricImage volumetric;
    GBuffer gbuffer;
    HeadBatch head;
    std::vector<int> head_column;       ///< pixel -> head batch column, -1 when unshaded
    std::vector<Vec3> env_radiance_raw; ///< pre-clamp environment radiance per shaded pixel
    std::vector<double> transmissivity; ///< tau seen by the compositor (includes no-hit residual)
    std::vector<Vec3> scatter;          ///< C_scatter seen by the compositor
    std::vector<Vec3> specular_raw;     ///< head output before reflection-removal edits
    std::vector<double> attenuation_raw;
};

RenderOutputs render(const Scene& scene, const Camera& camera, const RenderSettings& settings = {});

/// Upstream sensitivities of the loss with respect to render outputs.
struct PixelGrads {
    Image color;         ///< dL/dC, 3 channels
    Image opacity;       ///< dL/dA_alpha, 1 channel (may be empty)
    Image normal;        ///< dL/dA_n, 3 channels (may be empty)
    Image surface_depth; ///< dL/d depth, 1 channel (may be empty)

    static PixelGrads zeros(int width, int height);
};

struct GradientBundle {
    std::vector<GaussianSurfel> surfels; ///< gradients w.r.t. raw surfel fields
    ShadingParams shading;
    std::vector<double> screen_grad;     ///< view-space positional gradient magnitude (densification)
    std::vector<std::uint8_t> visible;   ///< surfel produced a fragment used in this view
    Image transmission_grad;             ///< dL/dC_trans after gating
    Image transmission_grad_ungated;     ///< dL/dC_trans before gating

    bool all_finite() const;
};

/// Reverse-mode derivative of the recorded forward pass. Gating scales only the
/// C_trans path. Throws ContractViolation if `outputs` holds no recorded forward.
GradientBundle backward(const Scene& scene, const Camera& camera, const RenderOutputs& outputs,
                        const PixelGrads& upstream, const RenderSettings& settings = {});

/// Gradient container sized like the scene, all zero.
GradientBundle zero_gradients(const Scene& scene);

} // namespace rtsplat
