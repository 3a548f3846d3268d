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
#include "rtsplat/math.hpp"

namespace rtsplat {

struct ComposedPixel {
    Vec3 subsurface; ///< C_sub = tau C_trans + (1 - tau) C_scatter
    Vec3 color;      ///< C = C_spec + beta C_sub
};

ComposedPixel compose_pixel(const Vec3& specular, double attenuation, double transmissivity, const Vec3& scatter,
                            const Vec3& transmission);

/// g = exp(-k Var) with the population variance of C_spec over each 3x3 window
/// (replicate padding), averaged over channels. Throws InvalidParameter for k < 0.
Image gating_map(const Image& specular, double k);

/// Partial stop-gradient (1 - g) sg(C) + g C. The forward value is C itself,
/// bit for bit.
inline Vec3 gate_transmission(const Vec3& transmission, double /*gate*/) { return transmission; }

/// Reverse-mode rule of gate_transmission: the upstream sensitivity scaled by g.
inline Vec3 gate_transmission_backward(const Vec3& upstream, double gate) { return gate * upstream; }

} // namespace rtsplat
