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

#include "rtsplat/compositor.hpp"

#include "rtsplat/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rtsplat {

ComposedPixel compose_pixel(const Vec3& specular, double attenuation, double transmissivity, const Vec3& scatter,
                            const Vec3& transmission) {
    ComposedPixel out;
    out.subsurface = transmissivity * transmission + (1.0 - transmissivity) * scatter;
    out.color = specular + attenuation * out.subsurface;
    return out;
}

Image gating_map(const Image& specular, double k) {
    if (!(k >= 0.0)) throw InvalidParameter("gating_map: k must be non-negative");
    const int w = specular.width, h = specular.height, ch = specular.channels;
    Image g(w, h, 1, 1.0);
    if (k == 0.0) return g;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double var = 0.0;
            for (int c = 0; c < ch; ++c) {
                double window[9];
                double sum = 0.0;
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy) {
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int xx = std::clamp(x + dx, 0, w - 1), yy = std::clamp(y + dy, 0, h - 1);
                        window[n] = specular.at(xx, yy, c);
                        sum += window[n++];
                    }
                }
                const double mean = sum / 9.0;
                double sq = 0.0;
                for (double v : window) sq += (v - mean) * (v - mean);
                var += sq / 9.0;
            }
            g.at(x, y, 0) = std::exp(-k * var / ch);
        }
    }
    return g;
}

} // namespace rtsplat
