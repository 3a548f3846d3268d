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

#include "rtsplat/math.hpp"

#include <string>
#include <vector>

namespace rtsplat {

/// Row-major, interleaved multi-channel image of doubles.
struct Image {
    int width = 0, height = 0, channels = 0;
    std::vector<double> data;

    Image() = default;
    Image(int w, int h, int c, double fill = 0.0)
        : width(w), height(h), channels(c), data(static_cast<std::size_t>(w) * h * c, fill) {}

    std::size_t pixels() const { return static_cast<std::size_t>(width) * height; }
    double& at(std::size_t pixel, int c) { return data[pixel * channels + c]; }
    double at(std::size_t pixel, int c) const { return data[pixel * channels + c]; }
    double& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    double at(int x, int y, int c) const { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
    Vec3 rgb(std::size_t pixel) const { return Vec3(at(pixel, 0), at(pixel, 1), at(pixel, 2)); }
    void set_rgb(std::size_t pixel, const Vec3& v) {
        for (int c = 0; c < 3; ++c) at(pixel, c) = v[c];
    }
    bool same_shape(const Image& o) const {
        return width == o.width && height == o.height && channels == o.channels;
    }
};

/// 8-bit PNG with 1 (gray) or 3 (RGB) channels; values are clamped to [0,1].
void write_png(const std::string& path, const Image& img);
Image read_png(const std::string& path);

/// Little-endian float32 raw dump, width*height*channels values, no header.
void write_raw_f32(const std::string& path, const Image& img);
Image read_raw_f32(const std::string& path, int width, int height, int channels);

} // namespace rtsplat
