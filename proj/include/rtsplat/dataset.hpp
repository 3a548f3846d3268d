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
#include "rtsplat/objective.hpp"
#include "rtsplat/scene.hpp"

#include <string>
#include <vector>

namespace rtsplat {

/// Initialization point with orientation and color.
struct SeedPoint {
    Vec3 position;
    Vec3 normal;
    Vec3 color;
    double scale = 0.05;
};

/// Oracle layers stored next to a synthetic view; every image may be empty.
struct ViewLayers {
    Image reflection;
    Image transmission;
    Image glass_depth;      ///< 1 channel, +inf off the glass
    Image background_depth; ///< 1 channel
};

struct Dataset {
    std::vector<Camera> cameras;
    std::vector<ViewTarget> views;
    std::vector<ViewLayers> layers;
    std::vector<bool> is_test;
    std::vector<SeedPoint> points;

    std::vector<std::size_t> train_indices() const;
    std::vector<std::size_t> test_indices() const;
    /// 1.1 times the largest camera distance from the mean camera center.
    double extent() const;
    /// Throws DimensionMismatch naming the first view whose image, mask, or
    /// layers disagree with its camera.
    void validate() const;
};

/// Camera file: one line per view, `id width height fx fy cx cy r00 r01 r02 r10
/// r11 r12 r20 r21 r22 t0 t1 t2`, '#' comments allowed.
std::vector<Camera> read_cameras(const std::string& path);
void write_cameras(const std::string& path, const std::vector<Camera>& cameras);

/// Split file: `id train` or `id test` per line.
std::vector<bool> read_split(const std::string& path, std::size_t views);
void write_split(const std::string& path, const std::vector<bool>& is_test);

/// Points file: `x y z nx ny nz r g b scale` per line.
std::vector<SeedPoint> read_points(const std::string& path);
void write_points(const std::string& path, const std::vector<SeedPoint>& points);

/// Path helpers for the on-disk layout.
std::string view_name(std::size_t index);

/// Loads cameras.txt, split.txt, images/, and the optional masks/, layers/,
/// depths/, points.txt of a dataset directory.
Dataset load_dataset(const std::string& dir);

/// Writes a dataset in the layout read by load_dataset.
void save_dataset(const Dataset& data, const std::string& dir);

/// Scene initialized from the dataset points (surfels facing their normals).
Scene init_scene(const Dataset& data, int sh_degree, std::uint64_t seed);

} // namespace rtsplat
