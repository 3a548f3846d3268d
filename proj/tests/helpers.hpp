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
#include "rtsplat/synth.hpp"
#include "rtsplat/scene.hpp"

#include <filesystem>
#include <fstream>
#include <iterator>
#include <random>
#include <string>

namespace rtsplat::test {

/// Random scene of `count` surfels in front of a `size` x `size` camera at
/// (0, 0, -3) looking at the origin.
inline Scene random_scene(std::uint64_t seed, int count, int sh_degree = 2) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Scene s;
    s.sh_degree = sh_degree;
    s.shading = ShadingParams::initialized(rng);
    s.shading.env.row(0) = Vec3(1.5, 1.2, 1.0).transpose();
    for (int i = 0; i < count; ++i) {
        const Vec3 pos(1.2 * uni(rng), 1.2 * uni(rng), uni(rng));
        const Vec3 n = Vec3(0.7 * uni(rng), 0.7 * uni(rng), uni(rng) < 0 ? -1.0 : 1.0).normalized();
        GaussianSurfel g = init_surfel(pos, n, 0.1 + 0.2 * (0.5 + 0.5 * uni(rng)),
                                       Vec3(0.5 + 0.4 * uni(rng), 0.5 + 0.4 * uni(rng), 0.5 + 0.4 * uni(rng)),
                                       sh_degree, rng);
        g.log_scale[1] += 0.4 * uni(rng);
        for (std::size_t k = 3; k < g.sh_color.size(); ++k) g.sh_color[k] = 0.2 * uni(rng);
        g.occupancy_raw = 2.0 * uni(rng);
        g.opacity_raw = 2.0 * uni(rng);
        g.roughness_raw = uni(rng);
        g.transmissivity_raw = uni(rng);
        for (int c = 0; c < 3; ++c) g.scatter_raw[c] = uni(rng);
        s.surfels.push_back(std::move(g));
    }
    return s;
}

inline Camera test_camera(int size = 16) {
    return Camera::look_at(Vec3(0, 0, -3), Vec3::Zero(), Vec3::UnitY(), size, size, 1.2 * size);
}

/// A fresh empty directory under the system temp path.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("rtsplat_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Small, fast synthetic glass scene for trainer and CLI tests.
inline SceneSpec small_spec() {
    SceneSpec spec;
    spec.width = spec.height = 16;
    spec.focal = 22;
    spec.views = 4;
    spec.supersample = 1;
    spec.glass_points = 4;
    spec.background_spacing = 1.0;
    return spec;
}

/// Opaque checker wall at z = 4 behind a dense glass pane at z = 2 (high
/// occupancy, low opacity), seen by a 32x32 camera at the origin. Surfels
/// [0, glass_count) are the glass.
struct GlassScene {
    Scene scene;
    Camera camera;
    std::size_t glass_count = 0;
};

inline GlassScene glass_scene(std::uint64_t seed = 0) {
    GlassScene g;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    Scene& s = g.scene;
    s.sh_degree = 1;
    s.shading = ShadingParams::initialized(rng);
    for (int k = 0; k < ShadingParams::kEnvCoeffs; ++k)
        for (int c = 0; c < 3; ++c) s.shading.env(k, c) = (k == 0 ? 2.0 : 0.5 * uni(rng));
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) {
            GaussianSurfel q = init_surfel(Vec3(-0.6 + 0.08 * i, -0.6 + 0.08 * j, 2.0), Vec3(0, 0, -1), 0.07,
                                           Vec3(0.5, 0.5, 0.5), 1, rng);
            q.occupancy_raw = inverse_activation(0.999);
            q.opacity_raw = inverse_activation(0.05);
            q.transmissivity_raw = inverse_activation(0.6);
            q.roughness_raw = inverse_activation(0.2);
            q.scatter_raw = Vec3(0.3, -0.2, 0.1);
            for (double& m : q.material) m = 0.5 * uni(rng);
            s.surfels.push_back(q);
        }
    g.glass_count = s.surfels.size();
    for (int j = 0; j < 25; ++j)
        for (int i = 0; i < 25; ++i) {
            const Vec3 rgb = ((i / 3 + j / 3) % 2) ? Vec3(0.9, 0.7, 0.2) : Vec3(0.1, 0.3, 0.6);
            GaussianSurfel q = init_surfel(Vec3(-2.4 + 0.2 * i, -2.4 + 0.2 * j, 4.0), Vec3(0, 0, -1), 0.15, rgb, 1, rng);
            q.occupancy_raw = q.opacity_raw = inverse_activation(0.99);
            s.surfels.push_back(q);
        }
    g.camera = Camera::look_at(Vec3::Zero(), Vec3(0, 0, 1), Vec3::UnitY(), 32, 32, 32);
    return g;
}

} // namespace rtsplat::test
