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

#include "rtsplat/checkpoint.hpp"

#include "rtsplat/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace rtsplat {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[4] = {'R', 'T', 'S', 'P'};

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::istream& in) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw IoError("checkpoint: unexpected end of file");
    return v;
}

void put_f32(std::ostream& out, double v) { put<float>(out, static_cast<float>(v)); }
double get_f32(std::istream& in) { return static_cast<double>(get<float>(in)); }

// Visits every per-surfel attribute array in declared field order.
template <typename Fn>
void for_each_attribute(int sh_degree, Fn&& fn) {
    fn(3, [](GaussianSurfel& s, int k) -> double& { return s.position[k]; });
    fn(4, [](GaussianSurfel& s, int k) -> double& { return s.rotation[k]; });
    fn(2, [](GaussianSurfel& s, int k) -> double& { return s.log_scale[k]; });
    fn(1, [](GaussianSurfel& s, int) -> double& { return s.occupancy_raw; });
    fn(1, [](GaussianSurfel& s, int) -> double& { return s.opacity_raw; });
    fn(3 * sh_count(sh_degree), [](GaussianSurfel& s, int k) -> double& { return s.sh_color[k]; });
    fn(1, [](GaussianSurfel& s, int) -> double& { return s.roughness_raw; });
    fn(kFeatureDim, [](GaussianSurfel& s, int k) -> double& { return s.material[k]; });
    fn(3, [](GaussianSurfel& s, int k) -> double& { return s.scatter_raw[k]; });
    fn(1, [](GaussianSurfel& s, int) -> double& { return s.transmissivity_raw; });
}

} // namespace

void save_checkpoint(const Scene& scene, std::ostream& out) {
    scene.validate();
    out.write(kMagic, 4);
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, scene.surfels.size());
    put<std::uint32_t>(out, static_cast<std::uint32_t>(scene.sh_degree));
    put<std::uint32_t>(out, kFeatureDim);
    auto& surfels = const_cast<std::vector<GaussianSurfel>&>(scene.surfels);
    for_each_attribute(scene.sh_degree, [&](int width, auto field) {
        for (auto& s : surfels)
            for (int k = 0; k < width; ++k) put_f32(out, field(s, k));
    });
    std::vector<double> shading(ShadingParams::size());
    scene.shading.pack(shading);
    put<std::uint64_t>(out, shading.size());
    for (double v : shading) put_f32(out, v);
    put<std::int64_t>(out, scene.iteration);
    const std::uint8_t flags = (scene.variant.shared_opacity ? 1 : 0) | (scene.variant.scattering ? 2 : 0) |
                               (scene.variant.attenuation ? 4 : 0);
    put<std::uint8_t>(out, flags);
    for (const auto& s : scene.surfels) put<std::uint8_t>(out, s.reflection_removed ? 1 : 0);
    if (!out) throw IoError("checkpoint: write failed");
}

void save_checkpoint(const Scene& scene, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    save_checkpoint(scene, out);
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

Scene load_checkpoint(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("checkpoint: bad magic");
    const auto version = get<std::uint32_t>(in);
    if (version != kCheckpointVersion)
        throw IoError("checkpoint: unsupported version " + std::to_string(version));
    const auto count = get<std::uint64_t>(in);
    const auto degree = get<std::uint32_t>(in);
    const auto feature = get<std::uint32_t>(in);
    if (degree > static_cast<std::uint32_t>(kMaxShDegree)) throw IoError("checkpoint: invalid color degree");
    if (feature != static_cast<std::uint32_t>(kFeatureDim))
        throw IoError("checkpoint: material feature size " + std::to_string(feature) + " is not supported");
    if (count > (1ull << 32)) throw IoError("checkpoint: implausible surfel count");
    Scene scene;
    scene.sh_degree = static_cast<int>(degree);
    scene.surfels.assign(count, zero_surfel(scene.sh_degree));
    for_each_attribute(scene.sh_degree, [&](int width, auto field) {
        for (auto& s : scene.surfels)
            for (int k = 0; k < width; ++k) field(s, k) = get_f32(in);
    });
    const auto shading_count = get<std::uint64_t>(in);
    if (shading_count != ShadingParams::size()) throw IoError("checkpoint: shading parameter count mismatch");
    std::vector<double> shading(shading_count);
    for (double& v : shading) v = get_f32(in);
    scene.shading.unpack(shading);
    scene.iteration = get<std::int64_t>(in);
    const auto flags = get<std::uint8_t>(in);
    scene.variant.shared_opacity = flags & 1;
    scene.variant.scattering = flags & 2;
    scene.variant.attenuation = flags & 4;
    for (auto& s : scene.surfels) s.reflection_removed = get<std::uint8_t>(in) != 0;
    scene.validate();
    return scene;
}

Scene load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    try {
        return load_checkpoint(in);
    } catch (const IoError& e) {
        throw IoError(path + ": " + e.what());
    }
}

} // namespace rtsplat
