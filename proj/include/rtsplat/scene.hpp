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
#include "rtsplat/shading.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace rtsplat {

inline constexpr int kFeatureDim = ShadingParams::kFeatureDim;

/// Activated values are clipped to [kActivationFloor, 1 - kActivationFloor].
inline constexpr double kActivationFloor = 1e-6;

/// One 2D Gaussian surfel. All fields are raw (pre-activation) parameters; the
/// same record doubles as the gradient container in GradientBundle.
struct GaussianSurfel {
    Vec3 position = Vec3::Zero();
    Vec4 rotation = Vec4(1, 0, 0, 0); ///< quaternion (w, x, y, z), normalized on use
    Vec2 log_scale = Vec2::Zero();
    double occupancy_raw = 0;
    double opacity_raw = 0;
    std::vector<double> sh_color; ///< coefficient-major: sh_color[3 * k + channel]
    double roughness_raw = 0;
    std::array<double, kFeatureDim> material{};
    Vec3 scatter_raw = Vec3::Zero();
    double transmissivity_raw = 0;

    /// Composition-time edit flag; not a trainable parameter.
    bool reflection_removed = false;
};

/// Optimizer groups, each with its own learning rate.
enum class ParamGroup : std::uint8_t { Position, Rotation, Scale, Occupancy, Opacity, ShColor, Surface };

/// Number of scalar parameters in one surfel for the given color degree.
std::size_t surfel_param_count(int sh_degree);

/// Flattens the raw fields in declared order.
void pack_surfel(const GaussianSurfel& s, std::span<double> out);
void unpack_surfel(std::span<const double> in, GaussianSurfel& s);
ParamGroup surfel_param_group(std::size_t offset, int sh_degree);
const char* param_group_name(ParamGroup g);

/// A surfel with every field zeroed, sized for `sh_degree`.
GaussianSurfel zero_surfel(int sh_degree);

struct ActivatedSurfel {
    double occupancy = 0;     ///< sigma
    double opacity = 0;       ///< alpha
    double roughness = 0;     ///< rho
    double transmissivity = 0;///< tau
    Vec3 scatter = Vec3::Zero();
    Vec2 scale = Vec2::Ones();
};

/// Logistic map for the [0,1] attributes, exponential map for scales. Throws
/// InvalidParameter naming `index` on any non-finite raw value.
ActivatedSurfel activate(const GaussianSurfel& s, std::size_t index = 0);

/// Clipped logistic and its derivative (0 where the clip is active).
double clamped_sigmoid(double x);
double clamped_sigmoid_grad(double x);

/// Inverse of the clipped logistic, clamping the target into the open interval first.
double inverse_activation(double p);

struct SurfelFrame {
    Vec3 tangent_u;
    Vec3 tangent_v;
    Vec3 normal;
};

/// World-space orthonormal frame from the surfel rotation. Throws on a zero quaternion.
SurfelFrame surfel_frame(const GaussianSurfel& s);

/// Pinhole camera; `rotation`/`translation` map world to camera space, the camera
/// looks down +z and depth is camera-space z.
struct Camera {
    double fx = 1, fy = 1, cx = 0, cy = 0;
    int width = 0, height = 0;
    Mat3 rotation = Mat3::Identity();
    Vec3 translation = Vec3::Zero();

    Vec3 center() const { return -rotation.transpose() * translation; }
    Vec3 to_camera(const Vec3& world) const { return rotation * world + translation; }
    /// Unnormalized camera-space direction through the center of pixel (px, py); z = 1.
    Vec3 pixel_dir_camera(int px, int py) const {
        return Vec3((px + 0.5 - cx) / fx, (py + 0.5 - cy) / fy, 1.0);
    }
    /// Unit world-space ray direction through the center of pixel (px, py).
    Vec3 ray_dir(int px, int py) const { return (rotation.transpose() * pixel_dir_camera(px, py)).normalized(); }

    void validate() const;

    /// Camera at `eye` looking at `target` with the given world up vector.
    static Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double focal);
};

/// Model variants used by the ablation harness.
struct ModelVariant {
    bool shared_opacity = false; ///< one opacity drives both passes (no occupancy factorization)
    bool scattering = true;      ///< C_scatter and tau enabled
    bool attenuation = true;     ///< beta enabled
};

struct Scene {
    std::vector<GaussianSurfel> surfels;
    ShadingParams shading;
    int sh_degree = 2;
    std::int64_t iteration = 0;
    ModelVariant variant;

    void validate() const;
};

/// Initial surfel at `position` facing `normal`, with the default raw values.
GaussianSurfel init_surfel(const Vec3& position, const Vec3& normal, double scale, const Vec3& rgb, int sh_degree,
                           std::mt19937_64& rng);

/// Shortest-arc rotation taking +z to `normal`, as a (w, x, y, z) quaternion.
Vec4 quat_from_normal(const Vec3& normal);

} // namespace rtsplat
