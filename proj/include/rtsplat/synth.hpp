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

#include "rtsplat/config.hpp"
#include "rtsplat/dataset.hpp"
#include "rtsplat/shading.hpp"

#include <optional>
#include <string>

namespace rtsplat {

using EnvCoeffs = Eigen::Matrix<double, ShadingParams::kEnvCoeffs, 3>;

enum class GlassShape { Planar, Cylinder };

/// Synthetic scene: one thin glass patch in front of a checkered background
/// quad, lit by an SH environment that only the glass reflects.
struct SceneSpec {
    // Cameras on a horizontal arc around the glass center, looking at it.
    int width = 64, height = 64;
    int views = 24;
    double arc_degrees = 60;
    double radius = 3.5;
    double elevation_degrees = 8;
    double focal = 87.5;
    int supersample = 3;

    // Glass.
    GlassShape shape = GlassShape::Planar;
    Vec3 glass_center = Vec3::Zero();
    double glass_width = 1.0, glass_height = 1.0;
    double glass_tilt_degrees = 25; ///< rotation about the vertical axis
    double cylinder_radius = 0.6;   ///< curvature radius of the cylinder section
    double f0 = 0.08;
    double roughness = 0.1;
    double tau = 0.85;
    Vec3 scatter = Vec3(0.80, 0.88, 0.95);

    // Background quad, facing the cameras.
    double background_distance = 2.0; ///< behind the glass center along -z
    double background_width = 10.0, background_height = 8.0;
    double checker_size = 0.5;
    Vec3 checker_a = Vec3(0.85, 0.70, 0.30);
    Vec3 checker_b = Vec3(0.15, 0.30, 0.55);

    // Environment: "sky" (soft) or "studio" (high-contrast lobes), scaled by strength.
    std::string environment = "sky";
    double environment_strength = 1.5;

    // Initialization point cloud.
    int glass_points = 10;            ///< per side
    double background_spacing = 0.25;
    int random_points = 0;            ///< uniform in the slab between glass and background
    std::uint64_t seed = 0;

    void validate() const;
    static SceneSpec from_config(const Config& cfg);
    /// Curved high-contrast variant with random slab points, where reflections
    /// vary quickly across the image.
    static SceneSpec high_specular();

    std::vector<Camera> cameras() const;
    EnvCoeffs environment_coeffs() const;
};

struct ReferenceFrame {
    Camera camera;
    Image image;
    Image mask;             ///< 1 where the pixel-center ray hits the glass
    Image reflection;
    Image transmission;
    Image glass_depth;      ///< camera z, +inf off the glass
    Image background_depth; ///< camera z, +inf where the background is missed
};

/// Schlick reflectance for incidence cosine `cos_theta`.
double schlick(double f0, double cos_theta);

/// Glass hit along a world ray: ray parameter and camera-facing unit normal.
struct GlassHit {
    double t;
    Vec3 normal;
};
std::optional<GlassHit> intersect_glass(const SceneSpec& spec, const Vec3& origin, const Vec3& dir);

/// Ray-traced ground truth for one camera. Throws InvalidParameter if the camera
/// sits inside or behind the glass.
ReferenceFrame trace_reference(const SceneSpec& spec, const Camera& camera);

/// All views of the spec as an in-memory dataset (every 8th view is a test view).
Dataset synthesize(const SceneSpec& spec);

/// synthesize + save_dataset.
void emit_dataset(const SceneSpec& spec, const std::string& dir);

} // namespace rtsplat
