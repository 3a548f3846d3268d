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

#include "rtsplat/scene.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace rtsplat {

inline constexpr double kKernelCutoff = 3.0;           ///< |u|, |v| limit in standard deviations
inline constexpr double kKernelMin = 1.0 / 255.0;      ///< smallest kernel value kept as a fragment
inline constexpr double kParallelEpsilon = 1e-8;       ///< |ray . n| below this never intersects
inline constexpr double kTerminationTransmittance = 1e-4;

struct Ray {
    Vec3 origin;
    Vec3 dir;            ///< unit, world space
    double depth_per_t;  ///< camera-space z gained per unit of ray parameter
};

Ray camera_ray(const Camera& camera, int px, int py);

/// Intermediate values of a ray/surfel hit, reused by the backward pass.
struct KernelHit {
    double kernel = 0; ///< G
    double depth = 0;  ///< camera-space z of the hit
    double t = 0;
    double u = 0, v = 0;
    Vec3 offset = Vec3::Zero(); ///< hit point minus surfel center
    double denom = 0;           ///< ray . n
};

/// Evaluates the surfel kernel along the ray; nullopt when the ray misses the
/// 3-sigma footprint, runs parallel to the plane, hits behind the camera, or G < 1/255.
std::optional<KernelHit> intersect_kernel(const Vec3& center, const SurfelFrame& frame, const Vec2& scale,
                                          const Ray& ray);

/// Reverse-mode companion of intersect_kernel.
struct KernelGrad {
    Vec3 center = Vec3::Zero();
    Vec3 tangent_u = Vec3::Zero();
    Vec3 tangent_v = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec2 scale = Vec2::Zero();
};
KernelGrad intersect_kernel_backward(const Vec3& center, const SurfelFrame& frame, const Vec2& scale,
                                     const Ray& ray, const KernelHit& hit, double grad_kernel, double grad_depth);

struct Fragment {
    std::uint32_t surfel;
    double kernel;
    double depth;
};

/// Per-pixel fragments in CSR layout, each list in global draw order.
struct FragmentList {
    int width = 0, height = 0;
    std::vector<std::size_t> offsets; ///< width * height + 1
    std::vector<Fragment> fragments;

    std::span<const Fragment> at(std::size_t pixel) const {
        return {fragments.data() + offsets[pixel], fragments.data() + offsets[pixel + 1]};
    }
};

/// Per-view surfel data shared by both passes and the backward pass.
struct ViewSurfel {
    ActivatedSurfel act;
    SurfelFrame frame;
    Vec3 center;
    Vec3 view_offset;           ///< center - camera center
    std::array<double, kFeatureDim> feature{};
    Vec3 color;                 ///< transmission radiance c_i, max(SH + 0.5, 0)
    std::array<bool, 3> color_active{}; ///< SH + 0.5 > 0 per channel
    double center_depth = 0;
    double effective_opacity = 0; ///< sigma * alpha (or the shared opacity)
    double surface_opacity = 0;   ///< alpha attribute aggregated into the G-buffer
    bool shared_opacity = false;  ///< effective and surface opacity are both sigma
    bool removed = false;         ///< reflection-removal edit flag
    int min_x = 0, max_x = -1, min_y = 0, max_y = -1;
};

struct PreparedView {
    std::vector<ViewSurfel> surfels;
    std::vector<std::uint32_t> order; ///< draw order: center depth, then index
};

PreparedView prepare_view(const Scene& scene, const Camera& camera);

FragmentList build_fragments(const PreparedView& view, const Camera& camera, int workers = 0);

/// Attribute layout of the deferred pass; every entry is a sum p_i a_i.
namespace gattr {
inline constexpr int kProbability = 0;
inline constexpr int kNormal = 1;
inline constexpr int kRoughness = 4;
inline constexpr int kFeature = 5;
inline constexpr int kScatter = 5 + kFeatureDim;
inline constexpr int kTransmissivity = kScatter + 3;
inline constexpr int kOpacity = kTransmissivity + 1;
inline constexpr int kDepth = kOpacity + 1;
inline constexpr int kRemoved = kDepth + 1;
inline constexpr int kCount = kRemoved + 1;
} // namespace gattr

using GSums = std::array<double, gattr::kCount>;

inline constexpr double kShadingMinProbability = 1e-4;

/// Deferred first-surface aggregation per pixel.
struct GBuffer {
    int width = 0, height = 0;
    std::vector<GSums> sums;          ///< raw expectations, P at gattr::kProbability
    std::vector<Vec3> normal;         ///< A_n, renormalized where P > 1e-4
    std::vector<double> depth;        ///< expected surface depth, sum / max(P, 1e-8)
    std::vector<std::uint32_t> used;  ///< fragments consumed before termination

    double probability(std::size_t i) const { return sums[i][gattr::kProbability]; }
    double opacity(std::size_t i) const { return sums[i][gattr::kOpacity]; }
    bool background(std::size_t i) const { return probability(i) <= kShadingMinProbability; }
};

namespace vattr {
inline constexpr int kColor = 0;
inline constexpr int kWeight = 3;
inline constexpr int kDepth = 4;
inline constexpr int kCount = 5;
} // namespace vattr

using VSums = std::array<double, vattr::kCount>;

/// Front-to-back volumetric compositing with effective opacity.
struct VolumetricImage {
    int width = 0, height = 0;
    std::vector<VSums> sums;         ///< C_trans, W, sum of w_i d_i
    std::vector<double> depth;       ///< sum / max(W, 1e-8)
    std::vector<std::uint32_t> used;

    Vec3 color(std::size_t i) const { return Vec3(sums[i][0], sums[i][1], sums[i][2]); }
    double weight(std::size_t i) const { return sums[i][vattr::kWeight]; }
};

/// Attribute vector a_i of one fragment in the deferred pass.
GSums deferred_attributes(const ViewSurfel& s, const Fragment& f, const Ray& ray);

VolumetricImage volumetric_forward(const FragmentList& fragments, const PreparedView& view, int workers = 0);
GBuffer deferred_aggregate(const FragmentList& fragments, const PreparedView& view, const Camera& camera,
                           int workers = 0);

/// Per-surfel gradient accumulator for geometry and attributes at the activated level.
struct SurfelGradAccum {
    Vec3 center = Vec3::Zero();
    Vec3 tangent_u = Vec3::Zero();
    Vec3 tangent_v = Vec3::Zero();
    Vec3 normal = Vec3::Zero();
    Vec2 scale = Vec2::Zero();
    double occupancy = 0;
    double opacity = 0;
    double roughness = 0;
    std::array<double, kFeatureDim> feature{};
    Vec3 scatter = Vec3::Zero();
    double transmissivity = 0;
    Vec3 color = Vec3::Zero();
    bool touched = false;

    SurfelGradAccum& operator+=(const SurfelGradAccum& o);
};

/// Reverse pass of both blending passes. Upstream gradients are with respect to
/// the raw sums of each pass; `volumetric_grad` may be empty when no gradient flows
/// into C_trans. Accumulation is in pixel order, independent of `workers`.
std::vector<SurfelGradAccum> raster_backward(const FragmentList& fragments, const PreparedView& view,
                                             const Camera& camera, std::span<const VSums> volumetric_grad,
                                             std::span<const GSums> deferred_grad, int workers = 0);

} // namespace rtsplat
