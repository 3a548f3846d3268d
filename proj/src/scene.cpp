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

#include "rtsplat/scene.hpp"

#include "rtsplat/errors.hpp"

#include <cmath>
#include <string>

namespace rtsplat {

std::size_t surfel_param_count(int sh_degree) {
    return 3 + 4 + 2 + 1 + 1 + 3 * static_cast<std::size_t>(sh_count(sh_degree)) + 1 + kFeatureDim + 3 + 1;
}

void pack_surfel(const GaussianSurfel& s, std::span<double> out) {
    std::size_t i = 0;
    for (int k = 0; k < 3; ++k) out[i++] = s.position[k];
    for (int k = 0; k < 4; ++k) out[i++] = s.rotation[k];
    for (int k = 0; k < 2; ++k) out[i++] = s.log_scale[k];
    out[i++] = s.occupancy_raw;
    out[i++] = s.opacity_raw;
    for (double v : s.sh_color) out[i++] = v;
    out[i++] = s.roughness_raw;
    for (double v : s.material) out[i++] = v;
    for (int k = 0; k < 3; ++k) out[i++] = s.scatter_raw[k];
    out[i++] = s.transmissivity_raw;
    if (i != out.size()) throw DimensionMismatch("pack_surfel: span size does not match surfel layout");
}

void unpack_surfel(std::span<const double> in, GaussianSurfel& s) {
    std::size_t i = 0;
    for (int k = 0; k < 3; ++k) s.position[k] = in[i++];
    for (int k = 0; k < 4; ++k) s.rotation[k] = in[i++];
    for (int k = 0; k < 2; ++k) s.log_scale[k] = in[i++];
    s.occupancy_raw = in[i++];
    s.opacity_raw = in[i++];
    for (double& v : s.sh_color) v = in[i++];
    s.roughness_raw = in[i++];
    for (double& v : s.material) v = in[i++];
    for (int k = 0; k < 3; ++k) s.scatter_raw[k] = in[i++];
    s.transmissivity_raw = in[i++];
    if (i != in.size()) throw DimensionMismatch("unpack_surfel: span size does not match surfel layout");
}

ParamGroup surfel_param_group(std::size_t offset, int sh_degree) {
    const std::size_t sh = 3 * static_cast<std::size_t>(sh_count(sh_degree));
    if (offset < 3) return ParamGroup::Position;
    if (offset < 7) return ParamGroup::Rotation;
    if (offset < 9) return ParamGroup::Scale;
    if (offset < 10) return ParamGroup::Occupancy;
    if (offset < 11) return ParamGroup::Opacity;
    if (offset < 11 + sh) return ParamGroup::ShColor;
    return ParamGroup::Surface;
}

const char* param_group_name(ParamGroup g) {
    switch (g) {
    case ParamGroup::Position: return "position";
    case ParamGroup::Rotation: return "rotation";
    case ParamGroup::Scale: return "scale";
    case ParamGroup::Occupancy: return "occupancy";
    case ParamGroup::Opacity: return "opacity";
    case ParamGroup::ShColor: return "sh_color";
    case ParamGroup::Surface: return "surface";
    }
    return "?";
}

GaussianSurfel zero_surfel(int sh_degree) {
    GaussianSurfel s;
    s.rotation = Vec4::Zero();
    s.sh_color.assign(3 * static_cast<std::size_t>(sh_count(sh_degree)), 0.0);
    return s;
}

double clamped_sigmoid(double x) {
    return std::clamp(sigmoid(x), kActivationFloor, 1.0 - kActivationFloor);
}

double clamped_sigmoid_grad(double x) {
    const double s = sigmoid(x);
    if (s <= kActivationFloor || s >= 1.0 - kActivationFloor) return 0.0;
    return s * (1.0 - s);
}

double inverse_activation(double p) {
    return logit(std::clamp(p, kActivationFloor, 1.0 - kActivationFloor));
}

ActivatedSurfel activate(const GaussianSurfel& s, std::size_t index) {
    auto finite = [&](double v, const char* field) {
        if (!std::isfinite(v))
            throw InvalidParameter("surfel " + std::to_string(index) + ": non-finite raw " + field);
    };
    finite(s.occupancy_raw, "occupancy");
    finite(s.opacity_raw, "opacity");
    finite(s.roughness_raw, "roughness");
    finite(s.transmissivity_raw, "transmissivity");
    for (int k = 0; k < 3; ++k) finite(s.scatter_raw[k], "scatter color");
    for (int k = 0; k < 2; ++k) finite(s.log_scale[k], "scale");
    ActivatedSurfel a;
    a.occupancy = clamped_sigmoid(s.occupancy_raw);
    a.opacity = clamped_sigmoid(s.opacity_raw);
    a.roughness = clamped_sigmoid(s.roughness_raw);
    a.transmissivity = clamped_sigmoid(s.transmissivity_raw);
    for (int k = 0; k < 3; ++k) a.scatter[k] = clamped_sigmoid(s.scatter_raw[k]);
    a.scale = Vec2(std::exp(s.log_scale[0]), std::exp(s.log_scale[1]));
    return a;
}

SurfelFrame surfel_frame(const GaussianSurfel& s) {
    const double len = s.rotation.norm();
    if (!(len > 1e-12) || !std::isfinite(len)) throw InvalidParameter("surfel_frame: zero or non-finite quaternion");
    const Mat3 r = quat_to_matrix(s.rotation / len);
    return {r.col(0), r.col(1), r.col(2)};
}

void Camera::validate() const {
    if (!(fx > 0) || !(fy > 0)) throw InvalidParameter("camera: focal lengths must be positive");
    if (width <= 0 || height <= 0) throw InvalidParameter("camera: image size must be positive");
    if (!(rotation.transpose() * rotation - Mat3::Identity()).isZero(1e-6) || rotation.determinant() < 0)
        throw InvalidParameter("camera: rotation is not orthonormal");
    if (!translation.allFinite()) throw InvalidParameter("camera: non-finite translation");
}

Camera Camera::look_at(const Vec3& eye, const Vec3& target, const Vec3& up, int width, int height, double focal) {
    const Vec3 forward = (target - eye).normalized();
    const Vec3 right = forward.cross(up).normalized();
    const Vec3 down = forward.cross(right);
    Camera c;
    c.width = width;
    c.height = height;
    c.fx = c.fy = focal;
    c.cx = 0.5 * width;
    c.cy = 0.5 * height;
    c.rotation.row(0) = right;
    c.rotation.row(1) = down;
    c.rotation.row(2) = forward;
    c.translation = -c.rotation * eye;
    return c;
}

void Scene::validate() const {
    const std::size_t expected = 3 * static_cast<std::size_t>(sh_count(sh_degree));
    for (std::size_t i = 0; i < surfels.size(); ++i) {
        const auto& s = surfels[i];
        if (s.sh_color.size() != expected)
            throw InvalidParameter("surfel " + std::to_string(i) + ": sh_color size does not match degree");
        if (!s.position.allFinite() || !s.rotation.allFinite())
            throw InvalidParameter("surfel " + std::to_string(i) + ": non-finite geometry");
        if (s.rotation.norm() < 1e-12) throw InvalidParameter("surfel " + std::to_string(i) + ": zero quaternion");
        activate(s, i);
    }
}

Vec4 quat_from_normal(const Vec3& normal) {
    const Eigen::Quaterniond q = Eigen::Quaterniond::FromTwoVectors(Vec3::UnitZ(), normal.normalized());
    return Vec4(q.w(), q.x(), q.y(), q.z());
}

GaussianSurfel init_surfel(const Vec3& position, const Vec3& normal, double scale, const Vec3& rgb, int sh_degree,
                           std::mt19937_64& rng) {
    GaussianSurfel s = zero_surfel(sh_degree);
    s.position = position;
    s.rotation = quat_from_normal(normal);
    s.log_scale = Vec2::Constant(std::log(scale));
    // DC term so that SH + 0.5 reproduces rgb.
    constexpr double kY00 = 0.28209479177387814;
    for (int c = 0; c < 3; ++c) s.sh_color[c] = (rgb[c] - 0.5) / kY00;
    std::normal_distribution<double> feature(0.0, 0.01);
    for (double& z : s.material) z = feature(rng);
    return s;
}

} // namespace rtsplat
