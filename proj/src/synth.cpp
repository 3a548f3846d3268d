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

#include "rtsplat/synth.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/parallel.hpp"
#include "rtsplat/sh.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace rtsplat {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Tilted glass frame: x' and z' rotated about y.
Vec3 glass_axis_x(const SceneSpec& s) {
    const double a = radians(s.glass_tilt_degrees);
    return Vec3(std::cos(a), 0.0, -std::sin(a));
}
Vec3 glass_axis_z(const SceneSpec& s) {
    const double a = radians(s.glass_tilt_degrees);
    return Vec3(std::sin(a), 0.0, std::cos(a));
}

double background_z(const SceneSpec& s) { return s.glass_center.z() - s.background_distance; }

Vec3 checker(const SceneSpec& s, const Vec3& p) {
    const long i = static_cast<long>(std::floor(p.x() / s.checker_size));
    const long j = static_cast<long>(std::floor(p.y() / s.checker_size));
    return ((i + j) % 2 == 0) ? s.checker_a : s.checker_b;
}

std::optional<double> intersect_background(const SceneSpec& s, const Vec3& o, const Vec3& d) {
    if (std::abs(d.z()) < 1e-12) return std::nullopt;
    const double t = (background_z(s) - o.z()) / d.z();
    if (!(t > 0)) return std::nullopt;
    const Vec3 p = o + t * d;
    if (std::abs(p.x()) > 0.5 * s.background_width || std::abs(p.y() - s.glass_center.y()) > 0.5 * s.background_height)
        return std::nullopt;
    return t;
}

// Directional radiance of the procedural environments.
Vec3 environment_radiance(const std::string& kind, const Vec3& d) {
    auto lobe = [&](const Vec3& axis, double sharpness) {
        return std::pow(std::max(0.0, d.dot(axis.normalized())), sharpness);
    };
    if (kind == "sky") {
        const double up = std::max(0.0, d.y());
        return Vec3(0.30, 0.34, 0.40) + up * Vec3(0.15, 0.25, 0.45) +
               1.1 * lobe(Vec3(0.4, 0.5, 1.0), 6.0) * Vec3(1.0, 0.85, 0.6);
    }
    if (kind == "studio") {
        return Vec3(0.05, 0.05, 0.05) + 1.6 * lobe(Vec3(0.7, 0.3, 1.0), 10.0) * Vec3(1.0, 0.9, 0.7) +
               1.4 * lobe(Vec3(-0.8, 0.1, 1.0), 10.0) * Vec3(0.3, 0.6, 1.0) +
               1.2 * lobe(Vec3(0.0, -0.7, 1.0), 10.0) * Vec3(0.9, 0.3, 0.4) +
               1.0 * lobe(Vec3(0.0, 0.9, 0.6), 10.0) * Vec3(0.5, 1.0, 0.5);
    }
    throw InvalidParameter("unknown environment '" + kind + "' (expected sky or studio)");
}

} // namespace

double schlick(double f0, double cos_theta) {
    const double c = std::clamp(cos_theta, 0.0, 1.0);
    return f0 + (1.0 - f0) * std::pow(1.0 - c, 5.0);
}

void SceneSpec::validate() const {
    if (width <= 0 || height <= 0 || views <= 0 || supersample <= 0)
        throw InvalidParameter("scene spec: image size, view count and supersampling must be positive");
    if (!(focal > 0) || !(radius > 0)) throw InvalidParameter("scene spec: focal and radius must be positive");
    if (f0 < 0 || f0 > 1 || tau < 0 || tau > 1) throw InvalidParameter("scene spec: f0 and tau must be in [0, 1]");
    if (roughness < 0 || roughness > 1) throw InvalidParameter("scene spec: roughness must be in [0, 1]");
    if ((scatter.array() < 0).any() || (scatter.array() > 1).any())
        throw InvalidParameter("scene spec: scatter color must be in [0, 1]");
    if (!(glass_width > 0 && glass_height > 0)) throw InvalidParameter("scene spec: glass size must be positive");
    if (shape == GlassShape::Cylinder && !(cylinder_radius > 0.5 * glass_width / std::numbers::pi))
        throw InvalidParameter("scene spec: cylinder section wider than half the cylinder");
    if (!(background_distance > 0)) throw InvalidParameter("scene spec: background must lie behind the glass");
    if (!(checker_size > 0) || !(background_spacing > 0)) throw InvalidParameter("scene spec: sizes must be positive");
    if (glass_points < 0 || random_points < 0) throw InvalidParameter("scene spec: point counts must be non-negative");
    environment_radiance(environment, Vec3::UnitZ());
}

SceneSpec SceneSpec::from_config(const Config& cfg) {
    cfg.require_known({"width", "height", "views", "arc_degrees", "radius", "elevation_degrees", "focal",
                       "supersample", "shape", "glass_center", "glass_width", "glass_height", "glass_tilt_degrees",
                       "cylinder_radius", "f0", "roughness", "tau", "scatter", "background_distance",
                       "background_width", "background_height", "checker_size", "checker_a", "checker_b",
                       "environment", "environment_strength", "glass_points", "background_spacing",
                       "random_points", "seed", "preset"});
    SceneSpec s = cfg.get_string("preset", "default") == "high_specular" ? high_specular() : SceneSpec{};
    if (const auto p = cfg.get_string("preset", "default"); p != "default" && p != "high_specular")
        throw InvalidParameter("unknown preset '" + p + "' (expected default or high_specular)");
    s.width = static_cast<int>(cfg.get_int("width", s.width));
    s.height = static_cast<int>(cfg.get_int("height", s.height));
    s.views = static_cast<int>(cfg.get_int("views", s.views));
    s.arc_degrees = cfg.get_double("arc_degrees", s.arc_degrees);
    s.radius = cfg.get_double("radius", s.radius);
    s.elevation_degrees = cfg.get_double("elevation_degrees", s.elevation_degrees);
    s.focal = cfg.get_double("focal", s.focal);
    s.supersample = static_cast<int>(cfg.get_int("supersample", s.supersample));
    const std::string shape = cfg.get_string("shape", s.shape == GlassShape::Planar ? "planar" : "cylinder");
    if (shape == "planar") s.shape = GlassShape::Planar;
    else if (shape == "cylinder") s.shape = GlassShape::Cylinder;
    else throw InvalidParameter("unknown glass shape '" + shape + "' (expected planar or cylinder)");
    s.glass_center = cfg.get_vec3("glass_center", s.glass_center);
    s.glass_width = cfg.get_double("glass_width", s.glass_width);
    s.glass_height = cfg.get_double("glass_height", s.glass_height);
    s.glass_tilt_degrees = cfg.get_double("glass_tilt_degrees", s.glass_tilt_degrees);
    s.cylinder_radius = cfg.get_double("cylinder_radius", s.cylinder_radius);
    s.f0 = cfg.get_double("f0", s.f0);
    s.roughness = cfg.get_double("roughness", s.roughness);
    s.tau = cfg.get_double("tau", s.tau);
    s.scatter = cfg.get_vec3("scatter", s.scatter);
    s.background_distance = cfg.get_double("background_distance", s.background_distance);
    s.background_width = cfg.get_double("background_width", s.background_width);
    s.background_height = cfg.get_double("background_height", s.background_height);
    s.checker_size = cfg.get_double("checker_size", s.checker_size);
    s.checker_a = cfg.get_vec3("checker_a", s.checker_a);
    s.checker_b = cfg.get_vec3("checker_b", s.checker_b);
    s.environment = cfg.get_string("environment", s.environment);
    s.environment_strength = cfg.get_double("environment_strength", s.environment_strength);
    s.glass_points = static_cast<int>(cfg.get_int("glass_points", s.glass_points));
    s.background_spacing = cfg.get_double("background_spacing", s.background_spacing);
    s.random_points = static_cast<int>(cfg.get_int("random_points", s.random_points));
    s.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long>(s.seed)));
    s.validate();
    return s;
}

SceneSpec SceneSpec::high_specular() {
    SceneSpec s;
    s.shape = GlassShape::Cylinder;
    s.glass_tilt_degrees = 0;
    s.cylinder_radius = 0.6;
    s.f0 = 0.25;
    s.roughness = 0.02;
    s.environment = "studio";
    s.random_points = 300;
    return s;
}

std::vector<Camera> SceneSpec::cameras() const {
    std::vector<Camera> cams;
    const double elev = radians(elevation_degrees);
    for (int i = 0; i < views; ++i) {
        const double t = views > 1 ? static_cast<double>(i) / (views - 1) : 0.5;
        const double phi = radians(-0.5 * arc_degrees + arc_degrees * t);
        const Vec3 eye = glass_center + radius * Vec3(std::sin(phi) * std::cos(elev), std::sin(elev),
                                                      std::cos(phi) * std::cos(elev));
        cams.push_back(Camera::look_at(eye, glass_center, Vec3::UnitY(), width, height, focal));
    }
    return cams;
}

EnvCoeffs SceneSpec::environment_coeffs() const {
    // Projection onto the SH basis by quadrature over a Fibonacci sphere.
    constexpr int kSamples = 20000;
    EnvCoeffs e = EnvCoeffs::Zero();
    std::array<double, ShadingParams::kEnvCoeffs> y;
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int i = 0; i < kSamples; ++i) {
        const double z = 1.0 - (2.0 * i + 1.0) / kSamples;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const Vec3 d(r * std::cos(golden * i), r * std::sin(golden * i), z);
        sh_basis(ShadingParams::kEnvDegree, d, y);
        const Vec3 f = environment_radiance(environment, d);
        for (int k = 0; k < ShadingParams::kEnvCoeffs; ++k) e.row(k) += y[k] * f.transpose();
    }
    return e * (environment_strength * 4.0 * std::numbers::pi / kSamples);
}

std::optional<GlassHit> intersect_glass(const SceneSpec& s, const Vec3& o, const Vec3& d) {
    const Vec3 ax = glass_axis_x(s), az = glass_axis_z(s), ay = Vec3::UnitY();
    auto facing = [&](Vec3 n) { return n.dot(d) > 0 ? Vec3(-n) : n; };
    if (s.shape == GlassShape::Planar) {
        const double denom = d.dot(az);
        if (std::abs(denom) < 1e-12) return std::nullopt;
        const double t = (s.glass_center - o).dot(az) / denom;
        if (!(t > 0)) return std::nullopt;
        const Vec3 p = o + t * d - s.glass_center;
        if (std::abs(p.dot(ax)) > 0.5 * s.glass_width || std::abs(p.dot(ay)) > 0.5 * s.glass_height)
            return std::nullopt;
        return GlassHit{t, facing(az)};
    }
    // Vertical cylinder whose apex is the glass center, bulging toward the cameras.
    const Vec3 axis_point = s.glass_center - s.cylinder_radius * az;
    const Vec3 lo = o - axis_point;
    const double ox = lo.dot(ax), oz = lo.dot(az), dx = d.dot(ax), dz = d.dot(az);
    const double a = dx * dx + dz * dz;
    if (a < 1e-14) return std::nullopt;
    const double b = 2.0 * (ox * dx + oz * dz);
    const double c = ox * ox + oz * oz - s.cylinder_radius * s.cylinder_radius;
    const double disc = b * b - 4 * a * c;
    if (disc < 0) return std::nullopt;
    const double half_angle = 0.5 * s.glass_width / s.cylinder_radius;
    const double sq = std::sqrt(disc);
    for (double t : {(-b - sq) / (2 * a), (-b + sq) / (2 * a)}) {
        if (!(t > 0)) continue;
        const Vec3 p = lo + t * d;
        const double px = p.dot(ax), pz = p.dot(az);
        if (std::abs(std::atan2(px, pz)) > half_angle) continue;
        if (std::abs((o + t * d - s.glass_center).dot(ay)) > 0.5 * s.glass_height) continue;
        const Vec3 n = (px * ax + pz * az).normalized();
        return GlassHit{t, facing(n)};
    }
    return std::nullopt;
}

ReferenceFrame trace_reference(const SceneSpec& spec, const Camera& camera) {
    spec.validate();
    camera.validate();
    const Vec3 eye = camera.center();
    const Vec3 az = glass_axis_z(spec);
    const double front = (eye - spec.glass_center).dot(az);
    const double margin = spec.shape == GlassShape::Cylinder ? 0.0 : 1e-9;
    if (front <= margin || (spec.shape == GlassShape::Cylinder &&
                            (eye - (spec.glass_center - spec.cylinder_radius * az)).norm() <= spec.cylinder_radius))
        throw InvalidParameter("scene spec: camera lies inside or behind the glass");
    if (eye.z() <= background_z(spec)) throw InvalidParameter("scene spec: camera lies behind the background");

    const EnvCoeffs env = spec.environment_coeffs();
    const int w = camera.width, h = camera.height, ss = spec.supersample;
    ReferenceFrame f;
    f.camera = camera;
    f.image = Image(w, h, 3);
    f.reflection = Image(w, h, 3);
    f.transmission = Image(w, h, 3);
    f.mask = Image(w, h, 1);
    f.glass_depth = Image(w, h, 1, kInf);
    f.background_depth = Image(w, h, 1, kInf);
    const Mat3 to_world = camera.rotation.transpose();

    auto shade = [&](const Vec3& d, Vec3& refl, Vec3& trans, double* glass_t, double* bg_t) {
        refl.setZero();
        double r = 0.0;
        const auto g = intersect_glass(spec, eye, d);
        if (g) {
            const double cos_theta = -g->normal.dot(d);
            r = schlick(spec.f0, cos_theta);
            const Vec3 dir = (d - 2.0 * d.dot(g->normal) * g->normal).normalized();
            refl = r * env_eval(env, dir, spec.roughness);
            if (glass_t) *glass_t = g->t;
        }
        Vec3 bg = Vec3::Zero();
        if (const auto tb = intersect_background(spec, eye, d)) {
            bg = checker(spec, eye + *tb * d);
            if (bg_t) *bg_t = *tb;
        }
        trans = g ? Vec3((1.0 - r) * (spec.tau * bg + (1.0 - spec.tau) * spec.scatter)) : bg;
    };

    parallel_for(static_cast<std::size_t>(h), 0, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t p = y * w + x;
                Vec3 refl_sum = Vec3::Zero(), trans_sum = Vec3::Zero();
                for (int sy = 0; sy < ss; ++sy)
                    for (int sx = 0; sx < ss; ++sx) {
                        const double px = x + (sx + 0.5) / ss, py = static_cast<double>(y) + (sy + 0.5) / ss;
                        const Vec3 dc((px - camera.cx) / camera.fx, (py - camera.cy) / camera.fy, 1.0);
                        Vec3 refl, trans;
                        shade((to_world * dc).normalized(), refl, trans, nullptr, nullptr);
                        refl_sum += refl;
                        trans_sum += trans;
                    }
                const double inv = 1.0 / (ss * ss);
                f.reflection.set_rgb(p, refl_sum * inv);
                f.transmission.set_rgb(p, trans_sum * inv);
                f.image.set_rgb(p, (refl_sum + trans_sum) * inv);

                const Vec3 dc = camera.pixel_dir_camera(x, static_cast<int>(y));
                const Vec3 d = (to_world * dc).normalized();
                const double depth_per_t = 1.0 / dc.norm();
                double gt = kInf, bt = kInf;
                Vec3 refl, trans;
                shade(d, refl, trans, &gt, &bt);
                if (std::isfinite(gt)) {
                    f.mask.at(p, 0) = 1.0;
                    f.glass_depth.at(p, 0) = gt * depth_per_t;
                }
                if (std::isfinite(bt)) f.background_depth.at(p, 0) = bt * depth_per_t;
            }
    });
    return f;
}

Dataset synthesize(const SceneSpec& spec) {
    spec.validate();
    Dataset d;
    d.cameras = spec.cameras();
    for (std::size_t i = 0; i < d.cameras.size(); ++i) {
        ReferenceFrame f = trace_reference(spec, d.cameras[i]);
        d.views.push_back({std::move(f.image), std::move(f.mask)});
        d.layers.push_back({std::move(f.reflection), std::move(f.transmission), std::move(f.glass_depth),
                            std::move(f.background_depth)});
        d.is_test.push_back(i % 8 == 0);
    }

    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    const Vec3 ax = glass_axis_x(spec), az = glass_axis_z(spec);
    const int gn = spec.glass_points;
    for (int j = 0; j < gn; ++j)
        for (int i = 0; i < gn; ++i) {
            const double u = ((i + 0.5) / gn - 0.5) * spec.glass_width;
            const double v = ((j + 0.5) / gn - 0.5) * spec.glass_height;
            SeedPoint p;
            p.color = Vec3::Constant(0.5);
            p.scale = 0.6 * std::min(spec.glass_width, spec.glass_height) / gn;
            if (spec.shape == GlassShape::Planar) {
                p.position = spec.glass_center + u * ax + v * Vec3::UnitY();
                p.normal = az;
            } else {
                const double ang = u / spec.cylinder_radius;
                const Vec3 radial = std::sin(ang) * ax + std::cos(ang) * az;
                p.position = spec.glass_center - spec.cylinder_radius * az + spec.cylinder_radius * radial +
                             v * Vec3::UnitY();
                p.normal = radial;
            }
            d.points.push_back(p);
        }
    const double bz = background_z(spec);
    const int nx = static_cast<int>(std::floor(spec.background_width / spec.background_spacing));
    const int ny = static_cast<int>(std::floor(spec.background_height / spec.background_spacing));
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            SeedPoint p;
            const double x = -0.5 * spec.background_width + (i + 0.25 + 0.5 * uni(rng)) * spec.background_spacing;
            const double y = spec.glass_center.y() - 0.5 * spec.background_height +
                             (j + 0.25 + 0.5 * uni(rng)) * spec.background_spacing;
            p.position = Vec3(x, y, bz);
            p.normal = Vec3::UnitZ();
            p.color = checker(spec, p.position);
            p.scale = 0.6 * spec.background_spacing;
            d.points.push_back(p);
        }
    for (int k = 0; k < spec.random_points; ++k) {
        SeedPoint p;
        const double x = (uni(rng) - 0.5) * 1.5 * spec.glass_width;
        const double y = spec.glass_center.y() + (uni(rng) - 0.5) * 1.5 * spec.glass_height;
        const double z = bz + 0.1 + uni(rng) * (spec.glass_center.z() - bz - 0.2);
        p.position = Vec3(x, y, z);
        p.normal = Vec3(uni(rng) - 0.5, uni(rng) - 0.5, 1.0).normalized();
        p.color = Vec3(uni(rng), uni(rng), uni(rng));
        p.scale = 0.6 * spec.background_spacing;
        d.points.push_back(p);
    }
    return d;
}

void emit_dataset(const SceneSpec& spec, const std::string& dir) { save_dataset(synthesize(spec), dir); }

} // namespace rtsplat
