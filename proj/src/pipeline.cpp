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

#include "rtsplat/pipeline.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/parallel.hpp"
#include "rtsplat/sh.hpp"

#include <array>
#include <cmath>
#include <string>

namespace rtsplat {
namespace {

using EnvCoeffs = Eigen::Matrix<double, ShadingParams::kEnvCoeffs, 3>;
constexpr int kEnvN = ShadingParams::kEnvCoeffs;

Vec3 env_raw(const EnvCoeffs& env, const Vec3& r, double roughness) {
    std::array<double, kEnvN> y;
    sh_basis(ShadingParams::kEnvDegree, r, y);
    Vec3 out = Vec3::Zero();
    for (int k = 0; k < kEnvN; ++k)
        out += env_band_attenuation(sh_band(k), roughness) * y[k] * env.row(k).transpose();
    return out;
}

Vec3 normal_sum(const GSums& s) { return Vec3(s[gattr::kNormal], s[gattr::kNormal + 1], s[gattr::kNormal + 2]); }

} // namespace

PixelGrads PixelGrads::zeros(int width, int height) {
    PixelGrads g;
    g.color = Image(width, height, 3);
    g.opacity = Image(width, height, 1);
    g.normal = Image(width, height, 3);
    g.surface_depth = Image(width, height, 1);
    return g;
}

bool GradientBundle::all_finite() const {
    std::vector<double> flat;
    for (const auto& s : surfels) {
        flat.resize(surfel_param_count(static_cast<int>(std::lround(std::sqrt(s.sh_color.size() / 3.0))) - 1));
        pack_surfel(s, flat);
        for (double v : flat)
            if (!std::isfinite(v)) return false;
    }
    std::vector<double> sp(ShadingParams::size());
    shading.pack(sp);
    for (double v : sp)
        if (!std::isfinite(v)) return false;
    return true;
}

GradientBundle zero_gradients(const Scene& scene) {
    GradientBundle g;
    g.surfels.assign(scene.surfels.size(), zero_surfel(scene.sh_degree));
    g.shading.unpack(std::vector<double>(ShadingParams::size(), 0.0));
    g.screen_grad.assign(scene.surfels.size(), 0.0);
    g.visible.assign(scene.surfels.size(), 0);
    return g;
}

RenderOutputs render(const Scene& scene, const Camera& camera, const RenderSettings& settings) {
    camera.validate();
    if (!(settings.gating_k >= 0.0)) throw InvalidParameter("render: gating strength k must be non-negative");
    RenderOutputs out;
    const int w = camera.width, h = camera.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    out.width = w;
    out.height = h;
    out.view = prepare_view(scene, camera);
    out.fragments = build_fragments(out.view, camera, settings.workers);
    out.volumetric = volumetric_forward(out.fragments, out.view, settings.workers);
    out.gbuffer = deferred_aggregate(out.fragments, out.view, camera, settings.workers);
    const GBuffer& gb = out.gbuffer;

    // Deferred shading inputs for every pixel with a first surface.
    out.head_column.assign(n, -1);
    int columns = 0;
    for (std::size_t p = 0; p < n; ++p)
        if (!gb.background(p)) out.head_column[p] = columns++;
    out.head.inputs.resize(ShadingParams::kInput, columns);
    out.env_radiance_raw.assign(n, Vec3::Zero());
    parallel_for(n, settings.workers, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            const int col = out.head_column[p];
            if (col < 0) continue;
            const Ray ray = camera_ray(camera, static_cast<int>(p % w), static_cast<int>(p / w));
            const Vec3 view_dir = -ray.dir;
            const Vec3& nrm = gb.normal[p];
            const double ndv = nrm.dot(view_dir);
            const Vec3 r = 2.0 * ndv * nrm - view_dir;
            const Vec3 env = env_raw(scene.shading.env, r, gb.sums[p][gattr::kRoughness]);
            out.env_radiance_raw[p] = env;
            auto x = out.head.inputs.col(col);
            x.head<3>() = env.cwiseMax(0.0);
            for (int k = 0; k < kFeatureDim; ++k) x[3 + k] = gb.sums[p][gattr::kFeature + k];
            x[ShadingParams::kInput - 1] = ndv;
            if (!x.allFinite()) throw InvalidParameter("shading: non-finite head input at pixel " + std::to_string(p));
        }
    });
    if (columns > 0) out.head.forward(scene.shading);

    out.specular = Image(w, h, 3);
    out.attenuation = Image(w, h, 1, 1.0);
    out.specular_raw.assign(n, Vec3::Zero());
    out.attenuation_raw.assign(n, 1.0);
    out.transmissivity.assign(n, 1.0);
    out.scatter.assign(n, Vec3::Zero());
    out.normal = Image(w, h, 3);
    out.surface_depth = Image(w, h, 1);
    out.volumetric_depth = Image(w, h, 1);
    out.transmission = Image(w, h, 3);
    for (std::size_t p = 0; p < n; ++p) {
        const GSums& s = gb.sums[p];
        const int col = out.head_column[p];
        Vec3 spec = Vec3::Zero();
        double beta = 1.0;
        if (col >= 0) {
            spec = out.head.outputs.col(col).head<3>();
            if (scene.variant.attenuation) beta = out.head.outputs(3, col);
        }
        out.specular_raw[p] = spec;
        out.attenuation_raw[p] = beta;
        const double removed = s[gattr::kRemoved];
        out.specular.set_rgb(p, (1.0 - removed) * spec);
        out.attenuation.at(p, 0) = beta * (1.0 - removed) + removed;
        if (scene.variant.scattering) {
            const double prob = s[gattr::kProbability];
            out.transmissivity[p] = s[gattr::kTransmissivity] + (1.0 - prob);
            const double pc = std::max(prob, 1e-8);
            out.scatter[p] = Vec3(s[gattr::kScatter], s[gattr::kScatter + 1], s[gattr::kScatter + 2]) / pc;
        }
        out.normal.set_rgb(p, gb.normal[p]);
        out.surface_depth.at(p, 0) = gb.depth[p];
        out.volumetric_depth.at(p, 0) = out.volumetric.depth[p];
        out.transmission.set_rgb(p, out.volumetric.color(p));
    }

    out.gate = gating_map(out.specular, settings.gating_k);
    if (settings.freeze && (!settings.freeze->gate.same_shape(out.gate) ||
                            !settings.freeze->transmission.same_shape(out.transmission)))
        throw DimensionMismatch("render: frozen gate does not match image size");

    out.subsurface = Image(w, h, 3);
    out.color = Image(w, h, 3);
    for (std::size_t p = 0; p < n; ++p) {
        Vec3 trans = gate_transmission(out.transmission.rgb(p), out.gate.at(p, 0));
        if (settings.freeze) {
            const double g0 = settings.freeze->gate.at(p, 0);
            trans = (1.0 - g0) * settings.freeze->transmission.rgb(p) + g0 * out.transmission.rgb(p);
        }
        const ComposedPixel c = compose_pixel(out.specular.rgb(p), out.attenuation.at(p, 0), out.transmissivity[p],
                                              out.scatter[p], trans);
        out.subsurface.set_rgb(p, c.subsurface);
        out.color.set_rgb(p, c.color);
    }
    out.recorded = true;
    return out;
}

GradientBundle backward(const Scene& scene, const Camera& camera, const RenderOutputs& outputs,
                        const PixelGrads& upstream, const RenderSettings& settings) {
    if (!outputs.recorded || outputs.view.surfels.size() != scene.surfels.size())
        throw ContractViolation("backward: no recorded forward pass for this scene");
    const int w = outputs.width, h = outputs.height;
    const std::size_t n = static_cast<std::size_t>(w) * h;
    if (upstream.color.width != w || upstream.color.height != h || upstream.color.channels != 3)
        throw DimensionMismatch("backward: color gradient does not match render size");
    const bool has_opacity = !upstream.opacity.data.empty();
    const bool has_normal = !upstream.normal.data.empty();
    const bool has_depth = !upstream.surface_depth.data.empty();
    const GBuffer& gb = outputs.gbuffer;
    const ModelVariant& variant = scene.variant;

    GradientBundle grads = zero_gradients(scene);
    grads.transmission_grad = Image(w, h, 3);
    grads.transmission_grad_ungated = Image(w, h, 3);

    std::vector<GSums> gdef(n, GSums{});
    std::vector<VSums> gvol(n, VSums{});
    const int columns = static_cast<int>(outputs.head.inputs.cols());
    Eigen::MatrixXd grad_head_out = Eigen::MatrixXd::Zero(ShadingParams::kOutput, columns);

    // Composition: C = keep C_spec + (keep beta + removed) C_sub.
    for (std::size_t p = 0; p < n; ++p) {
        const GSums& s = gb.sums[p];
        GSums& gd = gdef[p];
        const Vec3 dc = upstream.color.rgb(p);
        const Vec3 sub = outputs.subsurface.rgb(p);
        const double beta = outputs.attenuation.at(p, 0);
        const double removed = s[gattr::kRemoved];
        const double keep = 1.0 - removed;
        const Vec3 d_sub = beta * dc;
        const double d_beta = dc.dot(sub);
        const Vec3 d_spec_raw = keep * dc;
        const double d_beta_raw = keep * d_beta;
        gd[gattr::kRemoved] = -outputs.specular_raw[p].dot(dc) + (1.0 - outputs.attenuation_raw[p]) * d_beta;

        const Vec3 trans = outputs.transmission.rgb(p);
        const double tau = outputs.transmissivity[p];
        if (variant.scattering) {
            const double prob = s[gattr::kProbability];
            const double pc = std::max(prob, 1e-8);
            const Vec3& scat = outputs.scatter[p];
            const double d_tau = d_sub.dot(trans - scat);
            const Vec3 d_scat = (1.0 - tau) * d_sub;
            gd[gattr::kTransmissivity] += d_tau;
            gd[gattr::kProbability] -= d_tau;
            for (int k = 0; k < 3; ++k) gd[gattr::kScatter + k] += d_scat[k] / pc;
            if (prob > 1e-8) gd[gattr::kProbability] -= d_scat.dot(scat) / pc;
        }
        const Vec3 d_trans = tau * d_sub;
        const double g = outputs.gate.at(p, 0);
        const Vec3 d_trans_gated = gate_transmission_backward(d_trans, g);
        grads.transmission_grad_ungated.set_rgb(p, d_trans);
        grads.transmission_grad.set_rgb(p, d_trans_gated);
        for (int c = 0; c < 3; ++c) gvol[p][vattr::kColor + c] = d_trans_gated[c];

        const int col = outputs.head_column[p];
        if (col >= 0) {
            grad_head_out.col(col).head<3>() = d_spec_raw;
            if (variant.attenuation) grad_head_out(3, col) = d_beta_raw;
        }
        if (has_opacity) gd[gattr::kOpacity] += upstream.opacity.at(p, 0);
        if (has_depth) {
            const double prob = s[gattr::kProbability];
            const double pc = std::max(prob, 1e-8);
            const double dd = upstream.surface_depth.at(p, 0);
            gd[gattr::kDepth] += dd / pc;
            if (prob > 1e-8) gd[gattr::kProbability] -= dd * s[gattr::kDepth] / (pc * pc);
        }
    }

    // Shading head and the normal -> reflect -> environment chain.
    Eigen::MatrixXd grad_inputs;
    if (columns > 0) grad_inputs = outputs.head.backward(scene.shading, grad_head_out, grads.shading);
    std::vector<Eigen::Matrix<double, kEnvN, 3>> env_partials;
    const int chunks = 64;
    env_partials.assign(chunks, Eigen::Matrix<double, kEnvN, 3>::Zero());
    // Fixed chunking keeps the environment-gradient reduction independent of workers.
    parallel_for(chunks, settings.workers, [&](std::size_t c0, std::size_t c1) {
        std::array<double, kEnvN> y;
        std::array<Vec3, kEnvN> dy;
        for (std::size_t chunk = c0; chunk < c1; ++chunk) {
            const std::size_t p_begin = n * chunk / chunks, p_end = n * (chunk + 1) / chunks;
            for (std::size_t p = p_begin; p < p_end; ++p) {
                const GSums& s = gb.sums[p];
                GSums& gd = gdef[p];
                const int col = outputs.head_column[p];
                Vec3 d_normal = has_normal ? Vec3(upstream.normal.rgb(p)) : Vec3::Zero();
                if (col >= 0) {
                    const Ray ray = camera_ray(camera, static_cast<int>(p % w), static_cast<int>(p / w));
                    const Vec3 view_dir = -ray.dir;
                    const Vec3& nrm = gb.normal[p];
                    const double ndv = nrm.dot(view_dir);
                    const Vec3 r = 2.0 * ndv * nrm - view_dir;
                    const double rough = s[gattr::kRoughness];
                    for (int k = 0; k < kFeatureDim; ++k) gd[gattr::kFeature + k] += grad_inputs(3 + k, col);
                    Vec3 d_env = grad_inputs.col(col).head<3>();
                    for (int c = 0; c < 3; ++c)
                        if (!(outputs.env_radiance_raw[p][c] > 0.0)) d_env[c] = 0.0;
                    Vec3 d_r = Vec3::Zero();
                    if (!d_env.isZero(0.0)) {
                        sh_basis_grad(ShadingParams::kEnvDegree, r, y, dy);
                        double d_rough = 0.0;
                        for (int k = 0; k < kEnvN; ++k) {
                            const int l = sh_band(k);
                            const double a = env_band_attenuation(l, rough);
                            const double da = -2.0 * l * (l + 1) * rough * a;
                            const double e_dot = scene.shading.env.row(k).dot(d_env.transpose());
                            env_partials[chunk].row(k) += a * y[k] * d_env.transpose();
                            d_rough += e_dot * da * y[k];
                            d_r += e_dot * a * dy[k];
                        }
                        gd[gattr::kRoughness] += d_rough;
                    }
                    const double d_ndv = grad_inputs(ShadingParams::kInput - 1, col);
                    d_normal += 2.0 * view_dir * nrm.dot(d_r) + 2.0 * ndv * d_r + d_ndv * view_dir;
                }
                if (!d_normal.isZero(0.0)) {
                    const Vec3 nsum = normal_sum(s);
                    Vec3 d_sum = d_normal;
                    if (s[gattr::kProbability] > kShadingMinProbability && nsum.norm() > 0)
                        d_sum = normalize_backward(nsum, d_normal);
                    for (int k = 0; k < 3; ++k) gd[gattr::kNormal + k] += d_sum[k];
                }
            }
        }
    });
    for (const auto& part : env_partials) grads.shading.env += part;

    const std::vector<SurfelGradAccum> acc =
        raster_backward(outputs.fragments, outputs.view, camera, gvol, gdef, settings.workers);

    // Activated-level gradients to raw parameters.
    const int sh_n = sh_count(scene.sh_degree);
    std::array<double, sh_count(kMaxShDegree)> basis{};
    std::array<Vec3, sh_count(kMaxShDegree)> basis_grad{};
    for (std::size_t i = 0; i < scene.surfels.size(); ++i) {
        const SurfelGradAccum& a = acc[i];
        if (!a.touched) continue;
        const GaussianSurfel& s = scene.surfels[i];
        const ViewSurfel& v = outputs.view.surfels[i];
        GaussianSurfel& g = grads.surfels[i];
        grads.visible[i] = 1;

        Vec3 d_center = a.center;
        if (!a.color.isZero(0.0)) {
            const double dist = v.view_offset.norm();
            const Vec3 dir = v.view_offset / dist;
            sh_basis_grad(scene.sh_degree, dir, std::span<double>(basis.data(), sh_n),
                          std::span<Vec3>(basis_grad.data(), sh_n));
            Vec3 d_dir = Vec3::Zero();
            for (int c = 0; c < 3; ++c) {
                if (!v.color_active[c]) continue;
                for (int k = 0; k < sh_n; ++k) {
                    g.sh_color[3 * k + c] += a.color[c] * basis[k];
                    d_dir += a.color[c] * s.sh_color[3 * k + c] * basis_grad[k];
                }
            }
            d_center += normalize_backward(v.view_offset, d_dir);
        }
        g.position = d_center;

        Mat3 d_rot;
        d_rot.col(0) = a.tangent_u;
        d_rot.col(1) = a.tangent_v;
        d_rot.col(2) = a.normal;
        const Vec4 qn = s.rotation.normalized();
        g.rotation = normalize_backward(s.rotation, quat_to_matrix_backward(qn, d_rot));
        g.log_scale = a.scale.cwiseProduct(v.act.scale);
        g.occupancy_raw = a.occupancy * clamped_sigmoid_grad(s.occupancy_raw);
        g.opacity_raw = a.opacity * clamped_sigmoid_grad(s.opacity_raw);
        g.roughness_raw = a.roughness * clamped_sigmoid_grad(s.roughness_raw);
        g.material = a.feature;
        for (int c = 0; c < 3; ++c) g.scatter_raw[c] = a.scatter[c] * clamped_sigmoid_grad(s.scatter_raw[c]);
        g.transmissivity_raw = a.transmissivity * clamped_sigmoid_grad(s.transmissivity_raw);

        const Vec3 g_cam = camera.rotation * d_center;
        if (v.center_depth > 0)
            grads.screen_grad[i] = std::hypot(g_cam.x(), g_cam.y()) * v.center_depth / camera.fx * 0.5 * w;
    }
    return grads;
}

} // namespace rtsplat
