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

#include "rtsplat/losses.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/pipeline.hpp"

#include <array>
#include <cmath>

namespace rtsplat {
namespace {

constexpr int kWindow = 11;
constexpr int kRadius = kWindow / 2;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::array<double, kWindow> gaussian_taps() {
    std::array<double, kWindow> taps{};
    double sum = 0.0;
    for (int i = 0; i < kWindow; ++i) {
        const double d = i - kRadius;
        taps[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
        sum += taps[i];
    }
    for (double& t : taps) t /= sum;
    return taps;
}

// Single-channel planes for the SSIM filters.
using Plane = std::vector<double>;

Plane blur(const Plane& in, int w, int h) {
    static const auto taps = gaussian_taps();
    Plane tmp(in.size()), out(in.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += taps[k] * in[y * w + std::clamp(x + k - kRadius, 0, w - 1)];
            tmp[y * w + x] = s;
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0.0;
            for (int k = 0; k < kWindow; ++k) s += taps[k] * tmp[std::clamp(y + k - kRadius, 0, h - 1) * w + x];
            out[y * w + x] = s;
        }
    return out;
}

// Adjoint of blur.
Plane blur_transpose(const Plane& g, int w, int h) {
    static const auto taps = gaussian_taps();
    Plane tmp(g.size(), 0.0), out(g.size(), 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < kWindow; ++k) tmp[std::clamp(y + k - kRadius, 0, h - 1) * w + x] += taps[k] * g[y * w + x];
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int k = 0; k < kWindow; ++k) out[y * w + std::clamp(x + k - kRadius, 0, w - 1)] += taps[k] * tmp[y * w + x];
    return out;
}

void require_same(const Image& a, const Image& b, const char* what) {
    if (!a.same_shape(b)) throw DimensionMismatch(std::string(what) + ": image dimensions differ");
}

} // namespace

void LossWeights::validate() const {
    if (lambda_dssim < 0 || lambda_dssim > 1) throw InvalidParameter("lambda_dssim must be in [0, 1]");
    if (lambda_perc != 0.0) throw InvalidParameter("lambda_perc is reserved; the perceptual term is not available");
    if (lambda_normal < 0 || lambda_mask < 0 || gating_k < 0 || bce_epsilon <= 0)
        throw InvalidParameter("loss weights must be non-negative");
}

double ssim(const Image& a, const Image& b, Image* grad_a) {
    require_same(a, b, "ssim");
    const int w = a.width, h = a.height;
    const std::size_t n = a.pixels();
    const double norm = 1.0 / static_cast<double>(n * a.channels);
    if (grad_a) *grad_a = Image(w, h, a.channels);
    double total = 0.0;
    for (int c = 0; c < a.channels; ++c) {
        Plane pa(n), pb(n), paa(n), pbb(n), pab(n);
        for (std::size_t i = 0; i < n; ++i) {
            pa[i] = a.at(i, c);
            pb[i] = b.at(i, c);
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        const Plane mu_a = blur(pa, w, h), mu_b = blur(pb, w, h);
        const Plane m_aa = blur(paa, w, h), m_bb = blur(pbb, w, h), m_ab = blur(pab, w, h);
        Plane d1(n), d2(n), d3(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double s_aa = m_aa[i] - ma * ma, s_bb = m_bb[i] - mb * mb, s_ab = m_ab[i] - ma * mb;
            const double n1 = 2 * ma * mb + kC1, n2 = 2 * s_ab + kC2;
            const double e1 = ma * ma + mb * mb + kC1, e2 = s_aa + s_bb + kC2;
            const double s = n1 * n2 / (e1 * e2);
            total += s;
            if (grad_a) {
                const double ds_dmu = 2 * mb * n2 / (e1 * e2) - s * 2 * ma / e1;
                const double ds_dsab = 2 * n1 / (e1 * e2);
                const double ds_dsaa = -s / e2;
                d1[i] = norm * (ds_dmu - 2 * ma * ds_dsaa - mb * ds_dsab);
                d2[i] = norm * ds_dsaa;
                d3[i] = norm * ds_dsab;
            }
        }
        if (grad_a) {
            const Plane g1 = blur_transpose(d1, w, h), g2 = blur_transpose(d2, w, h), g3 = blur_transpose(d3, w, h);
            for (std::size_t i = 0; i < n; ++i) grad_a->at(i, c) = g1[i] + 2 * pa[i] * g2[i] + pb[i] * g3[i];
        }
    }
    return total * norm;
}

Image ssim_map(const Image& a, const Image& b) {
    require_same(a, b, "ssim_map");
    const int w = a.width, h = a.height;
    const std::size_t n = a.pixels();
    Image out(w, h, 1);
    for (int c = 0; c < a.channels; ++c) {
        Plane pa(n), pb(n), paa(n), pbb(n), pab(n);
        for (std::size_t i = 0; i < n; ++i) {
            pa[i] = a.at(i, c);
            pb[i] = b.at(i, c);
            paa[i] = pa[i] * pa[i];
            pbb[i] = pb[i] * pb[i];
            pab[i] = pa[i] * pb[i];
        }
        const Plane mu_a = blur(pa, w, h), mu_b = blur(pb, w, h);
        const Plane m_aa = blur(paa, w, h), m_bb = blur(pbb, w, h), m_ab = blur(pab, w, h);
        for (std::size_t i = 0; i < n; ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double s_aa = m_aa[i] - ma * ma, s_bb = m_bb[i] - mb * mb, s_ab = m_ab[i] - ma * mb;
            out.at(i, 0) += (2 * ma * mb + kC1) * (2 * s_ab + kC2) / ((ma * ma + mb * mb + kC1) * (s_aa + s_bb + kC2)) /
                            a.channels;
        }
    }
    return out;
}

LossTerm image_loss(const Image& render, const Image& target, double lambda_dssim) {
    require_same(render, target, "image_loss");
    LossTerm out;
    out.grad = Image(render.width, render.height, render.channels);
    const double norm = 1.0 / static_cast<double>(render.data.size());
    double l1 = 0.0;
    for (std::size_t i = 0; i < render.data.size(); ++i) {
        const double d = render.data[i] - target.data[i];
        l1 += std::abs(d);
        out.grad.data[i] = (1.0 - lambda_dssim) * norm * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
    }
    l1 *= norm;
    out.value = (1.0 - lambda_dssim) * l1;
    if (lambda_dssim > 0) {
        Image g;
        const double s = ssim(render, target, &g);
        out.value += lambda_dssim * (1.0 - s) / 2.0;
        for (std::size_t i = 0; i < g.data.size(); ++i) out.grad.data[i] -= 0.5 * lambda_dssim * g.data[i];
    }
    return out;
}

LossTerm mask_loss(const Image& opacity, const Image& mask, double epsilon) {
    if (opacity.width != mask.width || opacity.height != mask.height)
        throw DimensionMismatch("mask_loss: mask size does not match opacity map");
    LossTerm out;
    out.grad = Image(opacity.width, opacity.height, 1);
    const std::size_t n = opacity.pixels();
    const double norm = 1.0 / static_cast<double>(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double target = 1.0 - mask.at(i, 0);
        const double a = opacity.at(i, 0);
        const double ac = std::clamp(a, epsilon, 1.0 - epsilon);
        total += -(target * std::log(ac) + (1.0 - target) * std::log(1.0 - ac));
        if (a > epsilon && a < 1.0 - epsilon) out.grad.at(i, 0) = norm * (-target / ac + (1.0 - target) / (1.0 - ac));
    }
    out.value = total * norm;
    return out;
}

bool depth_normal(const Image& depth, const Camera& camera, int x, int y, Vec3& world_normal) {
    auto point = [&](int px, int py) -> Vec3 { return depth.at(px, py, 0) * camera.pixel_dir_camera(px, py); };
    const Vec3 dx = point(x + 1, y) - point(x - 1, y);
    const Vec3 dy = point(x, y + 1) - point(x, y - 1);
    const Vec3 c = dx.cross(dy);
    const double len = c.norm();
    if (!(len > 1e-12)) return false;
    world_normal = camera.rotation.transpose() * (-c / len);
    return true;
}

NormalTerm normal_consistency(const RenderOutputs& outputs, const Camera& camera) {
    const int w = outputs.width, h = outputs.height;
    NormalTerm out;
    out.grad_normal = Image(w, h, 3);
    out.grad_depth = Image(w, h, 1);
    const GBuffer& gb = outputs.gbuffer;
    const Image& depth = outputs.surface_depth;
    auto valid = [&](int x, int y) { return gb.probability(static_cast<std::size_t>(y) * w + x) > 0.5; };

    struct Site {
        int x, y;
        Vec3 dx, dy;
        Vec3 n_world;
    };
    std::vector<Site> sites;
    for (int y = 1; y + 1 < h; ++y)
        for (int x = 1; x + 1 < w; ++x) {
            if (!valid(x, y) || !valid(x - 1, y) || !valid(x + 1, y) || !valid(x, y - 1) || !valid(x, y + 1))
                continue;
            Vec3 nw;
            if (!depth_normal(depth, camera, x, y, nw)) continue;
            auto point = [&](int px, int py) -> Vec3 { return depth.at(px, py, 0) * camera.pixel_dir_camera(px, py); };
            sites.push_back({x, y, point(x + 1, y) - point(x - 1, y), point(x, y + 1) - point(x, y - 1), nw});
        }
    out.pixels = sites.size();
    if (sites.empty()) return out;
    const double norm = 1.0 / static_cast<double>(sites.size());
    double total = 0.0;
    for (const Site& s : sites) {
        const std::size_t p = static_cast<std::size_t>(s.y) * w + s.x;
        const Vec3 an = outputs.normal.rgb(p);
        total += 1.0 - an.dot(s.n_world);
        for (int k = 0; k < 3; ++k) out.grad_normal.at(p, k) += -norm * s.n_world[k];
        const Vec3 d_nc = camera.rotation * (-norm * an);
        // N_c = -c / |c| with c = dx x dy
        const Vec3 d_c = -normalize_backward(s.dx.cross(s.dy), d_nc);
        const Vec3 d_dx = s.dy.cross(d_c);
        const Vec3 d_dy = d_c.cross(s.dx);
        out.grad_depth.at(s.x + 1, s.y, 0) += d_dx.dot(camera.pixel_dir_camera(s.x + 1, s.y));
        out.grad_depth.at(s.x - 1, s.y, 0) -= d_dx.dot(camera.pixel_dir_camera(s.x - 1, s.y));
        out.grad_depth.at(s.x, s.y + 1, 0) += d_dy.dot(camera.pixel_dir_camera(s.x, s.y + 1));
        out.grad_depth.at(s.x, s.y - 1, 0) -= d_dy.dot(camera.pixel_dir_camera(s.x, s.y - 1));
    }
    out.value = total * norm;
    return out;
}

double total_loss(const LossComponents& c, const LossWeights& w) {
    if (!std::isfinite(c.image)) throw InvalidParameter("total_loss: image term is not finite");
    if (!std::isfinite(c.normal)) throw InvalidParameter("total_loss: normal term is not finite");
    if (!std::isfinite(c.mask)) throw InvalidParameter("total_loss: mask term is not finite");
    return c.image + w.lambda_normal * c.normal + w.lambda_mask * c.mask;
}

} // namespace rtsplat
