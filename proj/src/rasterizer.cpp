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

#include "rtsplat/rasterizer.hpp"

#include "rtsplat/errors.hpp"
#include "rtsplat/parallel.hpp"
#include "rtsplat/sh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rtsplat {
namespace {

constexpr int kTileSize = 8;

// Normal oriented toward the camera for this ray.
inline double facing_sign(const Vec3& normal, const Ray& ray) { return normal.dot(ray.dir) <= 0.0 ? 1.0 : -1.0; }

} // namespace

Ray camera_ray(const Camera& camera, int px, int py) {
    const Vec3 d_cam = camera.pixel_dir_camera(px, py);
    const double len = d_cam.norm();
    Ray r;
    r.origin = camera.center();
    r.dir = camera.rotation.transpose() * (d_cam / len);
    r.depth_per_t = 1.0 / len;
    return r;
}

std::optional<KernelHit> intersect_kernel(const Vec3& center, const SurfelFrame& frame, const Vec2& scale,
                                          const Ray& ray) {
    const double denom = ray.dir.dot(frame.normal);
    if (std::abs(denom) < kParallelEpsilon) return std::nullopt;
    const Vec3 m = center - ray.origin;
    const double t = m.dot(frame.normal) / denom;
    if (!(t > 0.0)) return std::nullopt;
    KernelHit h;
    h.denom = denom;
    h.t = t;
    h.offset = t * ray.dir - m;
    h.u = h.offset.dot(frame.tangent_u) / scale[0];
    h.v = h.offset.dot(frame.tangent_v) / scale[1];
    if (std::abs(h.u) > kKernelCutoff || std::abs(h.v) > kKernelCutoff) return std::nullopt;
    h.kernel = std::exp(-0.5 * (h.u * h.u + h.v * h.v));
    if (h.kernel < kKernelMin) return std::nullopt;
    h.depth = t * ray.depth_per_t;
    return h;
}

KernelGrad intersect_kernel_backward([[maybe_unused]] const Vec3& center, const SurfelFrame& frame, const Vec2& scale,
                                     const Ray& ray, const KernelHit& hit, double grad_kernel, double grad_depth) {
    KernelGrad g;
    const double gu = -hit.kernel * hit.u * grad_kernel;
    const double gv = -hit.kernel * hit.v * grad_kernel;
    g.scale = Vec2(-gu * hit.u / scale[0], -gv * hit.v / scale[1]);
    const Vec3 g_offset = gu / scale[0] * frame.tangent_u + gv / scale[1] * frame.tangent_v;
    g.tangent_u = gu / scale[0] * hit.offset;
    g.tangent_v = gv / scale[1] * hit.offset;
    // offset = t d - m with t = (m . n) / (d . n), m = center - origin
    const double g_t = grad_depth * ray.depth_per_t + g_offset.dot(ray.dir);
    g.center = -g_offset + g_t * frame.normal / hit.denom;
    g.normal = -g_t * hit.offset / hit.denom;
    return g;
}

PreparedView prepare_view(const Scene& scene, const Camera& camera) {
    PreparedView view;
    const std::size_t n = scene.surfels.size();
    view.surfels.resize(n);
    const Vec3 eye = camera.center();
    const int sh_n = sh_count(scene.sh_degree);
    std::array<double, sh_count(kMaxShDegree)> basis{};
    for (std::size_t i = 0; i < n; ++i) {
        const GaussianSurfel& s = scene.surfels[i];
        ViewSurfel& v = view.surfels[i];
        v.act = activate(s, i);
        v.frame = surfel_frame(s);
        v.center = s.position;
        v.view_offset = s.position - eye;
        v.removed = s.reflection_removed;
        v.feature = s.material;
        v.shared_opacity = scene.variant.shared_opacity;
        if (scene.variant.shared_opacity) {
            v.effective_opacity = v.act.occupancy;
            v.surface_opacity = v.act.occupancy;
        } else {
            v.effective_opacity = v.act.occupancy * v.act.opacity;
            v.surface_opacity = v.act.opacity;
        }
        const double dist = v.view_offset.norm();
        const Vec3 dir = dist > 0 ? Vec3(v.view_offset / dist) : Vec3::UnitZ();
        sh_basis(scene.sh_degree, dir, std::span<double>(basis.data(), sh_n));
        for (int c = 0; c < 3; ++c) {
            double sum = 0.5;
            for (int k = 0; k < sh_n; ++k) sum += s.sh_color[3 * k + c] * basis[k];
            v.color_active[c] = sum > 0.0;
            v.color[c] = std::max(sum, 0.0);
        }
        v.center_depth = camera.to_camera(s.position).z();

        // Screen bounds of the 3-sigma footprint; exact for a convex quad in front of the camera.
        const Vec3 du = kKernelCutoff * v.act.scale[0] * v.frame.tangent_u;
        const Vec3 dv = kKernelCutoff * v.act.scale[1] * v.frame.tangent_v;
        double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
        int behind = 0;
        for (int corner = 0; corner < 4; ++corner) {
            const Vec3 p = s.position + ((corner & 1) ? du : Vec3(-du)) + ((corner & 2) ? dv : Vec3(-dv));
            const Vec3 c = camera.to_camera(p);
            if (c.z() <= 1e-9) {
                ++behind;
                continue;
            }
            const double x = camera.fx * c.x() / c.z() + camera.cx;
            const double y = camera.fy * c.y() / c.z() + camera.cy;
            lo_x = std::min(lo_x, x);
            hi_x = std::max(hi_x, x);
            lo_y = std::min(lo_y, y);
            hi_y = std::max(hi_y, y);
        }
        if (behind == 4) continue; // max < min: culled
        if (behind > 0) {
            v.min_x = 0;
            v.max_x = camera.width - 1;
            v.min_y = 0;
            v.max_y = camera.height - 1;
            continue;
        }
        // Pixel centers sit at +0.5; keep one pixel of margin.
        v.min_x = std::max(0, static_cast<int>(std::floor(lo_x - 0.5)) - 1);
        v.max_x = std::min(camera.width - 1, static_cast<int>(std::ceil(hi_x - 0.5)) + 1);
        v.min_y = std::max(0, static_cast<int>(std::floor(lo_y - 0.5)) - 1);
        v.max_y = std::min(camera.height - 1, static_cast<int>(std::ceil(hi_y - 0.5)) + 1);
    }
    view.order.resize(n);
    std::iota(view.order.begin(), view.order.end(), 0u);
    std::stable_sort(view.order.begin(), view.order.end(), [&](std::uint32_t a, std::uint32_t b) {
        return view.surfels[a].center_depth < view.surfels[b].center_depth;
    });
    return view;
}

FragmentList build_fragments(const PreparedView& view, const Camera& camera, int workers) {
    const int w = camera.width, h = camera.height;
    const int tiles_x = (w + kTileSize - 1) / kTileSize;
    const int tiles_y = (h + kTileSize - 1) / kTileSize;
    std::vector<std::vector<std::uint32_t>> tiles(static_cast<std::size_t>(tiles_x) * tiles_y);
    for (std::uint32_t idx : view.order) {
        const ViewSurfel& s = view.surfels[idx];
        if (s.max_x < s.min_x || s.max_y < s.min_y) continue;
        for (int ty = s.min_y / kTileSize; ty <= s.max_y / kTileSize; ++ty)
            for (int tx = s.min_x / kTileSize; tx <= s.max_x / kTileSize; ++tx)
                tiles[static_cast<std::size_t>(ty) * tiles_x + tx].push_back(idx);
    }

    // Rows are independent; each worker fills its own rows, concatenated in row order.
    std::vector<std::vector<Fragment>> row_frags(h);
    std::vector<std::vector<std::size_t>> row_counts(h);
    parallel_for(static_cast<std::size_t>(h), workers, [&](std::size_t y0, std::size_t y1) {
        for (std::size_t y = y0; y < y1; ++y) {
            auto& out = row_frags[y];
            auto& counts = row_counts[y];
            counts.assign(w, 0);
            const int py = static_cast<int>(y);
            for (int px = 0; px < w; ++px) {
                const Ray ray = camera_ray(camera, px, py);
                const auto& list = tiles[static_cast<std::size_t>(py / kTileSize) * tiles_x + px / kTileSize];
                std::size_t count = 0;
                for (std::uint32_t idx : list) {
                    const ViewSurfel& s = view.surfels[idx];
                    if (px < s.min_x || px > s.max_x || py < s.min_y || py > s.max_y) continue;
                    const auto hit = intersect_kernel(s.center, s.frame, s.act.scale, ray);
                    if (!hit) continue;
                    out.push_back({idx, hit->kernel, hit->depth});
                    ++count;
                }
                counts[px] = count;
            }
        }
    });

    FragmentList list;
    list.width = w;
    list.height = h;
    list.offsets.resize(static_cast<std::size_t>(w) * h + 1);
    std::size_t total = 0;
    for (int y = 0; y < h; ++y) total += row_frags[y].size();
    list.fragments.reserve(total);
    std::size_t pixel = 0;
    for (int y = 0; y < h; ++y) {
        std::size_t offset = list.fragments.size();
        for (int x = 0; x < w; ++x) {
            list.offsets[pixel++] = offset;
            offset += row_counts[y][x];
        }
        list.fragments.insert(list.fragments.end(), row_frags[y].begin(), row_frags[y].end());
    }
    list.offsets[pixel] = list.fragments.size();
    return list;
}

GSums deferred_attributes(const ViewSurfel& s, const Fragment& f, const Ray& ray) {
    GSums a{};
    a[gattr::kProbability] = 1.0;
    const Vec3 n = facing_sign(s.frame.normal, ray) * s.frame.normal;
    for (int k = 0; k < 3; ++k) a[gattr::kNormal + k] = n[k];
    a[gattr::kRoughness] = s.act.roughness;
    for (int k = 0; k < kFeatureDim; ++k) a[gattr::kFeature + k] = s.feature[k];
    for (int k = 0; k < 3; ++k) a[gattr::kScatter + k] = s.act.scatter[k];
    a[gattr::kTransmissivity] = s.act.transmissivity;
    a[gattr::kOpacity] = s.surface_opacity;
    a[gattr::kDepth] = f.depth;
    a[gattr::kRemoved] = s.removed ? 1.0 : 0.0;
    return a;
}

namespace {

VSums volumetric_attributes(const ViewSurfel& s, const Fragment& f) {
    return {s.color[0], s.color[1], s.color[2], 1.0, f.depth};
}

} // namespace

VolumetricImage volumetric_forward(const FragmentList& fragments, const PreparedView& view, int workers) {
    VolumetricImage img;
    img.width = fragments.width;
    img.height = fragments.height;
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    img.sums.assign(n, VSums{});
    img.depth.assign(n, 0.0);
    img.used.assign(n, 0);
    parallel_for(n, workers, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            double transmittance = 1.0;
            VSums sums{};
            std::uint32_t used = 0;
            for (const Fragment& f : fragments.at(p)) {
                const ViewSurfel& s = view.surfels[f.surfel];
                const double e = s.effective_opacity * f.kernel;
                const double w = e * transmittance;
                const VSums a = volumetric_attributes(s, f);
                for (int k = 0; k < vattr::kCount; ++k) sums[k] += w * a[k];
                transmittance *= 1.0 - e;
                ++used;
                if (transmittance < kTerminationTransmittance) break;
            }
            img.sums[p] = sums;
            img.used[p] = used;
            img.depth[p] = sums[vattr::kDepth] / std::max(sums[vattr::kWeight], 1e-8);
        }
    });
    return img;
}

GBuffer deferred_aggregate(const FragmentList& fragments, const PreparedView& view, const Camera& camera,
                           int workers) {
    GBuffer g;
    g.width = fragments.width;
    g.height = fragments.height;
    const std::size_t n = static_cast<std::size_t>(g.width) * g.height;
    g.sums.assign(n, GSums{});
    g.normal.assign(n, Vec3::Zero());
    g.depth.assign(n, 0.0);
    g.used.assign(n, 0);
    parallel_for(n, workers, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            const Ray ray = camera_ray(camera, static_cast<int>(p % g.width), static_cast<int>(p / g.width));
            double transmittance = 1.0;
            GSums sums{};
            std::uint32_t used = 0;
            for (const Fragment& f : fragments.at(p)) {
                const ViewSurfel& s = view.surfels[f.surfel];
                const double q = s.act.occupancy * f.kernel;
                const double prob = q * transmittance;
                const GSums a = deferred_attributes(s, f, ray);
                for (int k = 0; k < gattr::kCount; ++k) sums[k] += prob * a[k];
                transmittance *= 1.0 - q;
                ++used;
                if (transmittance < kTerminationTransmittance) break;
            }
            g.sums[p] = sums;
            g.used[p] = used;
            const Vec3 nsum(sums[gattr::kNormal], sums[gattr::kNormal + 1], sums[gattr::kNormal + 2]);
            const double len = nsum.norm();
            g.normal[p] = (sums[gattr::kProbability] > kShadingMinProbability && len > 0) ? Vec3(nsum / len) : nsum;
            g.depth[p] = sums[gattr::kDepth] / std::max(sums[gattr::kProbability], 1e-8);
        }
    });
    return g;
}

SurfelGradAccum& SurfelGradAccum::operator+=(const SurfelGradAccum& o) {
    center += o.center;
    tangent_u += o.tangent_u;
    tangent_v += o.tangent_v;
    normal += o.normal;
    scale += o.scale;
    occupancy += o.occupancy;
    opacity += o.opacity;
    roughness += o.roughness;
    for (int k = 0; k < kFeatureDim; ++k) feature[k] += o.feature[k];
    scatter += o.scatter;
    transmissivity += o.transmissivity;
    color += o.color;
    touched = touched || o.touched;
    return *this;
}

namespace {

// Reverse pass of one front-to-back blend. Given g = dL/d(sum_i w_i a_i), fills
// dL/de_i and w_i, where e_i is the opacity of fragment i.
template <std::size_t N>
void blend_backward(std::span<const double> opac, std::span<const std::array<double, N>> attrs,
                    const std::array<double, N>& grad, std::span<double> grad_opac, std::span<double> weight) {
    const std::size_t n = opac.size();
    double transmittance = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
        weight[i] = opac[i] * transmittance;
        grad_opac[i] = transmittance;
        transmittance *= 1.0 - opac[i];
    }
    // tail_i = sum_{k>i} e_k h_k prod_{i<j<k} (1 - e_j), accumulated back to front
    double tail = 0.0;
    for (std::size_t r = n; r-- > 0;) {
        double h = 0.0;
        for (std::size_t k = 0; k < N; ++k) h += grad[k] * attrs[r][k];
        grad_opac[r] *= h - tail;
        tail = opac[r] * h + (1.0 - opac[r]) * tail;
    }
}

std::size_t consumed(std::span<const double> opac) {
    double t = 1.0;
    std::size_t used = 0;
    for (double e : opac) {
        t *= 1.0 - e;
        ++used;
        if (t < kTerminationTransmittance) break;
    }
    return used;
}

} // namespace

std::vector<SurfelGradAccum> raster_backward(const FragmentList& fragments, const PreparedView& view,
                                             const Camera& camera, std::span<const VSums> volumetric_grad,
                                             std::span<const GSums> deferred_grad, int workers) {
    const std::size_t n_pix = static_cast<std::size_t>(fragments.width) * fragments.height;
    const bool has_vol = !volumetric_grad.empty();
    const bool has_def = !deferred_grad.empty();
    if ((has_vol && volumetric_grad.size() != n_pix) || (has_def && deferred_grad.size() != n_pix))
        throw DimensionMismatch("raster_backward: upstream gradient size does not match image");

    // One record per fragment, reduced in fragment order so the result does not
    // depend on how pixels were split across workers.
    std::vector<SurfelGradAccum> frag_grads(fragments.fragments.size());
    parallel_for(n_pix, workers, [&](std::size_t p0, std::size_t p1) {
        std::vector<double> vopac, dopac, vgrad_e, vweight, dgrad_q, dweight;
        std::vector<VSums> vattrs;
        std::vector<GSums> gattrs;
        for (std::size_t p = p0; p < p1; ++p) {
            const auto list = fragments.at(p);
            if (list.empty()) continue;
            const Ray ray = camera_ray(camera, static_cast<int>(p % fragments.width),
                                       static_cast<int>(p / fragments.width));
            vopac.resize(list.size());
            dopac.resize(list.size());
            for (std::size_t i = 0; i < list.size(); ++i) {
                const ViewSurfel& s = view.surfels[list[i].surfel];
                vopac[i] = s.effective_opacity * list[i].kernel;
                dopac[i] = s.act.occupancy * list[i].kernel;
            }
            const std::size_t used_v = has_vol ? consumed(vopac) : 0;
            const std::size_t used_d = has_def ? consumed(dopac) : 0;

            vgrad_e.assign(used_v, 0.0);
            vweight.assign(used_v, 0.0);
            if (used_v > 0) {
                vattrs.resize(used_v);
                for (std::size_t i = 0; i < used_v; ++i)
                    vattrs[i] = volumetric_attributes(view.surfels[list[i].surfel], list[i]);
                blend_backward<vattr::kCount>(std::span<const double>(vopac.data(), used_v), vattrs,
                                              volumetric_grad[p], vgrad_e, vweight);
            }
            dgrad_q.assign(used_d, 0.0);
            dweight.assign(used_d, 0.0);
            if (used_d > 0) {
                gattrs.resize(used_d);
                for (std::size_t i = 0; i < used_d; ++i)
                    gattrs[i] = deferred_attributes(view.surfels[list[i].surfel], list[i], ray);
                blend_backward<gattr::kCount>(std::span<const double>(dopac.data(), used_d), gattrs,
                                              deferred_grad[p], dgrad_q, dweight);
            }

            const std::size_t used = std::max(used_v, used_d);
            for (std::size_t i = 0; i < used; ++i) {
                const Fragment& f = list[i];
                const ViewSurfel& s = view.surfels[f.surfel];
                SurfelGradAccum& out = frag_grads[fragments.offsets[p] + i];
                out.touched = true;
                const double sigma = s.act.occupancy;
                const double kern = f.kernel;
                double grad_kernel = 0.0, grad_depth = 0.0;

                if (i < used_v) {
                    const double ge = vgrad_e[i], w = vweight[i];
                    const VSums& gv = volumetric_grad[p];
                    grad_kernel += ge * s.effective_opacity;
                    if (s.shared_opacity) {
                        out.occupancy += ge * kern;
                    } else {
                        out.occupancy += ge * s.act.opacity * kern;
                        out.opacity += ge * sigma * kern;
                    }
                    for (int c = 0; c < 3; ++c) out.color[c] += w * gv[vattr::kColor + c];
                    grad_depth += w * gv[vattr::kDepth];
                }
                if (i < used_d) {
                    const double gq = dgrad_q[i], pd = dweight[i];
                    const GSums& gd = deferred_grad[p];
                    grad_kernel += gq * sigma;
                    out.occupancy += gq * kern;
                    const double sign = facing_sign(s.frame.normal, ray);
                    for (int k = 0; k < 3; ++k) out.normal[k] += sign * pd * gd[gattr::kNormal + k];
                    out.roughness += pd * gd[gattr::kRoughness];
                    for (int k = 0; k < kFeatureDim; ++k) out.feature[k] += pd * gd[gattr::kFeature + k];
                    for (int k = 0; k < 3; ++k) out.scatter[k] += pd * gd[gattr::kScatter + k];
                    out.transmissivity += pd * gd[gattr::kTransmissivity];
                    if (s.shared_opacity)
                        out.occupancy += pd * gd[gattr::kOpacity];
                    else
                        out.opacity += pd * gd[gattr::kOpacity];
                    grad_depth += pd * gd[gattr::kDepth];
                }
                if (grad_kernel != 0.0 || grad_depth != 0.0) {
                    const auto hit = intersect_kernel(s.center, s.frame, s.act.scale, ray);
                    if (!hit) throw ContractViolation("raster_backward: fragment no longer intersects its surfel");
                    const KernelGrad kg =
                        intersect_kernel_backward(s.center, s.frame, s.act.scale, ray, *hit, grad_kernel, grad_depth);
                    out.center += kg.center;
                    out.tangent_u += kg.tangent_u;
                    out.tangent_v += kg.tangent_v;
                    out.normal += kg.normal;
                    out.scale += kg.scale;
                }
            }
        }
    });

    std::vector<SurfelGradAccum> grads(view.surfels.size());
    for (std::size_t i = 0; i < frag_grads.size(); ++i)
        if (frag_grads[i].touched) grads[fragments.fragments[i].surfel] += frag_grads[i];
    return grads;
}

} // namespace rtsplat
