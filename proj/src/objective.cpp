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

#include "rtsplat/objective.hpp"

#include "rtsplat/errors.hpp"

namespace rtsplat {

ObjectiveResult evaluate_objective(const Scene& scene, const Camera& camera, const ViewTarget& target,
                                   const LossWeights& weights, const RenderSettings& settings, bool with_grad) {
    weights.validate();
    if (target.image.width != camera.width || target.image.height != camera.height)
        throw DimensionMismatch("objective: target image does not match camera size");
    ObjectiveResult res;
    res.outputs = render(scene, camera, settings);
    const RenderOutputs& out = res.outputs;

    const LossTerm img = image_loss(out.color, target.image, weights.lambda_dssim);
    res.components.image = img.value;

    NormalTerm nrm;
    if (weights.lambda_normal > 0) {
        nrm = normal_consistency(out, camera);
        res.components.normal = nrm.value;
    }
    LossTerm msk;
    const bool use_mask = weights.lambda_mask > 0 && !target.mask.data.empty();
    if (use_mask) {
        Image opacity(out.width, out.height, 1);
        for (std::size_t p = 0; p < opacity.pixels(); ++p) opacity.at(p, 0) = out.gbuffer.opacity(p);
        msk = mask_loss(opacity, target.mask, weights.bce_epsilon);
        res.components.mask = msk.value;
    }
    res.total = total_loss(res.components, weights);
    if (!with_grad) return res;

    PixelGrads up;
    up.color = img.grad;
    if (use_mask) {
        up.opacity = msk.grad;
        for (double& v : up.opacity.data) v *= weights.lambda_mask;
    }
    if (weights.lambda_normal > 0) {
        up.normal = nrm.grad_normal;
        up.surface_depth = nrm.grad_depth;
        for (double& v : up.normal.data) v *= weights.lambda_normal;
        for (double& v : up.surface_depth.data) v *= weights.lambda_normal;
    }
    res.grads = backward(scene, camera, out, up, settings);
    return res;
}

} // namespace rtsplat
