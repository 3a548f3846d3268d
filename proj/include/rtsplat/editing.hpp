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
#include "rtsplat/image.hpp"
#include "rtsplat/scene.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rtsplat {

enum class SelectionKind { All, Mask, Box };

struct Selection {
    SelectionKind kind = SelectionKind::All;
    Image mask;            ///< Mask: 1 channel, pixels >= 0.5 are selected
    Camera camera;         ///< Mask: view the mask was drawn in
    Vec3 box_min = Vec3::Zero(), box_max = Vec3::Zero();
};

struct EditSpec {
    Selection selection;
    std::optional<double> roughness_scale;
    std::optional<double> set_tau;
    bool remove_reflection = false;
    std::optional<Vec3> tint; ///< multiplier on the activated scatter color
    std::optional<double> set_opacity;

    bool empty() const {
        return !roughness_scale && !set_tau && !remove_reflection && !tint && !set_opacity;
    }
};

/// Surfels contributing first-hit probability p > 0.1 to any masked pixel.
std::vector<std::size_t> select_by_mask(const Scene& scene, const Camera& camera, const Image& mask,
                                        int workers = 0);

/// Indices of the surfels chosen by `selection`, ascending.
std::vector<std::size_t> select(const Scene& scene, const Selection& selection, int workers = 0);

struct EditResult {
    std::vector<std::size_t> selected;
    std::vector<std::string> warnings; ///< one per clamped target value
};

/// Applies the edit to the selected surfels. Attribute targets are written as
/// inverse activations of the clamped target; reflection removal only sets the
/// composition-time flag. Throws InvalidParameter on an empty selection.
EditResult apply_edit(Scene& scene, const EditSpec& spec, int workers = 0);

/// Clears every reflection-removal flag (the non-destructive part of an edit).
void clear_reflection_removal(Scene& scene);

/// Parses the operation and box/all selection keys of an edit file; mask
/// selections need the caller to load the mask and camera.
EditSpec edit_spec_from_config(const Config& cfg);

} // namespace rtsplat
