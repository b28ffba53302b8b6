// SPDX-License-Identifier: Apache-2.0
//
// Copyright 2026 The crackmono Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>

#include "crackmono/fem.hpp"
#include "crackmono/geometry.hpp"
#include "crackmono/ndmap.hpp"

namespace testing {

using namespace crackmono;

// Unit square at h = 1/16 with optional lattice-aligned cracks.
inline EmbedResult small_square(std::vector<std::pair<std::vector<Vec2>, CrackKind>> cracks = {}) {
    EmbedResult e{build_rect_mesh(1.0, 1.0, 1.0 / 16.0), {}};
    for (const auto& [pts, kind] : cracks) e = embed_crack(e.mesh, pts, kind, e.cracks);
    return e;
}

inline std::shared_ptr<const PixelGrid> small_grid(const Mesh& mesh) {
    return std::make_shared<const PixelGrid>(build_pixel_grid(mesh, Vec2(0.0, 0.0), 8, 8, 0.125));
}

inline std::shared_ptr<const DofMap> dofs(const Mesh& mesh, const Configuration& c) {
    return std::make_shared<const DofMap>(build_dofmap(mesh, c));
}

} // namespace testing
