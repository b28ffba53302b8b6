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

#include <cstdint>
#include <vector>

#include "crackmono/geometry.hpp"

namespace crackmono::detail {

std::uint64_t edge_key(int a, int b);

/// Once-used triangle edges, oriented as in their triangle, loop by loop.
std::vector<Edge> boundary_loops(const std::vector<Triangle>& triangles);

std::vector<std::vector<int>> vertex_triangles(const Mesh& mesh);

bool point_in_body(const Mesh& mesh, const Vec2& p);

double distance_to_boundary(const Mesh& mesh, const Vec2& p);

} // namespace crackmono::detail
