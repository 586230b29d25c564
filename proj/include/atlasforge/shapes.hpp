// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/geometry.hpp"

#include <string>

namespace atlasforge {

// Procedural meshes used by the demo fixtures, the CLI and the test suites.
// All returned meshes are normalized, carry per-corner UVs and pass
// Mesh::validate().

// Single quad facing +Z, UVs spanning [0,1]^2 (2 triangles).
Mesh make_unit_quad();

// Quad facing +Z rotated by `angle_deg` about the Y axis.
Mesh make_rotated_quad(float angle_deg);

// Thin two-sided card: front face (+Z) maps to the left half of the atlas,
// back face (-Z) to the right half.
Mesh make_card();

// Axis-aligned cube, each of the 6 sides its own UV island in a 3x2 layout
// inset by `margin` (UV units).
Mesh make_cube(float margin = 0.03f);

// Cube-sphere: each cube side subdivided n x n and projected onto the unit
// sphere; same 3x2 island layout. 6 * n^2 * 2 faces.
Mesh make_cubesphere(int n, float margin = 0.03f);

// Icosphere with `subdivisions` rounds of midpoint subdivision and
// equirectangular per-vertex UVs. 20 * 4^subdivisions faces.
Mesh make_icosphere(int subdivisions);

// Writes positions, UVs and v/vt faces. Round-trips through load_mesh.
void write_obj(const Mesh& mesh, const std::string& path);

}  // namespace atlasforge
