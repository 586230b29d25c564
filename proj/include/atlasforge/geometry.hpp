// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"

#include <array>
#include <string>
#include <vector>

namespace atlasforge {

// One face corner: a position index and a UV index into the mesh arrays.
struct Corner {
    int position = -1;
    int uv = -1;
};

using Face = std::array<Corner, 3>;

// Indexed triangle mesh with per-corner UVs. Immutable once built; safe to
// share across concurrent rasterization tasks.
struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<Vec2> uvs;
    std::vector<Face> faces;
    std::vector<Vec3> face_normals;  // unit geometric normals, CCW winding

    void compute_face_normals();
    void validate() const;  // throws MeshError on any broken invariant
};

// Centers the mesh at the origin and scales it so the bounding sphere has
// radius 1. Idempotent within floating-point error.
void normalize_mesh(Mesh& mesh);

// Parses a Wavefront OBJ (v / vt / f records, fan-triangulating polygons)
// and returns a normalized mesh. Faces without UV indices make the mesh
// non-texture-mappable and are an error.
Mesh load_mesh(const std::string& path);

struct Projection {
    float fov_deg = 60.0f;
    float near_plane = 0.1f;
    float far_plane = 10.0f;
};

// One of the seven canonical cameras. id 0 is the front view.
struct Viewpoint {
    int id = 0;
    float azimuth_deg = 0.0f;
    float elevation_deg = 0.0f;
    float radius = 2.5f;
    Projection projection;
    int image_size = 512;
};

struct ViewpointConfig {
    float radius = 2.5f;
    float fov_deg = 60.0f;
    float near_plane = 0.1f;
    float far_plane = 10.0f;
    int image_size = 512;
    // Pose convention of the six-view generator: azimuths starting at 30deg in
    // 60deg steps, elevations alternating -20/+30.
    std::array<float, 6> azimuths_deg = {30, 90, 150, 210, 270, 330};
    std::array<float, 6> elevations_deg = {-20, 30, -20, 30, -20, 30};
};

// v0 = front (azimuth 0, elevation 0) plus the six generator poses.
std::vector<Viewpoint> canonical_viewpoints(const ViewpointConfig& config);

// Camera position in object space for a viewpoint (spherical coordinates
// around the origin, up = +Y, azimuth 0 on +Z).
Vec3 camera_position(const Viewpoint& v);

struct CameraTransform {
    Mat4 view;        // object -> eye
    Mat4 projection;  // eye -> clip
    Mat4 view_projection;
    Vec3 eye;

    // Distance along the viewing direction; near/far are expressed in it.
    float eye_depth(Vec3 object_point) const {
        const Vec3 e = transform_point(view, object_point);
        return -e.z;
    }
};

// Look-at transform aimed at the origin composed with the perspective
// projection. Throws on degenerate elevation (+-90 degrees, up unusable).
CameraTransform view_matrix(const Viewpoint& v);

}  // namespace atlasforge
