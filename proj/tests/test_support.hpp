// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/geometry.hpp"
#include "atlasforge/raster.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>

namespace atlasforge::testutil {

inline std::string temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("atlasforge_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir.string();
}

inline double image_psnr(const ImageF& a, const ImageF& b) {
    double sq = 0.0;
    for (size_t i = 0; i < a.data.size(); ++i) {
        const double d = static_cast<double>(a.data[i]) - b.data[i];
        sq += d * d;
    }
    const double mse = sq / static_cast<double>(a.data.size());
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

// Brute-force visibility oracle: nearest front-facing triangle hit by the
// ray through each pixel center. Independent of the rasterizer's z-buffer.
struct RayHit {
    int face = -1;
    float eye_depth = 0.0f;
};

inline RayHit trace_pixel(const Mesh& mesh, const Viewpoint& v, const CameraTransform& cam,
                          int px, int py) {
    const float g = 1.0f / std::tan(0.5f * deg_to_rad(v.projection.fov_deg));
    const float ndc_x = (2.0f * (px + 0.5f) / v.image_size) - 1.0f;
    const float ndc_y = 1.0f - (2.0f * (py + 0.5f) / v.image_size);
    // Eye-space ray with z = -1 so the ray parameter equals eye depth.
    const Vec3 dir_eye{ndc_x / g, ndc_y / g, -1.0f};
    // view is rigid: rotation transpose maps eye directions back to object space.
    const Mat4& m = cam.view;
    const Vec3 dir{
        m.at(0, 0) * dir_eye.x + m.at(1, 0) * dir_eye.y + m.at(2, 0) * dir_eye.z,
        m.at(0, 1) * dir_eye.x + m.at(1, 1) * dir_eye.y + m.at(2, 1) * dir_eye.z,
        m.at(0, 2) * dir_eye.x + m.at(1, 2) * dir_eye.y + m.at(2, 2) * dir_eye.z,
    };

    RayHit hit;
    float best = std::numeric_limits<float>::infinity();
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        if (rotate(cam.view, mesh.face_normals[f]).z <= 0.0f) continue;  // culled
        const Vec3 p0 = mesh.vertices[mesh.faces[f][0].position];
        const Vec3 e1 = mesh.vertices[mesh.faces[f][1].position] - p0;
        const Vec3 e2 = mesh.vertices[mesh.faces[f][2].position] - p0;
        const Vec3 pvec = cross(dir, e2);
        const float det = dot(e1, pvec);
        if (std::abs(det) < 1e-12f) continue;
        const float inv_det = 1.0f / det;
        const Vec3 tvec = cam.eye - p0;
        const float u = dot(tvec, pvec) * inv_det;
        if (u < 0.0f || u > 1.0f) continue;
        const Vec3 qvec = cross(tvec, e1);
        const float w = dot(dir, qvec) * inv_det;
        if (w < 0.0f || u + w > 1.0f) continue;
        const float t = dot(e2, qvec) * inv_det;
        if (t <= 0.0f || t >= best) continue;
        best = t;
        hit.face = static_cast<int>(f);
        hit.eye_depth = t;
    }
    return hit;
}

// Random triangle soup inside the unit sphere; UVs packed into per-face cells.
inline Mesh random_soup(uint64_t seed, int face_count) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> pos(-0.7f, 0.7f);

    Mesh mesh;
    const int cells = static_cast<int>(std::ceil(std::sqrt(static_cast<float>(face_count))));
    for (int f = 0; f < face_count; ++f) {
        const int v0 = static_cast<int>(mesh.vertices.size());
        for (int k = 0; k < 3; ++k)
            mesh.vertices.push_back({pos(rng), pos(rng), pos(rng)});
        const float cu = static_cast<float>(f % cells) / cells;
        const float cv = static_cast<float>(f / cells) / cells;
        const float cell = 1.0f / cells;
        mesh.uvs.push_back({cu + 0.15f * cell, cv + 0.15f * cell});
        mesh.uvs.push_back({cu + 0.85f * cell, cv + 0.15f * cell});
        mesh.uvs.push_back({cu + 0.5f * cell, cv + 0.85f * cell});
        mesh.faces.push_back(
            Face{Corner{v0, v0}, Corner{v0 + 1, v0 + 1}, Corner{v0 + 2, v0 + 2}});
    }
    normalize_mesh(mesh);
    mesh.compute_face_normals();
    mesh.validate();
    return mesh;
}

}  // namespace atlasforge::testutil
