// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/shapes.hpp"

#include <cmath>
#include <fstream>
#include <map>

namespace atlasforge {

namespace {

void finish(Mesh& mesh) {
    normalize_mesh(mesh);
    mesh.compute_face_normals();
    mesh.validate();
}

void add_quad(Mesh& mesh, const Vec3 p[4], const Vec2 t[4]) {
    const int v0 = static_cast<int>(mesh.vertices.size());
    const int t0 = static_cast<int>(mesh.uvs.size());
    for (int k = 0; k < 4; ++k) {
        mesh.vertices.push_back(p[k]);
        mesh.uvs.push_back(t[k]);
    }
    mesh.faces.push_back(Face{Corner{v0, t0}, Corner{v0 + 1, t0 + 1}, Corner{v0 + 2, t0 + 2}});
    mesh.faces.push_back(Face{Corner{v0, t0}, Corner{v0 + 2, t0 + 2}, Corner{v0 + 3, t0 + 3}});
}

struct CubeSide {
    Vec3 normal, tangent_u, tangent_v;
};

// tangent_u x tangent_v = outward normal for every side.
constexpr CubeSide kCubeSides[6] = {
    {{1, 0, 0}, {0, 0, -1}, {0, 1, 0}},
    {{-1, 0, 0}, {0, 0, 1}, {0, 1, 0}},
    {{0, 1, 0}, {1, 0, 0}, {0, 0, -1}},
    {{0, -1, 0}, {1, 0, 0}, {0, 0, 1}},
    {{0, 0, 1}, {1, 0, 0}, {0, 1, 0}},
    {{0, 0, -1}, {-1, 0, 0}, {0, 1, 0}},
};

Mesh make_cube_grid(int n, bool spherify, float margin) {
    Mesh mesh;
    for (int side = 0; side < 6; ++side) {
        const CubeSide& cs = kCubeSides[side];
        const float u_lo = static_cast<float>(side % 3) / 3.0f + margin;
        const float u_hi = static_cast<float>(side % 3 + 1) / 3.0f - margin;
        const float v_lo = static_cast<float>(side / 3) / 2.0f + margin;
        const float v_hi = static_cast<float>(side / 3 + 1) / 2.0f - margin;

        const int base_v = static_cast<int>(mesh.vertices.size());
        const int base_t = static_cast<int>(mesh.uvs.size());
        for (int j = 0; j <= n; ++j)
            for (int i = 0; i <= n; ++i) {
                const float a = static_cast<float>(i) / n;
                const float b = static_cast<float>(j) / n;
                Vec3 p = cs.normal + (2.0f * a - 1.0f) * cs.tangent_u +
                         (2.0f * b - 1.0f) * cs.tangent_v;
                if (spherify) p = normalized(p);
                mesh.vertices.push_back(p);
                mesh.uvs.push_back({u_lo + a * (u_hi - u_lo), v_lo + b * (v_hi - v_lo)});
            }
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const int i00 = j * (n + 1) + i;
                const int i10 = i00 + 1;
                const int i01 = i00 + (n + 1);
                const int i11 = i01 + 1;
                mesh.faces.push_back(Face{Corner{base_v + i00, base_t + i00},
                                          Corner{base_v + i10, base_t + i10},
                                          Corner{base_v + i11, base_t + i11}});
                mesh.faces.push_back(Face{Corner{base_v + i00, base_t + i00},
                                          Corner{base_v + i11, base_t + i11},
                                          Corner{base_v + i01, base_t + i01}});
            }
    }
    finish(mesh);
    return mesh;
}

}  // namespace

Mesh make_unit_quad() {
    Mesh mesh;
    const Vec3 p[4] = {{-1, -1, 0}, {1, -1, 0}, {1, 1, 0}, {-1, 1, 0}};
    const Vec2 t[4] = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    add_quad(mesh, p, t);
    finish(mesh);
    return mesh;
}

Mesh make_rotated_quad(float angle_deg) {
    Mesh mesh = make_unit_quad();
    const float a = deg_to_rad(angle_deg);
    const float c = std::cos(a), s = std::sin(a);
    for (Vec3& v : mesh.vertices) v = {c * v.x + s * v.z, v.y, -s * v.x + c * v.z};
    mesh.compute_face_normals();
    return mesh;
}

Mesh make_card() {
    Mesh mesh;
    const float h = 0.8f, z = 0.05f;
    const Vec3 front[4] = {{-h, -h, z}, {h, -h, z}, {h, h, z}, {-h, h, z}};
    const Vec2 front_uv[4] = {{0.05f, 0.95f}, {0.45f, 0.95f}, {0.45f, 0.05f}, {0.05f, 0.05f}};
    add_quad(mesh, front, front_uv);
    const Vec3 back[4] = {{h, -h, -z}, {-h, -h, -z}, {-h, h, -z}, {h, h, -z}};
    const Vec2 back_uv[4] = {{0.55f, 0.95f}, {0.95f, 0.95f}, {0.95f, 0.05f}, {0.55f, 0.05f}};
    add_quad(mesh, back, back_uv);
    finish(mesh);
    return mesh;
}

Mesh make_cube(float margin) { return make_cube_grid(1, false, margin); }

Mesh make_cubesphere(int n, float margin) { return make_cube_grid(n, true, margin); }

Mesh make_icosphere(int subdivisions) {
    const float t = (1.0f + std::sqrt(5.0f)) / 2.0f;
    std::vector<Vec3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (Vec3& v : verts) v = normalized(v);
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1}, {0, 1, 7}, {0, 7, 10}, {0, 10, 11},
        {1, 5, 9}, {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4}, {3, 4, 2}, {3, 2, 6}, {3, 6, 8}, {3, 8, 9},
        {4, 9, 5}, {2, 4, 11}, {6, 2, 10}, {8, 6, 7}, {9, 8, 1},
    };

    for (int round = 0; round < subdivisions; ++round) {
        std::map<std::pair<int, int>, int> midpoint;
        const auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            const auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            verts.push_back(normalized(0.5f * (verts[a] + verts[b])));
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint[key] = idx;
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& tri : tris) {
            const int ab = mid(tri[0], tri[1]);
            const int bc = mid(tri[1], tri[2]);
            const int ca = mid(tri[2], tri[0]);
            next.push_back({tri[0], ab, ca});
            next.push_back({tri[1], bc, ab});
            next.push_back({tri[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }

    Mesh mesh;
    mesh.vertices = verts;
    mesh.uvs.reserve(verts.size());
    for (const Vec3& v : verts) {
        const float u = 0.5f + std::atan2(v.x, v.z) / (2.0f * static_cast<float>(kPi));
        const float w = 0.5f - std::asin(clamp(v.y, -1.0f, 1.0f)) / static_cast<float>(kPi);
        mesh.uvs.push_back({u, w});
    }
    for (const auto& tri : tris)
        mesh.faces.push_back(
            Face{Corner{tri[0], tri[0]}, Corner{tri[1], tri[1]}, Corner{tri[2], tri[2]}});
    finish(mesh);
    return mesh;
}

void write_obj(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write OBJ file: " + path);
    out << "# atlasforge mesh\n";
    for (const Vec3& v : mesh.vertices) out << "v " << v.x << " " << v.y << " " << v.z << "\n";
    for (const Vec2& t : mesh.uvs) out << "vt " << t.x << " " << t.y << "\n";
    for (const Face& f : mesh.faces) {
        out << "f";
        for (const Corner& c : f) out << " " << c.position + 1 << "/" << c.uv + 1;
        out << "\n";
    }
    if (!out) throw IoError("short write on OBJ file: " + path);
}

}  // namespace atlasforge
