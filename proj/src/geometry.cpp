// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/geometry.hpp"

#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace atlasforge {

void Mesh::compute_face_normals() {
    face_normals.resize(faces.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        const Vec3 p0 = vertices[faces[f][0].position];
        const Vec3 p1 = vertices[faces[f][1].position];
        const Vec3 p2 = vertices[faces[f][2].position];
        face_normals[f] = normalized(cross(p1 - p0, p2 - p0));
    }
}

void Mesh::validate() const {
    const int nv = static_cast<int>(vertices.size());
    const int nt = static_cast<int>(uvs.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        for (const Corner& c : faces[f]) {
            if (c.position < 0 || c.position >= nv)
                throw MeshError("face " + std::to_string(f) + " has out-of-range vertex index");
            if (c.uv < 0 || c.uv >= nt)
                throw MeshError("mesh not texture-mappable");
        }
    }
    if (face_normals.size() != faces.size())
        throw MeshError("face normals not computed");
    for (size_t f = 0; f < faces.size(); ++f) {
        const float len = length(face_normals[f]);
        if (std::abs(len - 1.0f) > 1e-6f)
            throw MeshError("face " + std::to_string(f) + " normal is not unit length");
    }
}

void normalize_mesh(Mesh& mesh) {
    if (mesh.vertices.empty()) return;
    Vec3 lo = mesh.vertices[0], hi = mesh.vertices[0];
    for (const Vec3& v : mesh.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    const Vec3 center = 0.5f * (lo + hi);
    float radius = 0.0f;
    for (const Vec3& v : mesh.vertices) radius = std::max(radius, length(v - center));
    const float scale = radius > 0.0f ? 1.0f / radius : 1.0f;
    for (Vec3& v : mesh.vertices) v = scale * (v - center);
}

namespace {

// Resolves an OBJ index (1-based, or negative for relative) to 0-based.
int resolve_obj_index(long raw, size_t count) {
    if (raw > 0) return static_cast<int>(raw - 1);
    if (raw < 0) return static_cast<int>(static_cast<long>(count) + raw);
    return -1;
}

struct ObjCorner {
    int v = -1;
    int vt = -1;
};

bool parse_obj_corner(const std::string& token, size_t nv, size_t nt, ObjCorner& out) {
    // Forms: v | v/vt | v/vt/vn | v//vn
    const char* s = token.c_str();
    char* end = nullptr;
    const long vi = std::strtol(s, &end, 10);
    if (end == s) return false;
    out.v = resolve_obj_index(vi, nv);
    out.vt = -1;
    if (*end == '/') {
        s = end + 1;
        if (*s != '/' && *s != '\0') {
            const long ti = std::strtol(s, &end, 10);
            if (end == s) return false;
            out.vt = resolve_obj_index(ti, nt);
        }
        // normal index, if present, is ignored
    }
    return true;
}

}  // namespace

Mesh load_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open mesh file: " + path);

    Mesh mesh;
    std::string line;
    int line_no = 0;
    bool saw_face_without_uv = false;

    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;

        if (tag == "v") {
            Vec3 p;
            if (!(ls >> p.x >> p.y >> p.z))
                throw IoError(path + ":" + std::to_string(line_no) + ": malformed vertex");
            mesh.vertices.push_back(p);
        } else if (tag == "vt") {
            Vec2 t;
            if (!(ls >> t.x >> t.y))
                throw IoError(path + ":" + std::to_string(line_no) + ": malformed texture coordinate");
            mesh.uvs.push_back(t);
        } else if (tag == "f") {
            std::vector<ObjCorner> corners;
            std::string token;
            while (ls >> token) {
                ObjCorner c;
                if (!parse_obj_corner(token, mesh.vertices.size(), mesh.uvs.size(), c))
                    throw IoError(path + ":" + std::to_string(line_no) + ": malformed face corner '" + token + "'");
                corners.push_back(c);
            }
            if (corners.size() < 3)
                throw IoError(path + ":" + std::to_string(line_no) + ": face with fewer than 3 corners");
            for (const ObjCorner& c : corners) {
                if (c.v < 0 || c.v >= static_cast<int>(mesh.vertices.size()))
                    throw IoError(path + ":" + std::to_string(line_no) + ": vertex index out of range");
                if (c.vt < 0) saw_face_without_uv = true;
                else if (c.vt >= static_cast<int>(mesh.uvs.size()))
                    throw IoError(path + ":" + std::to_string(line_no) + ": texture index out of range");
            }
            // Fan triangulation for polygons.
            for (size_t k = 1; k + 1 < corners.size(); ++k) {
                Face face;
                face[0] = {corners[0].v, corners[0].vt};
                face[1] = {corners[k].v, corners[k].vt};
                face[2] = {corners[k + 1].v, corners[k + 1].vt};
                mesh.faces.push_back(face);
            }
        }
        // other records (vn, o, g, s, usemtl, mtllib) are ignored
    }

    if (mesh.faces.empty()) throw MeshError("mesh has no faces: " + path);
    if (saw_face_without_uv || mesh.uvs.empty()) throw MeshError("mesh not texture-mappable");

    normalize_mesh(mesh);

    // Degenerate (zero-area) triangles cover no pixels; drop them so every
    // remaining face carries a unit normal.
    Mesh out;
    out.vertices = std::move(mesh.vertices);
    out.uvs = std::move(mesh.uvs);
    for (const Face& face : mesh.faces) {
        const Vec3 n = cross(out.vertices[face[1].position] - out.vertices[face[0].position],
                             out.vertices[face[2].position] - out.vertices[face[0].position]);
        if (length(n) > 1e-12f) out.faces.push_back(face);
    }
    if (out.faces.empty()) throw MeshError("mesh has only degenerate faces: " + path);
    out.compute_face_normals();
    out.validate();
    return out;
}

std::vector<Viewpoint> canonical_viewpoints(const ViewpointConfig& config) {
    std::vector<Viewpoint> views;
    views.reserve(7);
    const Projection proj{config.fov_deg, config.near_plane, config.far_plane};
    views.push_back(Viewpoint{0, 0.0f, 0.0f, config.radius, proj, config.image_size});
    for (int i = 0; i < 6; ++i) {
        views.push_back(Viewpoint{i + 1, config.azimuths_deg[i], config.elevations_deg[i],
                                  config.radius, proj, config.image_size});
    }
    return views;
}

Vec3 camera_position(const Viewpoint& v) {
    const float az = deg_to_rad(v.azimuth_deg);
    const float el = deg_to_rad(v.elevation_deg);
    return {v.radius * std::sin(az) * std::cos(el), v.radius * std::sin(el),
            v.radius * std::cos(az) * std::cos(el)};
}

CameraTransform view_matrix(const Viewpoint& v) {
    if (v.image_size <= 0) throw std::invalid_argument("image_size must be positive");
    if (!(v.projection.near_plane < v.projection.far_plane))
        throw std::invalid_argument("near plane must be in front of far plane");
    if (!(v.projection.fov_deg > 0.0f && v.projection.fov_deg < 180.0f))
        throw std::invalid_argument("fov must be in (0, 180) degrees");
    if (std::abs(std::remainder(v.elevation_deg, 180.0f)) == 90.0f)
        throw std::invalid_argument("degenerate up vector at elevation +-90 degrees");

    const Vec3 eye = camera_position(v);
    const Vec3 forward = normalized(-eye);  // aimed at the origin
    const Vec3 world_up{0, 1, 0};
    const Vec3 side = normalized(cross(forward, world_up));
    if (length(cross(forward, world_up)) < 1e-6f)
        throw std::invalid_argument("degenerate up vector at elevation +-90 degrees");
    const Vec3 up = cross(side, forward);

    Mat4 view = Mat4::identity();
    view.at(0, 0) = side.x;    view.at(0, 1) = side.y;    view.at(0, 2) = side.z;
    view.at(1, 0) = up.x;      view.at(1, 1) = up.y;      view.at(1, 2) = up.z;
    view.at(2, 0) = -forward.x; view.at(2, 1) = -forward.y; view.at(2, 2) = -forward.z;
    view.at(0, 3) = -dot(side, eye);
    view.at(1, 3) = -dot(up, eye);
    view.at(2, 3) = dot(forward, eye);

    const float n = v.projection.near_plane;
    const float f = v.projection.far_plane;
    const float g = 1.0f / std::tan(0.5f * deg_to_rad(v.projection.fov_deg));
    Mat4 proj;  // square aspect: render targets are image_size x image_size
    proj.at(0, 0) = g;
    proj.at(1, 1) = g;
    proj.at(2, 2) = (f + n) / (n - f);
    proj.at(2, 3) = 2.0f * f * n / (n - f);
    proj.at(3, 2) = -1.0f;

    CameraTransform out;
    out.view = view;
    out.projection = proj;
    out.view_projection = proj * view;
    out.eye = eye;
    return out;
}

}  // namespace atlasforge
