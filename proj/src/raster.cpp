// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/raster.hpp"

#include <algorithm>
#include <limits>

namespace atlasforge {

BilinearFootprint bilinear_footprint(float u, float v, int resolution) {
    const int r = resolution;
    const float x = u * static_cast<float>(r) - 0.5f;
    const float y = v * static_cast<float>(r) - 0.5f;
    const float xf = std::floor(x);
    const float yf = std::floor(y);
    const float fx = x - xf;
    const float fy = y - yf;
    const int x0 = clamp(static_cast<int>(xf), 0, r - 1);
    const int x1 = clamp(static_cast<int>(xf) + 1, 0, r - 1);
    const int y0 = clamp(static_cast<int>(yf), 0, r - 1);
    const int y1 = clamp(static_cast<int>(yf) + 1, 0, r - 1);

    BilinearFootprint fp;
    fp.x = {x0, x1, x0, x1};
    fp.y = {y0, y0, y1, y1};
    fp.weight = {(1.0f - fx) * (1.0f - fy), fx * (1.0f - fy), (1.0f - fx) * fy, fx * fy};
    fp.fx = fx;
    fp.fy = fy;
    return fp;
}

float sample_atlas(const TextureAtlas& atlas, float u, float v, int channel) {
    return sample_footprint(atlas, bilinear_footprint(u, v, atlas.resolution), channel);
}

namespace {

struct ClipVertex {
    Vec4 clip;
    Vec2 screen;
    float inv_w;
    Vec2 uv_over_w;
};

}  // namespace

RenderBuffers rasterize_buffers(const Mesh& mesh, const Viewpoint& v) {
    const CameraTransform cam = view_matrix(v);
    const int size = v.image_size;

    RenderBuffers buffers;
    buffers.width = size;
    buffers.height = size;
    buffers.depth = ImageF(size, size, 1, 0.0f);
    buffers.znormal = ImageF(size, size, 1, 0.0f);
    buffers.face_index = ImageI32(size, size, 1, -1);
    buffers.uv = ImageF(size, size, 2, 0.0f);
    buffers.object_mask = ImageU8(size, size, 1, 0);
    buffers.eye_depth = ImageF(size, size, 1, 0.0f);

    ImageF zbuf(size, size, 1, std::numeric_limits<float>::infinity());
    const std::vector<float> face_nz = face_camera_znormals(mesh, v);

    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const float nz = face_nz[f];
        if (nz <= 0.0f) continue;  // back-face culling

        ClipVertex cv[3];
        bool behind = false;
        for (int k = 0; k < 3; ++k) {
            const Corner& corner = mesh.faces[f][k];
            const Vec3 p = mesh.vertices[corner.position];
            cv[k].clip = cam.view_projection * Vec4{p.x, p.y, p.z, 1.0f};
            if (cv[k].clip.w <= 1e-6f) {
                behind = true;
                break;
            }
            const float inv_w = 1.0f / cv[k].clip.w;
            const float ndc_x = cv[k].clip.x * inv_w;
            const float ndc_y = cv[k].clip.y * inv_w;
            cv[k].screen = {(ndc_x + 1.0f) * 0.5f * static_cast<float>(size),
                            (1.0f - ndc_y) * 0.5f * static_cast<float>(size)};
            cv[k].inv_w = inv_w;
            const Vec2 uv = mesh.uvs[corner.uv];
            cv[k].uv_over_w = {uv.x * inv_w, uv.y * inv_w};
        }
        if (behind) continue;

        const Vec2 a = cv[0].screen, b = cv[1].screen, c = cv[2].screen;
        const float area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
        if (area == 0.0f) continue;

        const int min_x = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
        const int max_x = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
        const int min_y = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
        const int max_y = std::min(size - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));
        if (min_x > max_x || min_y > max_y) continue;

        const float inv_area = 1.0f / area;
        for (int y = min_y; y <= max_y; ++y) {
            const float py = static_cast<float>(y) + 0.5f;
            for (int x = min_x; x <= max_x; ++x) {
                const float px = static_cast<float>(x) + 0.5f;
                const float w0 = ((c.x - b.x) * (py - b.y) - (c.y - b.y) * (px - b.x)) * inv_area;
                const float w1 = ((a.x - c.x) * (py - c.y) - (a.y - c.y) * (px - c.x)) * inv_area;
                const float w2 = 1.0f - w0 - w1;
                if (w0 < 0.0f || w1 < 0.0f || w2 < 0.0f) continue;

                const float inv_w = w0 * cv[0].inv_w + w1 * cv[1].inv_w + w2 * cv[2].inv_w;
                if (inv_w <= 0.0f) continue;
                const float eye_depth = 1.0f / inv_w;
                if (eye_depth >= zbuf.at(x, y)) continue;

                zbuf.at(x, y) = eye_depth;
                buffers.eye_depth.at(x, y) = eye_depth;
                buffers.znormal.at(x, y) = nz;
                buffers.face_index.at(x, y) = static_cast<int32_t>(f);
                buffers.object_mask.at(x, y) = 1;
                const float u_px = (w0 * cv[0].uv_over_w.x + w1 * cv[1].uv_over_w.x +
                                    w2 * cv[2].uv_over_w.x) * eye_depth;
                const float v_px = (w0 * cv[0].uv_over_w.y + w1 * cv[1].uv_over_w.y +
                                    w2 * cv[2].uv_over_w.y) * eye_depth;
                buffers.uv.at(x, y, 0) = u_px;
                buffers.uv.at(x, y, 1) = v_px;
            }
        }
    }

    // Min-max normalize eye depth over the foreground; 1 = nearest. A small
    // floor keeps foreground depth strictly positive so 0 identifies the
    // background exactly.
    float d_min = std::numeric_limits<float>::infinity();
    float d_max = -std::numeric_limits<float>::infinity();
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            if (buffers.foreground(x, y)) {
                d_min = std::min(d_min, buffers.eye_depth.at(x, y));
                d_max = std::max(d_max, buffers.eye_depth.at(x, y));
            }
    constexpr float kDepthFloor = 1e-3f;
    const float range = d_max - d_min;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            if (!buffers.foreground(x, y)) continue;
            if (range < 1e-12f) {
                buffers.depth.at(x, y) = 1.0f;
            } else {
                const float t = (buffers.eye_depth.at(x, y) - d_min) / range;
                buffers.depth.at(x, y) = kDepthFloor + (1.0f - kDepthFloor) * (1.0f - t);
            }
        }

    return buffers;
}

std::vector<float> face_camera_znormals(const Mesh& mesh, const Viewpoint& v) {
    const CameraTransform cam = view_matrix(v);
    std::vector<float> nz(mesh.faces.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f)
        nz[f] = rotate(cam.view, mesh.face_normals[f]).z;
    return nz;
}

ImageF render_textured(const RenderBuffers& buffers, const TextureAtlas& atlas, float background) {
    ImageF image(buffers.width, buffers.height, atlas.channels, background);
    for (int y = 0; y < buffers.height; ++y)
        for (int x = 0; x < buffers.width; ++x) {
            if (!buffers.foreground(x, y)) continue;
            const BilinearFootprint fp =
                bilinear_footprint(buffers.uv.at(x, y, 0), buffers.uv.at(x, y, 1), atlas.resolution);
            for (int c = 0; c < atlas.channels; ++c)
                image.at(x, y, c) = sample_footprint(atlas, fp, c);
        }
    return image;
}

ImageF render_textured(const Mesh& mesh, const Viewpoint& v, const TextureAtlas& atlas,
                       float background) {
    return render_textured(rasterize_buffers(mesh, v), atlas, background);
}

void SplatAccumulator::merge(const SplatAccumulator& other) {
    for (size_t i = 0; i < value.texels.data.size(); ++i)
        value.texels.data[i] += other.value.texels.data[i];
    for (size_t i = 0; i < weight.texels.data.size(); ++i)
        weight.texels.data[i] += other.weight.texels.data[i];
}

void splat_to_atlas(const RenderBuffers& buffers, const ImageF& image, const ImageF& weights,
                    SplatAccumulator& accum) {
    const int channels = accum.value.channels;
    for (int y = 0; y < buffers.height; ++y)
        for (int x = 0; x < buffers.width; ++x) {
            if (!buffers.foreground(x, y)) continue;
            const float w_pixel = weights.at(x, y);
            if (w_pixel == 0.0f) continue;
            const BilinearFootprint fp =
                bilinear_footprint(buffers.uv.at(x, y, 0), buffers.uv.at(x, y, 1),
                                   accum.value.resolution);
            for (int k = 0; k < 4; ++k) {
                const float w = w_pixel * fp.weight[k];
                accum.weight.at(fp.x[k], fp.y[k]) += w;
                for (int c = 0; c < channels; ++c)
                    accum.value.at(fp.x[k], fp.y[k], c) += w * image.at(x, y, c);
            }
        }
}

TextureAtlas normalize_accumulator(const SplatAccumulator& accum, float fallback) {
    TextureAtlas out(accum.value.resolution, accum.value.channels, fallback);
    for (int y = 0; y < out.resolution; ++y)
        for (int x = 0; x < out.resolution; ++x) {
            const float w = accum.weight.at(x, y);
            if (w <= 0.0f) continue;
            for (int c = 0; c < out.channels; ++c)
                out.at(x, y, c) = accum.value.at(x, y, c) / w;
        }
    return out;
}

}  // namespace atlasforge
