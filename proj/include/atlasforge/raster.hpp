// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"
#include "atlasforge/geometry.hpp"

#include <array>
#include <vector>

namespace atlasforge {

// Per-view rasterization products.
//
// depth: [0,1], 0 on background, 1 at the nearest foreground pixel
//        (eye-space depth, min-max normalized over the foreground).
// znormal: z-component of the covering face's geometric normal in camera
//        space; back-facing fragments are culled so foreground values are > 0.
// face_index: covering face id, -1 on background.
// uv: perspective-correct interpolated texture coordinates (2 channels).
// object_mask: 1 on foreground.
// eye_depth: raw eye-space depth before normalization, 0 on background.
struct RenderBuffers {
    int width = 0;
    int height = 0;
    ImageF depth;
    ImageF znormal;
    ImageI32 face_index;
    ImageF uv;
    ImageU8 object_mask;
    ImageF eye_depth;

    bool foreground(int x, int y) const { return object_mask.at(x, y) != 0; }
};

// Learnable texel grid. Color atlases use 3 channels, meta-textures 1.
// Optimization operates unclamped; values are clamped to [0,1] on export only.
struct TextureAtlas {
    int resolution = 0;
    int channels = 0;
    ImageF texels;

    TextureAtlas() = default;
    TextureAtlas(int resolution_, int channels_, float fill = 0.0f)
        : resolution(resolution_), channels(channels_),
          texels(resolution_, resolution_, channels_, fill) {}

    float& at(int x, int y, int c = 0) { return texels.at(x, y, c); }
    float at(int x, int y, int c = 0) const { return texels.at(x, y, c); }
};

// The 4-tap footprint shared by bilinear sampling and its adjoint splat.
// Texel centers sit at ((i + 0.5)/R, (j + 0.5)/R); coordinates clamp to the
// atlas edge. Taps are ordered (x0,y0), (x1,y0), (x0,y1), (x1,y1).
struct BilinearFootprint {
    std::array<int, 4> x;
    std::array<int, 4> y;
    std::array<float, 4> weight;  // product weights, used by the splat
    float fx = 0.0f;              // fractional offsets, used by sampling
    float fy = 0.0f;
};

BilinearFootprint bilinear_footprint(float u, float v, int resolution);

// Factored lerp evaluation: exact for constant neighborhoods.
inline float sample_footprint(const TextureAtlas& atlas, const BilinearFootprint& fp,
                              int channel) {
    const float t00 = atlas.at(fp.x[0], fp.y[0], channel);
    const float t10 = atlas.at(fp.x[1], fp.y[1], channel);
    const float t01 = atlas.at(fp.x[2], fp.y[2], channel);
    const float t11 = atlas.at(fp.x[3], fp.y[3], channel);
    const float top = t00 + fp.fx * (t10 - t00);
    const float bot = t01 + fp.fx * (t11 - t01);
    return top + fp.fy * (bot - top);
}

// Bilinear atlas sample for one channel.
float sample_atlas(const TextureAtlas& atlas, float u, float v, int channel);

// Z-buffered rasterization of all per-view buffers.
RenderBuffers rasterize_buffers(const Mesh& mesh, const Viewpoint& v);

// Camera-space z-component of each face's geometric normal for a view
// (positive = facing the camera). Indexed by face id.
std::vector<float> face_camera_znormals(const Mesh& mesh, const Viewpoint& v);

// Forward texture-mapped rendering: bilinear atlas sample per foreground
// pixel, constant background elsewhere.
ImageF render_textured(const RenderBuffers& buffers, const TextureAtlas& atlas,
                       float background = 0.5f);
ImageF render_textured(const Mesh& mesh, const Viewpoint& v, const TextureAtlas& atlas,
                       float background = 0.5f);

// Accumulator for the adjoint of bilinear sampling: a value plane per channel
// plus a scalar weight plane.
struct SplatAccumulator {
    TextureAtlas value;
    TextureAtlas weight;

    SplatAccumulator() = default;
    SplatAccumulator(int resolution, int channels)
        : value(resolution, channels), weight(resolution, 1) {}

    void merge(const SplatAccumulator& other);
};

// Distributes weight*color of every foreground pixel into the 4 bilinear
// neighbor texels, and weight into the weight plane. Zero-weight pixels are
// skipped. Accumulation order is the fixed row-major pixel order.
void splat_to_atlas(const RenderBuffers& buffers, const ImageF& image, const ImageF& weights,
                    SplatAccumulator& accum);

// accum.value / accum.weight where weight > 0, fallback elsewhere.
TextureAtlas normalize_accumulator(const SplatAccumulator& accum, float fallback = 0.5f);

}  // namespace atlasforge
