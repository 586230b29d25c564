// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/masks.hpp"

#include <algorithm>
#include <stdexcept>

namespace atlasforge {

FaceViewMask binary_face_view_masks(const std::vector<ImageI32>& face_index,
                                    const std::vector<std::vector<float>>& face_znormals) {
    if (face_index.size() != face_znormals.size())
        throw std::invalid_argument("face_index / face_znormals view count mismatch");

    const size_t n_views = face_index.size();
    const size_t n_faces = n_views > 0 ? face_znormals[0].size() : 0;

    // Max z-normal per face over the views in which it owns pixels.
    std::vector<uint8_t> appears(n_faces * n_views, 0);
    for (size_t v = 0; v < n_views; ++v)
        for (int32_t f : face_index[v].data)
            if (f >= 0) appears[static_cast<size_t>(f) * n_views + v] = 1;

    constexpr float kUnseen = -2.0f;  // below any z-normal
    std::vector<float> z_max(n_faces, kUnseen);
    for (size_t f = 0; f < n_faces; ++f)
        for (size_t v = 0; v < n_views; ++v)
            if (appears[f * n_views + v]) z_max[f] = std::max(z_max[f], face_znormals[v][f]);

    FaceViewMask out;
    out.per_view.reserve(n_views);
    out.winning_view.assign(n_faces, -1);
    for (size_t f = 0; f < n_faces; ++f) {
        if (z_max[f] == kUnseen) continue;
        for (size_t v = 0; v < n_views; ++v)
            if (appears[f * n_views + v] && !(face_znormals[v][f] < z_max[f])) {
                out.winning_view[f] = static_cast<int32_t>(v);
                break;
            }
    }

    for (size_t v = 0; v < n_views; ++v) {
        const ImageI32& fidx = face_index[v];
        ImageU8 mask(fidx.width, fidx.height, 1, 0);
        for (size_t i = 0; i < fidx.data.size(); ++i) {
            const int32_t f = fidx.data[i];
            if (f < 0) continue;
            // Strict-less comparison: exact ties stay set in every maximizer.
            mask.data[i] = face_znormals[v][static_cast<size_t>(f)] < z_max[static_cast<size_t>(f)] ? 0 : 1;
        }
        out.per_view.push_back(std::move(mask));
    }
    return out;
}

RegionMask new_region_mask(const RenderBuffers& buffers, const TextureAtlas& coverage,
                           float coverage_threshold, int latent_downscale) {
    RegionMask out;
    out.kind = RegionKind::NewRegion;
    out.mask = ImageU8(buffers.width, buffers.height, 1, 0);
    for (int y = 0; y < buffers.height; ++y)
        for (int x = 0; x < buffers.width; ++x) {
            if (!buffers.foreground(x, y)) continue;
            const float learned =
                sample_atlas(coverage, buffers.uv.at(x, y, 0), buffers.uv.at(x, y, 1), 0);
            out.mask.at(x, y) = learned > coverage_threshold ? 0 : 1;
        }
    if (latent_downscale > 0) out.latent_mask = downsample_mask(out.mask, latent_downscale);
    return out;
}

KeepRefineGenerate keep_refine_generate(const ImageU8& object_mask, const ImageF& current_znormal,
                                        const ImageF& cached_max, const KrgThresholds& thresholds) {
    if (object_mask.width != current_znormal.width || object_mask.height != current_znormal.height ||
        object_mask.width != cached_max.width || object_mask.height != cached_max.height)
        throw std::invalid_argument("keep_refine_generate: shape mismatch");

    KeepRefineGenerate out;
    out.keep.kind = RegionKind::Keep;
    out.refine.kind = RegionKind::Refine;
    out.generate.kind = RegionKind::Generate;
    const int w = object_mask.width, h = object_mask.height;
    out.keep.mask = ImageU8(w, h, 1, 0);
    out.refine.mask = ImageU8(w, h, 1, 0);
    out.generate.mask = ImageU8(w, h, 1, 0);

    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!object_mask.at(x, y)) continue;
            const float cached = cached_max.at(x, y);
            if (cached < thresholds.seen_eps) {
                out.generate.mask.at(x, y) = 1;
            } else if (current_znormal.at(x, y) > cached + thresholds.refine_eps) {
                out.refine.mask.at(x, y) = 1;
            } else {
                out.keep.mask.at(x, y) = 1;
            }
        }
    return out;
}

ImageU8 downsample_mask(const ImageU8& mask, int factor) {
    if (factor <= 0 || mask.width % factor != 0 || mask.height % factor != 0)
        throw std::invalid_argument("mask dimensions not divisible by downscale factor");
    const int w = mask.width / factor, h = mask.height / factor;
    ImageU8 out(w, h, 1, 0);
    const float denom = static_cast<float>(factor) * static_cast<float>(factor);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int count = 0;
            for (int dy = 0; dy < factor; ++dy)
                for (int dx = 0; dx < factor; ++dx)
                    count += mask.at(x * factor + dx, y * factor + dy);
            out.at(x, y) = static_cast<float>(count) / denom > 0.5f ? 1 : 0;
        }
    return out;
}

}  // namespace atlasforge
