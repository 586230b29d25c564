// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"
#include "atlasforge/raster.hpp"

#include <vector>

namespace atlasforge {

// Per-view binary masks selecting, for every face, the view(s) where its
// camera-space z-normal is maximal. Ties keep all maximizing views.
struct FaceViewMask {
    std::vector<ImageU8> per_view;      // 1 = pixel belongs to a winning view
    std::vector<int32_t> winning_view;  // per face; lowest view id on ties, -1 if unseen
};

// Single-pass equivalent of the per-face pixel-gathering algorithm: a face's
// pixels stay set exactly in the views achieving its maximum z-normal.
FaceViewMask binary_face_view_masks(const std::vector<ImageI32>& face_index,
                                    const std::vector<std::vector<float>>& face_znormals);

enum class RegionKind { NewRegion, Keep, Refine, Generate };

struct RegionMask {
    RegionKind kind = RegionKind::NewRegion;
    ImageU8 mask;         // image resolution
    ImageU8 latent_mask;  // area-averaged then binarized; empty unless requested
};

// Object mask with the already-learned part of the texture zeroed out:
// mask = object_mask AND NOT(sampled coverage > threshold). Also produces the
// latent-resolution variant when latent_downscale > 0.
RegionMask new_region_mask(const RenderBuffers& buffers, const TextureAtlas& coverage,
                           float coverage_threshold = 0.5f, int latent_downscale = 8);

struct KeepRefineGenerate {
    RegionMask keep;
    RegionMask refine;
    RegionMask generate;
};

struct KrgThresholds {
    float seen_eps = 1e-4f;    // cached_max below this counts as unseen
    float refine_eps = 0.05f;  // improvement needed before re-learning a region
};

// Partitions the foreground exactly: generate = unseen, refine = seen but the
// current view is strictly better, keep = the rest.
KeepRefineGenerate keep_refine_generate(const ImageU8& object_mask, const ImageF& current_znormal,
                                        const ImageF& cached_max, const KrgThresholds& thresholds = {});

// Area-average downsample of a binary mask followed by > 0.5 binarization.
ImageU8 downsample_mask(const ImageU8& mask, int factor);

}  // namespace atlasforge
