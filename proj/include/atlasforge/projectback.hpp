// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"
#include "atlasforge/masks.hpp"
#include "atlasforge/raster.hpp"

#include <optional>
#include <vector>

namespace atlasforge {

// One supervision view: camera, target image, and per-pixel weights
// (non-negative, zero on background).
struct ViewTarget {
    Viewpoint viewpoint;
    ImageF target;
    ImageF pixel_weights;
};

struct LossConfig {
    float data_weight = 1.0f;
    float tv_weight = 1e-4f;  // set to 0 to reproduce unregularized seams
};

struct DescentConfig {
    float step = 1e-2f;  // Adam learning rate
    int iterations = 200;
    // Exponential step decay over the final phase; settles the Adam tail.
    float decay_start_fraction = 0.5f;
    float decay_rate = 0.98f;
    int threads = 0;  // 0 = one per view up to hardware concurrency
};

struct ProjectBackProblem {
    const Mesh* mesh = nullptr;
    std::vector<ViewTarget> views;
    int atlas_resolution = 1024;
    LossConfig loss;
    DescentConfig optimizer;
    std::optional<TextureAtlas> initial_atlas;  // default: mid-gray 0.5
    std::optional<ImageU8> frozen_texels;       // texels excluded from updates
};

struct ProjectBackReport {
    double final_loss = 0.0;
    std::vector<double> per_view_weighted_rmse;
    double covered_texel_fraction = 0.0;  // texels with any splat weight
    int iterations_used = 0;
    bool diverged = false;  // loss rose 10 consecutive iterations; run aborted
};

struct ProjectBackResult {
    TextureAtlas atlas;
    TextureAtlas coverage;     // accumulated splat weight per texel, C = 1
    // Mean pixel weight over the pixels supervising each texel (0 where
    // unsupervised). Unlike raw accumulated weight this is independent of the
    // pixel-per-texel density, so a fixed threshold identifies the "learned"
    // part of the atlas at any resolution pairing.
    TextureAtlas mean_weight;
    ProjectBackReport report;
};

// Weighted-L2 inverse rendering:
//   min_T  sum_i sum_p W_{i,p} |render_i(T)_p - x_{i,p}|^2 + tv_weight * TV(T)
// by Adam descent using the sample/splat adjoint pair. Texels with zero
// coverage keep their initial value bit-exactly; the TV term only couples
// covered texel pairs. Throws on all-zero weights ("no supervision").
ProjectBackResult project_back(const ProjectBackProblem& problem);

// Loss of the problem at a given atlas, accumulated in double. This is the
// function the analytic gradient differentiates; tests compare it against
// finite differences.
double project_back_loss(const ProjectBackProblem& problem,
                         const std::vector<RenderBuffers>& buffers, const TextureAtlas& atlas,
                         const ImageU8& covered);

// TEXTure-style baseline: one view at a time, each initialized from the
// previous result, with supervision gated by the keep/refine/generate policy.
struct SequentialOptions {
    KrgThresholds thresholds;
    float cache_coverage_threshold = 0.5f;
};
ProjectBackResult sequential_project_back(const ProjectBackProblem& problem,
                                          const SequentialOptions& options = {});

// Peak signal-to-noise ratio between two atlases over a texel subset.
double atlas_psnr(const TextureAtlas& a, const TextureAtlas& b, const TextureAtlas& coverage,
                  float coverage_threshold);

}  // namespace atlasforge
