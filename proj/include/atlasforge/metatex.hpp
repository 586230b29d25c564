// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"
#include "atlasforge/raster.hpp"

#include <vector>

namespace atlasforge {

// Single-channel atlas holding the best (maximum) camera-space z-normal each
// surface point achieves over all viewpoints.
struct MetaTexture {
    TextureAtlas atlas;  // C = 1, values in [0,1]
};

struct MetaTrainReport {
    double final_loss = 0.0;       // hinge + regularizer at the last iteration
    double mean_violation = 0.0;   // hinge sum / foreground pixel count
    int iterations = 0;
    bool converged = false;
};

struct MetaOptConfig {
    float step = 1e-2f;            // Adam learning rate
    int max_iterations = 400;
    double tol_mean_violation = 1e-3;
    float l2_weight = 1e-4f;       // pull-down keeping N tight against the max
    // Learning rate decays exponentially over the final phase so the atlas
    // settles onto the hinge boundary instead of oscillating around it.
    float decay_start_fraction = 0.5f;
    float decay_rate = 0.985f;
};

// Trains the meta-texture by descending
//   L = sum_i sum_p ReLU(n_{i,p} - N(uv_p)) + l2_weight * |N|^2
// from a zero initialization. Non-convergence is reported, not fatal.
MetaTexture learn_max_znormals(const Mesh& mesh, const std::vector<Viewpoint>& views,
                               int resolution, const MetaOptConfig& opt = {},
                               MetaTrainReport* report = nullptr);

// Convenience overload when buffers were already rasterized.
MetaTexture learn_max_znormals(const std::vector<RenderBuffers>& buffers,
                               const std::vector<std::vector<float>>& face_znormals,
                               int resolution, const MetaOptConfig& opt = {},
                               MetaTrainReport* report = nullptr);

struct OracleResult {
    MetaTexture meta;
    ImageU8 covered;            // texels claimed by at least one visible face
    ImageI32 owner_face;        // face whose UV triangle covers the texel center, -1 if none
    int overlap_warnings = 0;   // texels claimed by more than one face
};

// Direct fixed-point computation without gradient descent: UV-space
// rasterization of every face, visibility resolved against each view's
// face_index buffer, texel value = max z-normal over qualifying views.
OracleResult oracle_max_znormals(const Mesh& mesh, const std::vector<Viewpoint>& views,
                                 int resolution);

// Hinge loss of a meta-texture evaluated at texel granularity: for every
// covered texel and every view in which its owning face is visible,
// ReLU(n - N). The oracle is the pointwise max, so its value here is 0.
double texel_hinge_loss(const MetaTexture& meta, const OracleResult& oracle,
                        const std::vector<std::vector<float>>& face_znormals,
                        const std::vector<std::vector<uint8_t>>& face_visible);

// Per-face visibility: face f visible in view v iff it owns at least one
// pixel of that view's face_index buffer.
std::vector<std::vector<uint8_t>> face_visibility(const std::vector<RenderBuffers>& buffers,
                                                  size_t face_count);

// Eq-style per-pixel view weights W = exp(-alpha * |N(uv) - n|), 0 on
// background.
ImageF view_weights(const MetaTexture& meta, const RenderBuffers& buffers, float alpha);

// Pixel-space hinge diagnostics for a trained meta-texture.
struct HingeStats {
    double total_violation = 0.0;
    double mean_violation = 0.0;  // over foreground pixels of all views
    size_t foreground_pixels = 0;
};
HingeStats hinge_stats(const MetaTexture& meta, const std::vector<RenderBuffers>& buffers);

}  // namespace atlasforge
