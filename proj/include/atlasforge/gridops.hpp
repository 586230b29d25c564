// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"

#include <array>
#include <vector>

namespace atlasforge {

// 2x3 tiling of the six non-front views, row-major.
struct GridLayout {
    static constexpr int rows = 2;
    static constexpr int cols = 3;
    int tile_size = 320;
    std::array<int, 6> order = {1, 2, 3, 4, 5, 6};  // view id per slot

    int grid_width() const { return cols * tile_size; }
    int grid_height() const { return rows * tile_size; }
};

ImageF assemble_grid(const std::vector<ImageF>& tiles, const GridLayout& layout);
std::vector<ImageF> split_grid(const ImageF& grid, const GridLayout& layout);

ImageU8 assemble_grid(const std::vector<ImageU8>& tiles, const GridLayout& layout);
std::vector<ImageU8> split_grid(const ImageU8& grid, const GridLayout& layout);

// Forward-process signal coefficients: alpha_bar[0] = 1, strictly decreasing,
// positive. Cosine shape.
struct NoiseSchedule {
    int t_steps = 36;
    std::vector<float> alpha_bar;  // size t_steps + 1

    static NoiseSchedule cosine(int t_steps);
};

struct LatentGrid {
    ImageF data;       // h x w x c
    int t = 0;         // current timestep, in [0, T_steps]
    ImageU8 mask;      // optional latent-resolution blending mask (empty if unset)
};

// Stand-in latent codec: encode = area-average downsample (+ zero-pad to
// latent_channels), decode = bilinear upsample of the image channels.
struct LatentCodec {
    int downscale = 8;
    int latent_channels = 4;
    int image_channels = 3;

    LatentGrid encode(const ImageF& image) const;
    ImageF decode(const LatentGrid& latent) const;
};

// z_t = sqrt(alpha_bar[t]) * z0 + sqrt(1 - alpha_bar[t]) * noise.
LatentGrid add_noise(const LatentGrid& z0, int t, const ImageF& noise,
                     const NoiseSchedule& schedule);

// Fills a latent-shaped field with standard normal samples.
ImageF gaussian_field(int width, int height, int channels, Rng& rng);

// z * mask + z_gt * (1 - mask), elementwise over latent cells.
LatentGrid blend_latents(const LatentGrid& z, const LatentGrid& z_gt_noised, const ImageU8& mask);

}  // namespace atlasforge
