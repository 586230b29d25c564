// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/gridops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace atlasforge {

namespace {

template <typename T>
Image<T> assemble_grid_impl(const std::vector<Image<T>>& tiles, const GridLayout& layout) {
    if (tiles.size() != 6) throw std::invalid_argument("grid assembly expects 6 tiles");
    const int ts = layout.tile_size;
    for (size_t i = 0; i < tiles.size(); ++i) {
        if (tiles[i].width != ts || tiles[i].height != ts)
            throw std::invalid_argument("tile " + std::to_string(i) + " is " +
                                        std::to_string(tiles[i].width) + "x" +
                                        std::to_string(tiles[i].height) + ", expected " +
                                        std::to_string(ts) + "x" + std::to_string(ts));
        if (tiles[i].channels != tiles[0].channels)
            throw std::invalid_argument("tile " + std::to_string(i) + " channel count differs");
    }

    Image<T> grid(layout.grid_width(), layout.grid_height(), tiles[0].channels);
    for (int slot = 0; slot < 6; ++slot) {
        const int row = slot / GridLayout::cols;
        const int col = slot % GridLayout::cols;
        const Image<T>& tile = tiles[static_cast<size_t>(slot)];
        for (int y = 0; y < ts; ++y)
            for (int x = 0; x < ts; ++x)
                for (int c = 0; c < tile.channels; ++c)
                    grid.at(col * ts + x, row * ts + y, c) = tile.at(x, y, c);
    }
    return grid;
}

template <typename T>
std::vector<Image<T>> split_grid_impl(const Image<T>& grid, const GridLayout& layout) {
    const int ts = layout.tile_size;
    if (grid.width != layout.grid_width() || grid.height != layout.grid_height())
        throw std::invalid_argument("grid is " + std::to_string(grid.width) + "x" +
                                    std::to_string(grid.height) + ", not divisible into " +
                                    std::to_string(GridLayout::rows) + "x" +
                                    std::to_string(GridLayout::cols) + " tiles of " +
                                    std::to_string(ts));

    std::vector<Image<T>> tiles;
    tiles.reserve(6);
    for (int slot = 0; slot < 6; ++slot) {
        const int row = slot / GridLayout::cols;
        const int col = slot % GridLayout::cols;
        Image<T> tile(ts, ts, grid.channels);
        for (int y = 0; y < ts; ++y)
            for (int x = 0; x < ts; ++x)
                for (int c = 0; c < grid.channels; ++c)
                    tile.at(x, y, c) = grid.at(col * ts + x, row * ts + y, c);
        tiles.push_back(std::move(tile));
    }
    return tiles;
}

}  // namespace

ImageF assemble_grid(const std::vector<ImageF>& tiles, const GridLayout& layout) {
    return assemble_grid_impl(tiles, layout);
}
std::vector<ImageF> split_grid(const ImageF& grid, const GridLayout& layout) {
    return split_grid_impl(grid, layout);
}
ImageU8 assemble_grid(const std::vector<ImageU8>& tiles, const GridLayout& layout) {
    return assemble_grid_impl(tiles, layout);
}
std::vector<ImageU8> split_grid(const ImageU8& grid, const GridLayout& layout) {
    return split_grid_impl(grid, layout);
}

NoiseSchedule NoiseSchedule::cosine(int t_steps) {
    if (t_steps < 1) throw std::invalid_argument("schedule needs at least one step");
    NoiseSchedule s;
    s.t_steps = t_steps;
    s.alpha_bar.resize(static_cast<size_t>(t_steps) + 1);
    const double offset = 0.008;
    const auto f = [&](double t) {
        const double v = std::cos((t / t_steps + offset) / (1.0 + offset) * kPi / 2.0);
        return v * v;
    };
    const double f0 = f(0.0);
    s.alpha_bar[0] = 1.0f;
    for (int t = 1; t <= t_steps; ++t) {
        const double ab = f(static_cast<double>(t)) / f0;
        // keep strictly inside (0, 1)
        s.alpha_bar[static_cast<size_t>(t)] =
            static_cast<float>(std::max(ab, 1e-12));
    }
    for (int t = 1; t <= t_steps; ++t)
        if (!(s.alpha_bar[t] < s.alpha_bar[t - 1]))
            throw std::logic_error("alpha_bar is not strictly decreasing");
    return s;
}

LatentGrid LatentCodec::encode(const ImageF& image) const {
    if (downscale <= 0 || image.width % downscale != 0 || image.height % downscale != 0)
        throw std::invalid_argument("image dimensions (" + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + ") not divisible by latent downscale " +
                                    std::to_string(downscale));
    const int w = image.width / downscale;
    const int h = image.height / downscale;
    LatentGrid latent;
    latent.data = ImageF(w, h, latent_channels, 0.0f);
    latent.t = 0;
    const float denom = static_cast<float>(downscale) * static_cast<float>(downscale);
    const int copy_channels = std::min(image.channels, latent_channels);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < copy_channels; ++c) {
                float sum = 0.0f;
                for (int dy = 0; dy < downscale; ++dy)
                    for (int dx = 0; dx < downscale; ++dx)
                        sum += image.at(x * downscale + dx, y * downscale + dy, c);
                latent.data.at(x, y, c) = sum / denom;
            }
    return latent;
}

ImageF LatentCodec::decode(const LatentGrid& latent) const {
    const int w = latent.data.width * downscale;
    const int h = latent.data.height * downscale;
    const int channels = std::min(image_channels, latent.data.channels);
    ImageF image(w, h, channels, 0.0f);
    for (int y = 0; y < h; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) / downscale - 0.5f;
        const float fy_floor = std::floor(fy);
        const int y0 = clamp(static_cast<int>(fy_floor), 0, latent.data.height - 1);
        const int y1 = clamp(static_cast<int>(fy_floor) + 1, 0, latent.data.height - 1);
        const float wy = fy - fy_floor;
        for (int x = 0; x < w; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) / downscale - 0.5f;
            const float fx_floor = std::floor(fx);
            const int x0 = clamp(static_cast<int>(fx_floor), 0, latent.data.width - 1);
            const int x1 = clamp(static_cast<int>(fx_floor) + 1, 0, latent.data.width - 1);
            const float wx = fx - fx_floor;
            for (int c = 0; c < channels; ++c) {
                const float top = (1.0f - wx) * latent.data.at(x0, y0, c) + wx * latent.data.at(x1, y0, c);
                const float bot = (1.0f - wx) * latent.data.at(x0, y1, c) + wx * latent.data.at(x1, y1, c);
                image.at(x, y, c) = (1.0f - wy) * top + wy * bot;
            }
        }
    }
    return image;
}

LatentGrid add_noise(const LatentGrid& z0, int t, const ImageF& noise,
                     const NoiseSchedule& schedule) {
    if (t < 0 || t > schedule.t_steps) throw std::invalid_argument("timestep out of range");
    if (!noise.same_shape(z0.data)) throw std::invalid_argument("noise shape mismatch");
    const float ab = schedule.alpha_bar[static_cast<size_t>(t)];
    const float signal = std::sqrt(ab);
    const float sigma = std::sqrt(1.0f - ab);
    LatentGrid out = z0;
    out.t = t;
    for (size_t i = 0; i < out.data.data.size(); ++i)
        out.data.data[i] = signal * z0.data.data[i] + sigma * noise.data[i];
    return out;
}

ImageF gaussian_field(int width, int height, int channels, Rng& rng) {
    ImageF field(width, height, channels, 0.0f);
    for (float& v : field.data) v = static_cast<float>(rng.gaussian());
    return field;
}

LatentGrid blend_latents(const LatentGrid& z, const LatentGrid& z_gt_noised, const ImageU8& mask) {
    if (!z.data.same_shape(z_gt_noised.data))
        throw std::invalid_argument("latent shape mismatch in blend");
    if (z.t != z_gt_noised.t)
        throw std::invalid_argument("latent timestep mismatch in blend: " + std::to_string(z.t) +
                                    " vs " + std::to_string(z_gt_noised.t));
    if (mask.width != z.data.width || mask.height != z.data.height)
        throw std::invalid_argument("blend mask shape mismatch");

    LatentGrid out = z;
    for (int y = 0; y < z.data.height; ++y)
        for (int x = 0; x < z.data.width; ++x) {
            if (mask.at(x, y)) continue;  // mask = 1 keeps z
            for (int c = 0; c < z.data.channels; ++c)
                out.data.at(x, y, c) = z_gt_noised.data.at(x, y, c);
        }
    return out;
}

}  // namespace atlasforge
