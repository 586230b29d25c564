// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/fixtures.hpp"

#include "atlasforge/gridops.hpp"
#include "atlasforge/image_io.hpp"
#include "atlasforge/pipeline.hpp"
#include "atlasforge/shapes.hpp"

#include <filesystem>
#include <fstream>

namespace atlasforge {

ImageF smooth_pattern(int width, int height, int channels, uint64_t seed, int cells) {
    Rng rng(seed);
    ImageF coarse(cells, cells, channels, 0.0f);
    for (float& v : coarse.data) v = static_cast<float>(rng.uniform());

    // Bilinear upsample of a coarse random grid: smooth and deterministic.
    ImageF out(width, height, channels, 0.0f);
    for (int y = 0; y < height; ++y) {
        const float fy = (static_cast<float>(y) + 0.5f) / height * cells - 0.5f;
        const float fy_floor = std::floor(fy);
        const int y0 = clamp(static_cast<int>(fy_floor), 0, cells - 1);
        const int y1 = clamp(static_cast<int>(fy_floor) + 1, 0, cells - 1);
        const float wy = fy - fy_floor;
        for (int x = 0; x < width; ++x) {
            const float fx = (static_cast<float>(x) + 0.5f) / width * cells - 0.5f;
            const float fx_floor = std::floor(fx);
            const int x0 = clamp(static_cast<int>(fx_floor), 0, cells - 1);
            const int x1 = clamp(static_cast<int>(fx_floor) + 1, 0, cells - 1);
            const float wx = fx - fx_floor;
            for (int c = 0; c < channels; ++c) {
                const float top = (1 - wx) * coarse.at(x0, y0, c) + wx * coarse.at(x1, y0, c);
                const float bot = (1 - wx) * coarse.at(x0, y1, c) + wx * coarse.at(x1, y1, c);
                out.at(x, y, c) = (1 - wy) * top + wy * bot;
            }
        }
    }
    return out;
}

namespace {

// Warm (red-dominant) and cool (blue-dominant) variants of the pattern make
// it easy to see which fixture supervised which side of the card.
ImageF tinted_pattern(int size, uint64_t seed, bool warm) {
    ImageF img = smooth_pattern(size, size, 3, seed);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            const float r = img.at(x, y, 0), g = img.at(x, y, 1), b = img.at(x, y, 2);
            if (warm) {
                img.at(x, y, 0) = 0.75f + 0.25f * r;
                img.at(x, y, 1) = 0.15f + 0.25f * g;
                img.at(x, y, 2) = 0.10f + 0.20f * b;
            } else {
                img.at(x, y, 0) = 0.10f + 0.20f * r;
                img.at(x, y, 1) = 0.20f + 0.25f * g;
                img.at(x, y, 2) = 0.70f + 0.30f * b;
            }
        }
    return img;
}

}  // namespace

std::string write_demo_fixture(const std::string& dir, int image_size, int atlas_resolution) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);

    write_obj(make_card(), (fs::path(dir) / "card.obj").string());
    write_png8((fs::path(dir) / "front.png").string(), tinted_pattern(image_size, 11, true));

    std::vector<ImageF> tiles;
    for (int i = 0; i < 6; ++i)
        tiles.push_back(tinted_pattern(image_size, 100 + static_cast<uint64_t>(i), false));
    GridLayout layout;
    layout.tile_size = image_size;
    write_png8((fs::path(dir) / "grid.png").string(), assemble_grid(tiles, layout));

    RunConfig config;
    config.mesh_path = (fs::path(dir) / "card.obj").string();
    config.prompt = "demo card";
    config.image_size = image_size;
    config.viewpoints.image_size = image_size;
    config.atlas_resolution = atlas_resolution;
    config.backend = "fixture:" + dir;
    config.out_dir = (fs::path(dir) / "run").string();
    const std::string config_path = (fs::path(dir) / "run.json").string();
    std::ofstream(config_path) << run_config_to_json(config).dump(2) << "\n";
    return config_path;
}

}  // namespace atlasforge
