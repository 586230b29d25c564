// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"
#include "atlasforge/genclient.hpp"
#include "atlasforge/geometry.hpp"
#include "atlasforge/metatex.hpp"
#include "atlasforge/projectback.hpp"

#include <nlohmann/json.hpp>

#include <string>
#include <vector>

namespace atlasforge {

// Blending location for the six-view generation step. Backends that return a
// finished image get post-hoc image-space compositing; "latent" runs the
// forward-noise / blend loop against the one-shot latent of that image.
enum class BlendMode { Image, Latent };

struct RunConfig {
    std::string mesh_path;
    std::string prompt;
    float alpha = 10.0f;
    int atlas_resolution = 1024;
    int image_size = 512;  // render resolution; grid tiles use the same size
    ViewpointConfig viewpoints;
    std::string backend = "fixture:fixtures/demo";
    uint64_t seed = 0;
    int steps = 36;
    std::string out_dir = "runs/out";
    std::vector<std::string> stages;  // empty = all
    BlendMode blend_mode = BlendMode::Image;
    int latent_downscale = 8;
    int latent_channels = 4;
    int t_steps = 36;
    float background = 0.5f;
    float coverage_threshold = 0.5f;
    bool freeze_front = false;
    LossConfig loss;
    DescentConfig optimizer;
    MetaOptConfig meta_optimizer;
    std::vector<float> preview_azimuths = {0.0f, 120.0f, -120.0f};
};

RunConfig load_run_config(const std::string& path);  // honors ATLASFORGE_BACKEND_URL
nlohmann::json run_config_to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

struct StageRecord {
    std::string name;
    double seconds = 0.0;
    std::vector<std::string> artifacts;  // paths relative to the run directory
};

struct RunManifest {
    nlohmann::json config_echo;
    std::string backend_id;
    std::vector<StageRecord> stages;
    // artifact path -> sha256 of file contents
    nlohmann::json artifact_hashes = nlohmann::json::object();

    nlohmann::json to_json() const;
};

// Canonical stage order. Each stage reads its inputs from the run directory
// and writes its outputs there, so partial re-runs reuse earlier artifacts.
extern const std::vector<std::string> kPipelineStages;

// Executes the requested stages (all when config.stages is empty) in order
// and writes run_manifest.json. A stage failure aborts the run; the manifest
// still records the stages that completed.
RunManifest run_pipeline(const RunConfig& config);

// One preview render per azimuth at elevation 0. Returns written paths.
std::vector<std::string> render_previews(const Mesh& mesh, const TextureAtlas& atlas,
                                         const std::vector<float>& azimuths_deg,
                                         const RunConfig& config, const std::string& out_dir);

std::string sha256_file(const std::string& path);

}  // namespace atlasforge
