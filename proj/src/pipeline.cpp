// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/pipeline.hpp"

#include "atlasforge/gridops.hpp"
#include "atlasforge/image_io.hpp"
#include "atlasforge/masks.hpp"
#include "atlasforge/raster.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace atlasforge {

namespace fs = std::filesystem;

const std::vector<std::string> kPipelineStages = {
    "metatex", "front", "project_front", "view_renders",
    "grid_assembly", "generate_blend", "grid_split", "project_all",
};

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig c;
    c.mesh_path = j.value("mesh", c.mesh_path);
    c.prompt = j.value("prompt", c.prompt);
    c.alpha = j.value("alpha", c.alpha);
    c.atlas_resolution = j.value("atlas_resolution", c.atlas_resolution);
    c.image_size = j.value("image_size", c.image_size);
    c.viewpoints.image_size = c.image_size;
    c.viewpoints.radius = j.value("radius", c.viewpoints.radius);
    c.viewpoints.fov_deg = j.value("fov_deg", c.viewpoints.fov_deg);
    c.viewpoints.near_plane = j.value("near", c.viewpoints.near_plane);
    c.viewpoints.far_plane = j.value("far", c.viewpoints.far_plane);
    if (j.contains("azimuths")) {
        const auto az = j.at("azimuths").get<std::vector<float>>();
        if (az.size() != 6) throw std::invalid_argument("config: azimuths must list 6 angles");
        std::copy(az.begin(), az.end(), c.viewpoints.azimuths_deg.begin());
    }
    if (j.contains("elevations")) {
        const auto el = j.at("elevations").get<std::vector<float>>();
        if (el.size() != 6) throw std::invalid_argument("config: elevations must list 6 angles");
        std::copy(el.begin(), el.end(), c.viewpoints.elevations_deg.begin());
    }
    c.backend = j.value("backend", c.backend);
    c.seed = j.value("seed", c.seed);
    c.steps = j.value("steps", c.steps);
    c.out_dir = j.value("out_dir", c.out_dir);
    if (j.contains("stages")) c.stages = j.at("stages").get<std::vector<std::string>>();
    if (j.contains("blend_mode")) {
        const std::string mode = j.at("blend_mode").get<std::string>();
        if (mode == "image") c.blend_mode = BlendMode::Image;
        else if (mode == "latent") c.blend_mode = BlendMode::Latent;
        else throw std::invalid_argument("config: blend_mode must be 'image' or 'latent'");
    }
    c.latent_downscale = j.value("latent_downscale", c.latent_downscale);
    c.latent_channels = j.value("latent_channels", c.latent_channels);
    c.t_steps = j.value("t_steps", c.t_steps);
    c.background = j.value("background", c.background);
    c.coverage_threshold = j.value("coverage_threshold", c.coverage_threshold);
    c.freeze_front = j.value("freeze_front", c.freeze_front);
    c.loss.tv_weight = j.value("tv_weight", c.loss.tv_weight);
    c.optimizer.step = j.value("opt_step", c.optimizer.step);
    c.optimizer.iterations = j.value("opt_iterations", c.optimizer.iterations);
    c.optimizer.threads = j.value("threads", c.optimizer.threads);
    c.meta_optimizer.step = j.value("meta_step", c.meta_optimizer.step);
    c.meta_optimizer.max_iterations = j.value("meta_iterations", c.meta_optimizer.max_iterations);
    if (j.contains("preview_azimuths"))
        c.preview_azimuths = j.at("preview_azimuths").get<std::vector<float>>();
    return c;
}

nlohmann::json run_config_to_json(const RunConfig& c) {
    nlohmann::json j;
    j["mesh"] = c.mesh_path;
    j["prompt"] = c.prompt;
    j["alpha"] = c.alpha;
    j["atlas_resolution"] = c.atlas_resolution;
    j["image_size"] = c.image_size;
    j["radius"] = c.viewpoints.radius;
    j["fov_deg"] = c.viewpoints.fov_deg;
    j["near"] = c.viewpoints.near_plane;
    j["far"] = c.viewpoints.far_plane;
    j["azimuths"] = c.viewpoints.azimuths_deg;
    j["elevations"] = c.viewpoints.elevations_deg;
    j["backend"] = c.backend;
    j["seed"] = c.seed;
    j["steps"] = c.steps;
    j["out_dir"] = c.out_dir;
    j["stages"] = c.stages.empty() ? kPipelineStages : c.stages;
    j["blend_mode"] = c.blend_mode == BlendMode::Image ? "image" : "latent";
    j["latent_downscale"] = c.latent_downscale;
    j["latent_channels"] = c.latent_channels;
    j["t_steps"] = c.t_steps;
    j["background"] = c.background;
    j["coverage_threshold"] = c.coverage_threshold;
    j["freeze_front"] = c.freeze_front;
    j["tv_weight"] = c.loss.tv_weight;
    j["opt_step"] = c.optimizer.step;
    j["opt_iterations"] = c.optimizer.iterations;
    j["threads"] = c.optimizer.threads;
    j["meta_step"] = c.meta_optimizer.step;
    j["meta_iterations"] = c.meta_optimizer.max_iterations;
    j["preview_azimuths"] = c.preview_azimuths;
    return j;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IoError("config parse error in " + path + ": " + e.what());
    }
    RunConfig config = run_config_from_json(j);
    if (const char* url = std::getenv("ATLASFORGE_BACKEND_URL"); url && *url)
        config.backend = url;
    return config;
}

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot hash missing file: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[65536];
    while (in) {
        in.read(buf, sizeof(buf));
        EVP_DigestUpdate(ctx, buf, static_cast<size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        char b[3];
        std::snprintf(b, sizeof(b), "%02x", digest[i]);
        hex += b;
    }
    return hex;
}

// ---------------------------------------------------------------------------
// Stage plumbing
// ---------------------------------------------------------------------------

namespace {

std::string view_tag(int i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d", i);
    return buf;
}

ImageF znormal_to_unit(const ImageF& znormal) {
    ImageF out = znormal;
    for (float& v : out.data) v = 0.5f * (v + 1.0f);
    return out;
}

ImageF gray_channel(const ImageF& image) {
    if (image.channels == 1) return image;
    ImageF out(image.width, image.height, 1, 0.0f);
    for (int y = 0; y < image.height; ++y)
        for (int x = 0; x < image.width; ++x)
            out.at(x, y) = (image.at(x, y, 0) + image.at(x, y, 1) + image.at(x, y, 2)) / 3.0f;
    return out;
}

ImageU8 threshold_mask(const ImageF& gray) {
    ImageU8 out(gray.width, gray.height, 1, 0);
    for (size_t i = 0; i < gray.data.size(); ++i) out.data[i] = gray.data[i] > 0.5f ? 1 : 0;
    return out;
}

ImageF mask_to_gray(const ImageU8& mask) {
    ImageF out(mask.width, mask.height, 1, 0.0f);
    for (size_t i = 0; i < mask.data.size(); ++i) out.data[i] = mask.data[i] ? 1.0f : 0.0f;
    return out;
}

TextureAtlas load_atlas_ctxb(const std::string& path) {
    const ImageF raw = read_ctxb_f32(path);
    if (raw.width != raw.height) throw IoError("atlas CTXB is not square: " + path);
    TextureAtlas atlas(raw.width, raw.channels);
    atlas.texels = raw;
    return atlas;
}

std::vector<uint8_t> file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("missing pipeline artifact: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

void write_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("cannot write artifact: " + path);
}

// All intermediate state flows through the run directory, so any stage can
// resume from the files of a previous run.
struct StageContext {
    const RunConfig& config;
    fs::path dir;
    std::vector<Viewpoint> views;
    Mesh mesh;
    GeneratorBackend* backend;
    std::vector<std::string>* artifacts;

    std::string path(const std::string& name) const { return (dir / name).string(); }
    void emit(const std::string& name) { artifacts->push_back(name); }

    RenderBuffers buffers_for(int view_id) const {
        return rasterize_buffers(mesh, views[static_cast<size_t>(view_id)]);
    }

    MetaTexture load_meta() const {
        MetaTexture meta;
        meta.atlas = load_atlas_ctxb(path("meta_n.ctxb"));
        return meta;
    }
};

void stage_metatex(StageContext& ctx) {
    std::vector<RenderBuffers> buffers;
    std::vector<std::vector<float>> face_nz;
    for (int i = 0; i < 7; ++i) {
        buffers.push_back(ctx.buffers_for(i));
        face_nz.push_back(face_camera_znormals(ctx.mesh, ctx.views[static_cast<size_t>(i)]));
        const std::string tag = view_tag(i);
        write_png16(ctx.path("depth_" + tag + ".png"), buffers.back().depth);
        write_png16(ctx.path("znormal_" + tag + ".png"), znormal_to_unit(buffers.back().znormal));
        write_ctxb(ctx.path("face_index_" + tag + ".ctxb"), buffers.back().face_index);
        ctx.emit("depth_" + tag + ".png");
        ctx.emit("znormal_" + tag + ".png");
        ctx.emit("face_index_" + tag + ".ctxb");
    }

    MetaTrainReport report;
    const MetaTexture meta = learn_max_znormals(buffers, face_nz, ctx.config.atlas_resolution,
                                                ctx.config.meta_optimizer, &report);
    write_ctxb(ctx.path("meta_n.ctxb"), meta.atlas.texels);
    write_png16(ctx.path("meta_n.png"), meta.atlas.texels);
    ctx.emit("meta_n.ctxb");
    ctx.emit("meta_n.png");
    if (!report.converged)
        std::fprintf(stderr, "[atlasforge] meta-texture did not converge: mean violation %.3g after %d iterations\n",
                     report.mean_violation, report.iterations);

    nlohmann::json j{{"final_loss", report.final_loss},
                     {"mean_violation", report.mean_violation},
                     {"iterations", report.iterations},
                     {"converged", report.converged}};
    std::ofstream(ctx.path("meta_report.json")) << j.dump(2) << "\n";
    ctx.emit("meta_report.json");
}

void stage_front(StageContext& ctx) {
    GenRequest req;
    req.kind = GenKind::Front;
    req.prompt = ctx.config.prompt;
    req.view_suffix = ", front view";
    req.depth_png = file_bytes(ctx.path("depth_00.png"));
    req.seed = ctx.config.seed;
    req.steps = ctx.config.steps;
    req.expected_width = ctx.config.image_size;
    req.expected_height = ctx.config.image_size;
    const GenResponse resp = ctx.backend->fetch_front(req);
    write_bytes(ctx.path("q0.png"), resp.image_png);
    ctx.emit("q0.png");
}

void stage_project_front(StageContext& ctx) {
    const MetaTexture meta = ctx.load_meta();
    const RenderBuffers buffers = ctx.buffers_for(0);
    ImageF q0 = read_png(ctx.path("q0.png"));

    ProjectBackProblem problem;
    problem.mesh = &ctx.mesh;
    problem.views = {ViewTarget{ctx.views[0], std::move(q0),
                                view_weights(meta, buffers, ctx.config.alpha)}};
    problem.atlas_resolution = ctx.config.atlas_resolution;
    problem.loss = ctx.config.loss;
    problem.optimizer = ctx.config.optimizer;
    const ProjectBackResult result = project_back(problem);

    write_ctxb(ctx.path("atlas_phase1.ctxb"), result.atlas.texels);
    write_png8(ctx.path("atlas_phase1.png"), result.atlas.texels);
    write_ctxb(ctx.path("coverage_phase1.ctxb"), result.coverage.texels);
    write_png16(ctx.path("coverage_phase1.png"), result.coverage.texels);
    write_ctxb(ctx.path("learned_phase1.ctxb"), result.mean_weight.texels);
    ctx.emit("atlas_phase1.ctxb");
    ctx.emit("atlas_phase1.png");
    ctx.emit("coverage_phase1.ctxb");
    ctx.emit("coverage_phase1.png");
    ctx.emit("learned_phase1.ctxb");

    nlohmann::json j{{"final_loss", result.report.final_loss},
                     {"iterations", result.report.iterations_used},
                     {"covered_texel_fraction", result.report.covered_texel_fraction},
                     {"per_view_weighted_rmse", result.report.per_view_weighted_rmse},
                     {"diverged", result.report.diverged}};
    std::ofstream(ctx.path("report_phase1.json")) << j.dump(2) << "\n";
    ctx.emit("report_phase1.json");
}

void stage_view_renders(StageContext& ctx) {
    const TextureAtlas atlas = load_atlas_ctxb(ctx.path("atlas_phase1.ctxb"));
    TextureAtlas coverage = load_atlas_ctxb(ctx.path("learned_phase1.ctxb"));
    for (int i = 1; i <= 6; ++i) {
        const RenderBuffers buffers = ctx.buffers_for(i);
        const RegionMask region = new_region_mask(buffers, coverage, ctx.config.coverage_threshold,
                                                  ctx.config.latent_downscale);
        const ImageF q = render_textured(buffers, atlas, ctx.config.background);
        const std::string tag = view_tag(i);
        write_png8(ctx.path("mask_" + tag + ".png"), mask_to_gray(region.mask));
        write_png8(ctx.path("mask_latent_" + tag + ".png"), mask_to_gray(region.latent_mask));
        write_png8(ctx.path("render_" + tag + ".png"), q);
        ctx.emit("mask_" + tag + ".png");
        ctx.emit("mask_latent_" + tag + ".png");
        ctx.emit("render_" + tag + ".png");
    }
}

void stage_grid_assembly(StageContext& ctx) {
    GridLayout layout;
    layout.tile_size = ctx.config.image_size;
    GridLayout latent_layout;
    latent_layout.tile_size = ctx.config.image_size / ctx.config.latent_downscale;

    std::vector<ImageF> depth_tiles, mask_tiles, render_tiles;
    std::vector<ImageU8> latent_tiles;
    for (int i = 1; i <= 6; ++i) {
        const std::string tag = view_tag(i);
        depth_tiles.push_back(gray_channel(read_png(ctx.path("depth_" + tag + ".png"))));
        mask_tiles.push_back(gray_channel(read_png(ctx.path("mask_" + tag + ".png"))));
        render_tiles.push_back(read_png(ctx.path("render_" + tag + ".png")));
        latent_tiles.push_back(threshold_mask(gray_channel(read_png(ctx.path("mask_latent_" + tag + ".png")))));
    }
    write_png16(ctx.path("depth_grid.png"), assemble_grid(depth_tiles, layout));
    write_png8(ctx.path("mask_grid.png"), assemble_grid(mask_tiles, layout));
    write_png8(ctx.path("render_grid.png"), assemble_grid(render_tiles, layout));
    write_png8(ctx.path("mask_grid_latent.png"),
               mask_to_gray(assemble_grid(latent_tiles, latent_layout)));
    ctx.emit("depth_grid.png");
    ctx.emit("mask_grid.png");
    ctx.emit("render_grid.png");
    ctx.emit("mask_grid_latent.png");
}

void stage_generate_blend(StageContext& ctx) {
    GenRequest req;
    req.kind = GenKind::Grid;
    req.prompt = ctx.config.prompt;
    req.view_suffix = "";
    req.depth_png = file_bytes(ctx.path("depth_grid.png"));
    req.condition_png = file_bytes(ctx.path("q0.png"));
    req.seed = ctx.config.seed;
    req.steps = ctx.config.steps;
    req.expected_width = 3 * ctx.config.image_size;
    req.expected_height = 2 * ctx.config.image_size;
    const GenResponse resp = ctx.backend->fetch_grid(req);
    write_bytes(ctx.path("generated_grid.png"), resp.image_png);
    ctx.emit("generated_grid.png");

    const ImageF generated = decode_png(resp.image_png);
    const ImageF rendered = read_png(ctx.path("render_grid.png"));

    ImageF blended;
    if (ctx.config.blend_mode == BlendMode::Image) {
        // Post-hoc compositing: generated where the mask allows writing,
        // the ground-truth render elsewhere.
        const ImageU8 mask = threshold_mask(gray_channel(read_png(ctx.path("mask_grid.png"))));
        blended = rendered;
        for (int y = 0; y < blended.height; ++y)
            for (int x = 0; x < blended.width; ++x)
                if (mask.at(x, y))
                    for (int c = 0; c < blended.channels; ++c)
                        blended.at(x, y, c) = generated.at(x, y, c);
    } else {
        // Forward-noise loop with the generated image as a one-shot
        // denoiser: masked latent cells stay pinned to the render's latent.
        const ImageU8 latent_mask =
            threshold_mask(gray_channel(read_png(ctx.path("mask_grid_latent.png"))));
        const LatentCodec codec{ctx.config.latent_downscale, ctx.config.latent_channels, 3};
        const NoiseSchedule schedule = NoiseSchedule::cosine(ctx.config.t_steps);
        const LatentGrid z_generated = codec.encode(generated);
        const LatentGrid z_rendered = codec.encode(rendered);
        Rng rng(ctx.config.seed ^ 0x5eedb1e55ull);

        LatentGrid z;
        z.data = gaussian_field(z_generated.data.width, z_generated.data.height,
                                z_generated.data.channels, rng);
        z.t = schedule.t_steps;
        for (int t = schedule.t_steps; t >= 1; --t) {
            LatentGrid denoised = z_generated;
            denoised.t = t - 1;
            const ImageF noise = gaussian_field(z.data.width, z.data.height, z.data.channels, rng);
            const LatentGrid gt_noised = add_noise(z_rendered, t - 1, noise, schedule);
            z = blend_latents(denoised, gt_noised, latent_mask);
        }
        blended = codec.decode(z);
        for (float& v : blended.data) v = clamp(v, 0.0f, 1.0f);
    }
    write_png8(ctx.path("blended_grid.png"), blended);
    ctx.emit("blended_grid.png");
}

void stage_grid_split(StageContext& ctx) {
    GridLayout layout;
    layout.tile_size = ctx.config.image_size;
    const std::vector<ImageF> tiles = split_grid(read_png(ctx.path("blended_grid.png")), layout);
    for (int i = 0; i < 6; ++i) {
        const std::string name = "view_" + view_tag(i + 1) + ".png";
        write_png8(ctx.path(name), tiles[static_cast<size_t>(i)]);
        ctx.emit(name);
    }
}

void stage_project_all(StageContext& ctx) {
    const MetaTexture meta = ctx.load_meta();

    ProjectBackProblem problem;
    problem.mesh = &ctx.mesh;
    problem.atlas_resolution = ctx.config.atlas_resolution;
    problem.loss = ctx.config.loss;
    problem.optimizer = ctx.config.optimizer;
    problem.initial_atlas = load_atlas_ctxb(ctx.path("atlas_phase1.ctxb"));

    for (int i = 0; i < 7; ++i) {
        const RenderBuffers buffers = ctx.buffers_for(i);
        ImageF target = i == 0 ? read_png(ctx.path("q0.png"))
                               : read_png(ctx.path("view_" + view_tag(i) + ".png"));
        problem.views.push_back(ViewTarget{ctx.views[static_cast<size_t>(i)], std::move(target),
                                           view_weights(meta, buffers, ctx.config.alpha)});
    }

    if (ctx.config.freeze_front) {
        const TextureAtlas phase1_cov = load_atlas_ctxb(ctx.path("learned_phase1.ctxb"));
        ImageU8 frozen(phase1_cov.resolution, phase1_cov.resolution, 1, 0);
        for (size_t i = 0; i < frozen.data.size(); ++i)
            frozen.data[i] = phase1_cov.texels.data[i] > ctx.config.coverage_threshold ? 1 : 0;
        problem.frozen_texels = std::move(frozen);
    }

    const ProjectBackResult result = project_back(problem);
    write_ctxb(ctx.path("atlas.ctxb"), result.atlas.texels);
    write_png8(ctx.path("atlas.png"), result.atlas.texels);
    write_ctxb(ctx.path("coverage.ctxb"), result.coverage.texels);
    write_png16(ctx.path("coverage.png"), result.coverage.texels);
    ctx.emit("atlas.ctxb");
    ctx.emit("atlas.png");
    ctx.emit("coverage.ctxb");
    ctx.emit("coverage.png");

    nlohmann::json j{{"final_loss", result.report.final_loss},
                     {"iterations", result.report.iterations_used},
                     {"covered_texel_fraction", result.report.covered_texel_fraction},
                     {"per_view_weighted_rmse", result.report.per_view_weighted_rmse},
                     {"diverged", result.report.diverged}};
    std::ofstream(ctx.path("report.json")) << j.dump(2) << "\n";
    ctx.emit("report.json");

    for (const std::string& p :
         render_previews(ctx.mesh, result.atlas, ctx.config.preview_azimuths, ctx.config,
                         ctx.dir.string()))
        ctx.emit(p);
}

}  // namespace

std::vector<std::string> render_previews(const Mesh& mesh, const TextureAtlas& atlas,
                                         const std::vector<float>& azimuths_deg,
                                         const RunConfig& config, const std::string& out_dir) {
    std::vector<std::string> written;
    for (const float az : azimuths_deg) {
        Viewpoint v;
        v.id = 0;
        v.azimuth_deg = az;
        v.elevation_deg = 0.0f;
        v.radius = config.viewpoints.radius;
        v.projection = {config.viewpoints.fov_deg, config.viewpoints.near_plane,
                        config.viewpoints.far_plane};
        v.image_size = config.image_size;
        const ImageF image = render_textured(mesh, v, atlas, config.background);
        char name[48];
        std::snprintf(name, sizeof(name), "preview_az%+04d.png", static_cast<int>(std::lround(az)));
        write_png8((fs::path(out_dir) / name).string(), image);
        written.emplace_back(name);
    }
    return written;
}

RunManifest run_pipeline(const RunConfig& config) {
    fs::create_directories(config.out_dir);

    RunManifest manifest;
    manifest.config_echo = run_config_to_json(config);

    StageContext ctx{config, fs::path(config.out_dir),
                     canonical_viewpoints(config.viewpoints), load_mesh(config.mesh_path),
                     nullptr, nullptr};
    const std::unique_ptr<GeneratorBackend> backend =
        make_backend(config.backend, config.image_size);
    ctx.backend = backend.get();
    manifest.backend_id = backend->id();

    const std::vector<std::string>& requested =
        config.stages.empty() ? kPipelineStages : config.stages;
    for (const std::string& name : requested)
        if (std::find(kPipelineStages.begin(), kPipelineStages.end(), name) ==
            kPipelineStages.end())
            throw std::invalid_argument("unknown pipeline stage: " + name);

    const auto write_manifest = [&] {
        std::ofstream((fs::path(config.out_dir) / "run_manifest.json").string())
            << manifest.to_json().dump(2) << "\n";
    };

    for (const std::string& name : kPipelineStages) {
        if (std::find(requested.begin(), requested.end(), name) == requested.end()) continue;
        StageRecord record;
        record.name = name;
        ctx.artifacts = &record.artifacts;
        const auto start = std::chrono::steady_clock::now();
        try {
            if (name == "metatex") stage_metatex(ctx);
            else if (name == "front") stage_front(ctx);
            else if (name == "project_front") stage_project_front(ctx);
            else if (name == "view_renders") stage_view_renders(ctx);
            else if (name == "grid_assembly") stage_grid_assembly(ctx);
            else if (name == "generate_blend") stage_generate_blend(ctx);
            else if (name == "grid_split") stage_grid_split(ctx);
            else if (name == "project_all") stage_project_all(ctx);
        } catch (...) {
            // Record completed stages before propagating the failure.
            write_manifest();
            throw;
        }
        record.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        for (const std::string& artifact : record.artifacts)
            manifest.artifact_hashes[artifact] =
                sha256_file((fs::path(config.out_dir) / artifact).string());
        manifest.stages.push_back(std::move(record));
    }

    write_manifest();
    return manifest;
}

nlohmann::json RunManifest::to_json() const {
    nlohmann::json j;
    j["config"] = config_echo;
    j["backend"] = backend_id;
    j["stages"] = nlohmann::json::array();
    for (const StageRecord& s : stages) {
        j["stages"].push_back(
            {{"name", s.name}, {"seconds", s.seconds}, {"artifacts", s.artifacts}});
    }
    j["artifact_hashes"] = artifact_hashes;
    return j;
}

}  // namespace atlasforge
