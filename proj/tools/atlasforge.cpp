// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/fixtures.hpp"
#include "atlasforge/gridops.hpp"
#include "atlasforge/image_io.hpp"
#include "atlasforge/masks.hpp"
#include "atlasforge/metatex.hpp"
#include "atlasforge/pipeline.hpp"
#include "atlasforge/projectback.hpp"
#include "atlasforge/shapes.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>

namespace fs = std::filesystem;
using namespace atlasforge;

namespace {

std::string tag2(int i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d", i);
    return buf;
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& stages,
            const std::string& backend_override, const std::string& out_override, int64_t seed,
            bool freeze_front) {
    RunConfig config = load_run_config(config_path);
    if (!stages.empty()) config.stages = stages;
    if (!backend_override.empty()) config.backend = backend_override;
    if (!out_override.empty()) config.out_dir = out_override;
    if (seed >= 0) config.seed = static_cast<uint64_t>(seed);
    if (freeze_front) config.freeze_front = true;

    const RunManifest manifest = run_pipeline(config);
    std::printf("run complete: %zu stage(s) -> %s\n", manifest.stages.size(),
                config.out_dir.c_str());
    for (const StageRecord& s : manifest.stages)
        std::printf("  %-16s %6.2fs  %zu artifact(s)\n", s.name.c_str(), s.seconds,
                    s.artifacts.size());
    return 0;
}

int cmd_metatex(const std::string& mesh_path, const std::string& out_path, float alpha,
                int resolution, int image_size, const std::string& weights_dir) {
    const Mesh mesh = load_mesh(mesh_path);
    ViewpointConfig vc;
    vc.image_size = image_size;
    const std::vector<Viewpoint> views = canonical_viewpoints(vc);

    MetaTrainReport report;
    const MetaTexture meta = learn_max_znormals(mesh, views, resolution, {}, &report);
    write_png16(out_path, meta.atlas.texels);
    const fs::path ctxb = fs::path(out_path).replace_extension(".ctxb");
    write_ctxb(ctxb.string(), meta.atlas.texels);
    std::printf("meta-texture: %d iterations, mean violation %.3g%s -> %s\n", report.iterations,
                report.mean_violation, report.converged ? "" : " (not converged)",
                out_path.c_str());

    if (!weights_dir.empty()) {
        fs::create_directories(weights_dir);
        for (const Viewpoint& v : views) {
            const RenderBuffers buffers = rasterize_buffers(mesh, v);
            const ImageF w = view_weights(meta, buffers, alpha);
            write_png8((fs::path(weights_dir) / ("weight_" + tag2(v.id) + ".png")).string(), w);
        }
        std::printf("per-view weights (alpha=%.2f) -> %s\n", alpha, weights_dir.c_str());
    }
    return 0;
}

int cmd_masks(const std::string& mesh_path, const std::string& out_dir, int image_size) {
    const Mesh mesh = load_mesh(mesh_path);
    ViewpointConfig vc;
    vc.image_size = image_size;
    const std::vector<Viewpoint> views = canonical_viewpoints(vc);

    std::vector<ImageI32> face_index;
    std::vector<std::vector<float>> face_nz;
    std::vector<ImageU8> object_masks;
    for (const Viewpoint& v : views) {
        RenderBuffers buffers = rasterize_buffers(mesh, v);
        face_index.push_back(std::move(buffers.face_index));
        object_masks.push_back(std::move(buffers.object_mask));
        face_nz.push_back(face_camera_znormals(mesh, v));
    }
    const FaceViewMask masks = binary_face_view_masks(face_index, face_nz);

    fs::create_directories(out_dir);
    for (size_t v = 0; v < masks.per_view.size(); ++v) {
        ImageF gray(masks.per_view[v].width, masks.per_view[v].height, 1, 0.0f);
        for (size_t i = 0; i < gray.data.size(); ++i)
            gray.data[i] = masks.per_view[v].data[i] ? 1.0f : 0.0f;
        write_png8((fs::path(out_dir) / ("facemask_" + tag2(static_cast<int>(v)) + ".png")).string(),
                   gray);
        ImageF obj(object_masks[v].width, object_masks[v].height, 1, 0.0f);
        for (size_t i = 0; i < obj.data.size(); ++i)
            obj.data[i] = object_masks[v].data[i] ? 1.0f : 0.0f;
        write_png8((fs::path(out_dir) / ("objectmask_" + tag2(static_cast<int>(v)) + ".png")).string(),
                   obj);
    }
    std::printf("binary face-view masks for %zu views -> %s\n", masks.per_view.size(),
                out_dir.c_str());
    return 0;
}

int cmd_grids(const std::string& assemble_out, const std::vector<std::string>& tiles,
              const std::string& split_in, const std::string& split_dir) {
    if (!assemble_out.empty()) {
        if (tiles.size() != 6) throw std::invalid_argument("--tiles needs exactly 6 images");
        std::vector<ImageF> images;
        for (const std::string& t : tiles) images.push_back(read_png(t));
        GridLayout layout;
        layout.tile_size = images[0].width;
        write_png8(assemble_out, assemble_grid(images, layout));
        std::printf("assembled 2x3 grid -> %s\n", assemble_out.c_str());
    }
    if (!split_in.empty()) {
        const ImageF grid = read_png(split_in);
        if (grid.width % 3 != 0 || grid.height % 2 != 0)
            throw std::invalid_argument("grid dimensions are not divisible into 2x3 tiles");
        GridLayout layout;
        layout.tile_size = grid.width / 3;
        const std::vector<ImageF> out = split_grid(grid, layout);
        fs::create_directories(split_dir);
        for (int i = 0; i < 6; ++i)
            write_png8((fs::path(split_dir) / ("tile_" + tag2(i + 1) + ".png")).string(),
                       out[static_cast<size_t>(i)]);
        std::printf("split grid -> %s\n", split_dir.c_str());
    }
    return 0;
}

int cmd_projectback(const std::string& mesh_path, const std::vector<std::string>& targets,
                    const std::string& out_dir, float alpha, int resolution, bool sequential,
                    int iterations) {
    const Mesh mesh = load_mesh(mesh_path);
    if (targets.size() != 7)
        throw std::invalid_argument("--targets needs 7 images (front + six views)");
    const ImageF probe = read_png(targets[0]);

    ViewpointConfig vc;
    vc.image_size = probe.width;
    const std::vector<Viewpoint> views = canonical_viewpoints(vc);
    const MetaTexture meta = learn_max_znormals(mesh, views, resolution);

    ProjectBackProblem problem;
    problem.mesh = &mesh;
    problem.atlas_resolution = resolution;
    if (iterations > 0) problem.optimizer.iterations = iterations;
    for (size_t i = 0; i < 7; ++i) {
        const RenderBuffers buffers = rasterize_buffers(mesh, views[i]);
        problem.views.push_back(
            ViewTarget{views[i], read_png(targets[i]), view_weights(meta, buffers, alpha)});
    }

    const ProjectBackResult result =
        sequential ? sequential_project_back(problem) : project_back(problem);

    fs::create_directories(out_dir);
    write_png8((fs::path(out_dir) / "atlas.png").string(), result.atlas.texels);
    write_ctxb((fs::path(out_dir) / "atlas.ctxb").string(), result.atlas.texels);
    write_png16((fs::path(out_dir) / "coverage.png").string(), result.coverage.texels);
    std::printf("%s project-back: loss %.5g, %d iterations, covered fraction %.3f -> %s\n",
                sequential ? "sequential" : "simultaneous", result.report.final_loss,
                result.report.iterations_used, result.report.covered_texel_fraction,
                out_dir.c_str());
    return 0;
}

int cmd_preview(const std::string& mesh_path, const std::string& atlas_path,
                const std::vector<float>& angles, const std::string& out_dir, int image_size) {
    const Mesh mesh = load_mesh(mesh_path);
    TextureAtlas atlas;
    if (fs::path(atlas_path).extension() == ".ctxb") {
        const ImageF raw = read_ctxb_f32(atlas_path);
        atlas = TextureAtlas(raw.width, raw.channels);
        atlas.texels = raw;
    } else {
        const ImageF raw = read_png(atlas_path);
        atlas = TextureAtlas(raw.width, raw.channels);
        atlas.texels = raw;
    }

    RunConfig config;
    config.image_size = image_size;
    fs::create_directories(out_dir);
    const std::vector<std::string> written =
        render_previews(mesh, atlas, angles, config, out_dir);
    std::printf("%zu preview(s) -> %s\n", written.size(), out_dir.c_str());
    return 0;
}

int cmd_fixture(const std::string& out_dir, int image_size, int atlas_resolution) {
    const std::string config_path = write_demo_fixture(out_dir, image_size, atlas_resolution);
    std::printf("demo fixture written; next: atlasforge run --config %s\n", config_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"atlasforge: seam-smoothed texture atlas reconstruction from seven views"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "execute the full pipeline from a JSON config");
    std::string run_config;
    std::vector<std::string> run_stages;
    std::string run_backend, run_out;
    int64_t run_seed = -1;
    bool run_freeze = false;
    run->add_option("--config", run_config, "run config JSON")->required();
    run->add_option("--stages", run_stages, "subset of stages to execute")->delimiter(',');
    run->add_option("--backend", run_backend, "override backend (fixture:<dir> or http://...)");
    run->add_option("--out", run_out, "override output directory");
    run->add_option("--seed", run_seed, "override seed");
    run->add_flag("--freeze-front", run_freeze, "freeze texels learned from the front view");

    // metatex
    auto* metatex = app.add_subcommand("metatex", "learn the max-z-normals meta-texture");
    std::string mt_mesh, mt_out = "N.png", mt_weights;
    float mt_alpha = 10.0f;
    int mt_resolution = 1024, mt_image = 512;
    metatex->add_option("--mesh", mt_mesh, "OBJ mesh")->required();
    metatex->add_option("--out", mt_out, "output meta-texture PNG (16-bit)");
    metatex->add_option("--alpha", mt_alpha, "view-weight sharpness");
    metatex->add_option("--resolution", mt_resolution, "atlas resolution");
    metatex->add_option("--image-size", mt_image, "render resolution");
    metatex->add_option("--weights-dir", mt_weights, "also write per-view weight images");

    // masks
    auto* masks = app.add_subcommand("masks", "binary face-view masks for the 7 canonical views");
    std::string mk_mesh, mk_out = "masks";
    int mk_image = 512;
    masks->add_option("--mesh", mk_mesh, "OBJ mesh")->required();
    masks->add_option("--out-dir", mk_out, "output directory");
    masks->add_option("--image-size", mk_image, "render resolution");

    // grids
    auto* grids = app.add_subcommand("grids", "assemble or split 2x3 view grids");
    std::string gr_assemble, gr_split, gr_split_dir = "tiles";
    std::vector<std::string> gr_tiles;
    grids->add_option("--assemble", gr_assemble, "output grid PNG");
    grids->add_option("--tiles", gr_tiles, "6 tile PNGs for --assemble")->delimiter(',');
    grids->add_option("--split", gr_split, "input grid PNG to split");
    grids->add_option("--out-dir", gr_split_dir, "tile output directory for --split");

    // projectback
    auto* pb = app.add_subcommand("projectback", "inverse-render an atlas from 7 view images");
    std::string pb_mesh, pb_out = "projectback";
    std::vector<std::string> pb_targets;
    float pb_alpha = 10.0f;
    int pb_resolution = 1024, pb_iterations = 0;
    bool pb_sequential = false;
    pb->add_option("--mesh", pb_mesh, "OBJ mesh")->required();
    pb->add_option("--targets", pb_targets, "7 target images, front first")->delimiter(',');
    pb->add_option("--out-dir", pb_out, "output directory");
    pb->add_option("--alpha", pb_alpha, "view-weight sharpness");
    pb->add_option("--resolution", pb_resolution, "atlas resolution");
    pb->add_option("--iterations", pb_iterations, "optimizer iterations");
    pb->add_flag("--sequential", pb_sequential, "one view at a time (comparison baseline)");

    // preview
    auto* preview = app.add_subcommand("preview", "render the textured mesh from azimuth angles");
    std::string pv_mesh, pv_atlas, pv_out = "previews";
    std::vector<float> pv_angles = {0.0f, 120.0f, -120.0f};
    int pv_image = 512;
    preview->add_option("--mesh", pv_mesh, "OBJ mesh")->required();
    preview->add_option("--atlas", pv_atlas, "atlas PNG or CTXB")->required();
    preview->add_option("--angles", pv_angles, "azimuth angles in degrees")->delimiter(',');
    preview->add_option("--out-dir", pv_out, "output directory");
    preview->add_option("--image-size", pv_image, "render resolution");

    // fixture
    auto* fixture = app.add_subcommand("fixture", "write the self-contained demo fixture");
    std::string fx_out = "fixtures/demo";
    int fx_image = 256, fx_atlas = 512;
    fixture->add_option("--out-dir", fx_out, "fixture directory");
    fixture->add_option("--image-size", fx_image, "render resolution");
    fixture->add_option("--atlas-resolution", fx_atlas, "atlas resolution");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(run_config, run_stages, run_backend, run_out, run_seed, run_freeze);
        if (metatex->parsed())
            return cmd_metatex(mt_mesh, mt_out, mt_alpha, mt_resolution, mt_image, mt_weights);
        if (masks->parsed()) return cmd_masks(mk_mesh, mk_out, mk_image);
        if (grids->parsed()) return cmd_grids(gr_assemble, gr_tiles, gr_split, gr_split_dir);
        if (pb->parsed())
            return cmd_projectback(pb_mesh, pb_targets, pb_out, pb_alpha, pb_resolution,
                                   pb_sequential, pb_iterations);
        if (preview->parsed()) return cmd_preview(pv_mesh, pv_atlas, pv_angles, pv_out, pv_image);
        if (fixture->parsed()) return cmd_fixture(fx_out, fx_image, fx_atlas);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
