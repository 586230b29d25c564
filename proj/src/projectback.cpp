// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/projectback.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <stdexcept>
#include <thread>

namespace atlasforge {

namespace {

struct ViewWorkspace {
    RenderBuffers buffers;
    ImageF weights;  // validated, zeroed on background
};

std::vector<ViewWorkspace> prepare_views(const ProjectBackProblem& problem) {
    if (!problem.mesh) throw std::invalid_argument("project_back: no mesh");
    if (problem.views.empty()) throw std::invalid_argument("project_back: needs at least one view");

    std::vector<ViewWorkspace> work(problem.views.size());
    double weight_total = 0.0;
    for (size_t i = 0; i < problem.views.size(); ++i) {
        const ViewTarget& vt = problem.views[i];
        const int size = vt.viewpoint.image_size;
        if (vt.target.width != size || vt.target.height != size)
            throw std::invalid_argument("project_back: target size does not match viewpoint " +
                                        std::to_string(vt.viewpoint.id));
        if (vt.pixel_weights.width != size || vt.pixel_weights.height != size)
            throw std::invalid_argument("project_back: weight size does not match viewpoint " +
                                        std::to_string(vt.viewpoint.id));
        work[i].buffers = rasterize_buffers(*problem.mesh, vt.viewpoint);
        work[i].weights = ImageF(size, size, 1, 0.0f);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const float w = vt.pixel_weights.at(x, y);
                if (w < 0.0f)
                    throw std::invalid_argument("project_back: negative pixel weight");
                if (work[i].buffers.foreground(x, y)) {
                    work[i].weights.at(x, y) = w;
                    weight_total += w;
                }
            }
    }
    if (weight_total == 0.0) throw std::invalid_argument("no supervision");
    return work;
}

struct CoveragePlanes {
    TextureAtlas coverage;     // sum of W * bilinear share
    TextureAtlas mean_weight;  // density-normalized: sum(W * share) / sum(share)
};

CoveragePlanes compute_coverage(const std::vector<ViewWorkspace>& work, int resolution) {
    // Splatting the weight image itself with unit pixel weights accumulates
    // sum(W * share) in the value plane and sum(share) in the weight plane.
    SplatAccumulator accum(resolution, 1);
    for (const ViewWorkspace& vw : work) {
        ImageF ones(vw.buffers.width, vw.buffers.height, 1, 1.0f);
        splat_to_atlas(vw.buffers, vw.weights, ones, accum);
    }
    CoveragePlanes planes;
    planes.coverage = accum.value;
    planes.mean_weight = normalize_accumulator(accum, 0.0f);
    return planes;
}

struct ViewPass {
    SplatAccumulator gradient;
    double data_loss = 0.0;
    double weighted_sq_error = 0.0;
    double weight_sum = 0.0;
};

// Forward render + residual splat for one view. The splat of 2*W*(render -
// target) is the exact adjoint-based gradient of the weighted L2 data term.
ViewPass view_pass(const ViewTarget& vt, const ViewWorkspace& vw, const TextureAtlas& atlas,
                   float data_weight) {
    const int size = vt.viewpoint.image_size;
    const int channels = atlas.channels;
    ViewPass pass;
    pass.gradient = SplatAccumulator(atlas.resolution, channels);

    ImageF residual(size, size, channels, 0.0f);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            if (!vw.buffers.foreground(x, y)) continue;
            const float w = vw.weights.at(x, y);
            if (w == 0.0f) continue;
            const BilinearFootprint fp = bilinear_footprint(vw.buffers.uv.at(x, y, 0),
                                                            vw.buffers.uv.at(x, y, 1),
                                                            atlas.resolution);
            double px_sq = 0.0;
            for (int c = 0; c < channels; ++c) {
                const float s = sample_footprint(atlas, fp, c);
                const float r = s - vt.target.at(x, y, c);
                residual.at(x, y, c) = 2.0f * data_weight * r;
                px_sq += static_cast<double>(r) * r;
            }
            pass.data_loss += data_weight * w * px_sq;
            pass.weighted_sq_error += w * px_sq;
            pass.weight_sum += w * channels;
        }
    splat_to_atlas(vw.buffers, residual, vw.weights, pass.gradient);
    return pass;
}

// TV over covered texel pairs: loss contribution and gradient.
double add_tv_gradient(const TextureAtlas& atlas, const ImageU8& covered, float tv_weight,
                       ImageF* grad) {
    if (tv_weight == 0.0f) return 0.0;
    double loss = 0.0;
    const int r = atlas.resolution;
    for (int y = 0; y < r; ++y)
        for (int x = 0; x < r; ++x) {
            if (!covered.at(x, y)) continue;
            for (int c = 0; c < atlas.channels; ++c) {
                if (x + 1 < r && covered.at(x + 1, y)) {
                    const float d = atlas.at(x, y, c) - atlas.at(x + 1, y, c);
                    loss += static_cast<double>(tv_weight) * d * d;
                    if (grad) {
                        grad->at(x, y, c) += 2.0f * tv_weight * d;
                        grad->at(x + 1, y, c) -= 2.0f * tv_weight * d;
                    }
                }
                if (y + 1 < r && covered.at(x, y + 1)) {
                    const float d = atlas.at(x, y, c) - atlas.at(x, y + 1, c);
                    loss += static_cast<double>(tv_weight) * d * d;
                    if (grad) {
                        grad->at(x, y, c) += 2.0f * tv_weight * d;
                        grad->at(x, y + 1, c) -= 2.0f * tv_weight * d;
                    }
                }
            }
        }
    return loss;
}

ImageU8 covered_mask(const TextureAtlas& coverage) {
    ImageU8 covered(coverage.resolution, coverage.resolution, 1, 0);
    for (size_t i = 0; i < coverage.texels.data.size(); ++i)
        covered.data[i] = coverage.texels.data[i] > 0.0f ? 1 : 0;
    return covered;
}

}  // namespace

double project_back_loss(const ProjectBackProblem& problem,
                         const std::vector<RenderBuffers>& buffers, const TextureAtlas& atlas,
                         const ImageU8& covered) {
    double loss = 0.0;
    for (size_t i = 0; i < problem.views.size(); ++i) {
        const ViewTarget& vt = problem.views[i];
        const RenderBuffers& b = buffers[i];
        for (int y = 0; y < b.height; ++y)
            for (int x = 0; x < b.width; ++x) {
                if (!b.foreground(x, y)) continue;
                const float w = vt.pixel_weights.at(x, y);
                if (w == 0.0f) continue;
                double px_sq = 0.0;
                for (int c = 0; c < atlas.channels; ++c) {
                    const float s = sample_atlas(atlas, b.uv.at(x, y, 0), b.uv.at(x, y, 1), c);
                    const float r = s - vt.target.at(x, y, c);
                    px_sq += static_cast<double>(r) * r;
                }
                loss += problem.loss.data_weight * w * px_sq;
            }
    }
    loss += add_tv_gradient(atlas, covered, problem.loss.tv_weight, nullptr);
    return loss;
}

ProjectBackResult project_back(const ProjectBackProblem& problem) {
    const std::vector<ViewWorkspace> work = prepare_views(problem);
    const int resolution = problem.atlas_resolution;
    const int channels = problem.views[0].target.channels;

    ProjectBackResult result;
    if (problem.initial_atlas) {
        if (problem.initial_atlas->resolution != resolution ||
            problem.initial_atlas->channels != channels)
            throw std::invalid_argument("project_back: initial atlas shape mismatch");
        result.atlas = *problem.initial_atlas;
    } else {
        result.atlas = TextureAtlas(resolution, channels, 0.5f);
    }

    CoveragePlanes planes = compute_coverage(work, resolution);
    result.coverage = std::move(planes.coverage);
    result.mean_weight = std::move(planes.mean_weight);
    ImageU8 covered = covered_mask(result.coverage);
    if (problem.frozen_texels) {
        for (size_t i = 0; i < covered.data.size(); ++i)
            if (problem.frozen_texels->data[i]) covered.data[i] = 0;
    }

    size_t covered_count = 0;
    for (uint8_t c : covered_mask(result.coverage).data) covered_count += c;
    result.report.covered_texel_fraction =
        static_cast<double>(covered_count) / static_cast<double>(resolution) * (1.0 / resolution);

    const size_t n = result.atlas.texels.data.size();
    std::vector<float> adam_m(n, 0.0f), adam_v(n, 0.0f);
    const float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
    float lr = problem.optimizer.step;
    const int decay_start =
        static_cast<int>(problem.optimizer.decay_start_fraction * problem.optimizer.iterations);

    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    const size_t n_threads = problem.optimizer.threads > 0
                                 ? static_cast<size_t>(problem.optimizer.threads)
                                 : std::min<size_t>(work.size(), hw);

    double prev_loss = std::numeric_limits<double>::infinity();
    int rising_streak = 0;

    for (int iter = 0; iter < problem.optimizer.iterations; ++iter) {
        // Per-view passes, merged in view order so the gradient is
        // independent of the thread schedule.
        std::vector<ViewPass> passes(work.size());
        if (n_threads <= 1) {
            for (size_t i = 0; i < work.size(); ++i)
                passes[i] = view_pass(problem.views[i], work[i], result.atlas,
                                      problem.loss.data_weight);
        } else {
            std::vector<std::future<ViewPass>> futures;
            futures.reserve(work.size());
            for (size_t i = 0; i < work.size(); ++i)
                futures.push_back(std::async(std::launch::async, [&, i] {
                    return view_pass(problem.views[i], work[i], result.atlas,
                                     problem.loss.data_weight);
                }));
            for (size_t i = 0; i < work.size(); ++i) passes[i] = futures[i].get();
        }

        double loss = 0.0;
        SplatAccumulator grad_accum(resolution, channels);
        result.report.per_view_weighted_rmse.assign(work.size(), 0.0);
        for (size_t i = 0; i < work.size(); ++i) {
            loss += passes[i].data_loss;
            grad_accum.merge(passes[i].gradient);
            result.report.per_view_weighted_rmse[i] =
                passes[i].weight_sum > 0.0
                    ? std::sqrt(passes[i].weighted_sq_error / passes[i].weight_sum)
                    : 0.0;
        }
        ImageF& grad = grad_accum.value.texels;
        loss += add_tv_gradient(result.atlas, covered, problem.loss.tv_weight, &grad);

        result.report.final_loss = loss;
        result.report.iterations_used = iter + 1;
        if (loss > prev_loss) {
            if (++rising_streak >= 10) {
                result.report.diverged = true;
                break;
            }
        } else {
            rising_streak = 0;
        }
        prev_loss = loss;

        if (iter >= decay_start) lr *= problem.optimizer.decay_rate;
        const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(iter + 1));
        const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(iter + 1));
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                if (!covered.at(x, y)) continue;  // uncovered/frozen texels never move
                for (int c = 0; c < channels; ++c) {
                    const size_t t = result.atlas.texels.index(x, y, c);
                    const float g = grad.data[t];
                    adam_m[t] = beta1 * adam_m[t] + (1.0f - beta1) * g;
                    adam_v[t] = beta2 * adam_v[t] + (1.0f - beta2) * g * g;
                    const float m_hat = adam_m[t] / bc1;
                    const float v_hat = adam_v[t] / bc2;
                    result.atlas.texels.data[t] -= lr * m_hat / (std::sqrt(v_hat) + eps);
                }
            }
    }
    return result;
}

ProjectBackResult sequential_project_back(const ProjectBackProblem& problem,
                                          const SequentialOptions& options) {
    if (!problem.mesh) throw std::invalid_argument("sequential_project_back: no mesh");
    if (problem.views.empty())
        throw std::invalid_argument("sequential_project_back: needs at least one view");

    const int resolution = problem.atlas_resolution;
    const int channels = problem.views[0].target.channels;

    TextureAtlas atlas = problem.initial_atlas ? *problem.initial_atlas
                                               : TextureAtlas(resolution, channels, 0.5f);
    TextureAtlas znormal_cache(resolution, 1, 0.0f);
    SplatAccumulator total_coverage(resolution, 1);
    ProjectBackReport last_report;

    for (const ViewTarget& vt : problem.views) {
        const RenderBuffers buffers = rasterize_buffers(*problem.mesh, vt.viewpoint);
        const int size = vt.viewpoint.image_size;

        // Project the cache to the screen and gate supervision by the
        // keep/refine/generate policy: only new or improved regions re-learn.
        ImageF cached(size, size, 1, 0.0f);
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x)
                if (buffers.foreground(x, y))
                    cached.at(x, y) = sample_atlas(znormal_cache, buffers.uv.at(x, y, 0),
                                                   buffers.uv.at(x, y, 1), 0);
        const KeepRefineGenerate krg =
            keep_refine_generate(buffers.object_mask, buffers.znormal, cached, options.thresholds);

        ImageF gated = vt.pixel_weights;
        bool any = false;
        for (int y = 0; y < size; ++y)
            for (int x = 0; x < size; ++x) {
                const bool learn = krg.generate.mask.at(x, y) || krg.refine.mask.at(x, y);
                if (!learn) gated.at(x, y) = 0.0f;
                else if (gated.at(x, y) > 0.0f) any = true;
            }
        if (!any) continue;  // fully kept view contributes nothing

        ProjectBackProblem sub;
        sub.mesh = problem.mesh;
        sub.views = {ViewTarget{vt.viewpoint, vt.target, gated}};
        sub.atlas_resolution = resolution;
        sub.loss = problem.loss;
        sub.optimizer = problem.optimizer;
        sub.initial_atlas = atlas;
        sub.frozen_texels = problem.frozen_texels;
        ProjectBackResult step = project_back(sub);
        atlas = std::move(step.atlas);
        last_report = step.report;

        // Fold this view into the z-normal cache and the coverage plane.
        SplatAccumulator znormal_splat(resolution, 1);
        splat_to_atlas(buffers, buffers.znormal, gated, znormal_splat);
        for (int y = 0; y < resolution; ++y)
            for (int x = 0; x < resolution; ++x) {
                const float w = znormal_splat.weight.at(x, y);
                if (w > options.cache_coverage_threshold) {
                    const float z = znormal_splat.value.at(x, y) / w;
                    znormal_cache.at(x, y) = std::max(znormal_cache.at(x, y), z);
                }
            }
        total_coverage.merge(znormal_splat);
    }

    ProjectBackResult result;
    result.atlas = std::move(atlas);
    result.coverage = total_coverage.weight;
    result.report = last_report;
    return result;
}

double atlas_psnr(const TextureAtlas& a, const TextureAtlas& b, const TextureAtlas& coverage,
                  float coverage_threshold) {
    double sq_sum = 0.0;
    size_t count = 0;
    for (int y = 0; y < a.resolution; ++y)
        for (int x = 0; x < a.resolution; ++x) {
            if (coverage.at(x, y) <= coverage_threshold) continue;
            for (int c = 0; c < a.channels; ++c) {
                const double d = static_cast<double>(a.at(x, y, c)) - b.at(x, y, c);
                sq_sum += d * d;
                ++count;
            }
        }
    if (count == 0) return 0.0;
    const double mse = sq_sum / static_cast<double>(count);
    if (mse <= 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / mse);
}

}  // namespace atlasforge
