// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/metatex.hpp"

#include <algorithm>
#include <cmath>

namespace atlasforge {

MetaTexture learn_max_znormals(const Mesh& mesh, const std::vector<Viewpoint>& views,
                               int resolution, const MetaOptConfig& opt,
                               MetaTrainReport* report) {
    std::vector<RenderBuffers> buffers;
    std::vector<std::vector<float>> face_nz;
    buffers.reserve(views.size());
    face_nz.reserve(views.size());
    for (const Viewpoint& v : views) {
        buffers.push_back(rasterize_buffers(mesh, v));
        face_nz.push_back(face_camera_znormals(mesh, v));
    }
    return learn_max_znormals(buffers, face_nz, resolution, opt, report);
}

MetaTexture learn_max_znormals(const std::vector<RenderBuffers>& buffers,
                               const std::vector<std::vector<float>>& /*face_znormals*/,
                               int resolution, const MetaOptConfig& opt,
                               MetaTrainReport* report) {
    MetaTexture meta;
    meta.atlas = TextureAtlas(resolution, 1, 0.0f);

    size_t foreground_total = 0;
    for (const RenderBuffers& b : buffers)
        for (uint8_t m : b.object_mask.data) foreground_total += m;

    const size_t n_texels = meta.atlas.texels.data.size();
    std::vector<float> grad(n_texels);
    std::vector<float> adam_m(n_texels, 0.0f);
    std::vector<float> adam_v(n_texels, 0.0f);
    const float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;

    MetaTrainReport local;
    float lr = opt.step;
    const int decay_start = static_cast<int>(opt.decay_start_fraction * opt.max_iterations);

    for (int iter = 0; iter < opt.max_iterations; ++iter) {
        std::fill(grad.begin(), grad.end(), 0.0f);
        double hinge_sum = 0.0;

        for (const RenderBuffers& b : buffers) {
            for (int y = 0; y < b.height; ++y)
                for (int x = 0; x < b.width; ++x) {
                    if (!b.foreground(x, y)) continue;
                    const BilinearFootprint fp =
                        bilinear_footprint(b.uv.at(x, y, 0), b.uv.at(x, y, 1), resolution);
                    const float sampled = sample_footprint(meta.atlas, fp, 0);
                    const float violation = b.znormal.at(x, y) - sampled;
                    if (violation > 0.0f) {
                        hinge_sum += violation;
                        for (int k = 0; k < 4; ++k)
                            grad[meta.atlas.texels.index(fp.x[k], fp.y[k])] -= fp.weight[k];
                    }
                }
        }

        double l2_sum = 0.0;
        for (size_t t = 0; t < n_texels; ++t) {
            const float n_t = meta.atlas.texels.data[t];
            l2_sum += static_cast<double>(n_t) * n_t;
            grad[t] += 2.0f * opt.l2_weight * n_t;
        }

        local.final_loss = hinge_sum + opt.l2_weight * l2_sum;
        local.mean_violation =
            foreground_total > 0 ? hinge_sum / static_cast<double>(foreground_total) : 0.0;
        local.iterations = iter + 1;
        if (local.mean_violation < opt.tol_mean_violation && iter > 0) {
            local.converged = true;
            break;
        }

        if (iter >= decay_start) lr *= opt.decay_rate;
        const float bc1 = 1.0f - std::pow(beta1, static_cast<float>(iter + 1));
        const float bc2 = 1.0f - std::pow(beta2, static_cast<float>(iter + 1));
        for (size_t t = 0; t < n_texels; ++t) {
            const float g = grad[t];
            adam_m[t] = beta1 * adam_m[t] + (1.0f - beta1) * g;
            adam_v[t] = beta2 * adam_v[t] + (1.0f - beta2) * g * g;
            const float m_hat = adam_m[t] / bc1;
            const float v_hat = adam_v[t] / bc2;
            meta.atlas.texels.data[t] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
    }

    if (report) *report = local;
    return meta;
}

namespace {

// Texel centers covered by the UV triangle, inclusive of edges.
template <typename Fn>
void rasterize_uv_triangle(Vec2 a, Vec2 b, Vec2 c, int resolution, Fn&& emit) {
    const float r = static_cast<float>(resolution);
    const Vec2 pa{a.x * r - 0.5f, a.y * r - 0.5f};
    const Vec2 pb{b.x * r - 0.5f, b.y * r - 0.5f};
    const Vec2 pc{c.x * r - 0.5f, c.y * r - 0.5f};
    const float area = (pb.x - pa.x) * (pc.y - pa.y) - (pb.y - pa.y) * (pc.x - pa.x);
    if (area == 0.0f) return;
    const int min_x = std::max(0, static_cast<int>(std::floor(std::min({pa.x, pb.x, pc.x}))));
    const int max_x = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({pa.x, pb.x, pc.x}))));
    const int min_y = std::max(0, static_cast<int>(std::floor(std::min({pa.y, pb.y, pc.y}))));
    const int max_y = std::min(resolution - 1, static_cast<int>(std::ceil(std::max({pa.y, pb.y, pc.y}))));
    const float inv_area = 1.0f / area;
    for (int y = min_y; y <= max_y; ++y)
        for (int x = min_x; x <= max_x; ++x) {
            const float px = static_cast<float>(x);
            const float py = static_cast<float>(y);
            const float w0 = ((pc.x - pb.x) * (py - pb.y) - (pc.y - pb.y) * (px - pb.x)) * inv_area;
            const float w1 = ((pa.x - pc.x) * (py - pc.y) - (pa.y - pc.y) * (px - pc.x)) * inv_area;
            const float w2 = 1.0f - w0 - w1;
            if (w0 < 0.0f || w1 < 0.0f || w2 < 0.0f) continue;
            emit(x, y);
        }
}

}  // namespace

std::vector<std::vector<uint8_t>> face_visibility(const std::vector<RenderBuffers>& buffers,
                                                  size_t face_count) {
    std::vector<std::vector<uint8_t>> visible(buffers.size(),
                                              std::vector<uint8_t>(face_count, 0));
    for (size_t v = 0; v < buffers.size(); ++v)
        for (int32_t f : buffers[v].face_index.data)
            if (f >= 0) visible[v][static_cast<size_t>(f)] = 1;
    return visible;
}

OracleResult oracle_max_znormals(const Mesh& mesh, const std::vector<Viewpoint>& views,
                                 int resolution) {
    std::vector<RenderBuffers> buffers;
    std::vector<std::vector<float>> face_nz;
    for (const Viewpoint& v : views) {
        buffers.push_back(rasterize_buffers(mesh, v));
        face_nz.push_back(face_camera_znormals(mesh, v));
    }
    const std::vector<std::vector<uint8_t>> visible = face_visibility(buffers, mesh.faces.size());

    OracleResult out;
    out.meta.atlas = TextureAtlas(resolution, 1, 0.0f);
    out.covered = ImageU8(resolution, resolution, 1, 0);
    out.owner_face = ImageI32(resolution, resolution, 1, -1);

    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        float best = 0.0f;
        bool seen = false;
        for (size_t v = 0; v < views.size(); ++v) {
            if (!visible[v][f]) continue;
            if (face_nz[v][f] <= 0.0f) continue;
            best = std::max(best, face_nz[v][f]);
            seen = true;
        }
        if (!seen) continue;

        const Vec2 a = mesh.uvs[mesh.faces[f][0].uv];
        const Vec2 b = mesh.uvs[mesh.faces[f][1].uv];
        const Vec2 c = mesh.uvs[mesh.faces[f][2].uv];
        rasterize_uv_triangle(a, b, c, resolution, [&](int x, int y) {
            if (out.covered.at(x, y)) {
                ++out.overlap_warnings;
                if (best > out.meta.atlas.at(x, y)) {
                    out.meta.atlas.at(x, y) = best;
                    out.owner_face.at(x, y) = static_cast<int32_t>(f);
                }
            } else {
                out.covered.at(x, y) = 1;
                out.meta.atlas.at(x, y) = best;
                out.owner_face.at(x, y) = static_cast<int32_t>(f);
            }
        });
    }
    return out;
}

double texel_hinge_loss(const MetaTexture& meta, const OracleResult& oracle,
                        const std::vector<std::vector<float>>& face_znormals,
                        const std::vector<std::vector<uint8_t>>& face_visible) {
    double loss = 0.0;
    const int r = meta.atlas.resolution;
    for (int y = 0; y < r; ++y)
        for (int x = 0; x < r; ++x) {
            if (!oracle.covered.at(x, y)) continue;
            const int32_t f = oracle.owner_face.at(x, y);
            if (f < 0) continue;
            for (size_t v = 0; v < face_znormals.size(); ++v) {
                if (!face_visible[v][static_cast<size_t>(f)]) continue;
                const float n = face_znormals[v][static_cast<size_t>(f)];
                if (n <= 0.0f) continue;
                const float violation = n - meta.atlas.at(x, y);
                if (violation > 0.0f) loss += violation;
            }
        }
    return loss;
}

ImageF view_weights(const MetaTexture& meta, const RenderBuffers& buffers, float alpha) {
    ImageF weights(buffers.width, buffers.height, 1, 0.0f);
    for (int y = 0; y < buffers.height; ++y)
        for (int x = 0; x < buffers.width; ++x) {
            if (!buffers.foreground(x, y)) continue;
            const float sampled =
                sample_atlas(meta.atlas, buffers.uv.at(x, y, 0), buffers.uv.at(x, y, 1), 0);
            const float gap = std::abs(sampled - buffers.znormal.at(x, y));
            weights.at(x, y) = std::exp(-alpha * gap);
        }
    return weights;
}

HingeStats hinge_stats(const MetaTexture& meta, const std::vector<RenderBuffers>& buffers) {
    HingeStats stats;
    for (const RenderBuffers& b : buffers)
        for (int y = 0; y < b.height; ++y)
            for (int x = 0; x < b.width; ++x) {
                if (!b.foreground(x, y)) continue;
                ++stats.foreground_pixels;
                const float sampled =
                    sample_atlas(meta.atlas, b.uv.at(x, y, 0), b.uv.at(x, y, 1), 0);
                const float violation = b.znormal.at(x, y) - sampled;
                if (violation > 0.0f) stats.total_violation += violation;
            }
    stats.mean_violation = stats.foreground_pixels > 0
                               ? stats.total_violation / static_cast<double>(stats.foreground_pixels)
                               : 0.0;
    return stats;
}

}  // namespace atlasforge
