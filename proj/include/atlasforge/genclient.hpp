// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"

#include <memory>
#include <string>
#include <vector>

namespace atlasforge {

enum class GenKind { Front, Grid };

// Request for the external image source. Front requests carry the front
// depth map; grid requests additionally carry the condition image Q0.
struct GenRequest {
    GenKind kind = GenKind::Front;
    std::string prompt;
    std::string view_suffix = ", front view";
    std::vector<uint8_t> depth_png;
    std::vector<uint8_t> condition_png;  // grid only
    uint64_t seed = 0;
    int steps = 36;
    int expected_width = 0;  // response must match when > 0
    int expected_height = 0;
};

struct GenResponse {
    std::vector<uint8_t> image_png;
    std::string backend_id;
    int steps = 0;
    uint64_t seed = 0;
};

class GeneratorBackend {
public:
    virtual ~GeneratorBackend() = default;
    virtual GenResponse fetch_front(const GenRequest& req) = 0;
    virtual GenResponse fetch_grid(const GenRequest& req) = 0;
    virtual std::string id() const = 0;
};

// Serves images verbatim from a directory:
//   <dir>/front.png
//   <dir>/grid.png             (or view_01.png .. view_06.png, pre-split)
// Pure and deterministic; the whole pipeline must complete against it with
// no network access.
class FixtureBackend : public GeneratorBackend {
public:
    explicit FixtureBackend(std::string dir, int tile_size = 0);
    GenResponse fetch_front(const GenRequest& req) override;
    GenResponse fetch_grid(const GenRequest& req) override;
    std::string id() const override { return "fixture:" + dir_; }

private:
    std::string dir_;
    int tile_size_;
};

// HTTP client for POST /generate/front and /generate/grid. JSON body
//   {prompt, seed, steps, depth_png_b64, condition_png_b64?}
// response
//   {image_png_b64, metadata}
// Transport failures retry with a bounded budget; dimension mismatches are
// protocol errors.
class HttpBackend : public GeneratorBackend {
public:
    explicit HttpBackend(std::string url, int timeout_seconds = 120, int max_attempts = 3);
    GenResponse fetch_front(const GenRequest& req) override;
    GenResponse fetch_grid(const GenRequest& req) override;
    std::string id() const override { return "http:" + url_; }

private:
    GenResponse post(const std::string& path, const GenRequest& req);
    std::string url_;
    int timeout_seconds_;
    int max_attempts_;
};

// "fixture:<dir>" or "http://host:port".
std::unique_ptr<GeneratorBackend> make_backend(const std::string& spec, int tile_size = 0);

// Checks decoded dimensions against the request expectation.
void validate_response_dims(const GenRequest& req, const GenResponse& resp);

std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(const std::string& text);

}  // namespace atlasforge
