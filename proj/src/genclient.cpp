// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/genclient.hpp"

#include "atlasforge/gridops.hpp"
#include "atlasforge/image_io.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <thread>

namespace atlasforge {

namespace {

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ProtocolError("fixture file missing: " + path);
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(in),
                                std::istreambuf_iterator<char>());
}

}  // namespace

void validate_response_dims(const GenRequest& req, const GenResponse& resp) {
    if (req.expected_width <= 0 && req.expected_height <= 0) return;
    const ImageF decoded = decode_png(resp.image_png);
    if ((req.expected_width > 0 && decoded.width != req.expected_width) ||
        (req.expected_height > 0 && decoded.height != req.expected_height))
        throw ProtocolError("generator returned " + std::to_string(decoded.width) + "x" +
                            std::to_string(decoded.height) + ", expected " +
                            std::to_string(req.expected_width) + "x" +
                            std::to_string(req.expected_height));
}

FixtureBackend::FixtureBackend(std::string dir, int tile_size)
    : dir_(std::move(dir)), tile_size_(tile_size) {}

GenResponse FixtureBackend::fetch_front(const GenRequest& req) {
    GenResponse resp;
    resp.image_png = read_file_bytes(dir_ + "/front.png");
    resp.backend_id = id();
    resp.steps = req.steps;
    resp.seed = req.seed;
    validate_response_dims(req, resp);
    return resp;
}

GenResponse FixtureBackend::fetch_grid(const GenRequest& req) {
    GenResponse resp;
    const std::string grid_path = dir_ + "/grid.png";
    if (std::filesystem::exists(grid_path)) {
        resp.image_png = read_file_bytes(grid_path);
    } else {
        // Pre-split alternative: view_01.png .. view_06.png assembled here.
        std::vector<ImageF> tiles;
        for (int i = 1; i <= 6; ++i) {
            char name[16];
            std::snprintf(name, sizeof(name), "view_%02d.png", i);
            const std::string path = dir_ + "/" + name;
            if (!std::filesystem::exists(path))
                throw ProtocolError("fixture file missing: " + grid_path + " (and " + path + ")");
            tiles.push_back(read_png(path));
        }
        GridLayout layout;
        layout.tile_size = tile_size_ > 0 ? tile_size_ : tiles[0].width;
        resp.image_png = encode_png8(assemble_grid(tiles, layout));
    }
    resp.backend_id = id();
    resp.steps = req.steps;
    resp.seed = req.seed;
    validate_response_dims(req, resp);
    return resp;
}

HttpBackend::HttpBackend(std::string url, int timeout_seconds, int max_attempts)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds), max_attempts_(max_attempts) {}

GenResponse HttpBackend::post(const std::string& path, const GenRequest& req) {
    nlohmann::json body{
        {"prompt", req.prompt + req.view_suffix},
        {"seed", req.seed},
        {"steps", req.steps},
        {"depth_png_b64", base64_encode(req.depth_png)},
    };
    if (req.kind == GenKind::Grid) body["condition_png_b64"] = base64_encode(req.condition_png);

    std::string last_error;
    for (int attempt = 0; attempt < max_attempts_; ++attempt) {
        if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(200 * attempt));
        httplib::Client client(url_);
        client.set_connection_timeout(timeout_seconds_, 0);
        client.set_read_timeout(timeout_seconds_, 0);
        auto res = client.Post(path, body.dump(), "application/json");
        if (!res) {
            last_error = httplib::to_string(res.error());
            continue;  // transport error, retry
        }
        if (res->status != 200)
            throw ProtocolError("generator returned HTTP " + std::to_string(res->status) +
                                " for " + path);
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(res->body);
        } catch (const nlohmann::json::exception& e) {
            throw ProtocolError(std::string("generator response is not JSON: ") + e.what());
        }
        if (!parsed.contains("image_png_b64"))
            throw ProtocolError("generator response missing image_png_b64");
        GenResponse resp;
        resp.image_png = base64_decode(parsed["image_png_b64"].get<std::string>());
        resp.backend_id = id();
        resp.steps = parsed.value("metadata", nlohmann::json::object()).value("steps", req.steps);
        resp.seed = req.seed;
        validate_response_dims(req, resp);
        return resp;
    }
    throw TransportError("generator unreachable after " + std::to_string(max_attempts_) +
                         " attempts: " + last_error);
}

GenResponse HttpBackend::fetch_front(const GenRequest& req) { return post("/generate/front", req); }
GenResponse HttpBackend::fetch_grid(const GenRequest& req) { return post("/generate/grid", req); }

std::unique_ptr<GeneratorBackend> make_backend(const std::string& spec, int tile_size) {
    if (spec.rfind("fixture:", 0) == 0)
        return std::make_unique<FixtureBackend>(spec.substr(8), tile_size);
    if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0)
        return std::make_unique<HttpBackend>(spec);
    throw std::invalid_argument("unknown backend spec: " + spec +
                                " (expected fixture:<dir> or http://...)");
}

namespace {
constexpr char kB64Alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const std::vector<uint8_t>& bytes) {
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    size_t i = 0;
    while (i + 3 <= bytes.size()) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back(kB64Alphabet[v & 63]);
        i += 3;
    }
    const size_t rem = bytes.size() - i;
    if (rem == 1) {
        const uint32_t v = bytes[i] << 16;
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back('=');
        out.push_back('=');
    } else if (rem == 2) {
        const uint32_t v = (bytes[i] << 16) | (bytes[i + 1] << 8);
        out.push_back(kB64Alphabet[(v >> 18) & 63]);
        out.push_back(kB64Alphabet[(v >> 12) & 63]);
        out.push_back(kB64Alphabet[(v >> 6) & 63]);
        out.push_back('=');
    }
    return out;
}

std::vector<uint8_t> base64_decode(const std::string& text) {
    auto value_of = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    std::vector<uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    uint32_t acc = 0;
    int bits = 0;
    for (char c : text) {
        if (c == '=' || c == '\n' || c == '\r') continue;
        const int v = value_of(c);
        if (v < 0) throw ProtocolError("invalid base64 payload");
        acc = (acc << 6) | static_cast<uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<uint8_t>((acc >> bits) & 0xff));
        }
    }
    return out;
}

}  // namespace atlasforge
