// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace atlasforge {

// ---------------------------------------------------------------------------
// Small vector/matrix math. The rasterizer and camera model only need 3D/4D
// arithmetic, so we keep these as plain aggregates instead of pulling in a
// linear algebra package.
// ---------------------------------------------------------------------------

struct Vec2 {
    float x = 0.0f, y = 0.0f;
};

struct Vec3 {
    float x = 0.0f, y = 0.0f, z = 0.0f;
};

struct Vec4 {
    float x = 0.0f, y = 0.0f, z = 0.0f, w = 0.0f;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(float s, Vec2 a) { return {s * a.x, s * a.y}; }

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(float s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline Vec3 operator-(Vec3 a) { return {-a.x, -a.y, -a.z}; }

inline float dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline float length(Vec3 a) { return std::sqrt(dot(a, a)); }
inline Vec3 normalized(Vec3 a) {
    const float len = length(a);
    return len > 0.0f ? (1.0f / len) * a : Vec3{0, 0, 0};
}

// Row-major 4x4 transform.
struct Mat4 {
    float m[16] = {};

    static Mat4 identity() {
        Mat4 r;
        r.m[0] = r.m[5] = r.m[10] = r.m[15] = 1.0f;
        return r;
    }

    float& at(int row, int col) { return m[row * 4 + col]; }
    float at(int row, int col) const { return m[row * 4 + col]; }
};

inline Mat4 operator*(const Mat4& a, const Mat4& b) {
    Mat4 r;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
            float s = 0.0f;
            for (int k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
            r.at(i, j) = s;
        }
    return r;
}

inline Vec4 operator*(const Mat4& a, Vec4 v) {
    return {
        a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z + a.m[3] * v.w,
        a.m[4] * v.x + a.m[5] * v.y + a.m[6] * v.z + a.m[7] * v.w,
        a.m[8] * v.x + a.m[9] * v.y + a.m[10] * v.z + a.m[11] * v.w,
        a.m[12] * v.x + a.m[13] * v.y + a.m[14] * v.z + a.m[15] * v.w,
    };
}

// Applies only the rotational part (upper-left 3x3). Valid for transforming
// directions by rigid view matrices.
inline Vec3 rotate(const Mat4& a, Vec3 v) {
    return {
        a.m[0] * v.x + a.m[1] * v.y + a.m[2] * v.z,
        a.m[4] * v.x + a.m[5] * v.y + a.m[6] * v.z,
        a.m[8] * v.x + a.m[9] * v.y + a.m[10] * v.z,
    };
}

inline Vec3 transform_point(const Mat4& a, Vec3 p) {
    const Vec4 r = a * Vec4{p.x, p.y, p.z, 1.0f};
    return {r.x, r.y, r.z};
}

constexpr double kPi = 3.14159265358979323846;

inline float deg_to_rad(float deg) { return static_cast<float>(deg * kPi / 180.0); }

template <typename T>
T clamp(T v, T lo, T hi) {
    return v < lo ? lo : (v > hi ? hi : v);
}

// ---------------------------------------------------------------------------
// Dense row-major raster with interleaved channels. Shared by render buffers,
// texture atlases, latents and masks.
// ---------------------------------------------------------------------------

template <typename T>
struct Image {
    int width = 0;
    int height = 0;
    int channels = 1;
    std::vector<T> data;

    Image() = default;
    Image(int w, int h, int c, T fill_value = T{})
        : width(w), height(h), channels(c),
          data(static_cast<size_t>(w) * h * c, fill_value) {}

    bool empty() const { return data.empty(); }
    size_t index(int x, int y, int c = 0) const {
        return (static_cast<size_t>(y) * width + x) * channels + c;
    }
    T& at(int x, int y, int c = 0) { return data[index(x, y, c)]; }
    const T& at(int x, int y, int c = 0) const { return data[index(x, y, c)]; }

    void fill(T v) { std::fill(data.begin(), data.end(), v); }

    bool same_shape(const Image& other) const {
        return width == other.width && height == other.height && channels == other.channels;
    }
};

using ImageF = Image<float>;
using ImageU8 = Image<uint8_t>;
using ImageI32 = Image<int32_t>;

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// gaussian uses an explicit Box-Muller, so streams are reproducible across
// compilers for a given seed.
// ---------------------------------------------------------------------------

class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    uint64_t next_u64() {
        // xorshift* generator; period 2^64-1.
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545f4914f6cdd1dull;
    }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * kPi * u2);
        have_spare_ = true;
        return r * std::cos(2.0 * kPi * u2);
    }

private:
    uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Error types. I/O and protocol failures carry enough context to identify the
// offending file or endpoint.
// ---------------------------------------------------------------------------

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct MeshError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProtocolError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TransportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace atlasforge
