// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#include "atlasforge/image_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>

namespace atlasforge {

namespace {

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

struct MemorySource {
    const uint8_t* data;
    size_t size;
    size_t offset;
};

void memory_read_fn(png_structp png, png_bytep out, png_size_t count) {
    auto* src = static_cast<MemorySource*>(png_get_io_ptr(png));
    if (src->offset + count > src->size) {
        png_error(png, "unexpected end of PNG stream");
    }
    std::memcpy(out, src->data + src->offset, count);
    src->offset += count;
}

void memory_write_fn(png_structp png, png_bytep data, png_size_t count) {
    auto* out = static_cast<std::vector<uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + count);
}

void memory_flush_fn(png_structp) {}

ImageF read_png_struct(PngReader& r, const std::string& what) {
    if (setjmp(png_jmpbuf(r.png))) {
        throw IoError("failed to decode PNG: " + what);
    }
    png_read_info(r.png, r.info);

    const png_uint_32 w = png_get_image_width(r.png, r.info);
    const png_uint_32 h = png_get_image_height(r.png, r.info);
    const int bit_depth = png_get_bit_depth(r.png, r.info);
    const int color_type = png_get_color_type(r.png, r.info);

    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    png_set_strip_alpha(r.png);
    if (bit_depth == 16) png_set_swap(r.png);  // little-endian samples in memory
    png_read_update_info(r.png, r.info);

    const int out_channels = png_get_channels(r.png, r.info);
    const int out_depth = png_get_bit_depth(r.png, r.info);
    const size_t stride = png_get_rowbytes(r.png, r.info);

    std::vector<uint8_t> rows(static_cast<size_t>(h) * stride);
    std::vector<png_bytep> row_ptrs(h);
    for (png_uint_32 y = 0; y < h; ++y) row_ptrs[y] = rows.data() + y * stride;
    png_read_image(r.png, row_ptrs.data());
    png_read_end(r.png, nullptr);

    ImageF image(static_cast<int>(w), static_cast<int>(h), out_channels == 1 ? 1 : 3);
    for (png_uint_32 y = 0; y < h; ++y) {
        const uint8_t* row = rows.data() + y * stride;
        for (png_uint_32 x = 0; x < w; ++x) {
            for (int c = 0; c < image.channels; ++c) {
                float v;
                if (out_depth == 16) {
                    uint16_t s;
                    std::memcpy(&s, row + (x * out_channels + c) * 2, 2);
                    v = static_cast<float>(s) / 65535.0f;
                } else {
                    v = static_cast<float>(row[x * out_channels + c]) / 255.0f;
                }
                image.at(static_cast<int>(x), static_cast<int>(y), c) = v;
            }
        }
    }
    return image;
}

uint16_t to_u16(float v) {
    const float c = clamp(v, 0.0f, 1.0f);
    return static_cast<uint16_t>(c * 65535.0f + 0.5f);
}

uint8_t to_u8(float v) {
    const float c = clamp(v, 0.0f, 1.0f);
    return static_cast<uint8_t>(c * 255.0f + 0.5f);
}

void write_png_rows(PngWriter& w, const ImageF& image, int bit_depth) {
    const int color_type = image.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(w.png, w.info, image.width, image.height, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(w.png, w.info);

    if (bit_depth == 16) {
        std::vector<uint16_t> row(static_cast<size_t>(image.width) * image.channels);
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < image.channels; ++c)
                    row[static_cast<size_t>(x) * image.channels + c] = to_u16(image.at(x, y, c));
            png_set_swap(w.png);
            png_write_row(w.png, reinterpret_cast<png_bytep>(row.data()));
        }
    } else {
        std::vector<uint8_t> row(static_cast<size_t>(image.width) * image.channels);
        for (int y = 0; y < image.height; ++y) {
            for (int x = 0; x < image.width; ++x)
                for (int c = 0; c < image.channels; ++c)
                    row[static_cast<size_t>(x) * image.channels + c] = to_u8(image.at(x, y, c));
            png_write_row(w.png, row.data());
        }
    }
    png_write_end(w.png, nullptr);
}

struct FileHandle {
    FILE* f = nullptr;
    explicit FileHandle(FILE* file) : f(file) {}
    ~FileHandle() {
        if (f) std::fclose(f);
    }
};

}  // namespace

ImageF read_png(const std::string& path) {
    FileHandle fh(std::fopen(path.c_str(), "rb"));
    if (!fh.f) throw IoError("cannot open PNG file: " + path);

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info) throw IoError("libpng init failed");
    png_init_io(r.png, fh.f);
    return read_png_struct(r, path);
}

ImageF decode_png(const std::vector<uint8_t>& bytes) {
    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    r.info = png_create_info_struct(r.png);
    if (!r.png || !r.info) throw IoError("libpng init failed");
    MemorySource src{bytes.data(), bytes.size(), 0};
    png_set_read_fn(r.png, &src, memory_read_fn);
    return read_png_struct(r, "<memory>");
}

void write_png8(const std::string& path, const ImageF& image) {
    if (image.channels != 1 && image.channels != 3)
        throw IoError("write_png8 expects 1 or 3 channels");
    FileHandle fh(std::fopen(path.c_str(), "wb"));
    if (!fh.f) throw IoError("cannot open PNG file for writing: " + path);

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw IoError("failed to encode PNG: " + path);
    png_init_io(w.png, fh.f);
    write_png_rows(w, image, 8);
}

void write_png16(const std::string& path, const ImageF& image) {
    if (image.channels != 1) throw IoError("write_png16 expects a single channel");
    FileHandle fh(std::fopen(path.c_str(), "wb"));
    if (!fh.f) throw IoError("cannot open PNG file for writing: " + path);

    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw IoError("failed to encode PNG: " + path);
    png_init_io(w.png, fh.f);
    write_png_rows(w, image, 16);
}

std::vector<uint8_t> encode_png8(const ImageF& image) {
    if (image.channels != 1 && image.channels != 3)
        throw IoError("encode_png8 expects 1 or 3 channels");
    PngWriter w;
    w.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    w.info = png_create_info_struct(w.png);
    if (!w.png || !w.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(w.png))) throw IoError("failed to encode PNG to memory");
    std::vector<uint8_t> out;
    png_set_write_fn(w.png, &out, memory_write_fn, memory_flush_fn);
    write_png_rows(w, image, 8);
    return out;
}

// ---------------------------------------------------------------------------
// CTXB
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'C', 'T', 'X', 'B'};

void write_ctxb_raw(const std::string& path, int width, int height, int channels,
                    CtxbDtype dtype, const void* payload, size_t payload_size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open CTXB file for writing: " + path);
    const uint32_t header[4] = {static_cast<uint32_t>(width), static_cast<uint32_t>(height),
                                static_cast<uint32_t>(dtype), static_cast<uint32_t>(channels)};
    out.write(kMagic, 4);
    out.write(reinterpret_cast<const char*>(header), sizeof(header));
    out.write(static_cast<const char*>(payload), static_cast<std::streamsize>(payload_size));
    if (!out) throw IoError("short write on CTXB file: " + path);
}

struct CtxbHeader {
    uint32_t width, height, dtype, channels;
};

CtxbHeader read_ctxb_header(std::ifstream& in, const std::string& path) {
    char magic[4];
    CtxbHeader h{};
    in.read(magic, 4);
    in.read(reinterpret_cast<char*>(&h), sizeof(h));
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("not a CTXB file: " + path);
    return h;
}

template <typename T>
Image<T> read_ctxb_payload(const std::string& path, CtxbDtype expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open CTXB file: " + path);
    const CtxbHeader h = read_ctxb_header(in, path);
    if (h.dtype != static_cast<uint32_t>(expect))
        throw IoError("CTXB dtype mismatch in " + path);
    Image<T> image(static_cast<int>(h.width), static_cast<int>(h.height),
                   static_cast<int>(h.channels));
    in.read(reinterpret_cast<char*>(image.data.data()),
            static_cast<std::streamsize>(image.data.size() * sizeof(T)));
    if (!in) throw IoError("truncated CTXB file: " + path);
    return image;
}

}  // namespace

void write_ctxb(const std::string& path, const ImageU8& image) {
    write_ctxb_raw(path, image.width, image.height, image.channels, CtxbDtype::U8,
                   image.data.data(), image.data.size());
}

void write_ctxb(const std::string& path, const ImageI32& image) {
    write_ctxb_raw(path, image.width, image.height, image.channels, CtxbDtype::I32,
                   image.data.data(), image.data.size() * sizeof(int32_t));
}

void write_ctxb(const std::string& path, const ImageF& image) {
    write_ctxb_raw(path, image.width, image.height, image.channels, CtxbDtype::F32,
                   image.data.data(), image.data.size() * sizeof(float));
}

CtxbDtype peek_ctxb_dtype(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open CTXB file: " + path);
    return static_cast<CtxbDtype>(read_ctxb_header(in, path).dtype);
}

ImageU8 read_ctxb_u8(const std::string& path) { return read_ctxb_payload<uint8_t>(path, CtxbDtype::U8); }
ImageI32 read_ctxb_i32(const std::string& path) { return read_ctxb_payload<int32_t>(path, CtxbDtype::I32); }
ImageF read_ctxb_f32(const std::string& path) { return read_ctxb_payload<float>(path, CtxbDtype::F32); }

}  // namespace atlasforge
