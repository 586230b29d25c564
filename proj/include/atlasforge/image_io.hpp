// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"

#include <string>
#include <vector>

namespace atlasforge {

// PNG I/O. Float images use [0,1]; values outside are clamped on export.

// Reads an 8- or 16-bit PNG into a float image ([0,1], gray or RGB; alpha is
// dropped).
ImageF read_png(const std::string& path);

// Writes an 8-bit PNG. Accepts 1 (gray) or 3 (RGB) channels.
void write_png8(const std::string& path, const ImageF& image);

// Writes a single-channel image as 16-bit grayscale.
void write_png16(const std::string& path, const ImageF& image);

// Encodes to in-memory PNG bytes (8-bit), used by the generator client.
std::vector<uint8_t> encode_png8(const ImageF& image);
ImageF decode_png(const std::vector<uint8_t>& bytes);

// ---------------------------------------------------------------------------
// CTXB: raw buffer sidecar format. Little-endian header
//   magic "CTXB" | u32 width | u32 height | u32 dtype | u32 channels
// followed by row-major interleaved samples. dtype: 0 = u8, 1 = i32, 2 = f32.
// ---------------------------------------------------------------------------

enum class CtxbDtype : uint32_t { U8 = 0, I32 = 1, F32 = 2 };

void write_ctxb(const std::string& path, const ImageU8& image);
void write_ctxb(const std::string& path, const ImageI32& image);
void write_ctxb(const std::string& path, const ImageF& image);

CtxbDtype peek_ctxb_dtype(const std::string& path);
ImageU8 read_ctxb_u8(const std::string& path);
ImageI32 read_ctxb_i32(const std::string& path);
ImageF read_ctxb_f32(const std::string& path);

}  // namespace atlasforge
