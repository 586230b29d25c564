// Copyright Contributors to the AtlasForge Project
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "atlasforge/core.hpp"

#include <string>

namespace atlasforge {

// Writes the self-contained "quadcard" demo case into `dir`:
//   card.obj   two-sided card mesh
//   front.png  fixture front view (warm pattern)
//   grid.png   fixture 2x3 six-view grid (cool pattern)
//   run.json   pipeline config wired to this directory
// Returns the path of the written run config.
std::string write_demo_fixture(const std::string& dir, int image_size = 256,
                               int atlas_resolution = 512);

// Smooth deterministic test pattern in [0,1]; used by fixtures and tests.
ImageF smooth_pattern(int width, int height, int channels, uint64_t seed, int cells = 8);

}  // namespace atlasforge
