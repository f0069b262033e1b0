// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#ifndef VGLOC_IMAGE_HPP
#define VGLOC_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace vgloc {

/// Single-channel 8-bit intensity image.
struct GrayImage {
  int w = 0, h = 0;
  std::vector<uint8_t> pixels;  // row-major

  GrayImage() = default;
  GrayImage(int width, int height, uint8_t fill = 0)
      : w(width), h(height), pixels(static_cast<size_t>(width) * height, fill) {}

  uint8_t& at(int u, int v) { return pixels[static_cast<size_t>(v) * w + u]; }
  uint8_t at(int u, int v) const { return pixels[static_cast<size_t>(v) * w + u]; }

  bool operator==(const GrayImage& o) const = default;
};

GrayImage crop(const GrayImage& img, int x, int y, int w, int h);
GrayImage bilinear_resize(const GrayImage& img, int w, int h);

// PGM (P5 binary, maxval 255).
void write_pgm(const std::string& path, const GrayImage& img);
GrayImage read_pgm(const std::string& path);

// 8-bit grayscale PNG.
void write_png_gray(const std::string& path, const GrayImage& img);
GrayImage read_png_gray(const std::string& path);

/// Dispatch on extension (.pgm/.png).
void write_image(const std::string& path, const GrayImage& img);
GrayImage read_image(const std::string& path);

}  // namespace vgloc

#endif  // VGLOC_IMAGE_HPP
