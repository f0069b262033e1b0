// Copyright (c) 2026 The vgloc authors
// SPDX-License-Identifier: Apache-2.0

#include "vgloc/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "vgloc/error.hpp"

namespace vgloc {

GrayImage crop(const GrayImage& img, int x, int y, int w, int h) {
  require(x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= img.w &&
              y + h <= img.h,
          ErrorCode::DimensionMismatch, "crop window outside image");
  GrayImage out(w, h);
  for (int v = 0; v < h; ++v) {
    std::copy_n(&img.pixels[static_cast<size_t>(y + v) * img.w + x], w,
                &out.pixels[static_cast<size_t>(v) * w]);
  }
  return out;
}

GrayImage bilinear_resize(const GrayImage& img, int w, int h) {
  require(img.w >= 1 && img.h >= 1 && w >= 1 && h >= 1,
          ErrorCode::DimensionMismatch, "bad resize dims");
  if (w == img.w && h == img.h) return img;
  GrayImage out(w, h);
  const double sx = static_cast<double>(img.w) / w;
  const double sy = static_cast<double>(img.h) / h;
  for (int v = 0; v < h; ++v) {
    // pixel-center mapping
    double fy = (v + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.h - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.h - 1);
    const double wy = fy - y0;
    for (int u = 0; u < w; ++u) {
      double fx = (u + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.w - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.w - 1);
      const double wx = fx - x0;
      const double val = (1 - wy) * ((1 - wx) * img.at(x0, y0) + wx * img.at(x1, y0)) +
                         wy * ((1 - wx) * img.at(x0, y1) + wx * img.at(x1, y1));
      out.at(u, v) = static_cast<uint8_t>(std::lround(std::clamp(val, 0.0, 255.0)));
    }
  }
  return out;
}

void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open for writing: " + path);
  f << "P5\n" << img.w << " " << img.h << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.pixels.data()),
          static_cast<std::streamsize>(img.pixels.size()));
  require(f.good(), ErrorCode::IoError, "write failed: " + path);
}

GrayImage read_pgm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::IoError, "cannot open: " + path);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  f >> magic >> w >> h >> maxval;
  require(magic == "P5", ErrorCode::DataError, "not a binary PGM: " + path);
  require(w >= 1 && h >= 1 && maxval == 255, ErrorCode::DataError,
          "unsupported PGM: " + path);
  f.get();
  GrayImage img(w, h);
  f.read(reinterpret_cast<char*>(img.pixels.data()),
         static_cast<std::streamsize>(img.pixels.size()));
  require(f.good(), ErrorCode::IoError, "truncated PGM: " + path);
  return img;
}

void write_png_gray(const std::string& path, const GrayImage& img) {
  FILE* fp = std::fopen(path.c_str(), "wb");
  require(fp != nullptr, ErrorCode::IoError, "cannot open for writing: " + path);
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng write failure: " + path);
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, img.w, img.h, 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int v = 0; v < img.h; ++v) {
    png_write_row(png, const_cast<png_bytep>(
                           &img.pixels[static_cast<size_t>(v) * img.w]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

GrayImage read_png_gray(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  require(fp != nullptr, ErrorCode::IoError, "cannot open: " + path);
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(ErrorCode::IoError, "libpng read failure: " + path);
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  // Normalize any input to 8-bit grayscale.
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const int color = png_get_color_type(png, info);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray(png, 1, -1, -1);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  png_read_update_info(png, info);
  GrayImage img(static_cast<int>(png_get_image_width(png, info)),
                static_cast<int>(png_get_image_height(png, info)));
  for (int v = 0; v < img.h; ++v) {
    png_read_row(png, &img.pixels[static_cast<size_t>(v) * img.w], nullptr);
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

namespace {
bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}
}  // namespace

void write_image(const std::string& path, const GrayImage& img) {
  if (has_suffix(path, ".png")) {
    write_png_gray(path, img);
  } else if (has_suffix(path, ".pgm")) {
    write_pgm(path, img);
  } else {
    fail(ErrorCode::DataError, "unsupported image extension: " + path);
  }
}

GrayImage read_image(const std::string& path) {
  if (has_suffix(path, ".png")) return read_png_gray(path);
  if (has_suffix(path, ".pgm")) return read_pgm(path);
  fail(ErrorCode::DataError, "unsupported image extension: " + path);
}

}  // namespace vgloc
