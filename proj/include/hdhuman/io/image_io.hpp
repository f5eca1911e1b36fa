#pragma once

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "hdhuman/core/error.hpp"
#include "hdhuman/core/image.hpp"

namespace hdhuman::io {

// ---------------------------------------------------------------------------
// PFM: "Pf" (1 channel) or "PF" (3 channels), scale -1 (little-endian),
// rows stored bottom to top.

inline void write_pfm(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw Error(ErrorCode::kIo, "PFM holds 1 or 3 channels, got " + std::to_string(img.channels()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << (img.channels() == 3 ? "PF" : "Pf") << "\n" << img.width() << " " << img.height() << "\n-1.0\n";
  std::vector<float> row(static_cast<std::size_t>(img.width()) * img.channels());
  for (int y = img.height() - 1; y >= 0; --y) {
    for (int x = 0; x < img.width(); ++x)
      for (int c = 0; c < img.channels(); ++c)
        row[static_cast<std::size_t>(x) * img.channels() + c] = static_cast<float>(img.at(x, y, c));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

inline Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  in >> magic >> w >> h >> scale;
  in.get();
  if ((magic != "PF" && magic != "Pf") || w <= 0 || h <= 0)
    throw Error(ErrorCode::kIo, "malformed PFM header in " + path.string());
  if (scale > 0.0) throw Error(ErrorCode::kIo, "big-endian PFM is not supported: " + path.string());
  const int channels = magic == "PF" ? 3 : 1;
  Image img(w, h, channels);
  std::vector<float> row(static_cast<std::size_t>(w) * channels);
  for (int y = h - 1; y >= 0; --y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw Error(ErrorCode::kIo, "truncated PFM " + path.string());
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) img.at(x, y, c) = row[static_cast<std::size_t>(x) * channels + c];
  }
  return img;
}

inline void write_depth_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  Image img(depth.width(), depth.height(), 1);
  img.data() = depth.values();
  write_pfm(path, img);
}

inline DepthMap read_depth_pfm(const std::filesystem::path& path) {
  const Image img = read_pfm(path);
  if (img.channels() != 1) throw Error(ErrorCode::kIo, "depth PFM must have one channel: " + path.string());
  DepthMap d(img.width(), img.height());
  d.values() = img.data();
  return d;
}

// ---------------------------------------------------------------------------
// 8-bit PNG (gray or RGB). Values are clamped to [0,1] and rounded.

inline std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

inline void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels() != 1 && img.channels() != 3)
    throw Error(ErrorCode::kIo, "PNG export needs 1 or 3 channels");
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  std::vector<std::uint8_t> bytes(img.data().size());
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = to_byte(img.data()[i]);
  std::vector<png_bytep> rows(img.height());
  for (int y = 0; y < img.height(); ++y)
    rows[y] = bytes.data() + static_cast<std::size_t>(y) * img.width() * img.channels();
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::kIo, "libpng failed writing " + path.string());
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width(), img.height(), 8, img.channels() == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  Image img(mask.width, mask.height, 1);
  for (std::size_t i = 0; i < mask.values.size(); ++i) img.data()[i] = mask.values[i] ? 1.0 : 0.0;
  write_png(path, img);
}

/// Reads an 8-bit PNG as RGB (gray is expanded, alpha dropped), values / 255.
inline Image read_png(const std::filesystem::path& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "rb"), &std::fclose);
  if (!fp) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "libpng failed reading " + path.string());
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int color = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_bit_depth(png, info) < 8) png_set_packing(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);
  if (png_get_channels(png, info) != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(ErrorCode::kIo, "unsupported PNG layout in " + path.string());
  }
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * 3);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = bytes.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  Image img(static_cast<int>(w), static_cast<int>(h), 3);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.data()[i] = bytes[i] / 255.0;
  return img;
}

/// Quantises an image to the 8-bit levels a PNG round trip would produce.
inline Image quantize_8bit(Image img) {
  for (double& v : img.data()) v = to_byte(v) / 255.0;
  return img;
}

}  // namespace hdhuman::io
