#include "agarsynth/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <vector>

namespace agarsynth {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

// Decoded 8-bit RGBA rows.
struct Decoded {
  int width = 0;
  int height = 0;
  bool has_alpha = false;
  std::vector<std::uint8_t> rgba;
};

Decoded decode(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create read struct");
  png_infop info = png_create_info_struct(png);
  Decoded out;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("cannot decode PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  const png_byte bit_depth = png_get_bit_depth(png, info);
  out.has_alpha = (color_type & PNG_COLOR_MASK_ALPHA) != 0 ||
                  png_get_valid(png, info, PNG_INFO_tRNS);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (!(color_type & PNG_COLOR_MASK_ALPHA) && !png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_filler(png, 0xFF, PNG_FILLER_AFTER);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.rgba.resize(static_cast<std::size_t>(out.width) * out.height * 4);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = &out.rgba[static_cast<std::size_t>(y) * out.width * 4];
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void encode(const std::filesystem::path& path, int width, int height,
            bool alpha, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr f = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng: cannot create write struct");
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("cannot encode PNG " + path.string());
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, 8,
               alpha ? PNG_COLOR_TYPE_RGBA : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(width) * (alpha ? 4 : 3);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(&bytes[y * stride]));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError("write failed: " + path.string());
}

double from_byte(std::uint8_t b) { return b / 255.0; }

}  // namespace

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

ImageRGB read_png_rgb(const std::filesystem::path& path) {
  return read_png_rgba(path).color;
}

RgbaFragment read_png_rgba(const std::filesystem::path& path) {
  const Decoded d = decode(path);
  RgbaFragment out{ImageRGB(d.width, d.height), Mask(d.width, d.height)};
  for (std::size_t i = 0; i < out.color.size(); ++i) {
    const std::uint8_t* p = &d.rgba[i * 4];
    out.color[i] = {from_byte(p[0]), from_byte(p[1]), from_byte(p[2])};
    out.alpha[i] = from_byte(p[3]);
  }
  return out;
}

void write_png(const std::filesystem::path& path, const ImageRGB& img) {
  std::vector<std::uint8_t> bytes(img.size() * 3);
  for (std::size_t i = 0; i < img.size(); ++i) {
    bytes[i * 3 + 0] = to_byte(img[i].r);
    bytes[i * 3 + 1] = to_byte(img[i].g);
    bytes[i * 3 + 2] = to_byte(img[i].b);
  }
  encode(path, img.width(), img.height(), false, bytes);
}

void write_png(const std::filesystem::path& path, const RgbaFragment& frag) {
  require_same_shape(frag.color, frag.alpha, "write_png");
  std::vector<std::uint8_t> bytes(frag.color.size() * 4);
  for (std::size_t i = 0; i < frag.color.size(); ++i) {
    bytes[i * 4 + 0] = to_byte(frag.color[i].r);
    bytes[i * 4 + 1] = to_byte(frag.color[i].g);
    bytes[i * 4 + 2] = to_byte(frag.color[i].b);
    bytes[i * 4 + 3] = to_byte(frag.alpha[i]);
  }
  encode(path, frag.width(), frag.height(), true, bytes);
}

}  // namespace agarsynth
