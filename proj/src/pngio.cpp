#include "tactex/pngio.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

namespace tactex {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

[[noreturn]] void fail(const std::string& msg) { throw std::runtime_error(msg); }

}  // namespace

PngImage read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) fail("cannot open PNG: " + path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail("PNG decode error: " + path);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  int width = png_get_image_width(png, info);
  int height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  PngImage out;
  out.width = width;
  out.height = height;

  if (color_type == PNG_COLOR_TYPE_PALETTE) {
    // Keep raw indices.
    if (bit_depth < 8) png_set_packing(png);
    out.palette = true;
    out.channels = 1;
    out.bit_depth = 8;
  } else {
    if (bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (bit_depth == 16) png_set_swap(png);  // PNG is big-endian on disk
    out.bit_depth = bit_depth == 16 ? 16 : 8;
    out.channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
  }

  png_read_update_info(png, info);
  size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<uint8_t> raw(rowbytes * height);
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; y++) rows[y] = raw.data() + rowbytes * y;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  out.pixels.resize(size_t(width) * height * out.channels);
  if (out.bit_depth == 16) {
    const uint16_t* src = reinterpret_cast<const uint16_t*>(raw.data());
    std::copy(src, src + out.pixels.size(), out.pixels.begin());
  } else {
    for (size_t i = 0; i < out.pixels.size(); i++) out.pixels[i] = raw[i];
  }
  return out;
}

void write_png(const std::string& path, int width, int height, int channels, int bit_depth,
               const std::vector<uint16_t>& samples) {
  if (samples.size() != size_t(width) * height * channels) fail("write_png: size mismatch");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail("cannot write PNG: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) fail("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("PNG encode error: " + path);
  }

  int color_type = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  if (bit_depth == 16) {
    png_set_swap(png);
    std::vector<png_bytep> rows(height);
    std::vector<uint16_t> buf(samples);
    for (int y = 0; y < height; y++)
      rows[y] = reinterpret_cast<png_bytep>(buf.data() + size_t(y) * width * channels);
    png_write_image(png, rows.data());
  } else {
    std::vector<uint8_t> buf(samples.size());
    for (size_t i = 0; i < samples.size(); i++) buf[i] = uint8_t(std::min<uint16_t>(samples[i], 255));
    std::vector<png_bytep> rows(height);
    for (int y = 0; y < height; y++) rows[y] = buf.data() + size_t(y) * width * channels;
    png_write_image(png, rows.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_png8(const std::string& path, const ImageF& img) {
  std::vector<uint16_t> samples(img.data.size());
  for (size_t i = 0; i < img.data.size(); i++) {
    float v = std::clamp(img.data[i], 0.0f, 1.0f);
    samples[i] = uint16_t(std::lround(v * 255.0f));
  }
  write_png(path, img.width, img.height, img.channels, 8, samples);
}

void write_png_indexed(const std::string& path, const std::vector<uint8_t>& indices, int width,
                       int height) {
  if (indices.size() != size_t(width) * height) fail("write_png_indexed: size mismatch");
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) fail("cannot write PNG: " + path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (!png || !info) fail("libpng init failed");
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail("PNG encode error: " + path);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, width, height, 8, PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);

  // Fixed palette: 0 black (background), then saturated distinct hues.
  png_color pal[256];
  pal[0] = {0, 0, 0};
  for (int i = 1; i < 256; i++) {
    float h = float((i * 47) % 360);
    float r = std::fabs(std::fmod(h / 60.0f + 3, 6.0f) - 3) - 1;
    float g = std::fabs(std::fmod(h / 60.0f + 1, 6.0f) - 3) - 1;
    float b = std::fabs(std::fmod(h / 60.0f + 5, 6.0f) - 3) - 1;
    pal[i].red = uint8_t(std::clamp(r, 0.0f, 1.0f) * 255);
    pal[i].green = uint8_t(std::clamp(g, 0.0f, 1.0f) * 255);
    pal[i].blue = uint8_t(std::clamp(b, 0.0f, 1.0f) * 255);
  }
  png_set_PLTE(png, info, pal, 256);
  png_write_info(png, info);

  std::vector<png_bytep> rows(height);
  std::vector<uint8_t> buf(indices);
  for (int y = 0; y < height; y++) rows[y] = buf.data() + size_t(y) * width;
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

std::vector<uint8_t> read_png_indices(const std::string& path, int* width, int* height) {
  PngImage img = read_png(path);
  if (img.channels != 1) fail("label PNG must be indexed or single channel: " + path);
  *width = img.width;
  *height = img.height;
  std::vector<uint8_t> out(img.pixels.size());
  for (size_t i = 0; i < out.size(); i++) out[i] = uint8_t(std::min<uint16_t>(img.pixels[i], 255));
  return out;
}

void write_normal_png16(const std::string& path, const ImageF& normals) {
  if (normals.channels != 3) fail("normal image must have 3 channels");
  std::vector<uint16_t> samples(normals.data.size());
  for (size_t i = 0; i < normals.data.size(); i++) {
    float v = (normals.data[i] + 1.0f) * 0.5f;
    v = std::clamp(v, 0.0f, 1.0f);
    samples[i] = uint16_t(std::lround(v * 65535.0f));
  }
  write_png(path, normals.width, normals.height, 3, 16, samples);
}

void write_mask_png(const std::string& path, const Mask& mask) {
  std::vector<uint16_t> samples(mask.data.size());
  for (size_t i = 0; i < mask.data.size(); i++) samples[i] = mask.data[i] ? 255 : 0;
  write_png(path, mask.width, mask.height, 1, 8, samples);
}

Mask read_mask_png(const std::string& path) {
  PngImage img = read_png(path);
  Mask m(img.width, img.height);
  uint16_t half = img.bit_depth == 16 ? 32768 : 128;
  for (int y = 0; y < img.height; y++)
    for (int x = 0; x < img.width; x++) m.at(x, y) = img.at(x, y, 0) >= half ? 1 : 0;
  return m;
}

}  // namespace tactex
