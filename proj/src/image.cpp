#include "occreid/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "occreid/errors.hpp"

namespace occreid {

float quantize_unit(float v) {
  const float c = std::clamp(v, 0.0f, 1.0f);
  return static_cast<float>(std::lround(c * 255.0f)) / 255.0f;
}

Raster resize_bilinear(const Raster& src, int height, int width) {
  if (height <= 0 || width <= 0) throw ArgumentError("resize_bilinear: non-positive target size");
  if (src.height == height && src.width == width) return src;
  Raster out(src.channels, height, width);
  const double sy = static_cast<double>(src.height) / height;
  const double sx = static_cast<double>(src.width) / width;

  struct Tap {
    int i0, i1;
    float w1;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_in - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, n_in - 1);
      t[i] = {i0, i1, static_cast<float>(s - i0)};
    }
    return t;
  };
  const auto ty = taps(height, src.height, sy);
  const auto tx = taps(width, src.width, sx);

  for (int c = 0; c < src.channels; ++c) {
    for (int y = 0; y < height; ++y) {
      const Tap& a = ty[y];
      for (int x = 0; x < width; ++x) {
        const Tap& b = tx[x];
        const float top = src.at(c, a.i0, b.i0) * (1.0f - b.w1) + src.at(c, a.i0, b.i1) * b.w1;
        const float bot = src.at(c, a.i1, b.i0) * (1.0f - b.w1) + src.at(c, a.i1, b.i1) * b.w1;
        out.at(c, y, x) = top * (1.0f - a.w1) + bot * a.w1;
      }
    }
  }
  return out;
}

Raster crop(const Raster& src, const Rect& window) {
  if (window.top < 0 || window.left < 0 || window.height <= 0 || window.width <= 0 ||
      window.top + window.height > src.height || window.left + window.width > src.width) {
    throw ArgumentError("crop: window outside raster");
  }
  Raster out(src.channels, window.height, window.width);
  for (int c = 0; c < src.channels; ++c)
    for (int y = 0; y < window.height; ++y)
      for (int x = 0; x < window.width; ++x)
        out.at(c, y, x) = src.at(c, window.top + y, window.left + x);
  return out;
}

namespace {

Raster read_png(const std::filesystem::path& path, int channels) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + image.message);
  }
  image.format = channels == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<std::uint8_t> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + image.message);
  }
  const int h = static_cast<int>(image.height);
  const int w = static_cast<int>(image.width);
  Raster out(channels, h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c)
        out.at(c, y, x) =
            static_cast<float>(buffer[(static_cast<std::size_t>(y) * w + x) * channels + c]) / 255.0f;
  return out;
}

}  // namespace

Raster read_png_rgb(const std::filesystem::path& path) { return read_png(path, 3); }
Raster read_png_gray(const std::filesystem::path& path) { return read_png(path, 1); }

void write_png(const std::filesystem::path& path, const Raster& raster) {
  if (raster.channels != 1 && raster.channels != 3)
    throw ArgumentError("write_png: raster must have 1 or 3 channels");
  const int c = raster.channels;
  std::vector<std::uint8_t> buffer(static_cast<std::size_t>(raster.height) * raster.width * c);
  for (int y = 0; y < raster.height; ++y)
    for (int x = 0; x < raster.width; ++x)
      for (int k = 0; k < c; ++k) {
        const float v = std::clamp(raster.at(k, y, x), 0.0f, 1.0f);
        buffer[(static_cast<std::size_t>(y) * raster.width + x) * c + k] =
            static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(raster.width);
  image.height = static_cast<png_uint_32>(raster.height);
  image.format = c == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, buffer.data(), 0, nullptr)) {
    throw IoError("cannot write PNG " + path.string() + ": " + image.message);
  }
}

Rect bounding_box(const Raster& mask, float threshold) {
  int y0 = mask.height, y1 = -1, x0 = mask.width, x1 = -1;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(0, y, x) > threshold) {
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
      }
  if (y1 < 0) return {};
  return {y0, x0, y1 - y0 + 1, x1 - x0 + 1};
}

}  // namespace occreid
