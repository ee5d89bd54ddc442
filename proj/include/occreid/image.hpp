#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace occreid {

// Planar float raster (channel-major, then row-major). Color images hold three
// channels of unit-interval intensities; masks hold one.
struct Raster {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  Raster() = default;
  Raster(int c, int h, int w, float fill = 0.0f)
      : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, fill) {}

  std::size_t index(int c, int y, int x) const {
    return (static_cast<std::size_t>(c) * height + y) * width + x;
  }
  float& at(int c, int y, int x) { return data[index(c, y, x)]; }
  float at(int c, int y, int x) const { return data[index(c, y, x)]; }

  bool same_size(const Raster& other) const {
    return height == other.height && width == other.width;
  }
  bool operator==(const Raster&) const = default;
};

struct Rect {
  int top = 0;
  int left = 0;
  int height = 0;
  int width = 0;

  int area() const { return height * width; }
  bool contains(int y, int x) const {
    return y >= top && y < top + height && x >= left && x < left + width;
  }
  bool operator==(const Rect&) const = default;
};

// Rounds to the nearest 8-bit level; the value stored is level / 255.
float quantize_unit(float v);

// Bilinear resize with half-pixel centers and edge clamping. Constant inputs
// map to the same constant.
Raster resize_bilinear(const Raster& src, int height, int width);

Raster crop(const Raster& src, const Rect& window);

// PNG I/O. Color images are read/written as 8-bit RGB, masks as 8-bit gray.
Raster read_png_rgb(const std::filesystem::path& path);
Raster read_png_gray(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Raster& raster);

// Bounding box of pixels with value > threshold; nullopt-like empty rect
// (height == 0) when none.
Rect bounding_box(const Raster& mask, float threshold = 0.5f);

}  // namespace occreid
