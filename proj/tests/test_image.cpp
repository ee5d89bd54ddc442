#include <doctest.h>

#include <filesystem>

#include "occreid/errors.hpp"
#include "occreid/image.hpp"
#include "occreid/random.hpp"

using namespace occreid;
namespace fs = std::filesystem;

namespace {
Raster random_raster(int c, int h, int w, std::uint64_t seed) {
  RandomSource rng(seed);
  Raster r(c, h, w);
  for (float& v : r.data) v = quantize_unit(static_cast<float>(rng.uniform()));
  return r;
}
}  // namespace

TEST_CASE("resize to the same size is the identity") {
  const Raster r = random_raster(3, 7, 5, 1);
  CHECK(resize_bilinear(r, 7, 5) == r);
}

TEST_CASE("resize preserves constants") {
  Raster r(1, 6, 9, 0.3f);
  const Raster out = resize_bilinear(r, 13, 4);
  for (float v : out.data) CHECK(v == doctest::Approx(0.3f));
}

TEST_CASE("integer upscale matches half-pixel bilinear taps") {
  Raster r(1, 1, 2);
  r.data = {0.0f, 1.0f};
  const Raster out = resize_bilinear(r, 1, 4);
  // Source coordinates of output centers: -0.25, 0.25, 0.75, 1.25 (clamped).
  CHECK(out.data[0] == doctest::Approx(0.0f));
  CHECK(out.data[1] == doctest::Approx(0.25f));
  CHECK(out.data[2] == doctest::Approx(0.75f));
  CHECK(out.data[3] == doctest::Approx(1.0f));
}

TEST_CASE("crop extracts the window and rejects windows outside the raster") {
  const Raster r = random_raster(2, 6, 6, 2);
  const Raster c = crop(r, {1, 2, 3, 4});
  CHECK(c.height == 3);
  CHECK(c.width == 4);
  for (int ch = 0; ch < 2; ++ch)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 4; ++x) CHECK(c.at(ch, y, x) == r.at(ch, y + 1, x + 2));
  CHECK_THROWS_AS(crop(r, {4, 0, 3, 2}), ArgumentError);
}

TEST_CASE("PNG round trip is exact for quantized values") {
  const fs::path dir = fs::temp_directory_path() / "occreid_test_image";
  fs::create_directories(dir);
  const Raster rgb = random_raster(3, 9, 11, 3);
  const Raster gray = random_raster(1, 4, 6, 4);
  write_png(dir / "rgb.png", rgb);
  write_png(dir / "gray.png", gray);
  CHECK(read_png_rgb(dir / "rgb.png") == rgb);
  CHECK(read_png_gray(dir / "gray.png") == gray);
  CHECK_THROWS_AS(read_png_rgb(dir / "missing.png"), IoError);
  fs::remove_all(dir);
}

TEST_CASE("bounding box of a mask") {
  Raster m(1, 8, 8, 0.0f);
  CHECK(bounding_box(m).area() == 0);
  m.at(0, 2, 3) = 1.0f;
  m.at(0, 5, 6) = 1.0f;
  const Rect box = bounding_box(m);
  CHECK(box == Rect{2, 3, 4, 4});
}
