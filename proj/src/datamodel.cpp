#include "occreid/datamodel.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>

#include <nlohmann/json.hpp>

#include "occreid/errors.hpp"

namespace occreid {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::full_body: return "full_body";
    case Domain::occluded: return "occluded";
    case Domain::simulated_occluded: return "simulated_occluded";
  }
  return "full_body";
}

std::string_view to_string(MaskProvenance m) {
  switch (m) {
    case MaskProvenance::ground_truth: return "ground_truth";
    case MaskProvenance::absent: return "absent";
    case MaskProvenance::distilled: return "distilled";
  }
  return "ground_truth";
}

std::string_view to_string(BackgroundTexture t) {
  switch (t) {
    case BackgroundTexture::noise: return "noise";
    case BackgroundTexture::gradient: return "gradient";
    case BackgroundTexture::checker: return "checker";
  }
  return "noise";
}

Domain parse_domain(std::string_view s) {
  if (s == "full_body") return Domain::full_body;
  if (s == "occluded") return Domain::occluded;
  if (s == "simulated_occluded") return Domain::simulated_occluded;
  throw ConfigError("unknown domain '" + std::string(s) + "'");
}

MaskProvenance parse_mask_provenance(std::string_view s) {
  if (s == "ground_truth") return MaskProvenance::ground_truth;
  if (s == "absent") return MaskProvenance::absent;
  if (s == "distilled") return MaskProvenance::distilled;
  throw ConfigError("unknown mask provenance '" + std::string(s) + "'");
}

BackgroundTexture parse_background_texture(std::string_view s) {
  if (s == "noise") return BackgroundTexture::noise;
  if (s == "gradient") return BackgroundTexture::gradient;
  if (s == "checker") return BackgroundTexture::checker;
  throw ConfigError("unknown background texture '" + std::string(s) + "'");
}

void ImageRecord::validate() const {
  if (image.channels != 3) throw ValidationError(source_id + ": image must have 3 channels");
  if (mask.channels != 1) throw ValidationError(source_id + ": mask must have 1 channel");
  if (!image.same_size(mask)) {
    throw ValidationError(source_id + ": mask " + std::to_string(mask.height) + "x" +
                          std::to_string(mask.width) + " does not match image " +
                          std::to_string(image.height) + "x" + std::to_string(image.width));
  }
  if (identity < 0) throw ValidationError(source_id + ": negative identity");
  if (obc != 0 && obc != 1) throw ValidationError(source_id + ": obc must be 0 or 1");
  for (float v : mask.data)
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError(source_id + ": mask value outside [0,1]");
}

Dataset Dataset::from_records(std::vector<ImageRecord> records, Domain tag) {
  Dataset d;
  std::set<int> ids;
  for (const auto& r : records) ids.insert(r.identity);
  d.records = std::move(records);
  d.identities.assign(ids.begin(), ids.end());
  d.domain_tag = tag;
  return d;
}

void Dataset::validate() const {
  if (records.empty()) throw ValidationError("dataset is empty");
  for (const auto& r : records) {
    r.validate();
    if (!std::binary_search(identities.begin(), identities.end(), r.identity))
      throw ValidationError(r.source_id + ": identity not in dataset vocabulary");
  }
}

// ---------------------------------------------------------------------------
// Toy generator

namespace {

using Color = std::array<float, 3>;

constexpr std::array<Color, 10> kPalette{{
    {0.85f, 0.10f, 0.10f},  // red
    {0.10f, 0.65f, 0.20f},  // green
    {0.15f, 0.25f, 0.90f},  // blue
    {0.95f, 0.85f, 0.10f},  // yellow
    {0.85f, 0.20f, 0.80f},  // magenta
    {0.10f, 0.80f, 0.85f},  // cyan
    {1.00f, 0.55f, 0.05f},  // orange
    {0.96f, 0.96f, 0.96f},  // white
    {0.06f, 0.06f, 0.06f},  // black
    {0.50f, 0.30f, 0.10f},  // brown
}};
constexpr Color kSkin{0.92f, 0.76f, 0.62f};
constexpr int kTorsoStyles = 3;

struct Appearance {
  int upper = 0;
  int lower = 0;
  int torso_style = 0;
};

std::vector<Appearance> palette_permutation(std::uint64_t palette_seed) {
  std::vector<Appearance> all;
  for (int s = 0; s < kTorsoStyles; ++s)
    for (int u = 0; u < static_cast<int>(kPalette.size()); ++u)
      for (int l = 0; l < static_cast<int>(kPalette.size()); ++l)
        if (u != l) all.push_back({u, l, s});
  RandomSource rng(derive_seed(palette_seed, "toy/palette"));
  rng.shuffle(std::span<Appearance>(all));
  return all;
}

Color random_color(RandomSource& rng, float lo, float hi) {
  return {static_cast<float>(rng.uniform(lo, hi)), static_cast<float>(rng.uniform(lo, hi)),
          static_cast<float>(rng.uniform(lo, hi))};
}

void put(Raster& img, int y, int x, const Color& c) {
  for (int k = 0; k < 3; ++k) img.at(k, y, x) = quantize_unit(c[k]);
}

// Fills `region` of `img` with a texture of the requested family.
void fill_texture(Raster& img, const Rect& region, BackgroundTexture texture, RandomSource& rng) {
  switch (texture) {
    case BackgroundTexture::noise: {
      const Color base = random_color(rng, 0.15f, 0.85f);
      for (int y = region.top; y < region.top + region.height; ++y)
        for (int x = region.left; x < region.left + region.width; ++x) {
          Color c;
          for (int k = 0; k < 3; ++k) c[k] = base[k] + static_cast<float>(rng.uniform(-0.12, 0.12));
          put(img, y, x, c);
        }
      break;
    }
    case BackgroundTexture::gradient: {
      const Color c0 = random_color(rng, 0.1f, 0.9f);
      const Color c1 = random_color(rng, 0.1f, 0.9f);
      const double angle = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const double ux = std::cos(angle), uy = std::sin(angle);
      const double span = std::abs(ux) * region.width + std::abs(uy) * region.height + 1e-9;
      const double offset = std::min(0.0, ux * region.width) + std::min(0.0, uy * region.height);
      for (int y = 0; y < region.height; ++y)
        for (int x = 0; x < region.width; ++x) {
          const double t = std::clamp((ux * x + uy * y - offset) / span, 0.0, 1.0);
          Color c;
          for (int k = 0; k < 3; ++k)
            c[k] = static_cast<float>(c0[k] * (1.0 - t) + c1[k] * t + rng.uniform(-0.03, 0.03));
          put(img, region.top + y, region.left + x, c);
        }
      break;
    }
    case BackgroundTexture::checker: {
      const Color c0 = random_color(rng, 0.1f, 0.9f);
      const Color c1 = random_color(rng, 0.1f, 0.9f);
      const int cell = static_cast<int>(rng.uniform_int(4, 10));
      const int oy = static_cast<int>(rng.uniform_int(0, cell - 1));
      const int ox = static_cast<int>(rng.uniform_int(0, cell - 1));
      for (int y = region.top; y < region.top + region.height; ++y)
        for (int x = region.left; x < region.left + region.width; ++x) {
          const bool odd = (((y + oy) / cell) + ((x + ox) / cell)) % 2 == 1;
          put(img, y, x, odd ? c1 : c0);
        }
      break;
    }
  }
}

struct FigurePlacement {
  double height = 0;  // figure height in pixels
  double cx = 0;      // horizontal center
  double top = 0;     // top of the head
  double brightness = 1.0;
};

FigurePlacement draw_placement(int size, RandomSource& rng) {
  FigurePlacement p;
  const double scale = rng.uniform(ToyFigureGeometry::min_scale, ToyFigureGeometry::max_scale);
  p.height = scale * size;
  const double half_w = 0.5 * ToyFigureGeometry::width_ratio * p.height * 1.15;
  p.cx = rng.uniform(half_w + 1.0, size - half_w - 1.0);
  p.top = rng.uniform(0.02 * size, size - p.height - 0.02 * size);
  p.brightness = rng.uniform(0.85, 1.1);
  return p;
}

Color shade(const Color& c, double b) {
  return {static_cast<float>(c[0] * b), static_cast<float>(c[1] * b), static_cast<float>(c[2] * b)};
}

// Draws the figure and writes its exact footprint into `mask`.
void draw_figure(Raster& img, Raster& mask, const Appearance& a, const FigurePlacement& p) {
  const double hf = p.height;
  const double r = 0.09 * hf;
  const double head_cy = p.top + r;
  const double torso_top = p.top + 2.0 * r;
  const double torso_bot = p.top + 0.55 * hf;
  const double legs_bot = p.top + hf;
  const double tw = ToyFigureGeometry::width_ratio * hf;
  const double gap = 0.06 * tw;
  const Color upper = shade(kPalette[a.upper], p.brightness);
  const Color lower = shade(kPalette[a.lower], p.brightness);
  const Color skin = shade(kSkin, p.brightness);

  for (int y = 0; y < img.height; ++y) {
    const double py = y + 0.5;
    for (int x = 0; x < img.width; ++x) {
      const double px = x + 0.5;
      const double dx = px - p.cx;
      const Color* c = nullptr;
      if ((dx * dx + (py - head_cy) * (py - head_cy)) <= r * r) {
        c = &skin;
      } else if (py >= torso_top && py < torso_bot) {
        const double t = (py - torso_top) / (torso_bot - torso_top);
        bool inside = false;
        switch (a.torso_style) {
          case 0: inside = std::abs(dx) <= 0.5 * tw; break;
          case 1: {
            const double ex = dx / (0.575 * tw);
            const double ey = (t - 0.5) * 2.0;
            inside = ex * ex + ey * ey <= 1.0;
            break;
          }
          default: inside = std::abs(dx) <= tw * (0.3 + 0.3 * t); break;
        }
        if (inside) c = &upper;
      } else if (py >= torso_bot && py < legs_bot) {
        const double ax = std::abs(dx);
        if (ax >= gap && ax <= 0.425 * tw) c = &lower;
      }
      if (c) {
        put(img, y, x, *c);
        mask.at(0, y, x) = 1.0f;
      }
    }
  }
}

// Obstacle rectangle covering part of the figure, clipped to the image.
Rect draw_obstacle_rect(int size, const FigurePlacement& p, RandomSource& rng) {
  const double hf = p.height;
  const double tw = ToyFigureGeometry::width_ratio * hf * 1.15;
  double top, bottom, left, right;
  if (rng.uniform() < 0.6) {
    // Lower body hidden.
    const double frac = rng.uniform(0.3, 0.55);
    top = p.top + hf * (1.0 - frac);
    bottom = p.top + hf + rng.uniform(0.0, 4.0);
    left = p.cx - tw * rng.uniform(0.6, 1.2);
    right = p.cx + tw * rng.uniform(0.6, 1.2);
  } else {
    // One side hidden.
    const double frac = rng.uniform(0.4, 0.7);
    top = p.top + hf * rng.uniform(0.0, 0.3);
    bottom = p.top + hf * rng.uniform(0.85, 1.05);
    if (rng.uniform() < 0.5) {
      right = p.cx - 0.5 * tw + frac * tw;
      left = right - tw * rng.uniform(0.8, 1.4);
    } else {
      left = p.cx + 0.5 * tw - frac * tw;
      right = left + tw * rng.uniform(0.8, 1.4);
    }
  }
  const int t = std::clamp(static_cast<int>(std::lround(top)), 0, size - 1);
  const int b = std::clamp(static_cast<int>(std::lround(bottom)), t + 1, size);
  const int l = std::clamp(static_cast<int>(std::lround(left)), 0, size - 1);
  const int r = std::clamp(static_cast<int>(std::lround(right)), l + 1, size);
  return {t, l, b - t, r - l};
}

ImageRecord render_toy(const ToyConfig& config, const Appearance& appearance, int identity,
                       bool occluded, std::string source_id, RandomSource& rng) {
  const int s = config.image_size;
  ImageRecord rec;
  rec.image = Raster(3, s, s);
  rec.mask = Raster(1, s, s, 0.0f);
  rec.identity = identity;
  rec.source_id = std::move(source_id);
  fill_texture(rec.image, {0, 0, s, s}, config.background_texture, rng);
  const FigurePlacement placement = draw_placement(s, rng);
  draw_figure(rec.image, rec.mask, appearance, placement);
  if (occluded) {
    const Rect box = draw_obstacle_rect(s, placement, rng);
    fill_texture(rec.image, box, config.background_texture, rng);
    for (int y = box.top; y < box.top + box.height; ++y)
      for (int x = box.left; x < box.left + box.width; ++x) rec.mask.at(0, y, x) = 0.0f;
    rec.occluder = box;
    rec.obc = 1;
    rec.domain = Domain::occluded;
  } else {
    rec.obc = 0;
    rec.domain = Domain::full_body;
  }
  return rec;
}

}  // namespace

int toy_palette_capacity() {
  const int n = static_cast<int>(kPalette.size());
  return kTorsoStyles * n * (n - 1);
}

void ToyConfig::validate() const {
  if (n_identities < 2) throw ConfigError("toy config: n_identities must be >= 2");
  if (images_per_identity < 2) throw ConfigError("toy config: images_per_identity must be >= 2");
  if (image_size <= 0 || image_size % 32 != 0)
    throw ConfigError("toy config: image_size must be a positive multiple of 32");
  if (identity_offset < 0) throw ConfigError("toy config: identity_offset must be >= 0");
  if (identity_offset + n_identities > toy_palette_capacity())
    throw ConfigError("toy config: " + std::to_string(identity_offset + n_identities) +
                      " identities exceed palette capacity " +
                      std::to_string(toy_palette_capacity()));
}

Dataset generate_toy_dataset(const ToyConfig& config, std::uint64_t seed) {
  config.validate();
  const auto palette = palette_permutation(config.figure_palette_seed);
  std::vector<ImageRecord> records;
  records.reserve(static_cast<std::size_t>(config.n_identities) * config.images_per_identity);
  for (int i = 0; i < config.n_identities; ++i) {
    const int identity = config.identity_offset + i;
    for (int k = 0; k < config.images_per_identity; ++k) {
      RandomSource rng(derive_seed(seed, "toy/full_body",
                                   static_cast<std::uint64_t>(identity) * 100003u + k));
      records.push_back(render_toy(config, palette[identity], identity, false,
                                   "toy/" + std::to_string(identity) + "/" + std::to_string(k),
                                   rng));
    }
  }
  return Dataset::from_records(std::move(records), Domain::full_body);
}

Dataset generate_toy_occluded_dataset(const ToyConfig& config, std::uint64_t seed) {
  config.validate();
  const auto palette = palette_permutation(config.figure_palette_seed);
  std::vector<ImageRecord> records;
  for (int i = 0; i < config.n_identities; ++i) {
    const int identity = config.identity_offset + i;
    for (int pass = 0; pass < 2; ++pass) {
      const bool occluded = pass == 0;
      for (int k = 0; k < config.images_per_identity; ++k) {
        RandomSource rng(derive_seed(seed, occluded ? "toy/occluded" : "toy/occluded_gallery",
                                     static_cast<std::uint64_t>(identity) * 100003u + k));
        records.push_back(render_toy(config, palette[identity], identity, occluded,
                                     "toy-occ/" + std::to_string(identity) + "/" +
                                         (occluded ? "occ" : "full") + std::to_string(k),
                                     rng));
      }
    }
  }
  return Dataset::from_records(std::move(records), Domain::occluded);
}

// ---------------------------------------------------------------------------
// Disk I/O

namespace {

int parse_identity_dir(const fs::path& dir) {
  const std::string name = dir.filename().string();
  int value = -1;
  const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), value);
  if (ec != std::errc() || ptr != name.data() + name.size() || value < 0)
    throw ValidationError(dir.string() + ": identity directory must be a non-negative integer");
  return value;
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (directories ? e.is_directory() : (e.is_regular_file() && e.path().extension() == ".png"))
      out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

Raster load_mask_checked(const fs::path& mask_path, const Raster& image) {
  Raster mask = read_png_gray(mask_path);
  if (!mask.same_size(image)) {
    throw ValidationError(mask_path.string() + ": mask " + std::to_string(mask.height) + "x" +
                          std::to_string(mask.width) + " does not match image " +
                          std::to_string(image.height) + "x" + std::to_string(image.width));
  }
  return mask;
}

Dataset load_from_manifest(const fs::path& root, const fs::path& manifest_path) {
  json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open " + manifest_path.string());
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw ValidationError(manifest_path.string() + ": " + e.what());
    }
  }
  try {
    if (manifest.at("format").get<std::string>() != kManifestFormat)
      throw ValidationError(manifest_path.string() + ": unsupported manifest format");
    const Domain tag = parse_domain(manifest.at("domain").get<std::string>());
    std::vector<ImageRecord> records;
    for (const auto& entry : manifest.at("records")) {
      ImageRecord rec;
      const fs::path image_path = root / entry.at("image").get<std::string>();
      rec.image = read_png_rgb(image_path);
      rec.identity = entry.at("identity").get<int>();
      rec.obc = entry.at("obc").get<int>();
      rec.domain = parse_domain(entry.at("domain").get<std::string>());
      rec.source_id = entry.at("source_id").get<std::string>();
      rec.mask_provenance = parse_mask_provenance(entry.at("mask_provenance").get<std::string>());
      if (entry.contains("mask") && !entry.at("mask").is_null()) {
        rec.mask = load_mask_checked(root / entry.at("mask").get<std::string>(), rec.image);
      } else {
        rec.mask = Raster(1, rec.image.height, rec.image.width, 1.0f);
        rec.mask_provenance = MaskProvenance::absent;
      }
      if (entry.contains("occluder")) {
        const auto& o = entry.at("occluder");
        rec.occluder = Rect{o.at(0).get<int>(), o.at(1).get<int>(), o.at(2).get<int>(),
                            o.at(3).get<int>()};
      }
      rec.validate();
      records.push_back(std::move(rec));
    }
    Dataset d = Dataset::from_records(std::move(records), tag);
    if (manifest.contains("identities")) {
      auto ids = manifest.at("identities").get<std::vector<int>>();
      if (ids != d.identities)
        throw ValidationError(manifest_path.string() + ": identity vocabulary does not match records");
    }
    return d;
  } catch (const json::exception& e) {
    throw ValidationError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace

Dataset load_dataset(const fs::path& root, const LayoutSpec& layout) {
  if (!fs::is_directory(root)) throw IoError("dataset root not found: " + root.string());
  const fs::path manifest = root / "dataset.json";
  if (fs::exists(manifest)) return load_from_manifest(root, manifest);

  const fs::path images_dir = root / "images";
  if (!fs::is_directory(images_dir)) throw IoError("missing images/ under " + root.string());
  std::vector<ImageRecord> records;
  for (const auto& id_dir : sorted_entries(images_dir, true)) {
    const int identity = parse_identity_dir(id_dir);
    for (const auto& image_path : sorted_entries(id_dir, false)) {
      ImageRecord rec;
      rec.image = read_png_rgb(image_path);
      rec.identity = identity;
      rec.domain = layout.domain;
      rec.obc = layout.domain == Domain::full_body ? 0 : 1;
      rec.source_id = fs::relative(image_path, root).generic_string();
      const fs::path mask_path = root / "masks" / id_dir.filename() / image_path.filename();
      if (fs::exists(mask_path)) {
        rec.mask = load_mask_checked(mask_path, rec.image);
        rec.mask_provenance = MaskProvenance::ground_truth;
      } else {
        rec.mask = Raster(1, rec.image.height, rec.image.width, 1.0f);
        rec.mask_provenance = MaskProvenance::absent;
      }
      records.push_back(std::move(rec));
    }
  }
  if (records.empty()) throw ValidationError("no images found under " + images_dir.string());
  return Dataset::from_records(std::move(records), layout.domain);
}

void save_dataset(const Dataset& dataset, const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw IoError("cannot create " + root.string() + ": " + ec.message());
  json records = json::array();
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const ImageRecord& rec = dataset.records[i];
    char name[32];
    std::snprintf(name, sizeof(name), "%05zu.png", i);
    const std::string id = std::to_string(rec.identity);
    const fs::path image_rel = fs::path("images") / id / name;
    const fs::path mask_rel = fs::path("masks") / id / name;
    fs::create_directories(root / image_rel.parent_path());
    write_png(root / image_rel, rec.image);
    json entry = {{"image", image_rel.generic_string()},
                  {"identity", rec.identity},
                  {"obc", rec.obc},
                  {"domain", to_string(rec.domain)},
                  {"source_id", rec.source_id},
                  {"mask_provenance", to_string(rec.mask_provenance)}};
    if (rec.mask_provenance != MaskProvenance::absent) {
      fs::create_directories(root / mask_rel.parent_path());
      write_png(root / mask_rel, rec.mask);
      entry["mask"] = mask_rel.generic_string();
    } else {
      entry["mask"] = nullptr;
    }
    if (rec.occluder) {
      const Rect& o = *rec.occluder;
      entry["occluder"] = {o.top, o.left, o.height, o.width};
    }
    records.push_back(std::move(entry));
  }
  json manifest = {{"format", kManifestFormat},
                   {"domain", to_string(dataset.domain_tag)},
                   {"identities", dataset.identities},
                   {"records", std::move(records)}};
  std::ofstream out(root / "dataset.json");
  if (!out) throw IoError("cannot write " + (root / "dataset.json").string());
  out << manifest.dump(1) << '\n';
}

// ---------------------------------------------------------------------------
// Preprocessing

void PreprocessConfig::validate() const {
  if (crop <= 0 || resize <= 0) throw ConfigError("preprocess: sizes must be positive");
  if (crop > resize)
    throw ConfigError("preprocess: crop size " + std::to_string(crop) + " exceeds resize size " +
                      std::to_string(resize));
}

Sample preprocess(const ImageRecord& record, PreprocessMode mode, RandomSource& rng,
                  const PreprocessConfig& config) {
  config.validate();
  const Raster image = resize_bilinear(record.image, config.resize, config.resize);
  const Raster mask = resize_bilinear(record.mask, config.resize, config.resize);
  const int slack = config.resize - config.crop;
  int top = slack / 2, left = slack / 2;
  if (mode == PreprocessMode::train) {
    top = static_cast<int>(rng.uniform_int(0, slack));
    left = static_cast<int>(rng.uniform_int(0, slack));
  }
  const Rect window{top, left, config.crop, config.crop};
  Sample s{crop(image, window), crop(mask, window), window};
  for (float& v : s.image.data) v = std::clamp(v, 0.0f, 1.0f);
  for (float& v : s.mask.data) v = std::clamp(v, 0.0f, 1.0f);
  return s;
}

// ---------------------------------------------------------------------------
// Splits

ProbeGallerySplit split_probe_gallery(const Dataset& dataset) {
  std::vector<ImageRecord> probes, gallery;
  for (const auto& r : dataset.records) (r.obc == 1 ? probes : gallery).push_back(r);
  if (probes.empty()) throw EvaluationSetupError("probe set is empty (no occluded records)");
  if (gallery.empty()) throw EvaluationSetupError("gallery set is empty (no full-body records)");
  ProbeGallerySplit split;
  split.probes = Dataset::from_records(std::move(probes), Domain::occluded);
  split.gallery = Dataset::from_records(std::move(gallery), Domain::full_body);
  for (int id : split.probes.identities)
    if (!std::binary_search(split.gallery.identities.begin(), split.gallery.identities.end(), id))
      split.unmatched_identities.push_back(id);
  return split;
}

IdentitySplit split_by_identity(const Dataset& dataset, int n_train) {
  if (n_train <= 0 || n_train >= static_cast<int>(dataset.identities.size()))
    throw ArgumentError("split_by_identity: n_train must leave both sides non-empty");
  const std::set<int> train_ids(dataset.identities.begin(), dataset.identities.begin() + n_train);
  std::vector<ImageRecord> train, test;
  for (const auto& r : dataset.records) (train_ids.count(r.identity) ? train : test).push_back(r);
  return {Dataset::from_records(std::move(train), dataset.domain_tag),
          Dataset::from_records(std::move(test), dataset.domain_tag)};
}

}  // namespace occreid
