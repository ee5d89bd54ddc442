#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "occreid/image.hpp"
#include "occreid/random.hpp"

namespace occreid {

enum class Domain { full_body, occluded, simulated_occluded };
enum class MaskProvenance { ground_truth, absent, distilled };
enum class BackgroundTexture { noise, gradient, checker };

std::string_view to_string(Domain d);
std::string_view to_string(MaskProvenance m);
std::string_view to_string(BackgroundTexture t);
Domain parse_domain(std::string_view s);
MaskProvenance parse_mask_provenance(std::string_view s);
BackgroundTexture parse_background_texture(std::string_view s);

struct ImageRecord {
  Raster image;  // 3 x H x W, values in [0,1]
  int identity = 0;
  Raster mask;  // 1 x H x W, 1 = salient person pixel
  int obc = 0;  // 0 = non-occluded, 1 = occluded
  Domain domain = Domain::full_body;
  std::string source_id;
  MaskProvenance mask_provenance = MaskProvenance::ground_truth;
  // Occluder rectangle when known (toy occlusions and simulator output).
  std::optional<Rect> occluder;

  int height() const { return image.height; }
  int width() const { return image.width; }

  // Throws ValidationError naming source_id if an invariant is broken.
  void validate() const;

  bool operator==(const ImageRecord&) const = default;
};

struct Dataset {
  std::vector<ImageRecord> records;
  std::vector<int> identities;  // sorted, unique
  Domain domain_tag = Domain::full_body;

  // Builds a dataset and derives the identity vocabulary from the records.
  static Dataset from_records(std::vector<ImageRecord> records, Domain tag);

  std::size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }
  void validate() const;

  bool operator==(const Dataset&) const = default;
};

// ---------------------------------------------------------------------------
// Synthetic toy data.

struct ToyConfig {
  int n_identities = 4;
  int images_per_identity = 5;
  int image_size = 64;
  std::uint64_t figure_palette_seed = 0;
  BackgroundTexture background_texture = BackgroundTexture::noise;
  // Identity labels are identity_offset .. identity_offset + n_identities - 1.
  // Datasets generated with the same palette seed and disjoint offset ranges
  // have disjoint appearances.
  int identity_offset = 0;

  void validate() const;
};

// Number of distinct figure appearances the palette can produce.
int toy_palette_capacity();

// Figure geometry relative to image size. Figure height is
// scale * image_size with scale drawn from [min_scale, max_scale].
struct ToyFigureGeometry {
  static constexpr double min_scale = 0.66;
  static constexpr double max_scale = 0.80;
  static constexpr double width_ratio = 0.55;  // torso width / figure height
};

// Full-body persons: obc = 0, masks exactly cover figure pixels.
Dataset generate_toy_dataset(const ToyConfig& config, std::uint64_t seed);

// Occluded-domain persons: per identity, images_per_identity occluded images
// (a textured obstacle covering part of the figure, obc = 1, occluder rect
// recorded, mask zero under the obstacle) followed by images_per_identity
// full-body images (obc = 0).
Dataset generate_toy_occluded_dataset(const ToyConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------------------
// On-disk layout: images/<identity>/<name>.png, masks/<identity>/<name>.png,
// and an optional dataset.json manifest.

struct LayoutSpec {
  Domain domain = Domain::full_body;
};

inline constexpr std::string_view kManifestFormat = "occreid-dataset/1";

Dataset load_dataset(const std::filesystem::path& root, const LayoutSpec& layout);
void save_dataset(const Dataset& dataset, const std::filesystem::path& root);

// ---------------------------------------------------------------------------
// Preprocessing.

enum class PreprocessMode { train, eval };

struct PreprocessConfig {
  int resize = 72;
  int crop = 64;

  static PreprocessConfig paper() { return {240, 224}; }
  static PreprocessConfig toy() { return {72, 64}; }
  void validate() const;
};

struct Sample {
  Raster image;  // 3 x crop x crop
  Raster mask;   // 1 x crop x crop
  Rect window;   // crop window inside the resized raster
};

// Train: resize to resize x resize, random crop (same window for the mask).
// Eval: resize, then center crop.
Sample preprocess(const ImageRecord& record, PreprocessMode mode, RandomSource& rng,
                  const PreprocessConfig& config = PreprocessConfig::toy());

// ---------------------------------------------------------------------------
// Splits.

struct ProbeGallerySplit {
  Dataset probes;
  Dataset gallery;
  std::vector<int> unmatched_identities;  // probe identities absent from gallery
};

// Probes are the occluded records (obc = 1), the gallery the rest.
ProbeGallerySplit split_probe_gallery(const Dataset& dataset);

struct IdentitySplit {
  Dataset train;
  Dataset test;
};

// The first n_train identities (in sorted order) go to train, the rest to test.
IdentitySplit split_by_identity(const Dataset& dataset, int n_train);

}  // namespace occreid
