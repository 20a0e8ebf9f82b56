#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "seqmatch/linalg.hpp"

namespace seqmatch {

// Dense activation map, indexed (channel, y, x).
struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;

  FeatureMap() = default;
  FeatureMap(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), data(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * height + y) * width + x];
  }
};

struct FeatureVector {
  std::string id;
  Vector values;

  bool operator==(const FeatureVector&) const = default;
};

// One tracked item: a fixed-length sequence of per-frame feature vectors.
struct Trajectory {
  std::string id;
  std::string category;
  std::vector<Vector> frames;

  bool operator==(const Trajectory&) const = default;
};

struct Dataset {
  std::size_t dim = 0;
  std::size_t target_length = 0;  // frames per trajectory after normalization
  std::vector<FeatureVector> gallery;
  std::vector<Trajectory> trajectories;
  // trajectory id -> sorted gallery ids of its exact matches
  std::map<std::string, std::vector<std::string>> positives;
  std::vector<std::string> categories;  // sorted unique

  // id lookups, rebuilt by finalize()
  std::unordered_map<std::string, std::size_t> gallery_index;
  std::unordered_map<std::string, std::size_t> trajectory_index;

  // Rebuilds the index maps and category list, then checks referential
  // integrity. Throws ArgumentError on an empty section or dangling ids.
  void finalize();

  bool operator==(const Dataset& o) const {
    return dim == o.dim && target_length == o.target_length &&
           gallery == o.gallery && trajectories == o.trajectories &&
           positives == o.positives;
  }
};

enum class Pooling { kMax, kAverage };

struct SppConfig {
  std::vector<std::size_t> levels{1, 2, 4};
  Pooling pooling = Pooling::kMax;
};

// Spatial pyramid pooling: fixed-length output (channels * sum of level^2)
// regardless of the map's height/width. Cell (i,j) at level l covers rows
// [floor(i*H/l), ceil((i+1)*H/l)) and the analogous columns, so windows
// always cover the whole map and are never empty.
FeatureVector spp_pool(const FeatureMap& map, const SppConfig& cfg);

// Unifies a frame sequence to exactly t frames: identity at length t, a
// centered stride-floor(len/t) sliding window when longer, cyclic repetition
// when shorter.
std::vector<Vector> normalize_trajectory_length(std::span<const Vector> frames,
                                                std::size_t t);

Dataset load_dataset(const std::filesystem::path& path);
void write_dataset(const Dataset& ds, const std::filesystem::path& path);

struct SynthConfig {
  std::size_t n_traj = 500;
  std::size_t gallery_size = 2000;
  std::size_t dim = 64;
  std::size_t T = 32;
  std::size_t n_categories = 5;
  double style_noise = 0.1;
  double frame_noise = 0.1;
  // Fraction of frames replaced by unrelated noise, for stress datasets
  // where only a few frames carry the match signal.
  double corrupt_fraction = 0.0;
  std::uint64_t seed = 7;
};

// Cross-domain benchmark generator. Every trajectory draws a latent style;
// its frames are the style plus a smooth viewpoint drift plus per-frame
// noise (both scaled by frame_noise), and its single exact match in the
// gallery is the style plus style_noise. Remaining gallery items are
// independent styles. Bit-deterministic in the seed.
Dataset synth_generate(const SynthConfig& cfg);

// Same gallery, the selected trajectories and their pairs only.
Dataset subset(const Dataset& ds, std::span<const std::size_t> traj_indices);

// Disjoint train/holdout split: the last ceil(fraction * n) trajectories in
// stored order form the holdout part, items linked to either side stay on
// that side only, and never-linked distractors are divided in proportion.
// Nothing in the holdout part (trajectory or gallery item) is visible to
// training. Returns (train, holdout).
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction);

// Trajectories of one category, full gallery kept. Throws ArgumentError if
// the category does not occur.
Dataset restrict_category(const Dataset& ds, const std::string& category);

// Categories a gallery item belongs to, derived from the pair map. Items
// never referenced by a pair belong to every category's pool.
std::unordered_map<std::string, std::vector<std::string>> gallery_category_map(
    const Dataset& ds);

}  // namespace seqmatch
