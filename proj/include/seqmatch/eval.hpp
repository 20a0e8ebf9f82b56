#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "seqmatch/features.hpp"
#include "seqmatch/trainer.hpp"

namespace seqmatch {

// Gallery ranked for one query, best first. Ties break toward the smaller
// gallery id so rankings are permutation-invariant.
struct RankedResult {
  std::string trajectory_id;
  std::vector<std::string> gallery_ids;  // descending score
  Vector scores;                         // aligned, non-increasing
};

enum class BaselineMode { kAvg, kMax, kLast };

// Global match score: encode, score every frame against the item, fuse
// through the tree. Strictly inside (0, 1).
double score_pair(const Model& model, const Trajectory& traj, const FeatureVector& item);

// Frame-score aggregation without the tree: mean, max, or last of the
// per-frame expert scores.
double baseline_score(const Model& model, const Trajectory& traj,
                      const FeatureVector& item, BaselineMode mode);

// Scores the whole gallery (encoding the trajectory once) and sorts.
RankedResult rank_gallery(const Model& model, const Trajectory& traj,
                          std::span<const FeatureVector> gallery,
                          std::optional<BaselineMode> baseline = std::nullopt);

// Percentage of queries with at least one true match in the first k ranks.
double topk_accuracy(std::span<const RankedResult> results,
                     const std::map<std::string, std::vector<std::string>>& truth,
                     std::size_t k);

struct CategoryRow {
  std::string category;
  std::size_t query_count = 0;
  std::map<std::size_t, double> accuracy;  // k -> percentage
};

struct EvalReport {
  std::string method;  // "tree", "avg", "max", "last"
  std::vector<std::size_t> ks;
  std::size_t query_count = 0;
  std::map<std::size_t, double> overall;  // weighted over categories
  std::vector<CategoryRow> per_category;
};

struct EvalOptions {
  std::vector<std::size_t> ks{1, 5, 10, 15, 20};
  // Rank each query only against its own category's gallery pool (items
  // linked to the category by a pair, plus never-linked distractors).
  bool within_category = true;
  std::size_t workers = 0;  // 0: hardware concurrency
  std::optional<BaselineMode> baseline;
};

// Ranks every trajectory of the dataset and aggregates top-k accuracy,
// overall and per category. Pure given (model, dataset, options); the
// worker count only changes the wall clock.
EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& opts);

BaselineMode parse_baseline(const std::string& name);
std::string baseline_name(BaselineMode mode);

}  // namespace seqmatch
