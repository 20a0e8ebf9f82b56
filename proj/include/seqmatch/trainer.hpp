#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "seqmatch/features.hpp"
#include "seqmatch/fusion_tree.hpp"
#include "seqmatch/lstm.hpp"
#include "seqmatch/ssn.hpp"

namespace seqmatch {

class Rng;

enum class Schedule {
  kAlternate,   // per epoch: encoder+experts first, then gates with experts fixed
  kInterleave,  // both parameter groups within every batch pass
};

struct TrainConfig {
  std::size_t n = 4;  // trajectories per batch
  std::size_t S = 4;  // positives (= negatives) per trajectory
  double alpha = 0.05;  // gate learning rate
  double eta = 0.5;     // encoder/expert learning rate
  double lambda = 1e-4;
  std::size_t epochs = 4;
  std::uint64_t seed = 1;
  double clip_norm = 5.0;
  Schedule schedule = Schedule::kAlternate;
  std::size_t hidden_dim = 256;
  std::size_t num_layers = 2;
  // Empty: binary halving from the trajectory length (e.g. 32 -> 32,16,8,4,2).
  std::vector<std::size_t> tree_levels;
  double holdout_fraction = 0.0;

  void validate() const;
};

struct Model {
  StackedLstm encoder;
  SsnParams ssn;
  FusionTree tree;
  std::string category;  // empty for the general model

  bool operator==(const Model&) const = default;
};

struct GalleryPick {
  std::size_t gallery_index;
  int label;
};

struct TrajectorySample {
  std::size_t traj_index;
  std::vector<GalleryPick> picks;  // S positives then S negatives
};

struct BatchSample {
  std::vector<TrajectorySample> items;
};

struct StepMetrics {
  double loss = 0.0;
  double mean_y_pos = 0.0;
  double mean_y_neg = 0.0;
  double mean_log_likelihood = 0.0;
  double encoder_grad_norm = 0.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  double mean_y_pos = 0.0;
  double mean_y_neg = 0.0;
  double mean_log_likelihood = 0.0;
};

struct Phase {
  bool update_encoder_ssn = true;
  bool update_gates = true;
};

Model init_model(const Dataset& ds, const TrainConfig& cfg, Rng& rng);

// Derives the default gate-level list for a leaf count by repeated halving.
std::vector<std::size_t> default_tree_levels(std::size_t leaf_count);

// Draws n trajectories and, per trajectory, S positives plus S negatives.
// Negatives come from same-category non-matches when any exist (items never
// referenced by a pair count for every category). Sampling is without
// replacement wherever the pool allows and fully determined by the rng.
BatchSample sample_batch(const Dataset& ds, const TrainConfig& cfg, Rng& rng);

// One batch pass: encode each trajectory once, reuse (replicate) its hidden
// states across all 2S gallery pairings, train the experts on the pooled
// log loss, train the gates from the per-pair posteriors with the experts
// fixed, and give the encoder the per-trajectory mean of its pair gradients.
StepMetrics approx_train_step(Model& model, const Dataset& ds, const BatchSample& batch,
                              const TrainConfig& cfg, Phase phase,
                              std::size_t step_index);

// The replication shortcut in isolation: encoder gradients of the batch
// expert loss, mean over trajectories of (1/2S) * sum of per-pair gradients.
// This is the exact quantity the per-pair re-encoding loop computes.
LstmGrads replicated_encoder_grads(const Model& model, const Dataset& ds,
                                   const BatchSample& batch, double lambda);

using MetricsSink = std::function<void(const EpochMetrics&)>;

// Runs cfg.epochs epochs over the dataset; under Schedule::kAlternate each
// epoch trains encoder+experts with gates frozen, then gates with experts
// frozen. Throws TrainingError (with the step index) if the loss leaves the
// finite range. Deterministic in (dataset, config, seed).
std::vector<EpochMetrics> two_step_train(Model& model, const Dataset& ds,
                                         const TrainConfig& cfg,
                                         const MetricsSink& sink = {});

// Clones the general model and continues training on one category's pairs.
Model category_finetune(const Model& general, const Dataset& ds,
                        const std::string& category, const TrainConfig& cfg);

}  // namespace seqmatch
