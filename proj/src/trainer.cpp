#include "seqmatch/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"
#include "seqmatch/rng.hpp"

namespace seqmatch {

void TrainConfig::validate() const {
  if (n == 0 || S == 0) throw ArgumentError("train config: n and S must be >= 1");
  if (!(alpha >= 0.0) || !(eta >= 0.0)) {
    throw ArgumentError("train config: learning rates must be >= 0");
  }
  if (lambda < 0.0) throw ArgumentError("train config: lambda must be >= 0");
  if (hidden_dim == 0 || num_layers == 0) {
    throw ArgumentError("train config: hidden_dim and num_layers must be >= 1");
  }
  if (holdout_fraction < 0.0 || holdout_fraction >= 1.0) {
    throw ArgumentError("train config: holdout_fraction must lie in [0, 1)");
  }
}

std::vector<std::size_t> default_tree_levels(std::size_t leaf_count) {
  std::vector<std::size_t> levels{leaf_count};
  std::size_t cur = leaf_count;
  while (cur % 2 == 0 && cur > 2) {
    cur /= 2;
    levels.push_back(cur);
  }
  return levels;
}

Model init_model(const Dataset& ds, const TrainConfig& cfg, Rng& rng) {
  cfg.validate();
  Model m;
  m.encoder = init_stack(ds.dim, cfg.hidden_dim, cfg.num_layers, rng);
  m.ssn = init_ssn(cfg.hidden_dim, ds.dim, rng);
  TreeConfig tc;
  tc.leaf_count = ds.target_length;
  tc.level_gate_counts =
      cfg.tree_levels.empty() ? default_tree_levels(ds.target_length) : cfg.tree_levels;
  m.tree = init_tree(tc);
  return m;
}

namespace {

std::vector<std::size_t> positive_indices(const Dataset& ds, const Trajectory& tr) {
  std::vector<std::size_t> out;
  auto it = ds.positives.find(tr.id);
  if (it == ds.positives.end() || it->second.empty()) {
    throw ArgumentError("sample_batch: trajectory '" + tr.id + "' has no positive pairs");
  }
  for (const std::string& gid : it->second) out.push_back(ds.gallery_index.at(gid));
  return out;
}

}  // namespace

BatchSample sample_batch(const Dataset& ds, const TrainConfig& cfg, Rng& rng) {
  if (ds.trajectories.empty()) throw ArgumentError("sample_batch: dataset has no trajectories");

  const std::size_t N = ds.trajectories.size();
  std::vector<std::size_t> chosen;
  if (N >= cfg.n) {
    std::vector<std::size_t> all(N);
    std::iota(all.begin(), all.end(), 0);
    rng.shuffle(all);
    chosen.assign(all.begin(), all.begin() + cfg.n);
  } else {
    for (std::size_t i = 0; i < cfg.n; ++i) chosen.push_back(rng.index(N));
  }

  auto item_categories = gallery_category_map(ds);

  BatchSample batch;
  for (std::size_t ti : chosen) {
    const Trajectory& tr = ds.trajectories[ti];
    TrajectorySample sample;
    sample.traj_index = ti;

    std::vector<std::size_t> pos = positive_indices(ds, tr);
    std::set<std::size_t> pos_set(pos.begin(), pos.end());
    if (pos.size() >= cfg.S) {
      rng.shuffle(pos);
      for (std::size_t s = 0; s < cfg.S; ++s) sample.picks.push_back({pos[s], 1});
    } else {
      for (std::size_t s = 0; s < cfg.S; ++s) sample.picks.push_back({pos[rng.index(pos.size())], 1});
    }

    // Same-category non-matches when available, any non-match otherwise.
    std::vector<std::size_t> pool;
    for (std::size_t gi = 0; gi < ds.gallery.size(); ++gi) {
      if (pos_set.count(gi)) continue;
      auto it = item_categories.find(ds.gallery[gi].id);
      if (it == item_categories.end() ||
          std::find(it->second.begin(), it->second.end(), tr.category) != it->second.end()) {
        pool.push_back(gi);
      }
    }
    if (pool.empty()) {
      for (std::size_t gi = 0; gi < ds.gallery.size(); ++gi) {
        if (!pos_set.count(gi)) pool.push_back(gi);
      }
    }
    if (pool.empty()) {
      throw ArgumentError("sample_batch: no negative candidates for trajectory '" + tr.id + "'");
    }
    if (pool.size() <= cfg.S) {
      for (std::size_t s = 0; s < cfg.S; ++s) sample.picks.push_back({pool[s % pool.size()], 0});
    } else {
      std::set<std::size_t> taken;
      while (taken.size() < cfg.S) taken.insert(pool[rng.index(pool.size())]);
      for (std::size_t gi : taken) sample.picks.push_back({gi, 0});
    }
    batch.items.push_back(std::move(sample));
  }
  return batch;
}

namespace {

struct StepComputation {
  double loss = 0.0;
  SsnGrads ssn_grads;
  LstmGrads encoder_grads;  // batch mean per Eq.-style per-trajectory averaging
  GateGrads gate_grads;     // summed over all pairs in the batch
  StepMetrics metrics;
};

StepComputation compute_step(const Model& model, const Dataset& ds,
                             const BatchSample& batch, const TrainConfig& cfg,
                             bool need_tree, bool need_encoder, bool need_ssn_grads) {
  if (batch.items.empty()) throw ArgumentError("approx_train_step: empty batch");
  const std::size_t T = ds.target_length;

  // Encode every trajectory once; the hidden sequence is shared by-value
  // across all of its gallery pairings.
  std::vector<std::vector<Vector>> hidden(batch.items.size());
  std::vector<EncoderTape> tapes(batch.items.size());
  for (std::size_t u = 0; u < batch.items.size(); ++u) {
    const Trajectory& tr = ds.trajectories[batch.items[u].traj_index];
    hidden[u] = encode(model.encoder, tr.frames, need_encoder ? &tapes[u] : nullptr);
  }

  SsnBatch ssn_batch;
  std::vector<int> labels;
  for (std::size_t u = 0; u < batch.items.size(); ++u) {
    for (const GalleryPick& pick : batch.items[u].picks) {
      const Vector& item = ds.gallery[pick.gallery_index].values;
      for (std::size_t t = 0; t < T; ++t) {
        ssn_forward(model.ssn, hidden[u][t], item, ssn_batch);
        labels.push_back(pick.label);
      }
    }
  }

  StepComputation out;
  out.loss = ssn_loss(ssn_batch, labels, model.ssn, cfg.lambda);
  out.metrics.loss = out.loss;
  if (need_ssn_grads || need_encoder) {
    out.ssn_grads = ssn_backward(ssn_batch, labels, model.ssn, cfg.lambda);
  }

  if (need_tree) {
    out.gate_grads = zero_gate_grads(model.tree);
    double y_pos = 0.0, y_neg = 0.0, ll = 0.0;
    std::size_t n_pos = 0, n_neg = 0, sample_idx = 0, pair_count = 0;
    std::vector<SsnOutput> leaf(T);
    for (std::size_t u = 0; u < batch.items.size(); ++u) {
      for (const GalleryPick& pick : batch.items[u].picks) {
        for (std::size_t t = 0; t < T; ++t) {
          leaf[t] = ssn_batch.samples[sample_idx++].out;
        }
        TreeForwardRecord rec = tree_forward(model.tree, leaf);
        PosteriorRecord post = posteriors(model.tree, rec, pick.label);
        accumulate(out.gate_grads, gate_gradients(model.tree, rec, post), 1.0);
        ll += std::log(post.label_likelihood);
        if (pick.label) {
          y_pos += rec.score;
          ++n_pos;
        } else {
          y_neg += rec.score;
          ++n_neg;
        }
        ++pair_count;
      }
    }
    out.metrics.mean_y_pos = n_pos ? y_pos / static_cast<double>(n_pos) : 0.0;
    out.metrics.mean_y_neg = n_neg ? y_neg / static_cast<double>(n_neg) : 0.0;
    out.metrics.mean_log_likelihood = pair_count ? ll / static_cast<double>(pair_count) : 0.0;
  }

  if (need_encoder) {
    // The batch loss averages over n*2S*T expert samples, so summing the
    // raw per-sample hidden gradients per trajectory and adding up the
    // per-trajectory backprops is exactly the mean over trajectories of
    // the (1/2S)-averaged per-pair gradients.
    out.encoder_grads = zero_grads(model.encoder);
    std::size_t sample_idx = 0;
    for (std::size_t u = 0; u < batch.items.size(); ++u) {
      std::vector<Vector> grad_h(T, Vector(model.ssn.hidden_dim, 0.0));
      for (std::size_t p = 0; p < batch.items[u].picks.size(); ++p) {
        for (std::size_t t = 0; t < T; ++t) {
          const Vector& dh = out.ssn_grads.d_hidden[sample_idx++];
          kernels::active().axpy(dh.size(), 1.0, dh.data(), grad_h[t].data());
        }
      }
      accumulate(out.encoder_grads, backprop(model.encoder, tapes[u], grad_h), 1.0);
    }
  }
  return out;
}

}  // namespace

LstmGrads replicated_encoder_grads(const Model& model, const Dataset& ds,
                                   const BatchSample& batch, double lambda) {
  TrainConfig cfg;
  cfg.lambda = lambda;
  return compute_step(model, ds, batch, cfg, /*need_tree=*/false,
                      /*need_encoder=*/true, /*need_ssn_grads=*/false)
      .encoder_grads;
}

StepMetrics approx_train_step(Model& model, const Dataset& ds, const BatchSample& batch,
                              const TrainConfig& cfg, Phase phase,
                              std::size_t step_index) {
  StepComputation comp = compute_step(model, ds, batch, cfg, /*need_tree=*/true,
                                      /*need_encoder=*/phase.update_encoder_ssn,
                                      /*need_ssn_grads=*/phase.update_encoder_ssn);
  if (!std::isfinite(comp.loss)) {
    throw TrainingError("training diverged: non-finite loss at step " +
                            std::to_string(step_index),
                        step_index);
  }

  if (phase.update_encoder_ssn) {
    comp.metrics.encoder_grad_norm = clip_grads(comp.encoder_grads, cfg.clip_norm);
    if (cfg.eta != 0.0) {
      apply_update(model.encoder, comp.encoder_grads, -cfg.eta);
      apply_update(model.ssn, comp.ssn_grads, -cfg.eta);
    }
  }
  if (phase.update_gates && cfg.alpha != 0.0) {
    apply_gate_update(model.tree, comp.gate_grads, cfg.alpha);
  }
  return comp.metrics;
}

std::vector<EpochMetrics> two_step_train(Model& model, const Dataset& ds,
                                         const TrainConfig& cfg,
                                         const MetricsSink& sink) {
  cfg.validate();
  if (ds.trajectories.empty()) throw ArgumentError("two_step_train: dataset has no trajectories");
  if (ds.target_length != model.tree.cfg.leaf_count) {
    throw ShapeError("two_step_train: trajectory length " +
                     std::to_string(ds.target_length) + " vs tree with " +
                     std::to_string(model.tree.cfg.leaf_count) + " leaves");
  }

  Rng rng(cfg.seed);
  const std::size_t steps_per_epoch = std::max<std::size_t>(1, ds.trajectories.size() / cfg.n);

  std::vector<EpochMetrics> history;
  std::size_t global_step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<StepMetrics> step_metrics;
    auto run_phase = [&](Phase phase) {
      for (std::size_t s = 0; s < steps_per_epoch; ++s) {
        BatchSample batch = sample_batch(ds, cfg, rng);
        step_metrics.push_back(
            approx_train_step(model, ds, batch, cfg, phase, global_step++));
      }
    };
    if (cfg.schedule == Schedule::kAlternate) {
      run_phase({true, false});
      run_phase({false, true});
    } else {
      run_phase({true, true});
    }

    EpochMetrics em;
    em.epoch = epoch;
    for (const StepMetrics& sm : step_metrics) {
      em.mean_loss += sm.loss;
      em.mean_y_pos += sm.mean_y_pos;
      em.mean_y_neg += sm.mean_y_neg;
      em.mean_log_likelihood += sm.mean_log_likelihood;
    }
    double inv = 1.0 / static_cast<double>(step_metrics.size());
    em.mean_loss *= inv;
    em.mean_y_pos *= inv;
    em.mean_y_neg *= inv;
    em.mean_log_likelihood *= inv;
    if (!std::isfinite(em.mean_log_likelihood) || !std::isfinite(em.mean_loss)) {
      throw TrainingError("training diverged: non-finite epoch metrics at epoch " +
                              std::to_string(epoch),
                          global_step);
    }
    history.push_back(em);
    if (sink) sink(em);
  }
  return history;
}

Model category_finetune(const Model& general, const Dataset& ds,
                        const std::string& category, const TrainConfig& cfg) {
  Dataset restricted = restrict_category(ds, category);
  Model tuned = general;
  tuned.category = category;
  if (cfg.epochs > 0) two_step_train(tuned, restricted, cfg);
  return tuned;
}

}  // namespace seqmatch
