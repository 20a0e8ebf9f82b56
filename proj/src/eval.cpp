#include "seqmatch/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"
#include "seqmatch/numerics.hpp"

namespace seqmatch {

namespace {

double aggregate(const std::vector<SsnOutput>& outputs, const Model& model,
                 std::optional<BaselineMode> mode) {
  if (!mode) return tree_forward(model.tree, outputs).score;

  switch (*mode) {
    case BaselineMode::kAvg: {
      double acc = 0.0;
      for (const SsnOutput& o : outputs) acc += o.y_hat;
      return acc / static_cast<double>(outputs.size());
    }
    case BaselineMode::kMax: {
      double best = outputs[0].y_hat;
      for (const SsnOutput& o : outputs) best = std::max(best, o.y_hat);
      return best;
    }
    case BaselineMode::kLast:
      return outputs.back().y_hat;
  }
  throw ArgumentError("baseline_score: unknown mode");
}

double fuse_scores(const Model& model, std::span<const Vector> hidden,
                   const FeatureVector& item, std::optional<BaselineMode> mode) {
  std::vector<SsnOutput> outputs;
  outputs.reserve(hidden.size());
  for (const Vector& h : hidden) outputs.push_back(ssn_forward(model.ssn, h, item.values));
  return aggregate(outputs, model, mode);
}

// Gallery scoring exploits the split of the expert's first layer over the
// concatenated input: w1 [h; m] = w1_h h + w1_m m. The hidden part is fixed
// per query frame and the item part is fixed per gallery item, so one score
// costs a 256-entry combine instead of a full matvec. Rankings produced
// this way are cross-checked against score_pair in the test suite.
class PairScorer {
 public:
  PairScorer(const Model& model, std::span<const Vector> hidden) : model_(model) {
    const SsnParams& p = model.ssn;
    const auto& ops = kernels::active();
    pre_h_.resize(hidden.size(), Vector(kFc1Dim));
    for (std::size_t t = 0; t < hidden.size(); ++t) {
      for (std::size_t r = 0; r < kFc1Dim; ++r) {
        pre_h_[t][r] = p.b1[r] + ops.dot(p.w1.data.data() + r * p.w1.cols,
                                         hidden[t].data(), p.hidden_dim);
      }
    }
  }

  Vector item_pre(const Vector& m) const {
    const SsnParams& p = model_.ssn;
    const auto& ops = kernels::active();
    Vector pre(kFc1Dim);
    for (std::size_t r = 0; r < kFc1Dim; ++r) {
      pre[r] = ops.dot(p.w1.data.data() + r * p.w1.cols + p.hidden_dim, m.data(),
                       p.item_dim);
    }
    return pre;
  }

  double score(const Vector& pre_m, std::optional<BaselineMode> mode) const {
    const SsnParams& p = model_.ssn;
    const auto& ops = kernels::active();
    std::vector<SsnOutput> outputs(pre_h_.size());
    for (std::size_t t = 0; t < pre_h_.size(); ++t) {
      SsnOutput& out = outputs[t];
      out.x_fc1.resize(kFc1Dim);
      for (std::size_t r = 0; r < kFc1Dim; ++r) {
        double v = pre_h_[t][r] + pre_m[r];
        out.x_fc1[r] = v > 0.0 ? v : 0.0;
      }
      out.z = ops.dot(p.w2.data(), out.x_fc1.data(), kFc1Dim) + p.b2;
      out.y_hat = sigmoid(out.z);
    }
    return aggregate(outputs, model_, mode);
  }

 private:
  const Model& model_;
  std::vector<Vector> pre_h_;
};

}  // namespace

double score_pair(const Model& model, const Trajectory& traj, const FeatureVector& item) {
  std::vector<Vector> hidden = encode(model.encoder, traj.frames);
  return fuse_scores(model, hidden, item, std::nullopt);
}

double baseline_score(const Model& model, const Trajectory& traj,
                      const FeatureVector& item, BaselineMode mode) {
  std::vector<Vector> hidden = encode(model.encoder, traj.frames);
  return fuse_scores(model, hidden, item, mode);
}

RankedResult rank_gallery(const Model& model, const Trajectory& traj,
                          std::span<const FeatureVector> gallery,
                          std::optional<BaselineMode> baseline) {
  if (gallery.empty()) throw ArgumentError("rank_gallery: empty gallery");

  std::vector<Vector> hidden = encode(model.encoder, traj.frames);
  PairScorer scorer(model, hidden);
  std::vector<std::size_t> order(gallery.size());
  std::iota(order.begin(), order.end(), 0);
  Vector scores(gallery.size());
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    scores[i] = scorer.score(scorer.item_pre(gallery[i].values), baseline);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return gallery[a].id < gallery[b].id;
  });

  RankedResult out;
  out.trajectory_id = traj.id;
  out.gallery_ids.reserve(gallery.size());
  out.scores.reserve(gallery.size());
  for (std::size_t i : order) {
    out.gallery_ids.push_back(gallery[i].id);
    out.scores.push_back(scores[i]);
  }
  return out;
}

double topk_accuracy(std::span<const RankedResult> results,
                     const std::map<std::string, std::vector<std::string>>& truth,
                     std::size_t k) {
  if (k == 0) throw ArgumentError("topk_accuracy: k must be >= 1");
  if (results.empty()) throw ArgumentError("topk_accuracy: no results");

  std::size_t correct = 0;
  for (const RankedResult& r : results) {
    auto it = truth.find(r.trajectory_id);
    if (it == truth.end() || it->second.empty()) {
      throw ArgumentError("topk_accuracy: no ground truth for trajectory '" +
                          r.trajectory_id + "'");
    }
    std::size_t limit = std::min(k, r.gallery_ids.size());
    for (std::size_t i = 0; i < limit; ++i) {
      if (std::find(it->second.begin(), it->second.end(), r.gallery_ids[i]) !=
          it->second.end()) {
        ++correct;
        break;
      }
    }
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(results.size());
}

EvalReport evaluate(const Model& model, const Dataset& ds, const EvalOptions& opts) {
  if (opts.ks.empty()) throw ArgumentError("evaluate: empty k list");
  for (std::size_t k : opts.ks) {
    if (k == 0) throw ArgumentError("evaluate: k must be >= 1");
  }

  // Per-category gallery pools: linked same-category items plus items never
  // referenced by any pair.
  std::map<std::string, std::vector<FeatureVector>> pools;
  if (opts.within_category) {
    auto item_categories = gallery_category_map(ds);
    for (const std::string& cat : ds.categories) {
      std::vector<FeatureVector>& pool = pools[cat];
      for (const FeatureVector& item : ds.gallery) {
        auto it = item_categories.find(item.id);
        if (it == item_categories.end() ||
            std::find(it->second.begin(), it->second.end(), cat) != it->second.end()) {
          pool.push_back(item);
        }
      }
    }
  }

  std::vector<RankedResult> results(ds.trajectories.size());
  std::size_t workers = opts.workers ? opts.workers : std::thread::hardware_concurrency();
  workers = std::max<std::size_t>(1, std::min(workers, ds.trajectories.size()));

  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Trajectory& tr = ds.trajectories[i];
      std::span<const FeatureVector> pool =
          opts.within_category ? std::span<const FeatureVector>(pools.at(tr.category))
                               : std::span<const FeatureVector>(ds.gallery);
      results[i] = rank_gallery(model, tr, pool, opts.baseline);
    }
  };
  if (workers == 1) {
    run_range(0, results.size());
  } else {
    std::vector<std::thread> threads;
    std::size_t chunk = (results.size() + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      std::size_t begin = w * chunk;
      std::size_t end = std::min(results.size(), begin + chunk);
      if (begin >= end) break;
      threads.emplace_back(run_range, begin, end);
    }
    for (std::thread& t : threads) t.join();
  }

  EvalReport report;
  report.method = opts.baseline ? baseline_name(*opts.baseline) : "tree";
  report.ks = opts.ks;
  std::sort(report.ks.begin(), report.ks.end());
  report.query_count = results.size();

  std::map<std::string, std::vector<RankedResult>> by_category;
  for (std::size_t i = 0; i < results.size(); ++i) {
    by_category[ds.trajectories[i].category].push_back(results[i]);
  }
  for (std::size_t k : report.ks) {
    report.overall[k] = topk_accuracy(results, ds.positives, k);
  }
  for (const auto& [cat, rs] : by_category) {
    CategoryRow row;
    row.category = cat;
    row.query_count = rs.size();
    for (std::size_t k : report.ks) row.accuracy[k] = topk_accuracy(rs, ds.positives, k);
    report.per_category.push_back(std::move(row));
  }
  return report;
}

BaselineMode parse_baseline(const std::string& name) {
  if (name == "avg") return BaselineMode::kAvg;
  if (name == "max") return BaselineMode::kMax;
  if (name == "last") return BaselineMode::kLast;
  throw ArgumentError("unknown baseline mode '" + name + "' (expected avg, max or last)");
}

std::string baseline_name(BaselineMode mode) {
  switch (mode) {
    case BaselineMode::kAvg: return "avg";
    case BaselineMode::kMax: return "max";
    case BaselineMode::kLast: return "last";
  }
  return "?";
}

}  // namespace seqmatch
