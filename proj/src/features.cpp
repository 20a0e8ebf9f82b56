#include "seqmatch/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "seqmatch/errors.hpp"
#include "seqmatch/rng.hpp"

namespace seqmatch {

void Dataset::finalize() {
  if (gallery.empty()) throw ArgumentError("dataset: gallery section is empty");
  if (trajectories.empty()) throw ArgumentError("dataset: trajectory section is empty");

  gallery_index.clear();
  trajectory_index.clear();
  for (std::size_t i = 0; i < gallery.size(); ++i) {
    if (!gallery_index.emplace(gallery[i].id, i).second) {
      throw ArgumentError("dataset: duplicate gallery id '" + gallery[i].id + "'");
    }
    if (gallery[i].values.size() != dim) {
      throw ArgumentError("dataset: gallery item '" + gallery[i].id +
                          "' has dim " + std::to_string(gallery[i].values.size()) +
                          ", expected " + std::to_string(dim));
    }
  }
  std::set<std::string> cats;
  for (std::size_t i = 0; i < trajectories.size(); ++i) {
    const Trajectory& tr = trajectories[i];
    if (!trajectory_index.emplace(tr.id, i).second) {
      throw ArgumentError("dataset: duplicate trajectory id '" + tr.id + "'");
    }
    if (tr.frames.size() != target_length) {
      throw ArgumentError("dataset: trajectory '" + tr.id + "' has " +
                          std::to_string(tr.frames.size()) + " frames, expected " +
                          std::to_string(target_length));
    }
    for (const Vector& f : tr.frames) {
      if (f.size() != dim) {
        throw ArgumentError("dataset: trajectory '" + tr.id + "' has a frame of dim " +
                            std::to_string(f.size()) + ", expected " + std::to_string(dim));
      }
    }
    cats.insert(tr.category);
  }
  categories.assign(cats.begin(), cats.end());

  for (const auto& [tid, gids] : positives) {
    if (!trajectory_index.count(tid)) {
      throw ArgumentError("dataset: pair references unknown trajectory '" + tid + "'");
    }
    for (const std::string& gid : gids) {
      if (!gallery_index.count(gid)) {
        throw ArgumentError("dataset: pair references unknown gallery id '" + gid + "'");
      }
    }
  }
}

FeatureVector spp_pool(const FeatureMap& map, const SppConfig& cfg) {
  if (map.channels == 0 || map.height == 0 || map.width == 0) {
    throw ArgumentError("spp_pool: feature map has a zero dimension");
  }
  if (cfg.levels.empty()) throw ArgumentError("spp_pool: levels list is empty");
  for (std::size_t l : cfg.levels) {
    if (l == 0) throw ArgumentError("spp_pool: pyramid level must be >= 1");
  }

  FeatureVector out;
  std::size_t total = 0;
  for (std::size_t l : cfg.levels) total += l * l;
  out.values.reserve(map.channels * total);

  for (std::size_t l : cfg.levels) {
    for (std::size_t i = 0; i < l; ++i) {
      std::size_t y0 = i * map.height / l;
      std::size_t y1 = ((i + 1) * map.height + l - 1) / l;
      for (std::size_t j = 0; j < l; ++j) {
        std::size_t x0 = j * map.width / l;
        std::size_t x1 = ((j + 1) * map.width + l - 1) / l;
        for (std::size_t c = 0; c < map.channels; ++c) {
          double acc = cfg.pooling == Pooling::kMax
                           ? -std::numeric_limits<double>::infinity()
                           : 0.0;
          for (std::size_t y = y0; y < y1; ++y) {
            for (std::size_t x = x0; x < x1; ++x) {
              double v = map.at(c, y, x);
              if (cfg.pooling == Pooling::kMax) {
                acc = std::max(acc, v);
              } else {
                acc += v;
              }
            }
          }
          if (cfg.pooling == Pooling::kAverage) {
            acc /= static_cast<double>((y1 - y0) * (x1 - x0));
          }
          out.values.push_back(acc);
        }
      }
    }
  }
  return out;
}

std::vector<Vector> normalize_trajectory_length(std::span<const Vector> frames,
                                                std::size_t t) {
  if (frames.empty()) throw ArgumentError("normalize_trajectory_length: empty input");
  if (t == 0) throw ArgumentError("normalize_trajectory_length: target length must be >= 1");

  std::vector<Vector> out;
  out.reserve(t);
  if (frames.size() == t) {
    out.assign(frames.begin(), frames.end());
  } else if (frames.size() > t) {
    std::size_t stride = frames.size() / t;
    std::size_t span = (t - 1) * stride + 1;
    std::size_t start = (frames.size() - span) / 2;
    for (std::size_t k = 0; k < t; ++k) out.push_back(frames[start + k * stride]);
  } else {
    for (std::size_t k = 0; k < t; ++k) out.push_back(frames[k % frames.size()]);
  }
  return out;
}

namespace {

[[noreturn]] void parse_fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

double parse_value(const std::string& tok, std::size_t line) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(tok, &pos);
  } catch (const std::exception&) {
    parse_fail(line, "bad numeric value '" + tok + "'");
  }
  if (pos != tok.size()) parse_fail(line, "bad numeric value '" + tok + "'");
  return v;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct PendingFrame {
  std::size_t index;
  std::size_t line;
  Vector values;
};

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file '" + path.string() + "'");

  Dataset ds;
  bool have_dim = false, have_t = false;
  std::set<std::string> seen_gallery_ids;
  // trajectory id -> (category, frames in file order)
  std::map<std::string, std::pair<std::string, std::vector<PendingFrame>>> pending;
  std::vector<std::string> traj_order;
  std::vector<std::tuple<std::size_t, std::string, std::string>> pair_rows;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ss(line);
    std::string tag;
    if (!(ss >> tag)) continue;  // blank line

    if (tag == "#dim" || tag == "#T") {
      std::size_t v;
      if (!(ss >> v) || v == 0) parse_fail(lineno, "bad header value in '" + line + "'");
      (tag == "#dim" ? ds.dim : ds.target_length) = v;
      (tag == "#dim" ? have_dim : have_t) = true;
      continue;
    }
    if (tag[0] == '#') parse_fail(lineno, "unknown header '" + tag + "'");
    if (!have_dim || !have_t) parse_fail(lineno, "#dim and #T headers must precede data rows");

    if (tag == "G") {
      FeatureVector fv;
      if (!(ss >> fv.id)) parse_fail(lineno, "gallery row missing id");
      std::string tok;
      while (ss >> tok) fv.values.push_back(parse_value(tok, lineno));
      if (fv.values.size() != ds.dim) {
        parse_fail(lineno, "gallery row has " + std::to_string(fv.values.size()) +
                               " values, expected " + std::to_string(ds.dim));
      }
      if (!seen_gallery_ids.insert(fv.id).second) {
        parse_fail(lineno, "duplicate gallery id '" + fv.id + "'");
      }
      ds.gallery.push_back(std::move(fv));
    } else if (tag == "T") {
      std::string id, category;
      std::size_t frame_index;
      if (!(ss >> id >> category >> frame_index)) {
        parse_fail(lineno, "trajectory row needs id, category and frame index");
      }
      PendingFrame pf{frame_index, lineno, {}};
      std::string tok;
      while (ss >> tok) pf.values.push_back(parse_value(tok, lineno));
      if (pf.values.size() != ds.dim) {
        parse_fail(lineno, "trajectory frame has " + std::to_string(pf.values.size()) +
                               " values, expected " + std::to_string(ds.dim));
      }
      auto [it, inserted] = pending.try_emplace(id, category, std::vector<PendingFrame>{});
      if (inserted) {
        traj_order.push_back(id);
      } else if (it->second.first != category) {
        parse_fail(lineno, "trajectory '" + id + "' changes category from '" +
                               it->second.first + "' to '" + category + "'");
      }
      it->second.second.push_back(std::move(pf));
    } else if (tag == "P") {
      std::string tid, gid;
      if (!(ss >> tid >> gid)) parse_fail(lineno, "pair row needs trajectory and gallery ids");
      pair_rows.emplace_back(lineno, std::move(tid), std::move(gid));
    } else {
      parse_fail(lineno, "unknown row tag '" + tag + "'");
    }
  }

  for (const std::string& id : traj_order) {
    auto& [category, frames] = pending.at(id);
    std::stable_sort(frames.begin(), frames.end(),
                     [](const PendingFrame& a, const PendingFrame& b) {
                       return a.index < b.index;
                     });
    for (std::size_t k = 1; k < frames.size(); ++k) {
      if (frames[k].index == frames[k - 1].index) {
        parse_fail(frames[k].line, "duplicate frame index " +
                                       std::to_string(frames[k].index) +
                                       " in trajectory '" + id + "'");
      }
    }
    Trajectory tr;
    tr.id = id;
    tr.category = category;
    std::vector<Vector> raw;
    raw.reserve(frames.size());
    for (auto& pf : frames) raw.push_back(std::move(pf.values));
    tr.frames = normalize_trajectory_length(raw, ds.target_length);
    ds.trajectories.push_back(std::move(tr));
  }

  for (auto& [pair_line, tid, gid] : pair_rows) {
    if (!pending.count(tid)) {
      throw ArgumentError("line " + std::to_string(pair_line) +
                          ": pair references unknown trajectory '" + tid + "'");
    }
    if (!seen_gallery_ids.count(gid)) {
      throw ArgumentError("line " + std::to_string(pair_line) +
                          ": pair references unknown gallery id '" + gid + "'");
    }
    auto& v = ds.positives[tid];
    if (std::find(v.begin(), v.end(), gid) == v.end()) v.push_back(gid);
  }
  for (auto& [tid, gids] : ds.positives) std::sort(gids.begin(), gids.end());

  ds.finalize();
  return ds;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file '" + path.string() + "'");

  out << "#dim " << ds.dim << "\n#T " << ds.target_length << "\n";
  for (const FeatureVector& fv : ds.gallery) {
    out << "G " << fv.id;
    for (double v : fv.values) out << ' ' << format_value(v);
    out << '\n';
  }
  for (const Trajectory& tr : ds.trajectories) {
    for (std::size_t t = 0; t < tr.frames.size(); ++t) {
      out << "T " << tr.id << ' ' << tr.category << ' ' << t;
      for (double v : tr.frames[t]) out << ' ' << format_value(v);
      out << '\n';
    }
  }
  for (const auto& [tid, gids] : ds.positives) {
    for (const std::string& gid : gids) out << "P " << tid << ' ' << gid << '\n';
  }
  if (!out) throw IoError("write failed for dataset file '" + path.string() + "'");
}

namespace {

std::string padded_id(char prefix, std::size_t i, std::size_t width) {
  std::string digits = std::to_string(i);
  std::string out(1, prefix);
  if (digits.size() < width) out.append(width - digits.size(), '0');
  return out + digits;
}

constexpr double kDriftGain = 2.0;  // smooth drift amplitude, in frame_noise units
constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

Dataset synth_generate(const SynthConfig& cfg) {
  if (cfg.n_traj == 0 || cfg.gallery_size == 0 || cfg.T == 0 || cfg.n_categories == 0) {
    throw ArgumentError("synth_generate: all counts must be >= 1");
  }
  if (cfg.dim < 2) throw ArgumentError("synth_generate: dim must be >= 2");
  if (cfg.style_noise < 0 || cfg.frame_noise < 0) {
    throw ArgumentError("synth_generate: noise levels must be >= 0");
  }
  if (cfg.corrupt_fraction < 0 || cfg.corrupt_fraction > 1) {
    throw ArgumentError("synth_generate: corrupt_fraction must lie in [0, 1]");
  }
  if (cfg.gallery_size < cfg.n_traj) {
    throw ArgumentError("synth_generate: gallery_size must be >= n_traj (one exact match per trajectory)");
  }

  Rng rng(cfg.seed);
  Dataset ds;
  ds.dim = cfg.dim;
  ds.target_length = cfg.T;
  std::size_t gw = std::to_string(cfg.gallery_size).size();
  std::size_t tw = std::to_string(cfg.n_traj).size();
  ds.gallery.resize(cfg.gallery_size);

  auto draw = [&rng](std::size_t dim) {
    Vector v(dim);
    for (double& x : v) x = rng.normal();
    return v;
  };

  for (std::size_t i = 0; i < cfg.n_traj; ++i) {
    Vector style = draw(cfg.dim);

    FeatureVector& item = ds.gallery[i];
    item.id = padded_id('g', i, gw);
    item.values = style;
    for (double& x : item.values) x += cfg.style_noise * rng.normal();

    Trajectory tr;
    tr.id = padded_id('t', i, tw);
    tr.category = "c" + std::to_string(i % cfg.n_categories);
    Vector drift_dir = draw(cfg.dim);
    double phase = rng.uniform(0.0, kTwoPi);
    tr.frames.reserve(cfg.T);
    for (std::size_t t = 0; t < cfg.T; ++t) {
      bool corrupted = rng.uniform() < cfg.corrupt_fraction;
      double wave = std::sin(kTwoPi * static_cast<double>(t) /
                                 static_cast<double>(cfg.T) +
                             phase);
      Vector frame(cfg.dim);
      for (std::size_t d = 0; d < cfg.dim; ++d) {
        double noise = rng.normal();
        frame[d] = corrupted
                       ? noise
                       : style[d] + cfg.frame_noise * (kDriftGain * wave * drift_dir[d] + noise);
      }
      tr.frames.push_back(std::move(frame));
    }
    ds.positives[tr.id] = {item.id};
    ds.trajectories.push_back(std::move(tr));
  }

  for (std::size_t i = cfg.n_traj; i < cfg.gallery_size; ++i) {
    ds.gallery[i].id = padded_id('g', i, gw);
    ds.gallery[i].values = draw(cfg.dim);
  }

  ds.finalize();
  return ds;
}

Dataset subset(const Dataset& ds, std::span<const std::size_t> traj_indices) {
  Dataset out;
  out.dim = ds.dim;
  out.target_length = ds.target_length;
  out.gallery = ds.gallery;
  for (std::size_t i : traj_indices) {
    if (i >= ds.trajectories.size()) {
      throw ArgumentError("subset: trajectory index out of range");
    }
    const Trajectory& tr = ds.trajectories[i];
    out.trajectories.push_back(tr);
    auto it = ds.positives.find(tr.id);
    if (it != ds.positives.end()) out.positives[tr.id] = it->second;
  }
  out.finalize();
  return out;
}

namespace {

// Keeps only the listed gallery items (by index) plus the pairs that
// reference them.
Dataset prune_gallery(Dataset ds, const std::vector<bool>& keep) {
  std::vector<FeatureVector> gallery;
  std::set<std::string> kept_ids;
  for (std::size_t i = 0; i < ds.gallery.size(); ++i) {
    if (keep[i]) {
      kept_ids.insert(ds.gallery[i].id);
      gallery.push_back(std::move(ds.gallery[i]));
    }
  }
  ds.gallery = std::move(gallery);
  for (auto& [tid, gids] : ds.positives) {
    std::erase_if(gids, [&](const std::string& gid) { return !kept_ids.count(gid); });
  }
  std::erase_if(ds.positives, [](const auto& kv) { return kv.second.empty(); });
  ds.finalize();
  return ds;
}

}  // namespace

std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction) {
  if (fraction < 0.0 || fraction >= 1.0) {
    throw ArgumentError("split_holdout: fraction must lie in [0, 1)");
  }
  std::size_t n = ds.trajectories.size();
  std::size_t held = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  if (held >= n) held = n - 1;
  std::vector<std::size_t> train_idx, hold_idx;
  for (std::size_t i = 0; i < n - held; ++i) train_idx.push_back(i);
  for (std::size_t i = n - held; i < n; ++i) hold_idx.push_back(i);

  Dataset train_part = subset(ds, train_idx);
  if (held == 0) return {std::move(train_part), {}};
  Dataset hold_part = subset(ds, hold_idx);

  // The two parts must be disjoint end to end: an item linked to a holdout
  // trajectory never enters training (not even as a negative), an item
  // linked to a training trajectory never enters the holdout gallery, and
  // never-linked distractors are divided between the parts in proportion.
  std::vector<int> owner(ds.gallery.size(), 0);  // 0 unlinked, 1 train, 2 holdout
  auto mark = [&](const Dataset& part, int tag) {
    for (const auto& [tid, gids] : part.positives) {
      for (const std::string& gid : gids) owner[ds.gallery_index.at(gid)] = tag;
    }
  };
  mark(train_part, 1);
  mark(hold_part, 2);  // a shared item ends up holdout-owned, off limits to training

  std::size_t unlinked_total = 0;
  for (int o : owner) unlinked_total += o == 0;
  std::size_t unlinked_held =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(unlinked_total)));
  std::vector<bool> keep_train(ds.gallery.size()), keep_hold(ds.gallery.size());
  std::size_t unlinked_seen = 0;
  for (std::size_t i = 0; i < ds.gallery.size(); ++i) {
    if (owner[i] == 0) {
      // last fraction of the distractors goes to the holdout side
      bool to_holdout = unlinked_seen >= unlinked_total - unlinked_held;
      keep_train[i] = !to_holdout;
      keep_hold[i] = to_holdout;
      ++unlinked_seen;
    } else {
      keep_train[i] = owner[i] == 1;
      keep_hold[i] = owner[i] == 2;
    }
  }
  return {prune_gallery(std::move(train_part), keep_train),
          prune_gallery(std::move(hold_part), keep_hold)};
}

Dataset restrict_category(const Dataset& ds, const std::string& category) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.trajectories.size(); ++i) {
    if (ds.trajectories[i].category == category) idx.push_back(i);
  }
  if (idx.empty()) throw ArgumentError("unknown category '" + category + "'");
  return subset(ds, idx);
}

std::unordered_map<std::string, std::vector<std::string>> gallery_category_map(
    const Dataset& ds) {
  std::unordered_map<std::string, std::set<std::string>> sets;
  for (const auto& [tid, gids] : ds.positives) {
    const Trajectory& tr = ds.trajectories[ds.trajectory_index.at(tid)];
    for (const std::string& gid : gids) sets[gid].insert(tr.category);
  }
  std::unordered_map<std::string, std::vector<std::string>> out;
  out.reserve(sets.size());
  for (auto& [gid, cats] : sets) out.emplace(gid, std::vector<std::string>(cats.begin(), cats.end()));
  return out;
}

}  // namespace seqmatch
