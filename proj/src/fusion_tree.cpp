#include "seqmatch/fusion_tree.hpp"

#include <cmath>
#include <string>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"
#include "seqmatch/numerics.hpp"

namespace seqmatch {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::size_t TreeConfig::total_gates() const {
  std::size_t total = 0;
  for (std::size_t c : level_gate_counts) total += c;
  return total;
}

std::size_t TreeConfig::leaves_per_node(std::size_t level) const {
  std::size_t n = 1;
  for (std::size_t l = 0; l <= level; ++l) n *= branching(l);
  return n;
}

void TreeConfig::validate() const {
  if (leaf_count == 0) throw ArgumentError("tree config: leaf_count must be >= 1");
  if (level_gate_counts.empty()) {
    throw ArgumentError("tree config: level_gate_counts must be nonempty");
  }
  if (level_gate_counts.front() != leaf_count) {
    throw ArgumentError("tree config: lowest level has " +
                        std::to_string(level_gate_counts.front()) +
                        " gate units but there are " + std::to_string(leaf_count) +
                        " leaves");
  }
  for (std::size_t l = 0; l < level_gate_counts.size(); ++l) {
    std::size_t nodes = nodes_at(l);
    std::size_t edges = level_gate_counts[l];
    if (nodes == 0 || edges == 0 || edges % nodes != 0) {
      throw ArgumentError("tree config: level " + std::to_string(l) + " has " +
                          std::to_string(edges) + " gate units across " +
                          std::to_string(nodes) + " nodes; counts must nest evenly");
    }
  }
}

FusionTree init_tree(const TreeConfig& cfg) {
  cfg.validate();
  FusionTree tree;
  tree.cfg = cfg;
  tree.gates.resize(cfg.num_levels());
  for (std::size_t l = 0; l < cfg.num_levels(); ++l) {
    tree.gates[l].assign(cfg.level_gate_counts[l], Vector(kGateDim, 0.0));
  }
  return tree;
}

std::uint64_t tree_fingerprint(const FusionTree& tree) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, &tree.cfg.leaf_count, sizeof(tree.cfg.leaf_count));
  for (std::size_t c : tree.cfg.level_gate_counts) h = fnv1a(h, &c, sizeof(c));
  for (const auto& level : tree.gates) {
    for (const Vector& v : level) h = fnv1a(h, v.data(), v.size() * sizeof(double));
  }
  return h;
}

Vector gate_input(const TreeConfig& cfg, int level, std::size_t index,
                  std::span<const Vector> leaf_fc1) {
  if (leaf_fc1.size() != cfg.leaf_count) {
    throw StateError("gate_input: " + std::to_string(leaf_fc1.size()) +
                     " leaf outputs present, tree has " +
                     std::to_string(cfg.leaf_count) + " leaves");
  }
  std::size_t first, count;
  if (level < 0) {
    first = index;
    count = 1;
  } else {
    count = cfg.leaves_per_node(static_cast<std::size_t>(level));
    first = index * count;
  }
  if (first + count > cfg.leaf_count) {
    throw ArgumentError("gate_input: position out of range");
  }
  Vector out(kGateDim, 0.0);
  for (std::size_t i = first; i < first + count; ++i) {
    if (leaf_fc1[i].size() != kFc1Dim) {
      throw StateError("gate_input: leaf " + std::to_string(i) +
                       " output is missing or has wrong dim");
    }
    kernels::active().axpy(kFc1Dim, 1.0, leaf_fc1[i].data(), out.data());
  }
  kernels::active().scale(kFc1Dim, 1.0 / static_cast<double>(count), out.data());
  out[kFc1Dim] = 1.0;  // constant bias slot
  return out;
}

Vector gate_forward(const FusionTree& tree, std::size_t level, std::size_t node,
                    std::span<const Vector> child_inputs) {
  std::size_t b = tree.cfg.branching(level);
  if (child_inputs.size() != b) {
    throw ShapeError("gate_forward: node expects " + std::to_string(b) +
                     " child inputs, got " + std::to_string(child_inputs.size()));
  }
  Vector logits(b);
  for (std::size_t k = 0; k < b; ++k) {
    const Vector& v = tree.gate(level, node, k);
    if (child_inputs[k].size() != v.size()) {
      throw ShapeError("gate_forward: child input dim " +
                       std::to_string(child_inputs[k].size()) + " vs gate dim " +
                       std::to_string(v.size()));
    }
    logits[k] = kernels::active().dot(v.data(), child_inputs[k].data(), v.size());
  }
  return softmax(logits);
}

TreeForwardRecord tree_forward(const FusionTree& tree,
                               std::span<const SsnOutput> ssn_outputs) {
  const TreeConfig& cfg = tree.cfg;
  if (ssn_outputs.size() != cfg.leaf_count) {
    throw ShapeError("tree_forward: " + std::to_string(ssn_outputs.size()) +
                     " expert outputs vs " + std::to_string(cfg.leaf_count) +
                     " leaves");
  }

  TreeForwardRecord rec;
  rec.tree_fingerprint = tree_fingerprint(tree);
  rec.leaf_y.resize(cfg.leaf_count);
  rec.leaf_gate_input.resize(cfg.leaf_count);
  std::vector<Vector> fc1(cfg.leaf_count);
  for (std::size_t i = 0; i < cfg.leaf_count; ++i) {
    rec.leaf_y[i] = ssn_outputs[i].y_hat;
    fc1[i] = ssn_outputs[i].x_fc1;
    rec.leaf_gate_input[i] = gate_input(cfg, -1, i, fc1);
  }

  rec.node_gate_input.resize(cfg.num_levels());
  rec.gate.resize(cfg.num_levels());
  rec.node_likelihood.resize(cfg.num_levels());

  for (std::size_t l = 0; l < cfg.num_levels(); ++l) {
    std::size_t nodes = cfg.nodes_at(l);
    std::size_t b = cfg.branching(l);
    rec.node_gate_input[l].resize(nodes);
    rec.gate[l].resize(nodes);
    rec.node_likelihood[l].resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      rec.node_gate_input[l][j] = gate_input(cfg, static_cast<int>(l), j, fc1);
      std::vector<Vector> child_inputs(b);
      for (std::size_t k = 0; k < b; ++k) {
        std::size_t c = j * b + k;
        child_inputs[k] = l == 0 ? rec.leaf_gate_input[c] : rec.node_gate_input[l - 1][c];
      }
      Vector g = gate_forward(tree, l, j, child_inputs);
      double lik = 0.0;
      for (std::size_t k = 0; k < b; ++k) {
        std::size_t c = j * b + k;
        double child = l == 0 ? rec.leaf_y[c] : rec.node_likelihood[l - 1][c];
        lik += g[k] * child;
      }
      rec.gate[l][j] = std::move(g);
      rec.node_likelihood[l][j] = lik;
    }
  }
  rec.score = rec.node_likelihood.back()[0];
  return rec;
}

PosteriorRecord posteriors(const FusionTree& tree, const TreeForwardRecord& record,
                           int label) {
  const TreeConfig& cfg = tree.cfg;
  if (record.tree_fingerprint != tree_fingerprint(tree)) {
    throw StateError("posteriors: forward record is stale for this tree");
  }
  if (label != 0 && label != 1) throw ArgumentError("posteriors: label must be 0 or 1");

  PosteriorRecord post;
  post.tree_fingerprint = record.tree_fingerprint;
  post.label = label;
  post.child_posterior.resize(cfg.num_levels());

  // Subtree likelihoods under the requested label; gates are priors and do
  // not depend on it.
  std::vector<double> leaf_p(cfg.leaf_count);
  for (std::size_t i = 0; i < cfg.leaf_count; ++i) {
    leaf_p[i] = label ? record.leaf_y[i] : 1.0 - record.leaf_y[i];
  }
  std::vector<std::vector<double>> node_p(cfg.num_levels());
  for (std::size_t l = 0; l < cfg.num_levels(); ++l) {
    std::size_t nodes = cfg.nodes_at(l);
    std::size_t b = cfg.branching(l);
    node_p[l].resize(nodes);
    post.child_posterior[l].resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      const Vector& g = record.gate[l][j];
      double total = 0.0;
      Vector weighted(b);
      for (std::size_t k = 0; k < b; ++k) {
        std::size_t c = j * b + k;
        double child = l == 0 ? leaf_p[c] : node_p[l - 1][c];
        weighted[k] = g[k] * child;
        total += weighted[k];
      }
      if (!(total > 0.0) || !std::isfinite(total)) {
        throw NumericError("posteriors: subtree likelihood vanished at level " +
                           std::to_string(l) + " node " + std::to_string(j));
      }
      for (std::size_t k = 0; k < b; ++k) weighted[k] /= total;
      post.child_posterior[l][j] = std::move(weighted);
      node_p[l][j] = total;
    }
  }
  post.label_likelihood = node_p.back()[0];
  return post;
}

GateGrads zero_gate_grads(const FusionTree& tree) {
  GateGrads g(tree.cfg.num_levels());
  for (std::size_t l = 0; l < tree.cfg.num_levels(); ++l) {
    g[l].assign(tree.cfg.level_gate_counts[l], Vector(kGateDim, 0.0));
  }
  return g;
}

GateGrads gate_gradients(const FusionTree& tree, const TreeForwardRecord& record,
                         const PosteriorRecord& post) {
  const TreeConfig& cfg = tree.cfg;
  std::uint64_t fp = tree_fingerprint(tree);
  if (record.tree_fingerprint != fp || post.tree_fingerprint != fp) {
    throw StateError("gate_gradients: record/posteriors are stale for this tree");
  }

  GateGrads grads = zero_gate_grads(tree);
  // Joint posterior of reaching each node, root downwards: the root has
  // weight 1, a child multiplies by its conditional posterior.
  std::vector<std::vector<double>> reach(cfg.num_levels());
  for (std::size_t li = cfg.num_levels(); li-- > 0;) {
    std::size_t nodes = cfg.nodes_at(li);
    std::size_t b = cfg.branching(li);
    reach[li].resize(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
      double r;
      if (li + 1 == cfg.num_levels()) {
        r = 1.0;
      } else {
        std::size_t pb = cfg.branching(li + 1);
        r = reach[li + 1][j / pb] * post.child_posterior[li + 1][j / pb][j % pb];
      }
      reach[li][j] = r;
      const Vector& g = record.gate[li][j];
      const Vector& h = post.child_posterior[li][j];
      for (std::size_t k = 0; k < b; ++k) {
        std::size_t c = j * b + k;
        const Vector& x =
            li == 0 ? record.leaf_gate_input[c] : record.node_gate_input[li - 1][c];
        kernels::active().axpy(kGateDim, r * (h[k] - g[k]), x.data(),
                               grads[li][j * b + k].data());
      }
    }
  }
  return grads;
}

void accumulate(GateGrads& acc, const GateGrads& g, double scale) {
  for (std::size_t l = 0; l < acc.size(); ++l) {
    for (std::size_t i = 0; i < acc[l].size(); ++i) {
      kernels::active().axpy(kGateDim, scale, g[l][i].data(), acc[l][i].data());
    }
  }
}

void apply_gate_update(FusionTree& tree, const GateGrads& g, double alpha) {
  if (alpha == 0.0) return;
  for (std::size_t l = 0; l < tree.gates.size(); ++l) {
    for (std::size_t i = 0; i < tree.gates[l].size(); ++i) {
      kernels::active().axpy(kGateDim, alpha, g[l][i].data(), tree.gates[l][i].data());
    }
  }
}

void gate_update(FusionTree& tree, const TreeForwardRecord& record,
                 const PosteriorRecord& post, double alpha) {
  apply_gate_update(tree, gate_gradients(tree, record, post), alpha);
}

}  // namespace seqmatch
