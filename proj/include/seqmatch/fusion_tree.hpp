#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqmatch/linalg.hpp"
#include "seqmatch/ssn.hpp"

namespace seqmatch {

// Gate vectors score a 256-dim pooled fc1 feature plus a constant bias slot.
inline constexpr std::size_t kGateDim = kFc1Dim + 1;

// Tree layout over the per-frame experts. level_gate_counts runs from the
// level adjacent to the leaves up to the root and counts child edges (gate
// units) per level; the default {32, 16, 8, 4, 2} is a binary tree over 32
// leaves with 62 gate units in total.
struct TreeConfig {
  std::size_t leaf_count = 32;
  std::vector<std::size_t> level_gate_counts = {32, 16, 8, 4, 2};

  std::size_t num_levels() const { return level_gate_counts.size(); }
  // Internal nodes at a level; the top level is the single root.
  std::size_t nodes_at(std::size_t level) const {
    return level + 1 < level_gate_counts.size() ? level_gate_counts[level + 1] : 1;
  }
  std::size_t branching(std::size_t level) const {
    return level_gate_counts[level] / nodes_at(level);
  }
  std::size_t total_gates() const;
  // Leaves under one node of the given level.
  std::size_t leaves_per_node(std::size_t level) const;

  // Rejects level lists that do not compose into a single-rooted tree with
  // uniform per-level branching over leaf_count leaves.
  void validate() const;

  bool operator==(const TreeConfig&) const = default;
};

// Per-child-edge softmax gating parameters; gates[level][node * b + child].
struct FusionTree {
  TreeConfig cfg;
  std::vector<std::vector<Vector>> gates;

  const Vector& gate(std::size_t level, std::size_t node, std::size_t child) const {
    return gates[level][node * cfg.branching(level) + child];
  }
  Vector& gate(std::size_t level, std::size_t node, std::size_t child) {
    return gates[level][node * cfg.branching(level) + child];
  }

  bool operator==(const FusionTree&) const = default;
};

// Everything one forward pass produced: per-edge prior gates, per-position
// pooled gate inputs, per-node subtree likelihoods under label 1, and the
// global score Y at the root.
struct TreeForwardRecord {
  std::uint64_t tree_fingerprint = 0;
  std::vector<double> leaf_y;                         // expert match scores
  std::vector<Vector> leaf_gate_input;                // [leaf] -> kGateDim
  std::vector<std::vector<Vector>> node_gate_input;   // [level][node] -> kGateDim
  std::vector<std::vector<Vector>> gate;              // [level][node] -> per-child weights
  std::vector<std::vector<double>> node_likelihood;   // [level][node], label 1
  double score = 0.0;                                 // Y, root likelihood
};

// Bayes-updated child weights given a label; child_posterior mirrors the
// gate layout. label_likelihood is the root's P(y), handy for metrics.
struct PosteriorRecord {
  std::uint64_t tree_fingerprint = 0;
  int label = 1;
  std::vector<std::vector<Vector>> child_posterior;   // [level][node]
  double label_likelihood = 0.0;
};

// Same shape as FusionTree::gates; ascent direction on ln P(y).
using GateGrads = std::vector<std::vector<Vector>>;

// Gates start at zero: every node mixes its children uniformly, so an
// untrained tree scores the plain average of the leaf experts.
FusionTree init_tree(const TreeConfig& cfg);
std::uint64_t tree_fingerprint(const FusionTree& tree);

// Pooled gating feature of a tree position: mean of x_fc1 over the leaves
// of its subtree plus the constant bias slot. level -1 addresses leaf
// positions, where the mean is the single leaf's x_fc1.
Vector gate_input(const TreeConfig& cfg, int level, std::size_t index,
                  std::span<const Vector> leaf_fc1);

// Softmax over one node's child edges; logit k is <gate vector k, child k's
// pooled input>.
Vector gate_forward(const FusionTree& tree, std::size_t level, std::size_t node,
                    std::span<const Vector> child_inputs);

// Recursive mixture: each node's likelihood is the gate-weighted sum of its
// children's, leaves contribute y_hat. Y is therefore a convex combination
// of the leaf scores.
TreeForwardRecord tree_forward(const FusionTree& tree,
                               std::span<const SsnOutput> ssn_outputs);

// Child posteriors at every node: prior gate times child subtree likelihood
// under the label, normalized over siblings.
PosteriorRecord posteriors(const FusionTree& tree, const TreeForwardRecord& record,
                           int label);

GateGrads zero_gate_grads(const FusionTree& tree);
// d ln P(label) / d v for every gate vector: (posterior - prior) times the
// child's pooled input, scaled by the product of posteriors on the path
// from the root down to the edge's parent node.
GateGrads gate_gradients(const FusionTree& tree, const TreeForwardRecord& record,
                         const PosteriorRecord& post);
void accumulate(GateGrads& acc, const GateGrads& g, double scale);
void apply_gate_update(FusionTree& tree, const GateGrads& g, double alpha);
// Single-sample ascent step: v += alpha * gradient.
void gate_update(FusionTree& tree, const TreeForwardRecord& record,
                 const PosteriorRecord& post, double alpha);

}  // namespace seqmatch
