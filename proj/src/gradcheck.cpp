#include "seqmatch/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "seqmatch/errors.hpp"
#include "seqmatch/fusion_tree.hpp"
#include "seqmatch/lstm.hpp"
#include "seqmatch/numerics.hpp"
#include "seqmatch/rng.hpp"
#include "seqmatch/ssn.hpp"

namespace seqmatch {

namespace {

double rel_err(double a, double n) {
  double denom = std::max({std::fabs(a), std::fabs(n), 1e-6});
  return std::fabs(a - n) / denom;
}

double max_rel_err(const Vector& analytic, const Vector& numeric) {
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    worst = std::max(worst, rel_err(analytic[i], numeric[i]));
  }
  return worst;
}

Vector flatten_stack(const StackedLstm& stack) {
  Vector out;
  for (const LstmParams& p : stack.layers) {
    out.insert(out.end(), p.weights.data.begin(), p.weights.data.end());
    out.insert(out.end(), p.bias.begin(), p.bias.end());
  }
  return out;
}

void unflatten_stack(StackedLstm& stack, const Vector& flat) {
  std::size_t pos = 0;
  for (LstmParams& p : stack.layers) {
    std::copy_n(flat.begin() + pos, p.weights.data.size(), p.weights.data.begin());
    pos += p.weights.data.size();
    std::copy_n(flat.begin() + pos, p.bias.size(), p.bias.begin());
    pos += p.bias.size();
  }
}

Vector flatten_grads(const LstmGrads& g) {
  Vector out;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    out.insert(out.end(), g.weights[l].data.begin(), g.weights[l].data.end());
    out.insert(out.end(), g.bias[l].begin(), g.bias[l].end());
  }
  return out;
}

double check_lstm(std::uint64_t seed, const GradcheckSizes& sz,
                  const GradcheckOptions& opts) {
  Rng rng(seed);
  StackedLstm stack = init_stack(sz.input_dim, sz.hidden_dim, sz.num_layers, rng);

  std::vector<Vector> frames(sz.frames, Vector(sz.input_dim));
  for (auto& f : frames) {
    for (double& v : f) v = rng.uniform(-1.0, 1.0);
  }
  std::vector<Vector> contraction(sz.frames, Vector(sz.hidden_dim));
  for (auto& w : contraction) {
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
  }

  EncoderTape tape;
  encode(stack, frames, &tape);
  LstmGrads analytic = backprop(stack, tape, contraction);
  Vector analytic_flat = flatten_grads(analytic);
  if (opts.sign_flip_fault) {
    for (double& v : analytic_flat) v = -v;
  }

  StackedLstm probe = stack;
  auto f = [&](const Vector& flat) {
    unflatten_stack(probe, flat);
    std::vector<Vector> hs = encode(probe, frames);
    double acc = 0.0;
    for (std::size_t t = 0; t < hs.size(); ++t) {
      for (std::size_t k = 0; k < hs[t].size(); ++k) acc += contraction[t][k] * hs[t][k];
    }
    return acc;
  };
  Vector numeric = finite_diff_grad(f, flatten_stack(stack), opts.step);
  return max_rel_err(analytic_flat, numeric);
}

Vector flatten_ssn(const SsnParams& p) {
  Vector out;
  out.insert(out.end(), p.w1.data.begin(), p.w1.data.end());
  out.insert(out.end(), p.b1.begin(), p.b1.end());
  out.insert(out.end(), p.w2.begin(), p.w2.end());
  out.push_back(p.b2);
  return out;
}

void unflatten_ssn(SsnParams& p, const Vector& flat) {
  std::size_t pos = 0;
  std::copy_n(flat.begin(), p.w1.data.size(), p.w1.data.begin());
  pos += p.w1.data.size();
  std::copy_n(flat.begin() + pos, p.b1.size(), p.b1.begin());
  pos += p.b1.size();
  std::copy_n(flat.begin() + pos, p.w2.size(), p.w2.begin());
  pos += p.w2.size();
  p.b2 = flat[pos];
}

double check_ssn(std::uint64_t seed, const GradcheckSizes& sz,
                 const GradcheckOptions& opts) {
  Rng rng(seed);
  SsnParams params = init_ssn(sz.hidden_dim, sz.input_dim, rng);
  const double lambda = 0.01;

  // A rectifier pre-activation inside the +-step probe window makes the
  // central difference cross the kink; keep the probe point away from it.
  const double kink_margin = 5.0 * opts.step;
  std::vector<Vector> hs(sz.batch, Vector(sz.hidden_dim));
  std::vector<Vector> ms(sz.batch, Vector(sz.input_dim));
  std::vector<int> labels(sz.batch);
  for (std::size_t i = 0; i < sz.batch; ++i) {
    labels[i] = rng.index(2) ? 1 : 0;
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (double& v : hs[i]) v = rng.uniform(-1.0, 1.0);
      for (double& v : ms[i]) v = rng.uniform(-1.0, 1.0);
      Vector concat = hs[i];
      concat.insert(concat.end(), ms[i].begin(), ms[i].end());
      double nearest = 1.0;
      for (std::size_t r = 0; r < kFc1Dim; ++r) {
        double pre = params.b1[r];
        for (std::size_t c = 0; c < concat.size(); ++c) pre += params.w1(r, c) * concat[c];
        nearest = std::min(nearest, std::fabs(pre));
      }
      if (nearest > kink_margin) break;
    }
  }

  SsnBatch batch;
  for (std::size_t i = 0; i < sz.batch; ++i) ssn_forward(params, hs[i], ms[i], batch);
  SsnGrads grads = ssn_backward(batch, labels, params, lambda);
  Vector analytic;
  analytic.insert(analytic.end(), grads.w1.data.begin(), grads.w1.data.end());
  analytic.insert(analytic.end(), grads.b1.begin(), grads.b1.end());
  analytic.insert(analytic.end(), grads.w2.begin(), grads.w2.end());
  analytic.push_back(grads.b2);
  if (opts.sign_flip_fault) {
    for (double& v : analytic) v = -v;
  }

  SsnParams probe = params;
  auto f = [&](const Vector& flat) {
    unflatten_ssn(probe, flat);
    std::vector<SsnOutput> outs;
    outs.reserve(sz.batch);
    for (std::size_t i = 0; i < sz.batch; ++i) outs.push_back(ssn_forward(probe, hs[i], ms[i]));
    return ssn_loss(outs, labels, probe, lambda);
  };
  Vector numeric = finite_diff_grad(f, flatten_ssn(params), opts.step);
  return max_rel_err(analytic, numeric);
}

Vector flatten_gates(const FusionTree& tree) {
  Vector out;
  for (const auto& level : tree.gates) {
    for (const Vector& v : level) out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

void unflatten_gates(FusionTree& tree, const Vector& flat) {
  std::size_t pos = 0;
  for (auto& level : tree.gates) {
    for (Vector& v : level) {
      std::copy_n(flat.begin() + pos, v.size(), v.begin());
      pos += v.size();
    }
  }
}

double check_gates(std::uint64_t seed, const GradcheckSizes& sz,
                   const GradcheckOptions& opts) {
  Rng rng(seed);
  TreeConfig cfg;
  cfg.leaf_count = sz.leaves;
  cfg.level_gate_counts.clear();
  std::size_t cur = sz.leaves;
  cfg.level_gate_counts.push_back(cur);
  while (cur % 2 == 0 && cur > 2) {
    cur /= 2;
    cfg.level_gate_counts.push_back(cur);
  }
  FusionTree tree = init_tree(cfg);
  for (auto& level : tree.gates) {
    for (Vector& v : level) {
      for (double& x : v) x = rng.uniform(-0.5, 0.5);
    }
  }

  std::vector<SsnOutput> leaves(sz.leaves);
  for (SsnOutput& leaf : leaves) {
    leaf.x_fc1.resize(kFc1Dim);
    for (double& v : leaf.x_fc1) v = rng.uniform(0.0, 1.0);
    leaf.z = rng.uniform(-2.0, 2.0);
    leaf.y_hat = sigmoid(leaf.z);
  }
  int label = rng.index(2) ? 1 : 0;

  TreeForwardRecord rec = tree_forward(tree, leaves);
  PosteriorRecord post = posteriors(tree, rec, label);
  GateGrads grads = gate_gradients(tree, rec, post);
  Vector analytic;
  for (const auto& level : grads) {
    for (const Vector& v : level) analytic.insert(analytic.end(), v.begin(), v.end());
  }
  if (opts.sign_flip_fault) {
    for (double& v : analytic) v = -v;
  }

  FusionTree probe = tree;
  auto f = [&](const Vector& flat) {
    unflatten_gates(probe, flat);
    TreeForwardRecord r = tree_forward(probe, leaves);
    PosteriorRecord p = posteriors(probe, r, label);
    return std::log(p.label_likelihood);
  };
  Vector numeric = finite_diff_grad(f, flatten_gates(tree), opts.step);
  return max_rel_err(analytic, numeric);
}

}  // namespace

std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed,
                                           const GradcheckSizes& sizes,
                                           const GradcheckOptions& opts) {
  if (sizes.seeds == 0) throw ArgumentError("gradcheck: need at least one seed");

  GradcheckResult lstm{"lstm", 0.0, false};
  GradcheckResult ssn{"ssn", 0.0, false};
  GradcheckResult gates{"gates", 0.0, false};
  for (std::size_t s = 0; s < sizes.seeds; ++s) {
    std::uint64_t sd = seed + s;
    lstm.max_rel_err = std::max(lstm.max_rel_err, check_lstm(sd, sizes, opts));
    ssn.max_rel_err = std::max(ssn.max_rel_err, check_ssn(sd, sizes, opts));
    gates.max_rel_err = std::max(gates.max_rel_err, check_gates(sd, sizes, opts));
  }
  lstm.pass = lstm.max_rel_err < opts.tolerance;
  ssn.pass = ssn.max_rel_err < opts.tolerance;
  gates.pass = gates.max_rel_err < opts.tolerance;
  return {lstm, ssn, gates};
}

}  // namespace seqmatch
