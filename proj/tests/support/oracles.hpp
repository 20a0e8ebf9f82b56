// Independent reference routes for the DERIVED test values. Everything here
// recomputes results with plain loops and its own formulas; nothing reuses
// the library's forward/backward internals beyond the public data types.
#pragma once

#include <vector>

#include "seqmatch/features.hpp"
#include "seqmatch/fusion_tree.hpp"
#include "seqmatch/lstm.hpp"
#include "seqmatch/ssn.hpp"
#include "seqmatch/trainer.hpp"

namespace seqmatch::test {

// Triple-loop w*x + b.
Vector oracle_affine(const Matrix& w, const Vector& x, const Vector& b);

struct OracleLstmState {
  Vector h, c;
};

// Scalar-loop recurrence: gates from the stacked weight rows over
// (h_prev, x), then c = f*c_prev + i*g and h = o*tanh(c).
OracleLstmState oracle_lstm_step(const LstmParams& p, const OracleLstmState& prev,
                                 const Vector& x);

// Whole stack composed step by step through oracle_lstm_step.
std::vector<Vector> oracle_encode(const StackedLstm& stack,
                                  const std::vector<Vector>& frames);

// Root-to-leaf path enumeration. Gates are recomputed from scratch (means,
// dot products, softmax with plain loops); the likelihood is the sum over
// paths of the gate product times the leaf's label likelihood.
double oracle_tree_likelihood(const FusionTree& tree,
                              const std::vector<SsnOutput>& leaves, int label);

// Brute-force Bayes over enumerated paths: child posterior at a node is the
// posterior mass of paths through that edge over the mass through the node.
// Indexed like FusionTree::gates.
std::vector<std::vector<Vector>> oracle_posteriors(const FusionTree& tree,
                                                   const std::vector<SsnOutput>& leaves,
                                                   int label);

// Per-pair re-encoding route for the encoder gradient: encodes the
// trajectory once per gallery pairing, backprops each pair alone, then
// averages (1/2S per trajectory, 1/n over the batch).
LstmGrads naive_encoder_grads(const Model& model, const Dataset& ds,
                              const BatchSample& batch, double lambda);

// Fraction of trajectories whose nearest gallery item (L2 on the frame
// centroid) is a true match.
double nearest_centroid_top1(const Dataset& ds);

}  // namespace seqmatch::test
