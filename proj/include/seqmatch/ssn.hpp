#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqmatch/linalg.hpp"

namespace seqmatch {

class Rng;

// Width of the first fully-connected layer; gate vectors downstream carry
// one extra constant-bias slot on top of it.
inline constexpr std::size_t kFc1Dim = 256;

// Two-layer expert scoring one hidden state against one gallery feature.
struct SsnParams {
  std::size_t hidden_dim = 0;   // dim of the sequence-encoder state
  std::size_t item_dim = 0;     // dim of the gallery feature
  Matrix w1;                    // kFc1Dim x (hidden_dim + item_dim)
  Vector b1;                    // kFc1Dim
  Vector w2;                    // kFc1Dim (single output row)
  double b2 = 0.0;

  bool operator==(const SsnParams&) const = default;
};

struct SsnOutput {
  Vector x_fc1;   // rectified fc1 activations, inputs to the fusion gates
  double z = 0.0;
  double y_hat = 0.5;  // sigmoid(z)
};

// One scored pair plus what the backward pass needs.
struct SsnSample {
  Vector input;  // concat(h, m)
  SsnOutput out;
};

struct SsnBatch {
  std::vector<SsnSample> samples;
  std::uint64_t params_fingerprint = 0;
};

struct SsnGrads {
  Matrix w1;
  Vector b1;
  Vector w2;
  double b2 = 0.0;
  // per-sample gradients on the encoder state (for the sequence encoder)
  // and on x_fc1 (diagnostics)
  std::vector<Vector> d_hidden;
  std::vector<Vector> d_fc1;
};

SsnParams init_ssn(std::size_t hidden_dim, std::size_t item_dim, Rng& rng);
std::uint64_t ssn_fingerprint(const SsnParams& p);

// x_fc1 = relu(w1 [h; m] + b1), z = w2 . x_fc1 + b2, y_hat = sigmoid(z)
SsnOutput ssn_forward(const SsnParams& p, const Vector& h, const Vector& m);
// Same, recording the sample into a batch for ssn_backward.
SsnOutput ssn_forward(const SsnParams& p, const Vector& h, const Vector& m,
                      SsnBatch& batch);

// Mean binary log loss over the batch plus lambda * ||W||^2 over both
// weight matrices (biases excluded). Predictions are clamped to
// [1e-12, 1 - 1e-12] inside the logs.
double ssn_loss(std::span<const SsnOutput> outputs, std::span<const int> labels,
                const SsnParams& p, double lambda);
double ssn_loss(const SsnBatch& batch, std::span<const int> labels,
                const SsnParams& p, double lambda);

// Exact gradients of ssn_loss for the batch the samples were recorded on.
SsnGrads ssn_backward(const SsnBatch& batch, std::span<const int> labels,
                      const SsnParams& p, double lambda);

void apply_update(SsnParams& p, const SsnGrads& g, double step);

}  // namespace seqmatch
