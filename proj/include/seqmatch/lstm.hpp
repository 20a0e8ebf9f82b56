#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "seqmatch/linalg.hpp"

namespace seqmatch {

class Rng;

// One recurrent layer. `weights` stacks the four gate blocks over the
// concatenated (h_prev, input) vector; row blocks are ordered
// input gate, forget gate, output gate, candidate cell.
struct LstmParams {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  Matrix weights;  // (4*hidden_dim) x (hidden_dim + input_dim)
  Vector bias;     // 4*hidden_dim

  bool operator==(const LstmParams&) const = default;
};

struct LstmState {
  Vector h;
  Vector c;
};

// Everything the reverse pass needs about one step.
struct LstmStepCache {
  Vector input;
  Vector h_prev;
  Vector c_prev;
  Vector gate_i, gate_f, gate_o, gate_g;
  Vector c;
  Vector tanh_c;
};

struct StackedLstm {
  std::vector<LstmParams> layers;

  bool operator==(const StackedLstm&) const = default;
};

// Per-layer, per-step activation cache recorded by encode().
struct EncoderTape {
  std::vector<std::vector<LstmStepCache>> steps;  // [layer][t]
  std::uint64_t params_fingerprint = 0;
};

struct LstmGrads {
  std::vector<Matrix> weights;  // per layer
  std::vector<Vector> bias;
};

// Uniform [-0.08, 0.08] init with forget-gate bias rows set to 1.
LstmParams init_lstm(std::size_t input_dim, std::size_t hidden_dim, Rng& rng);
StackedLstm init_stack(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t num_layers, Rng& rng);

std::uint64_t stack_fingerprint(const StackedLstm& stack);

// Single recurrence step:
//   (i,f,o,g) = (sigma,sigma,sigma,tanh)(W [h_prev; x] + b)
//   c = f.*c_prev + i.*g,  h = o.*tanh(c)
LstmState lstm_step(const LstmParams& p, const LstmState& prev, const Vector& input,
                    LstmStepCache* cache = nullptr);

// Runs the whole stack over a frame sequence from zero initial state; layer
// k consumes layer k-1's hidden sequence. Returns the top layer's hidden
// states and fills the tape for backprop.
std::vector<Vector> encode(const StackedLstm& stack, std::span<const Vector> frames,
                           EncoderTape* tape = nullptr);

// Exact reverse-mode gradients of sum_t <grad_h[t], h_t(params)> for every
// weight and bias. grad_h addresses the top layer's hidden states.
LstmGrads backprop(const StackedLstm& stack, const EncoderTape& tape,
                   std::span<const Vector> grad_h);

LstmGrads zero_grads(const StackedLstm& stack);
void accumulate(LstmGrads& acc, const LstmGrads& g, double scale);
// Global-norm clip; returns the pre-clip norm.
double clip_grads(LstmGrads& g, double max_norm);
void apply_update(StackedLstm& stack, const LstmGrads& g, double step);

}  // namespace seqmatch
