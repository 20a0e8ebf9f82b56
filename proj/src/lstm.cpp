#include "seqmatch/lstm.hpp"

#include <cmath>
#include <limits>
#include <cstring>
#include <string>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"
#include "seqmatch/numerics.hpp"
#include "seqmatch/rng.hpp"

namespace seqmatch {

namespace {

constexpr double kInitRange = 0.08;

// Candidate-gate tanh kept strictly inside (-1, 1); std::tanh reaches the
// endpoints exactly for |z| beyond ~19.
double tanh_gate(double z) {
  double t = std::tanh(z);
  constexpr double kLimit = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (t >= 1.0) return kLimit;
  if (t <= -1.0) return -kLimit;
  return t;
}

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

LstmParams init_lstm(std::size_t input_dim, std::size_t hidden_dim, Rng& rng) {
  if (input_dim == 0 || hidden_dim == 0) {
    throw ArgumentError("init_lstm: dimensions must be >= 1");
  }
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.weights = Matrix(4 * hidden_dim, hidden_dim + input_dim);
  p.bias = Vector(4 * hidden_dim);
  for (double& w : p.weights.data) w = rng.uniform(-kInitRange, kInitRange);
  for (double& b : p.bias) b = rng.uniform(-kInitRange, kInitRange);
  for (std::size_t r = hidden_dim; r < 2 * hidden_dim; ++r) p.bias[r] = 1.0;
  return p;
}

StackedLstm init_stack(std::size_t input_dim, std::size_t hidden_dim,
                       std::size_t num_layers, Rng& rng) {
  if (num_layers == 0) throw ArgumentError("init_stack: need at least one layer");
  StackedLstm stack;
  stack.layers.reserve(num_layers);
  std::size_t in = input_dim;
  for (std::size_t l = 0; l < num_layers; ++l) {
    stack.layers.push_back(init_lstm(in, hidden_dim, rng));
    in = hidden_dim;
  }
  return stack;
}

std::uint64_t stack_fingerprint(const StackedLstm& stack) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const LstmParams& p : stack.layers) {
    h = fnv1a(h, &p.input_dim, sizeof(p.input_dim));
    h = fnv1a(h, &p.hidden_dim, sizeof(p.hidden_dim));
    h = fnv1a(h, p.weights.data.data(), p.weights.data.size() * sizeof(double));
    h = fnv1a(h, p.bias.data(), p.bias.size() * sizeof(double));
  }
  return h;
}

LstmState lstm_step(const LstmParams& p, const LstmState& prev, const Vector& input,
                    LstmStepCache* cache) {
  const std::size_t H = p.hidden_dim;
  if (input.size() != p.input_dim) {
    throw ShapeError("lstm_step: input has dim " + std::to_string(input.size()) +
                     " but layer expects " + std::to_string(p.input_dim));
  }
  if (prev.h.size() != H || prev.c.size() != H) {
    throw ShapeError("lstm_step: state dims do not match hidden_dim " + std::to_string(H));
  }

  Vector concat(H + p.input_dim);
  std::memcpy(concat.data(), prev.h.data(), H * sizeof(double));
  std::memcpy(concat.data() + H, input.data(), p.input_dim * sizeof(double));

  Vector pre(4 * H);
  kernels::active().matvec(p.weights.data.data(), 4 * H, H + p.input_dim,
                           concat.data(), p.bias.data(), pre.data());

  LstmState next;
  next.h.resize(H);
  next.c.resize(H);
  Vector gi(H), gf(H), go(H), gg(H), tc(H);
  for (std::size_t k = 0; k < H; ++k) {
    gi[k] = sigmoid(pre[k]);
    gf[k] = sigmoid(pre[H + k]);
    go[k] = sigmoid(pre[2 * H + k]);
    gg[k] = tanh_gate(pre[3 * H + k]);
    next.c[k] = gf[k] * prev.c[k] + gi[k] * gg[k];
    tc[k] = std::tanh(next.c[k]);
    next.h[k] = go[k] * tc[k];
  }

  if (cache) {
    cache->input = input;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->gate_i = std::move(gi);
    cache->gate_f = std::move(gf);
    cache->gate_o = std::move(go);
    cache->gate_g = std::move(gg);
    cache->c = next.c;
    cache->tanh_c = std::move(tc);
  }
  return next;
}

std::vector<Vector> encode(const StackedLstm& stack, std::span<const Vector> frames,
                           EncoderTape* tape) {
  if (stack.layers.empty()) throw ArgumentError("encode: stack has no layers");
  if (frames.empty()) throw ArgumentError("encode: empty trajectory");

  if (tape) {
    tape->steps.assign(stack.layers.size(), {});
    tape->params_fingerprint = stack_fingerprint(stack);
  }

  std::vector<Vector> inputs(frames.begin(), frames.end());
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    const LstmParams& p = stack.layers[l];
    LstmState state{Vector(p.hidden_dim, 0.0), Vector(p.hidden_dim, 0.0)};
    std::vector<Vector> hidden;
    hidden.reserve(inputs.size());
    if (tape) tape->steps[l].resize(inputs.size());
    for (std::size_t t = 0; t < inputs.size(); ++t) {
      state = lstm_step(p, state, inputs[t], tape ? &tape->steps[l][t] : nullptr);
      hidden.push_back(state.h);
    }
    inputs = std::move(hidden);
  }
  return inputs;
}

LstmGrads zero_grads(const StackedLstm& stack) {
  LstmGrads g;
  for (const LstmParams& p : stack.layers) {
    g.weights.emplace_back(p.weights.rows, p.weights.cols);
    g.bias.emplace_back(p.bias.size(), 0.0);
  }
  return g;
}

LstmGrads backprop(const StackedLstm& stack, const EncoderTape& tape,
                   std::span<const Vector> grad_h) {
  if (tape.steps.size() != stack.layers.size() ||
      tape.params_fingerprint != stack_fingerprint(stack)) {
    throw StateError("backprop: tape does not match the encoder parameters");
  }
  const std::size_t T = tape.steps.empty() ? 0 : tape.steps[0].size();
  if (grad_h.size() != T) {
    throw ShapeError("backprop: grad_h length " + std::to_string(grad_h.size()) +
                     " does not match tape length " + std::to_string(T));
  }

  LstmGrads grads = zero_grads(stack);
  const auto& ops = kernels::active();

  // Top layer receives grad_h; each pass fills the gradient w.r.t. its own
  // input sequence, which is the layer below's hidden-state gradient.
  std::vector<Vector> dh_out(grad_h.begin(), grad_h.end());
  for (std::size_t li = stack.layers.size(); li-- > 0;) {
    const LstmParams& p = stack.layers[li];
    const std::size_t H = p.hidden_dim;
    const std::size_t I = p.input_dim;
    const auto& steps = tape.steps[li];

    std::vector<Vector> dx(T, Vector(I, 0.0));
    Vector dh_next(H, 0.0), dc_next(H, 0.0);
    Vector dpre(4 * H), concat(H + I), dconcat(H + I);
    for (std::size_t t = T; t-- > 0;) {
      const LstmStepCache& s = steps[t];
      for (std::size_t k = 0; k < H; ++k) {
        double dh = dh_out[t][k] + dh_next[k];
        double i = s.gate_i[k], f = s.gate_f[k], o = s.gate_o[k], g = s.gate_g[k];
        double tc = s.tanh_c[k];
        double dc = dc_next[k] + dh * o * (1.0 - tc * tc);
        dpre[k] = dc * g * i * (1.0 - i);
        dpre[H + k] = dc * s.c_prev[k] * f * (1.0 - f);
        dpre[2 * H + k] = dh * tc * o * (1.0 - o);
        dpre[3 * H + k] = dc * i * (1.0 - g * g);
        dc_next[k] = dc * f;
      }
      std::memcpy(concat.data(), s.h_prev.data(), H * sizeof(double));
      std::memcpy(concat.data() + H, s.input.data(), I * sizeof(double));
      ops.outer_acc(grads.weights[li].data.data(), 4 * H, H + I, dpre.data(),
                    concat.data());
      ops.axpy(4 * H, 1.0, dpre.data(), grads.bias[li].data());

      std::fill(dconcat.begin(), dconcat.end(), 0.0);
      ops.matvec_t_acc(p.weights.data.data(), 4 * H, H + I, dpre.data(),
                       dconcat.data());
      std::memcpy(dh_next.data(), dconcat.data(), H * sizeof(double));
      std::memcpy(dx[t].data(), dconcat.data() + H, I * sizeof(double));
    }
    dh_out = std::move(dx);
  }
  return grads;
}

void accumulate(LstmGrads& acc, const LstmGrads& g, double scale) {
  const auto& ops = kernels::active();
  for (std::size_t l = 0; l < acc.weights.size(); ++l) {
    ops.axpy(acc.weights[l].data.size(), scale, g.weights[l].data.data(),
             acc.weights[l].data.data());
    ops.axpy(acc.bias[l].size(), scale, g.bias[l].data(), acc.bias[l].data());
  }
}

double clip_grads(LstmGrads& g, double max_norm) {
  double sq = 0.0;
  for (std::size_t l = 0; l < g.weights.size(); ++l) {
    for (double v : g.weights[l].data) sq += v * v;
    for (double v : g.bias[l]) sq += v * v;
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    double s = max_norm / norm;
    const auto& ops = kernels::active();
    for (std::size_t l = 0; l < g.weights.size(); ++l) {
      ops.scale(g.weights[l].data.size(), s, g.weights[l].data.data());
      ops.scale(g.bias[l].size(), s, g.bias[l].data());
    }
  }
  return norm;
}

void apply_update(StackedLstm& stack, const LstmGrads& g, double step) {
  const auto& ops = kernels::active();
  for (std::size_t l = 0; l < stack.layers.size(); ++l) {
    ops.axpy(stack.layers[l].weights.data.size(), step, g.weights[l].data.data(),
             stack.layers[l].weights.data.data());
    ops.axpy(stack.layers[l].bias.size(), step, g.bias[l].data(),
             stack.layers[l].bias.data());
  }
}

}  // namespace seqmatch
