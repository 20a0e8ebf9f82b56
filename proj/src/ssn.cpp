#include "seqmatch/ssn.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "seqmatch/errors.hpp"
#include "seqmatch/kernels.hpp"
#include "seqmatch/numerics.hpp"
#include "seqmatch/rng.hpp"

namespace seqmatch {

namespace {

constexpr double kInitRange = 0.08;
constexpr double kProbEps = 1e-12;

std::uint64_t fnv1a(std::uint64_t h, const void* bytes, std::size_t n) {
  const unsigned char* p = static_cast<const unsigned char*>(bytes);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

double clamp_prob(double y) {
  if (y < kProbEps) return kProbEps;
  if (y > 1.0 - kProbEps) return 1.0 - kProbEps;
  return y;
}

}  // namespace

SsnParams init_ssn(std::size_t hidden_dim, std::size_t item_dim, Rng& rng) {
  if (hidden_dim == 0 || item_dim == 0) {
    throw ArgumentError("init_ssn: dimensions must be >= 1");
  }
  SsnParams p;
  p.hidden_dim = hidden_dim;
  p.item_dim = item_dim;
  p.w1 = Matrix(kFc1Dim, hidden_dim + item_dim);
  p.b1 = Vector(kFc1Dim);
  p.w2 = Vector(kFc1Dim);
  for (double& w : p.w1.data) w = rng.uniform(-kInitRange, kInitRange);
  for (double& b : p.b1) b = rng.uniform(-kInitRange, kInitRange);
  for (double& w : p.w2) w = rng.uniform(-kInitRange, kInitRange);
  p.b2 = rng.uniform(-kInitRange, kInitRange);
  return p;
}

std::uint64_t ssn_fingerprint(const SsnParams& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  h = fnv1a(h, &p.hidden_dim, sizeof(p.hidden_dim));
  h = fnv1a(h, &p.item_dim, sizeof(p.item_dim));
  h = fnv1a(h, p.w1.data.data(), p.w1.data.size() * sizeof(double));
  h = fnv1a(h, p.b1.data(), p.b1.size() * sizeof(double));
  h = fnv1a(h, p.w2.data(), p.w2.size() * sizeof(double));
  h = fnv1a(h, &p.b2, sizeof(p.b2));
  return h;
}

namespace {

SsnOutput forward_impl(const SsnParams& p, const Vector& h, const Vector& m,
                       Vector* input_out) {
  if (h.size() != p.hidden_dim || m.size() != p.item_dim) {
    throw ShapeError("ssn_forward: got dims (" + std::to_string(h.size()) + ", " +
                     std::to_string(m.size()) + "), expected (" +
                     std::to_string(p.hidden_dim) + ", " + std::to_string(p.item_dim) + ")");
  }
  Vector input(p.hidden_dim + p.item_dim);
  std::memcpy(input.data(), h.data(), p.hidden_dim * sizeof(double));
  std::memcpy(input.data() + p.hidden_dim, m.data(), p.item_dim * sizeof(double));

  SsnOutput out;
  out.x_fc1.resize(kFc1Dim);
  kernels::active().matvec(p.w1.data.data(), kFc1Dim, input.size(), input.data(),
                           p.b1.data(), out.x_fc1.data());
  for (double& v : out.x_fc1) v = v > 0.0 ? v : 0.0;
  out.z = kernels::active().dot(p.w2.data(), out.x_fc1.data(), kFc1Dim) + p.b2;
  out.y_hat = sigmoid(out.z);
  if (input_out) *input_out = std::move(input);
  return out;
}

}  // namespace

SsnOutput ssn_forward(const SsnParams& p, const Vector& h, const Vector& m) {
  return forward_impl(p, h, m, nullptr);
}

SsnOutput ssn_forward(const SsnParams& p, const Vector& h, const Vector& m,
                      SsnBatch& batch) {
  // The fingerprint is taken once; ssn_backward re-derives it and rejects
  // the batch if the parameters moved in between.
  if (batch.samples.empty()) batch.params_fingerprint = ssn_fingerprint(p);
  SsnSample sample;
  sample.out = forward_impl(p, h, m, &sample.input);
  batch.samples.push_back(std::move(sample));
  return batch.samples.back().out;
}

double ssn_loss(std::span<const SsnOutput> outputs, std::span<const int> labels,
                const SsnParams& p, double lambda) {
  if (outputs.empty()) throw ArgumentError("ssn_loss: empty batch");
  if (outputs.size() != labels.size()) {
    throw ShapeError("ssn_loss: " + std::to_string(outputs.size()) + " outputs vs " +
                     std::to_string(labels.size()) + " labels");
  }
  if (lambda < 0.0) throw ArgumentError("ssn_loss: lambda must be >= 0");

  double acc = 0.0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    double y = clamp_prob(outputs[i].y_hat);
    acc -= labels[i] ? std::log(y) : std::log(1.0 - y);
  }
  acc /= static_cast<double>(outputs.size());

  if (lambda > 0.0) {
    double sq = kernels::active().dot(p.w1.data.data(), p.w1.data.data(),
                                      p.w1.data.size());
    sq += kernels::active().dot(p.w2.data(), p.w2.data(), p.w2.size());
    acc += lambda * sq;
  }
  return acc;
}

double ssn_loss(const SsnBatch& batch, std::span<const int> labels,
                const SsnParams& p, double lambda) {
  std::vector<SsnOutput> outs;
  outs.reserve(batch.samples.size());
  for (const SsnSample& s : batch.samples) outs.push_back(s.out);
  return ssn_loss(outs, labels, p, lambda);
}

SsnGrads ssn_backward(const SsnBatch& batch, std::span<const int> labels,
                      const SsnParams& p, double lambda) {
  if (batch.samples.empty()) throw ArgumentError("ssn_backward: empty batch");
  if (batch.params_fingerprint != ssn_fingerprint(p)) {
    throw StateError("ssn_backward: batch cache is stale for these parameters");
  }
  if (batch.samples.size() != labels.size()) {
    throw ShapeError("ssn_backward: " + std::to_string(batch.samples.size()) +
                     " samples vs " + std::to_string(labels.size()) + " labels");
  }

  const auto& ops = kernels::active();
  const std::size_t n = batch.samples.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  SsnGrads g;
  g.w1 = Matrix(kFc1Dim, p.hidden_dim + p.item_dim);
  g.b1 = Vector(kFc1Dim, 0.0);
  g.w2 = Vector(kFc1Dim, 0.0);
  g.d_hidden.resize(n);
  g.d_fc1.resize(n);

  Vector dpre1(kFc1Dim);
  for (std::size_t s = 0; s < n; ++s) {
    const SsnSample& sample = batch.samples[s];
    double y = sample.out.y_hat;
    // Exact derivative of the clamped loss: zero once y_hat leaves the
    // clamp interval, y_hat - label inside it.
    double dz = 0.0;
    if (y >= kProbEps && y <= 1.0 - kProbEps) {
      dz = (y - static_cast<double>(labels[s])) * inv_n;
    }

    ops.axpy(kFc1Dim, dz, sample.out.x_fc1.data(), g.w2.data());
    g.b2 += dz;

    Vector& dfc1 = g.d_fc1[s];
    dfc1.resize(kFc1Dim);
    for (std::size_t k = 0; k < kFc1Dim; ++k) {
      dfc1[k] = dz * p.w2[k];
      dpre1[k] = sample.out.x_fc1[k] > 0.0 ? dfc1[k] : 0.0;
    }
    ops.outer_acc(g.w1.data.data(), kFc1Dim, p.hidden_dim + p.item_dim,
                  dpre1.data(), sample.input.data());
    ops.axpy(kFc1Dim, 1.0, dpre1.data(), g.b1.data());

    Vector dinput(p.hidden_dim + p.item_dim, 0.0);
    ops.matvec_t_acc(p.w1.data.data(), kFc1Dim, p.hidden_dim + p.item_dim,
                     dpre1.data(), dinput.data());
    g.d_hidden[s].assign(dinput.begin(), dinput.begin() + p.hidden_dim);
  }

  if (lambda > 0.0) {
    ops.axpy(g.w1.data.size(), 2.0 * lambda, p.w1.data.data(), g.w1.data.data());
    ops.axpy(g.w2.size(), 2.0 * lambda, p.w2.data(), g.w2.data());
  }
  return g;
}

void apply_update(SsnParams& p, const SsnGrads& g, double step) {
  const auto& ops = kernels::active();
  ops.axpy(p.w1.data.size(), step, g.w1.data.data(), p.w1.data.data());
  ops.axpy(p.b1.size(), step, g.b1.data(), p.b1.data());
  ops.axpy(p.w2.size(), step, g.w2.data(), p.w2.data());
  p.b2 += step * g.b2;
}

}  // namespace seqmatch
