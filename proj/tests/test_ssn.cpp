#include <doctest.h>

#include <cmath>

#include "seqmatch/errors.hpp"
#include "seqmatch/numerics.hpp"
#include "seqmatch/rng.hpp"
#include "seqmatch/ssn.hpp"

using namespace seqmatch;

namespace {

Vector random_vec(Rng& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

}  // namespace

TEST_CASE("ssn_forward: zero parameters score one half") {
  Rng rng(1);
  SsnParams p = init_ssn(3, 2, rng);
  for (double& v : p.w1.data) v = 0.0;
  for (double& v : p.b1) v = 0.0;
  for (double& v : p.w2) v = 0.0;
  p.b2 = 0.0;
  SsnOutput out = ssn_forward(p, {0.1, 0.2, 0.3}, {-0.5, 0.7});
  CHECK(out.z == 0.0);
  CHECK(out.y_hat == 0.5);
}

TEST_CASE("ssn_forward: bias-only head fixes the score") {
  Rng rng(2);
  SsnParams p = init_ssn(2, 2, rng);
  for (double& v : p.w2) v = 0.0;
  p.b2 = std::log(3.0);
  for (int trial = 0; trial < 5; ++trial) {
    SsnOutput out = ssn_forward(p, random_vec(rng, 2), random_vec(rng, 2));
    CHECK(out.y_hat == doctest::Approx(0.75).epsilon(1e-14));
  }
}

TEST_CASE("ssn_forward matches a scalar-loop recomputation") {
  Rng rng(3);
  SsnParams p = init_ssn(4, 3, rng);
  Vector h = random_vec(rng, 4), m = random_vec(rng, 3);
  SsnOutput out = ssn_forward(p, h, m);

  Vector concat = h;
  concat.insert(concat.end(), m.begin(), m.end());
  double z = p.b2;
  for (std::size_t r = 0; r < kFc1Dim; ++r) {
    double pre = p.b1[r];
    for (std::size_t c = 0; c < concat.size(); ++c) pre += p.w1(r, c) * concat[c];
    double act = pre > 0 ? pre : 0.0;
    CHECK(out.x_fc1[r] == doctest::Approx(act).epsilon(1e-12));
    CHECK(out.x_fc1[r] >= 0.0);
    z += p.w2[r] * act;
  }
  CHECK(out.z == doctest::Approx(z).epsilon(1e-12));
  CHECK(out.y_hat == doctest::Approx(1.0 / (1.0 + std::exp(-z))).epsilon(1e-12));

  CHECK_THROWS_AS(ssn_forward(p, random_vec(rng, 5), m), ShapeError);
}

TEST_CASE("ssn_loss: analytic value, confident limit, term-wise recomputation") {
  Rng rng(4);
  SsnParams p = init_ssn(2, 2, rng);

  std::vector<SsnOutput> halves(4);
  for (SsnOutput& o : halves) o.y_hat = 0.5;
  std::vector<int> labels{0, 1, 1, 0};
  CHECK(ssn_loss(halves, labels, p, 0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  std::vector<SsnOutput> confident(2);
  confident[0].y_hat = 1.0 - 1e-13;  // clamps to 1 - 1e-12
  confident[1].y_hat = 1e-13;
  std::vector<int> right{1, 0};
  CHECK(ssn_loss(confident, right, p, 0.0) <= 1e-11);

  std::vector<SsnOutput> batch(2);
  batch[0].y_hat = 0.3;
  batch[1].y_hat = 0.8;
  std::vector<int> lab{1, 0};
  double lambda = 0.01;
  double expected = -(std::log(0.3) + std::log(0.2)) / 2.0;
  double sq = 0.0;
  for (double v : p.w1.data) sq += v * v;
  for (double v : p.w2) sq += v * v;
  expected += lambda * sq;
  CHECK(ssn_loss(batch, lab, p, lambda) == doctest::Approx(expected).epsilon(1e-12));

  CHECK_THROWS_AS(ssn_loss(std::vector<SsnOutput>{}, std::vector<int>{}, p, 0.0),
                  ArgumentError);
  CHECK(ssn_loss(batch, lab, p, 1.0) >= 0.0);
}

TEST_CASE("ssn_backward: optimum, pure regularizer, staleness") {
  Rng rng(5);

  // Confidently correct predictions past the clamp: every gradient entry
  // must be (numerically) zero at lambda = 0.
  SsnParams q = init_ssn(2, 2, rng);
  q.b2 = 40.0;
  SsnBatch perfect;
  ssn_forward(q, random_vec(rng, 2), random_vec(rng, 2), perfect);
  std::vector<int> one{1};
  SsnGrads zg = ssn_backward(perfect, one, q, 0.0);
  for (double v : zg.w1.data) CHECK(std::fabs(v) <= 1e-9);
  for (double v : zg.b1) CHECK(std::fabs(v) <= 1e-9);
  for (double v : zg.w2) CHECK(std::fabs(v) <= 1e-9);
  CHECK(std::fabs(zg.b2) <= 1e-9);

  // Same setup with lambda > 0: gradient is exactly the regularizer 2*lambda*W.
  SsnBatch sato;
  ssn_forward(q, random_vec(rng, 2), random_vec(rng, 2), sato);
  SsnGrads rg = ssn_backward(sato, one, q, 0.25);
  for (std::size_t i = 0; i < q.w1.data.size(); ++i) {
    CHECK(rg.w1.data[i] == doctest::Approx(0.5 * q.w1.data[i]).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < q.w2.size(); ++i) {
    CHECK(rg.w2[i] == doctest::Approx(0.5 * q.w2[i]).epsilon(1e-12));
  }
  for (double v : rg.b1) CHECK(v == 0.0);
  CHECK(rg.b2 == 0.0);

  SsnParams p = init_ssn(3, 2, rng);
  SsnBatch batch;
  ssn_forward(p, random_vec(rng, 3), random_vec(rng, 2), batch);
  SsnParams moved = p;
  moved.b2 += 0.5;
  CHECK_THROWS_AS(ssn_backward(batch, one, moved, 0.0), StateError);
}

TEST_CASE("single-sample dloss/dz equals y_hat - y") {
  Rng rng(6);
  SsnParams p = init_ssn(2, 3, rng);
  SsnBatch batch;
  SsnOutput out = ssn_forward(p, random_vec(rng, 2), random_vec(rng, 3), batch);
  std::vector<int> label{1};
  SsnGrads g = ssn_backward(batch, label, p, 0.0);
  // b2's gradient is exactly dloss/dz.
  CHECK(g.b2 == doctest::Approx(out.y_hat - 1.0).epsilon(1e-14));

  std::vector<int> label0{0};
  SsnBatch batch2;
  SsnOutput out2 = ssn_forward(p, random_vec(rng, 2), random_vec(rng, 3), batch2);
  SsnGrads g2 = ssn_backward(batch2, label0, p, 0.0);
  CHECK(g2.b2 == doctest::Approx(out2.y_hat).epsilon(1e-14));
}

TEST_CASE("ssn gradients agree with finite differences") {
  for (std::uint64_t seed = 1; seed <= 8; ++seed) {
    Rng rng(seed * 100);
    std::size_t hd = 1 + rng.index(5), md = 1 + rng.index(5), n = 1 + rng.index(4);
    SsnParams p = init_ssn(hd, md, rng);
    const double lambda = 0.013;

    std::vector<Vector> hs, ms;
    std::vector<int> labels;
    SsnBatch batch;
    for (std::size_t i = 0; i < n; ++i) {
      hs.push_back(random_vec(rng, hd));
      ms.push_back(random_vec(rng, md));
      labels.push_back(rng.index(2) ? 1 : 0);
      ssn_forward(p, hs.back(), ms.back(), batch);
    }
    SsnGrads g = ssn_backward(batch, labels, p, lambda);

    Vector flat;
    flat.insert(flat.end(), p.w1.data.begin(), p.w1.data.end());
    flat.insert(flat.end(), p.b1.begin(), p.b1.end());
    flat.insert(flat.end(), p.w2.begin(), p.w2.end());
    flat.push_back(p.b2);

    SsnParams probe = p;
    auto f = [&](const Vector& theta) {
      std::size_t pos = 0;
      std::copy_n(theta.begin(), probe.w1.data.size(), probe.w1.data.begin());
      pos += probe.w1.data.size();
      std::copy_n(theta.begin() + pos, probe.b1.size(), probe.b1.begin());
      pos += probe.b1.size();
      std::copy_n(theta.begin() + pos, probe.w2.size(), probe.w2.begin());
      pos += probe.w2.size();
      probe.b2 = theta[pos];
      std::vector<SsnOutput> outs;
      for (std::size_t i = 0; i < n; ++i) outs.push_back(ssn_forward(probe, hs[i], ms[i]));
      return ssn_loss(outs, labels, probe, lambda);
    };
    Vector numeric = finite_diff_grad(f, flat, 1e-5);

    Vector analytic;
    analytic.insert(analytic.end(), g.w1.data.begin(), g.w1.data.end());
    analytic.insert(analytic.end(), g.b1.begin(), g.b1.end());
    analytic.insert(analytic.end(), g.w2.begin(), g.w2.end());
    analytic.push_back(g.b2);

    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      double denom = std::max({std::fabs(analytic[i]), std::fabs(numeric[i]), 1e-6});
      worst = std::max(worst, std::fabs(analytic[i] - numeric[i]) / denom);
    }
    CHECK(worst < 1e-4);
  }
}

TEST_CASE("per-sample hidden gradient drives the encoder coupling") {
  Rng rng(77);
  SsnParams p = init_ssn(3, 2, rng);
  Vector h = random_vec(rng, 3), m = random_vec(rng, 2);
  SsnBatch batch;
  ssn_forward(p, h, m, batch);
  std::vector<int> labels{1};
  SsnGrads g = ssn_backward(batch, labels, p, 0.0);

  auto f = [&](const Vector& hv) {
    std::vector<SsnOutput> outs{ssn_forward(p, hv, m)};
    return ssn_loss(outs, labels, p, 0.0);
  };
  Vector numeric = finite_diff_grad(f, h, 1e-6);
  for (std::size_t i = 0; i < h.size(); ++i) {
    double denom = std::max({std::fabs(numeric[i]), std::fabs(g.d_hidden[0][i]), 1e-6});
    CHECK(std::fabs(numeric[i] - g.d_hidden[0][i]) / denom < 1e-4);
  }
}
