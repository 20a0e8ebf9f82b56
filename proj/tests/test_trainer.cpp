#include <doctest.h>

#include <cmath>

#include "seqmatch/errors.hpp"
#include "seqmatch/rng.hpp"
#include "seqmatch/trainer.hpp"
#include "support/oracles.hpp"

using namespace seqmatch;

namespace {

Dataset tiny_dataset(std::uint64_t seed = 21, std::size_t n_traj = 10,
                     std::size_t gallery = 18, std::size_t dim = 6, std::size_t t = 4) {
  SynthConfig cfg;
  cfg.n_traj = n_traj;
  cfg.gallery_size = gallery;
  cfg.dim = dim;
  cfg.T = t;
  cfg.n_categories = 2;
  cfg.seed = seed;
  return synth_generate(cfg);
}

TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.n = 2;
  cfg.S = 2;
  cfg.hidden_dim = 8;
  cfg.num_layers = 2;
  cfg.epochs = 1;
  cfg.eta = 0.05;
  cfg.alpha = 0.05;
  cfg.seed = 5;
  return cfg;
}

}  // namespace

TEST_CASE("sample_batch: forced choice, determinism, balanced labels") {
  Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_config();

  // Exactly one positive per trajectory and S = 1: that positive is chosen.
  cfg.S = 1;
  Rng rng(3);
  BatchSample forced = sample_batch(ds, cfg, rng);
  for (const TrajectorySample& item : forced.items) {
    const Trajectory& tr = ds.trajectories[item.traj_index];
    const std::string& expect = ds.positives.at(tr.id)[0];
    CHECK(ds.gallery[item.picks[0].gallery_index].id == expect);
    CHECK(item.picks[0].label == 1);
  }

  cfg.S = 3;
  Rng a(11), b(11);
  BatchSample ba = sample_batch(ds, cfg, a);
  BatchSample bb = sample_batch(ds, cfg, b);
  REQUIRE(ba.items.size() == bb.items.size());
  for (std::size_t i = 0; i < ba.items.size(); ++i) {
    CHECK(ba.items[i].traj_index == bb.items[i].traj_index);
    REQUIRE(ba.items[i].picks.size() == bb.items[i].picks.size());
    for (std::size_t j = 0; j < ba.items[i].picks.size(); ++j) {
      CHECK(ba.items[i].picks[j].gallery_index == bb.items[i].picks[j].gallery_index);
      CHECK(ba.items[i].picks[j].label == bb.items[i].picks[j].label);
    }
  }

  for (const TrajectorySample& item : ba.items) {
    std::size_t pos = 0, neg = 0;
    for (const GalleryPick& p : item.picks) (p.label ? pos : neg) += 1;
    CHECK(pos == 3);
    CHECK(neg == 3);
    // negatives never collide with a positive of this trajectory
    const Trajectory& tr = ds.trajectories[item.traj_index];
    const auto& truth = ds.positives.at(tr.id);
    for (const GalleryPick& p : item.picks) {
      bool is_true = std::find(truth.begin(), truth.end(),
                               ds.gallery[p.gallery_index].id) != truth.end();
      CHECK(is_true == (p.label == 1));
    }
  }

  Dataset empty;
  CHECK_THROWS_AS(sample_batch(empty, cfg, a), ArgumentError);
}

TEST_CASE("replicated hidden states give identical expert scores across copies") {
  Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_config();
  Rng rng(7);
  Model model = init_model(ds, cfg, rng);

  const Trajectory& tr = ds.trajectories[0];
  std::vector<Vector> hidden = encode(model.encoder, tr.frames);
  const Vector& item = ds.gallery[3].values;
  SsnOutput first = ssn_forward(model.ssn, hidden[2], item);
  for (int copy = 0; copy < 4; ++copy) {
    SsnOutput again = ssn_forward(model.ssn, hidden[2], item);
    CHECK(again.z == first.z);
    CHECK(again.y_hat == first.y_hat);
  }
}

TEST_CASE("replication equivalence: encoder gradients match per-pair re-encoding") {
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t S = 1; S <= 3; ++S) {
      Dataset ds = tiny_dataset(100 + n * 10 + S, 8, 16, 5, 3);
      TrainConfig cfg = tiny_config();
      cfg.n = n;
      cfg.S = S;
      cfg.hidden_dim = 6;
      Rng rng(n * 100 + S);
      Model model = init_model(ds, cfg, rng);

      Rng batch_rng(55);
      BatchSample batch = sample_batch(ds, cfg, batch_rng);
      LstmGrads fast = replicated_encoder_grads(model, ds, batch, cfg.lambda);
      LstmGrads slow = test::naive_encoder_grads(model, ds, batch, cfg.lambda);

      REQUIRE(fast.weights.size() == slow.weights.size());
      for (std::size_t l = 0; l < fast.weights.size(); ++l) {
        for (std::size_t i = 0; i < fast.weights[l].data.size(); ++i) {
          double a = fast.weights[l].data[i], b = slow.weights[l].data[i];
          CHECK(std::fabs(a - b) <= 1e-10 * std::max({1.0, std::fabs(a), std::fabs(b)}));
        }
        for (std::size_t i = 0; i < fast.bias[l].size(); ++i) {
          double a = fast.bias[l][i], b = slow.bias[l][i];
          CHECK(std::fabs(a - b) <= 1e-10 * std::max({1.0, std::fabs(a), std::fabs(b)}));
        }
      }
    }
  }
}

TEST_CASE("zero learning rates leave the model unchanged but report metrics") {
  Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_config();
  cfg.eta = 0.0;
  cfg.alpha = 0.0;
  Rng rng(9);
  Model model = init_model(ds, cfg, rng);
  Model before = model;

  Rng batch_rng(4);
  BatchSample batch = sample_batch(ds, cfg, batch_rng);
  StepMetrics metrics = approx_train_step(model, ds, batch, cfg, {true, true}, 0);
  CHECK(model == before);
  CHECK(std::isfinite(metrics.loss));
  CHECK(metrics.mean_y_pos > 0.0);
  CHECK(metrics.mean_y_neg > 0.0);
}

TEST_CASE("two_step_train: zero epochs, determinism, loss decreases on separable data") {
  Dataset ds = tiny_dataset(33, 16, 30, 6, 4);
  TrainConfig cfg = tiny_config();

  cfg.epochs = 0;
  Rng rng(1);
  Model model = init_model(ds, cfg, rng);
  Model before = model;
  CHECK(two_step_train(model, ds, cfg).empty());
  CHECK(model == before);

  cfg.epochs = 4;
  cfg.eta = 0.3;
  Rng r1(1), r2(1);
  Model m1 = init_model(ds, cfg, r1);
  Model m2 = init_model(ds, cfg, r2);
  std::vector<EpochMetrics> h1 = two_step_train(m1, ds, cfg);
  std::vector<EpochMetrics> h2 = two_step_train(m2, ds, cfg);
  CHECK(m1 == m2);
  REQUIRE(h1.size() == 4);
  for (std::size_t e = 0; e < 4; ++e) {
    CHECK(h1[e].mean_loss == h2[e].mean_loss);
    CHECK(std::isfinite(h1[e].mean_log_likelihood));
  }
  CHECK(h1.back().mean_loss < h1.front().mean_loss);
}

TEST_CASE("gates-only phase moves only gate parameters") {
  Dataset ds = tiny_dataset();
  TrainConfig cfg = tiny_config();
  Rng rng(14);
  Model model = init_model(ds, cfg, rng);
  Model before = model;

  Rng batch_rng(8);
  for (int step = 0; step < 3; ++step) {
    BatchSample batch = sample_batch(ds, cfg, batch_rng);
    approx_train_step(model, ds, batch, cfg, {false, true}, step);
  }
  CHECK(model.encoder == before.encoder);
  CHECK(model.ssn == before.ssn);
  CHECK(model.tree != before.tree);
}

TEST_CASE("interleave schedule also trains and stays deterministic") {
  Dataset ds = tiny_dataset(44, 12, 24, 5, 4);
  TrainConfig cfg = tiny_config();
  cfg.schedule = Schedule::kInterleave;
  cfg.epochs = 2;
  Rng r1(2), r2(2);
  Model m1 = init_model(ds, cfg, r1);
  Model m2 = init_model(ds, cfg, r2);
  two_step_train(m1, ds, cfg);
  two_step_train(m2, ds, cfg);
  CHECK(m1 == m2);
}

TEST_CASE("category_finetune: label stamping, isolation, unknown category") {
  Dataset ds = tiny_dataset(55, 12, 20, 5, 4);
  TrainConfig cfg = tiny_config();
  Rng rng(3);
  Model general = init_model(ds, cfg, rng);

  TrainConfig zero = cfg;
  zero.epochs = 0;
  Model stamped = category_finetune(general, ds, "c0", zero);
  CHECK(stamped.category == "c0");
  CHECK(stamped.encoder == general.encoder);
  CHECK(stamped.ssn == general.ssn);
  CHECK(stamped.tree == general.tree);

  TrainConfig one = cfg;
  one.epochs = 1;
  Model a = category_finetune(general, ds, "c0", one);
  Model b = category_finetune(general, ds, "c1", one);
  CHECK(a.category == "c0");
  CHECK(b.category == "c1");
  CHECK(!(a.encoder == b.encoder));  // trained on different pairs
  CHECK(general.category.empty());   // the general model is untouched

  CHECK_THROWS_AS(category_finetune(general, ds, "zzz", one), ArgumentError);
}
