// Command-line front end: dataset synthesis, training, retrieval evaluation,
// gradient checking and model inspection. Every command is deterministic
// given its flags, files and seed.
//
// Exit codes: 0 success, 2 validation failure, 3 training divergence,
// 4 gradient-check failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "seqmatch/config.hpp"
#include "seqmatch/errors.hpp"
#include "seqmatch/eval.hpp"
#include "seqmatch/features.hpp"
#include "seqmatch/gradcheck.hpp"
#include "seqmatch/model_io.hpp"
#include "seqmatch/rng.hpp"
#include "seqmatch/trainer.hpp"

namespace {

using nlohmann::json;
using namespace seqmatch;

constexpr int kExitValidation = 2;
constexpr int kExitDivergence = 3;
constexpr int kExitGradcheck = 4;

SynthConfig read_synth_config(KvConfig& kv) {
  SynthConfig cfg;
  cfg.n_traj = kv.get_size("n_traj", cfg.n_traj);
  cfg.gallery_size = kv.get_size("gallery_size", cfg.gallery_size);
  cfg.dim = kv.get_size("dim", cfg.dim);
  cfg.T = kv.get_size("T", cfg.T);
  cfg.n_categories = kv.get_size("n_categories", cfg.n_categories);
  cfg.style_noise = kv.get_double("style_noise", cfg.style_noise);
  cfg.frame_noise = kv.get_double("frame_noise", cfg.frame_noise);
  cfg.corrupt_fraction = kv.get_double("corrupt_fraction", cfg.corrupt_fraction);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  kv.finish();
  return cfg;
}

TrainConfig read_train_config(KvConfig& kv) {
  TrainConfig cfg;
  cfg.n = kv.get_size("n", cfg.n);
  cfg.S = kv.get_size("S", cfg.S);
  cfg.alpha = kv.get_double("alpha", cfg.alpha);
  cfg.eta = kv.get_double("eta", cfg.eta);
  cfg.lambda = kv.get_double("lambda", cfg.lambda);
  cfg.epochs = kv.get_size("epochs", cfg.epochs);
  cfg.seed = kv.get_u64("seed", cfg.seed);
  cfg.clip_norm = kv.get_double("clip_norm", cfg.clip_norm);
  std::string schedule = kv.get_string("schedule", "alternate");
  if (schedule == "alternate") {
    cfg.schedule = Schedule::kAlternate;
  } else if (schedule == "interleave") {
    cfg.schedule = Schedule::kInterleave;
  } else {
    throw ArgumentError("schedule must be 'alternate' or 'interleave', got '" + schedule + "'");
  }
  cfg.hidden_dim = kv.get_size("hidden_dim", cfg.hidden_dim);
  cfg.num_layers = kv.get_size("num_layers", cfg.num_layers);
  cfg.tree_levels = kv.get_size_list("tree_levels", cfg.tree_levels);
  cfg.holdout_fraction = kv.get_double("holdout_fraction", cfg.holdout_fraction);
  kv.finish();
  cfg.validate();
  return cfg;
}

json report_to_json(const EvalReport& report) {
  json j;
  j["method"] = report.method;
  j["query_count"] = report.query_count;
  j["ks"] = report.ks;
  json overall = json::object();
  for (const auto& [k, acc] : report.overall) overall[std::to_string(k)] = acc;
  j["overall"] = overall;
  json cats = json::array();
  for (const CategoryRow& row : report.per_category) {
    json c;
    c["category"] = row.category;
    c["query_count"] = row.query_count;
    json acc = json::object();
    for (const auto& [k, a] : row.accuracy) acc[std::to_string(k)] = a;
    c["accuracy"] = acc;
    cats.push_back(c);
  }
  j["per_category"] = cats;
  return j;
}

struct SynthArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& args) {
  KvConfig kv = args.config_path.empty() ? KvConfig{}
                                         : KvConfig::from_file(args.config_path);
  SynthConfig cfg = read_synth_config(kv);
  if (args.seed) cfg.seed = *args.seed;

  Dataset ds = synth_generate(cfg);
  write_dataset(ds, args.out_path);

  std::size_t pairs = 0;
  for (const auto& [tid, gids] : ds.positives) pairs += gids.size();
  json summary;
  summary["out"] = args.out_path;
  summary["trajectories"] = ds.trajectories.size();
  summary["gallery"] = ds.gallery.size();
  summary["pairs"] = pairs;
  summary["categories"] = ds.categories.size();
  summary["dim"] = ds.dim;
  summary["T"] = ds.target_length;
  summary["seed"] = cfg.seed;
  std::cout << summary.dump() << "\n";
  return 0;
}

struct TrainArgs {
  std::string data_path;
  std::string config_path;
  std::string out_path;
  std::string metrics_path;
  std::string category;
  std::string init_model_path;
  std::optional<std::uint64_t> seed;
};

int cmd_train(const TrainArgs& args) {
  KvConfig kv = args.config_path.empty() ? KvConfig{}
                                         : KvConfig::from_file(args.config_path);
  TrainConfig cfg = read_train_config(kv);
  if (args.seed) cfg.seed = *args.seed;
  std::uint64_t digest = text_digest(kv.raw_text());

  Dataset ds = load_dataset(args.data_path);
  Dataset train_ds = ds;
  if (cfg.holdout_fraction > 0.0) train_ds = split_holdout(ds, cfg.holdout_fraction).first;

  Model model;
  if (!args.init_model_path.empty()) {
    model = load_model(args.init_model_path).model;
  } else {
    Rng rng(cfg.seed);
    model = init_model(train_ds, cfg, rng);
  }

  std::ofstream metrics_file;
  if (!args.metrics_path.empty()) {
    metrics_file.open(args.metrics_path);
    if (!metrics_file) throw IoError("cannot write metrics file '" + args.metrics_path + "'");
  }
  auto sink = [&](const EpochMetrics& em) {
    json j;
    j["epoch"] = em.epoch;
    j["mean_loss"] = em.mean_loss;
    j["mean_y_pos"] = em.mean_y_pos;
    j["mean_y_neg"] = em.mean_y_neg;
    j["mean_log_likelihood"] = em.mean_log_likelihood;
    std::string line = j.dump();
    std::cout << line << "\n" << std::flush;
    if (metrics_file) metrics_file << line << "\n" << std::flush;
  };

  try {
    if (!args.category.empty()) {
      if (args.init_model_path.empty()) {
        throw ArgumentError("--category fine-tuning needs --init-model with the general model");
      }
      model = category_finetune(model, train_ds, args.category, cfg);
    } else {
      two_step_train(model, train_ds, cfg, sink);
    }
  } catch (const TrainingError& e) {
    // Metrics written so far are already flushed line by line.
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  }

  save_model(args.out_path, model, {cfg.seed, digest});
  std::cerr << "model written to " << args.out_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string model_path;
  std::string data_path;
  std::string out_path;
  std::string k_list = "1,5,10,15,20";
  std::string baselines;  // comma-separated subset of avg,max,last
  std::string category;
  std::string split = "all";
  double holdout_fraction = 0.0;
  std::size_t workers = 0;
  bool cross_category = false;
};

int cmd_eval(const EvalArgs& args) {
  LoadedModel loaded = load_model(args.model_path);
  Dataset ds = load_dataset(args.data_path);

  if (loaded.model.ssn.item_dim != ds.dim) {
    throw ArgumentError("model expects gallery dim " +
                        std::to_string(loaded.model.ssn.item_dim) +
                        " but dataset has dim " + std::to_string(ds.dim));
  }
  if (loaded.model.tree.cfg.leaf_count != ds.target_length) {
    throw ArgumentError("model fuses " + std::to_string(loaded.model.tree.cfg.leaf_count) +
                        " frames but dataset trajectories have " +
                        std::to_string(ds.target_length));
  }

  if (args.split != "all") {
    if (args.holdout_fraction <= 0.0) {
      throw ArgumentError("--split " + args.split + " needs --holdout-fraction > 0");
    }
    auto [train_part, holdout_part] = split_holdout(ds, args.holdout_fraction);
    ds = args.split == "holdout" ? holdout_part : train_part;
    if (args.split != "holdout" && args.split != "train") {
      throw ArgumentError("--split must be all, train or holdout");
    }
  }
  if (!args.category.empty()) ds = restrict_category(ds, args.category);

  EvalOptions opts;
  opts.within_category = !args.cross_category;
  opts.workers = args.workers;
  opts.ks.clear();
  {
    std::istringstream ss(args.k_list);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      opts.ks.push_back(std::stoull(tok));
    }
  }

  json out = json::array();
  out.push_back(report_to_json(evaluate(loaded.model, ds, opts)));
  if (!args.baselines.empty()) {
    std::istringstream ss(args.baselines);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (tok.empty()) continue;
      EvalOptions bopts = opts;
      bopts.baseline = parse_baseline(tok);
      out.push_back(report_to_json(evaluate(loaded.model, ds, bopts)));
    }
  }

  std::string text = out.dump(2);
  std::cout << text << "\n";
  if (!args.out_path.empty()) {
    std::ofstream f(args.out_path);
    if (!f) throw IoError("cannot write report file '" + args.out_path + "'");
    f << text << "\n";
  }
  return 0;
}

struct GradcheckArgs {
  std::uint64_t seed = 1234;
  GradcheckSizes sizes;
  double tolerance = 1e-4;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  GradcheckOptions opts;
  opts.tolerance = args.tolerance;
  std::vector<GradcheckResult> results = run_gradcheck(args.seed, args.sizes, opts);
  bool all_pass = true;
  std::printf("%-8s %-14s %s\n", "component", "max_rel_err", "status");
  for (const GradcheckResult& r : results) {
    std::printf("%-8s %-14.3e %s\n", r.component.c_str(), r.max_rel_err,
                r.pass ? "pass" : "FAIL");
    all_pass = all_pass && r.pass;
  }
  return all_pass ? 0 : kExitGradcheck;
}

int cmd_inspect(const std::string& model_path) {
  LoadedModel loaded = load_model(model_path);
  const Model& m = loaded.model;

  std::size_t encoder_params = 0;
  for (const LstmParams& p : m.encoder.layers) {
    encoder_params += p.weights.data.size() + p.bias.size();
  }
  std::size_t ssn_params = m.ssn.w1.data.size() + m.ssn.b1.size() + m.ssn.w2.size() + 1;
  std::size_t gate_params = m.tree.cfg.total_gates() * kGateDim;

  json j;
  j["version"] = loaded.version;
  j["category"] = m.category;
  j["seed"] = loaded.provenance.seed;
  j["config_digest"] = loaded.provenance.config_digest;
  json enc;
  enc["layers"] = m.encoder.layers.size();
  enc["input_dim"] = m.encoder.layers.front().input_dim;
  enc["hidden_dim"] = m.encoder.layers.front().hidden_dim;
  enc["parameters"] = encoder_params;
  j["encoder"] = enc;
  json ssn;
  ssn["hidden_dim"] = m.ssn.hidden_dim;
  ssn["item_dim"] = m.ssn.item_dim;
  ssn["fc1_dim"] = kFc1Dim;
  ssn["parameters"] = ssn_params;
  j["ssn"] = ssn;
  json tree;
  tree["leaf_count"] = m.tree.cfg.leaf_count;
  tree["level_gate_counts"] = m.tree.cfg.level_gate_counts;
  tree["gate_units"] = m.tree.cfg.total_gates();
  tree["parameters"] = gate_params;
  j["tree"] = tree;
  std::cout << j.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sequence-to-item matching engine"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
  synth->add_option("--config", synth_args.config_path, "key=value config file");
  synth->add_option("--out", synth_args.out_path, "output dataset path")->required();
  std::uint64_t synth_seed = 0;
  CLI::Option* synth_seed_opt = synth->add_option("--seed", synth_seed, "seed override");

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "train a model");
  train->add_option("--data", train_args.data_path, "dataset file")->required();
  train->add_option("--config", train_args.config_path, "key=value config file");
  train->add_option("--out", train_args.out_path, "output model path")->required();
  train->add_option("--metrics", train_args.metrics_path, "also write metrics records here");
  train->add_option("--category", train_args.category, "fine-tune for one category");
  train->add_option("--init-model", train_args.init_model_path, "start from this model");
  std::uint64_t train_seed = 0;
  CLI::Option* train_seed_opt = train->add_option("--seed", train_seed, "seed override");

  EvalArgs eval_args;
  CLI::App* eval = app.add_subcommand("eval", "rank the gallery and report top-k accuracy");
  eval->add_option("--model", eval_args.model_path, "model file")->required();
  eval->add_option("--data", eval_args.data_path, "dataset file")->required();
  eval->add_option("--out", eval_args.out_path, "write the report here too");
  eval->add_option("--k", eval_args.k_list, "comma-separated k values");
  eval->add_option("--baseline", eval_args.baselines, "also report avg,max,last baselines");
  eval->add_option("--workers", eval_args.workers, "worker threads (0: all cores)");
  eval->add_option("--category", eval_args.category, "evaluate one category only");
  eval->add_flag("--cross-category", eval_args.cross_category, "rank against the whole gallery");
  eval->add_option("--split", eval_args.split, "all, train or holdout");
  eval->add_option("--holdout-fraction", eval_args.holdout_fraction,
                   "fraction that defines the holdout split");

  GradcheckArgs gc_args;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient suites");
  gradcheck->add_option("--seed", gc_args.seed, "base seed");
  gradcheck->add_option("--seeds", gc_args.sizes.seeds, "number of seeds");
  gradcheck->add_option("--input-dim", gc_args.sizes.input_dim, "toy input dim");
  gradcheck->add_option("--hidden-dim", gc_args.sizes.hidden_dim, "toy hidden dim");
  gradcheck->add_option("--layers", gc_args.sizes.num_layers, "encoder layers");
  gradcheck->add_option("--frames", gc_args.sizes.frames, "trajectory length");
  gradcheck->add_option("--leaves", gc_args.sizes.leaves, "tree leaves");
  gradcheck->add_option("--batch", gc_args.sizes.batch, "expert batch size");
  gradcheck->add_option("--tolerance", gc_args.tolerance, "max relative error");

  std::string inspect_model;
  CLI::App* inspect = app.add_subcommand("inspect", "dump model metadata");
  inspect->add_option("--model", inspect_model, "model file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (*synth) {
      if (*synth_seed_opt) synth_args.seed = synth_seed;
      return cmd_synth(synth_args);
    }
    if (*train) {
      if (*train_seed_opt) train_args.seed = train_seed;
      return cmd_train(train_args);
    }
    if (*eval) return cmd_eval(eval_args);
    if (*gradcheck) return cmd_gradcheck(gc_args);
    if (*inspect) return cmd_inspect(inspect_model);
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
