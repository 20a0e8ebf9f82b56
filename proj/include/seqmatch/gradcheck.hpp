#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace seqmatch {

struct GradcheckSizes {
  std::size_t input_dim = 6;
  std::size_t hidden_dim = 5;
  std::size_t num_layers = 2;
  std::size_t frames = 4;
  std::size_t leaves = 8;
  std::size_t batch = 4;
  std::size_t seeds = 20;
};

struct GradcheckResult {
  std::string component;  // "lstm", "ssn", "gates"
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradcheckOptions {
  double tolerance = 1e-4;
  double step = 1e-5;
  // Test hook: negates the analytic gradients so the comparison must fail.
  bool sign_flip_fault = false;
};

// Compares hand-derived gradients against central finite differences:
// the stacked encoder on a random output contraction, the expert loss over
// a random batch, and every gate vector on the tree's label-conditional
// log likelihood. Reports the max relative error per component over all
// seeds, where rel = |a - n| / max(|a|, |n|, 1e-6).
std::vector<GradcheckResult> run_gradcheck(std::uint64_t seed,
                                           const GradcheckSizes& sizes,
                                           const GradcheckOptions& opts = {});

}  // namespace seqmatch
