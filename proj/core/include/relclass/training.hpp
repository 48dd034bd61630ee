#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "relclass/model.hpp"

namespace relclass {

// Per-coordinate squared-gradient accumulators for every tuned parameter.
// Accumulators only grow, so effective step sizes only shrink.
struct AdaGradState {
  double alpha = 0.01;
  double beta = 1e-8;
  double epsilon = 1e-6;
  std::unordered_map<const MatParam*, Mat> acc_mat;
  std::unordered_map<const VecParam*, Vec> acc_vec;
};

AdaGradState make_adagrad(ModelParams& m);

// One update: g = grad + beta * theta (the L2 term realized per step),
// acc += g^2, theta -= alpha * g / (sqrt(acc) + epsilon). Frozen tensors
// untouched. NumericError on non-finite gradients or parameters.
void adagrad_step(ModelParams& m, const Gradients& grads, AdaGradState& st);

struct EpochLog {
  int epoch = 0;
  double mean_loss = 0;
  bool has_dev = false;
  double dev_metric = 0;
  bool improved = false;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int epochs_run = 0;
  int best_epoch = 0;      // 0 when no dev set was given
  double best_metric = 0;  // dev metric of the kept model
};

// Per-example SGD over seeded shuffles; after each epoch the dev metric
// (task-dependent) decides the kept snapshot and early stopping: training
// stops after max(1, patience) consecutive epochs without improvement.
// Without a dev set there is no early stop and the last model is kept.
// Writes one JSON line per epoch to `log` when given (no timestamps, so
// identical runs produce identical logs).
TrainResult train(ModelParams& m, const std::vector<RelationInstance>& train_set,
                  const std::vector<RelationInstance>& dev_set, Rng& rng,
                  std::ostream* log = nullptr);

struct BlockReport {
  std::string name;
  bool skipped = false;  // frozen block
  int checked = 0;
  double max_rel_err = 0;
};

struct GradCheckResult {
  std::vector<BlockReport> blocks;
  double max_rel_err = 0;  // over non-skipped blocks

  bool pass(double tol = 1e-4) const { return max_rel_err <= tol; }
};

// Central finite differences against the tape gradients of the summed loss
// over `insts`. Samples `samples_per_block` coordinates per parameter block
// (all of them when the block is smaller). Relative error uses
// |a - n| / max(|a|, |n|, 1e-6); the floor only guards the both-zero case.
GradCheckResult gradcheck(ModelParams& m,
                          std::span<const RelationInstance> insts, Rng& rng,
                          int samples_per_block = 20, double step = 1e-4);

}  // namespace relclass
