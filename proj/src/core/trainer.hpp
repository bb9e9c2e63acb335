#pragma once

#include <string>
#include <utility>
#include <vector>

#include "core/env.hpp"
#include "core/fabric.hpp"
#include "core/net.hpp"
#include "core/replay.hpp"
#include "core/toy_games.hpp"

namespace saber {

// Single-process actor+learner on a toy game, interleaved under the 4:1
// lockstep rule. Deterministic for a fixed seed.

struct TrainToyConfig {
  std::string game_id = "toy:chain";
  ChainGameConfig chain;  // applies when game_id == toy:chain
  SaberConfig env;
  LossConfig loss;
  ReplayConfig replay;
  AdamConfig adam;
  ExplorationConfig exploration;  // default: noisy-network only
  int batch_size = 32;
  long min_fill = 500;
  long env_step_budget = 50'000;
  int lockstep_ratio = 4;
  int target_sync_interval = 250;
  int feature_edge = 10;
  long curve_interval = 1000;  // env steps between curve rows
  int curve_window = 100;      // episodes averaged per row
  std::vector<double> checkpoint_fractions = {0.05, 0.25, 0.5, 1.0};
  uint64_t seed = 0;
  std::string out_dir;  // when set: curve.csv + checkpoint files

  void apply_toy_defaults();  // shrink SABER frame limits to toy scale
};

struct TrainToyResult {
  long env_steps = 0;
  long learner_steps = 0;
  long episodes = 0;
  double final_curve_score = 0.0;  // curve_window-episode average at the end
  bool curve_ready = false;        // at least curve_window episodes finished
  std::vector<std::pair<long, double>> curve;  // (env_step, windowed score)
  std::vector<std::string> checkpoint_paths;
  double final_loss = 0.0;
};

TrainToyResult train_toy(const TrainToyConfig& config);

// Omega sweep: one training run per exponent, same budget and seed.
struct SweepPoint {
  double omega = 0.0;
  TrainToyResult result;
};
std::vector<SweepPoint> sweep_omega(const TrainToyConfig& base, const std::vector<double>& omegas);

}  // namespace saber
