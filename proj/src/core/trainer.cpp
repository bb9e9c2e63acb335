#include "core/trainer.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>

#include "core/error.hpp"
#include "core/scoring.hpp"

namespace saber {

void TrainToyConfig::apply_toy_defaults() {
  env.max_stuck_frames = 18'000;
  env.max_episode_frames = 216'000;
}

namespace {

std::unique_ptr<Emulator> make_game(const TrainToyConfig& cfg) {
  if (cfg.game_id == "toy:chain") return make_chain_game(cfg.chain);
  return make_toy_game(cfg.game_id);
}

}  // namespace

TrainToyResult train_toy(const TrainToyConfig& config) {
  config.env.validate();
  config.replay.validate();

  auto emulator = make_game(config);
  ActorStepper stepper(*emulator, config.env, config.loss, config.replay.n_step,
                       config.replay.gamma, config.feature_edge, config.seed,
                       config.exploration);

  const ArchSpec arch = ArchSpec::flat_toy(stepper.feature_dim());
  LossConfig loss = config.loss;
  loss.gamma = config.replay.gamma;
  loss.n_step = config.replay.n_step;
  LearnerCore learner(arch, loss, config.adam, config.seed + 1);
  ReplayStore store(config.replay, config.seed + 2);

  TrainToyResult result;
  if (!config.out_dir.empty()) std::filesystem::create_directories(config.out_dir);

  std::vector<long> checkpoint_steps;
  for (double f : config.checkpoint_fractions)
    checkpoint_steps.push_back(static_cast<long>(f * static_cast<double>(config.env_step_budget)));

  long next_curve = config.curve_interval;
  size_t next_checkpoint = 0;

  auto curve_point = [&](long at_step) {
    if (stepper.episode_scores().size() < static_cast<size_t>(config.curve_window)) return;
    const double score = training_curve_score(stepper.episode_scores(), config.curve_window);
    result.curve.emplace_back(at_step, score);
  };
  auto write_checkpoint = [&](long at_step) {
    if (config.out_dir.empty()) return;
    const auto path = config.out_dir + "/checkpoint_" + std::to_string(at_step) + ".bin";
    save_checkpoint(path, arch, learner.params());
    result.checkpoint_paths.push_back(path);
  };

  long env_steps = 0;
  long learner_steps = 0;
  while (env_steps < config.env_step_budget) {
    auto emitted = stepper.step(learner.net(), learner.params());
    env_steps += 1;
    for (auto& o : emitted.transitions) store.push(o.t, o.obs, o.next_obs);

    // lockstep: catch up to env/ratio once the fill threshold is reached
    while (store.size() >= static_cast<size_t>(config.min_fill) &&
           learner_steps < env_steps / config.lockstep_ratio) {
      const double progress = static_cast<double>(env_steps) /
                              static_cast<double>(config.env_step_budget);
      auto batch = store.sample(config.batch_size, config.replay.beta_at(progress));
      auto outcome = learner.learn(batch);
      store.update_priorities(batch.slots, batch.versions, outcome.fresh_priorities);
      learner_steps += 1;
      if (learner_steps % config.target_sync_interval == 0) learner.sync_target();
    }

    if (env_steps >= next_curve) {
      curve_point(env_steps);
      next_curve += config.curve_interval;
    }
    while (next_checkpoint < checkpoint_steps.size() &&
           env_steps >= checkpoint_steps[next_checkpoint]) {
      curve_point(env_steps);
      write_checkpoint(checkpoint_steps[next_checkpoint]);
      next_checkpoint += 1;
    }
  }
  stepper.abandon_window();

  result.env_steps = env_steps;
  result.learner_steps = learner_steps;
  result.episodes = stepper.episodes();
  result.final_loss = learner.last_loss();
  result.curve_ready =
      stepper.episode_scores().size() >= static_cast<size_t>(config.curve_window);
  if (result.curve_ready)
    result.final_curve_score = training_curve_score(stepper.episode_scores(),
                                                    config.curve_window);

  if (!config.out_dir.empty()) {
    std::ofstream csv(config.out_dir + "/curve.csv");
    csv << "env_steps,frames,episodes_window_mean\n";
    char buf[96];
    for (const auto& [step, score] : result.curve) {
      std::snprintf(buf, sizeof(buf), "%ld,%ld,%.6f\n", step,
                    step * static_cast<long>(config.env.action_repeat), score);
      csv << buf;
    }
  }
  return result;
}

std::vector<SweepPoint> sweep_omega(const TrainToyConfig& base,
                                    const std::vector<double>& omegas) {
  std::vector<SweepPoint> out;
  for (double omega : omegas) {
    TrainToyConfig cfg = base;
    cfg.replay.omega = omega;
    if (!base.out_dir.empty()) {
      char sub[32];
      std::snprintf(sub, sizeof(sub), "omega_%.2f", omega);
      cfg.out_dir = base.out_dir + "/" + sub;
    }
    SweepPoint point;
    point.omega = omega;
    point.result = train_toy(cfg);
    out.push_back(std::move(point));
  }
  return out;
}

}  // namespace saber
