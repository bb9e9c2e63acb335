#pragma once

#include <memory>
#include <string>
#include <vector>

#include "core/emulator.hpp"

namespace saber {

// Deterministic 210x160 miniature games reproducing documented emulator
// pathologies: score-counter rollover, reward droughts, fire-to-start,
// life handling and endless reward loops. State is rendered as solid color
// blocks so the preprocessing path sees nontrivial input.
//
// Registry ids: toy:chain toy:lives toy:stuck toy:rollover toy:firestart
// toy:loop.

std::unique_ptr<Emulator> make_toy_game(const std::string& id);
const std::vector<std::string>& toy_game_ids();

// Walk right to the goal, against a tempting early exit at the start.
// Per frame: RIGHT advances; reaching cell `length` pays +10 and teleports
// back to the start (the goal repeats); LEFT retreats; DOWN at the start
// pays `exit_reward` and ends the episode at once. Game over after
// `horizon` frames otherwise.
struct ChainGameConfig {
  int length = 5;
  int horizon = 500;
  double exit_reward = 1.0;
};
std::unique_ptr<Emulator> make_chain_game(const ChainGameConfig& cfg);

// Optimal raw episode return of the chain game, by exhaustive search over
// the (position, loop counter) state graph.
double chain_game_optimal_return(const ChainGameConfig& cfg);

std::unique_ptr<Emulator> make_lives_game(int lives = 3);
std::unique_ptr<Emulator> make_stuck_game();
std::unique_ptr<Emulator> make_rollover_game(double increment = 2500.0);
std::unique_ptr<Emulator> make_fire_start_game(int lives = 3);
std::unique_ptr<Emulator> make_loop_game(int period = 75);

}  // namespace saber
