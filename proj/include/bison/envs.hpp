#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "bison/core.hpp"
#include "bison/learner.hpp"
#include "bison/ll.hpp"

namespace bison {

enum class EnvKind { blocks, blocks_noisy, factory, gacha, pick_place };

std::string env_name(EnvKind k);
EnvKind parse_env_kind(const std::string& s);  // throws std::invalid_argument

namespace geom {
inline constexpr double kDelta = 0.02;  // max gripper travel per step and axis
inline constexpr double kEps = 0.05;    // at / grasp / button radius (inf-norm)
inline constexpr double kSpacing = 0.12;
inline constexpr double kTrigger = 0.5;  // |grip command| needed for an event
}  // namespace geom

// Per-object feature layout.
namespace feat {
inline constexpr int kX = 0, kY = 1, kHeld = 2, kBlock = 3, kPlace = 4,
                     kBox = 5, kColour = 6, kCode = 7, kFlag = 8, kAux = 9;
inline constexpr size_t kObject = 10;
inline constexpr size_t kEgo = 3;     // x, y, grip openness
inline constexpr size_t kAction = 3;  // dx, dy, grip command
}  // namespace feat

struct EnvConfig {
  EnvKind kind = EnvKind::blocks;
  int n_objects = 3;
  uint64_t seed = 0;
  double teleport_prob = 0.001;  // blocks_noisy only
  size_t max_steps = 0;          // 0 = 2048 * n_objects

  size_t step_cap() const;
};

// Portable draws from mt19937_64 (the std distributions are not specified
// bit-exactly across standard libraries).
double uniform01(std::mt19937_64& rng);
uint64_t uniform_index(std::mt19937_64& rng, uint64_t n);

const Domain& env_domain(EnvKind k);
const char* env_domain_text(EnvKind k);
Labelling env_labelling(EnvKind k);

class Env {
 public:
  explicit Env(const EnvConfig& cfg);

  void reset();
  void step(const LLAction& a);

  // Observation: ego is absolute, visible objects' x, y are relative to the
  // gripper (object minus ego).
  LLState state() const;
  // Absolute simulator state.
  const LLState& world() const { return state_; }
  const std::vector<NamedAtom>& goal_atoms() const { return goal_; }
  FactSet goal() const;
  HLState label() const;
  const EnvConfig& config() const { return cfg_; }
  const Domain& domain() const { return env_domain(cfg_.kind); }
  size_t steps() const { return steps_; }
  size_t teleports() const { return teleports_; }

  // Test hooks.
  void set_state(const LLState& observation);
  std::mt19937_64& rng() { return rng_; }

 private:
  void reset_pick_place();
  void reset_blocks();
  void reset_gacha();
  bool place_free(int idx);
  int held() const;
  void grip_event(double cmd);
  void factory_spawn();
  void teleport();
  bool at_goal(int block) const;

  EnvConfig cfg_;
  std::mt19937_64 rng_;
  LLState state_;
  std::vector<NamedAtom> goal_;
  size_t steps_ = 0;
  size_t teleports_ = 0;
  // factory: whether original block i already triggered its spawn
  std::vector<char> spawned_;
  // gacha
  int box_ = -1;
  int next_pool_ = 0;
  int n_colours_ = 0;
  std::vector<int> hidden_colour_;  // per block id; 0 = none
};

// Scripted HL strategy used by the demonstrator.
std::optional<GroundAction> scripted_choice(EnvKind k, const LLState& s,
                                            const HLState& hl,
                                            const FactSet& goal);

// Scripted LL controller realising one HL action ("oracle skill").
LLAction skill(EnvKind k, const LLState& s, const GroundAction& a);

// The demonstrator: scripted_choice then skill. Empty when no choice exists.
LLAction oracle(EnvKind k, const LLState& s, const FactSet& goal);

struct DemoGenStats {
  size_t attempts = 0;
  size_t discarded = 0;
};

// Runs oracle episodes with per-episode seed = seed * 10007 + i and keeps
// the goal-achieving ones until `count` demos are collected.
std::vector<Demo> generate_demos(const EnvConfig& cfg, size_t count,
                                 size_t jobs = 1, DemoGenStats* stats = nullptr);

uint64_t episode_seed(uint64_t seed, uint64_t episode);

}  // namespace bison
