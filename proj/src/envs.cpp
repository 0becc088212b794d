#include "bison/envs.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "bison/io.hpp"
#include "bison/log.hpp"

namespace bison {

namespace {

const char* kBlocksDomain = R"((define (domain blocks)
  (:predicates (at ?x ?l) (clear ?x) (gripperFree) (holding ?x))
  (:action pick
    :parameters (?x)
    :precondition (and (clear ?x) (gripperFree))
    :effect (and (holding ?x) (not (clear ?x)) (not (gripperFree))))
  (:action place
    :parameters (?x ?l)
    :precondition (and (holding ?x) (clear ?l))
    :effect (and (at ?x ?l) (gripperFree) (not (holding ?x)) (not (clear ?l)))))
)";

const char* kPickPlaceDomain = R"((define (domain pick-place)
  (:predicates (at ?x ?y) (free) (hold ?x) (rAt ?x))
  (:action pick
    :parameters (?o ?l)
    :precondition (and (rAt ?l) (at ?o ?l) (free))
    :effect (and (hold ?o) (not (at ?o ?l)) (not (free))))
  (:action move
    :parameters (?l1 ?l2)
    :precondition (and (rAt ?l1))
    :effect (and (rAt ?l2) (not (rAt ?l1))))
  (:action place
    :parameters (?o ?l)
    :precondition (and (rAt ?l) (hold ?o))
    :effect (and (at ?o ?l) (free) (not (hold ?o)))))
)";

// The block produced by roll is hidden until the lid opens; its colour then
// arrives as an observation, so no schema adds colourOf. Rolls may jam.
const char* kGachaDomain = R"((define (domain gacha)
  (:predicates (achievedGoal ?c) (clear ?d) (closed ?d) (colourOf ?x ?c)
               (gripperFree) (holding ?x) (in ?x ?d) (loaded ?d) (opened ?d)
               (trayColour ?t ?c))
  (:action roll
    :parameters (?d ?b)
    :precondition (and (closed ?d) (clear ?d) (gripperFree))
    :effect (oneof (and (loaded ?d) (not (clear ?d)))
                   (and)))
  (:action open
    :parameters (?d)
    :precondition (and (closed ?d) (loaded ?d) (gripperFree))
    :effect (and (opened ?d) (not (closed ?d)) (not (loaded ?d))))
  (:action close
    :parameters (?d)
    :precondition (and (opened ?d) (clear ?d) (gripperFree))
    :effect (and (closed ?d) (not (opened ?d))))
  (:action pick
    :parameters (?x ?d)
    :precondition (and (in ?x ?d) (opened ?d) (gripperFree))
    :effect (and (holding ?x) (clear ?d) (not (in ?x ?d)) (not (gripperFree))))
  (:action placeGoal
    :parameters (?x ?t ?c)
    :precondition (and (holding ?x) (colourOf ?x ?c) (trayColour ?t ?c))
    :effect (and (achievedGoal ?c) (gripperFree) (not (holding ?x)))))
)";

constexpr double kJamProb = 0.2;
constexpr double kBoxX = 0.5, kBoxY = 0.85;
constexpr double kLidX = 0.35, kRollX = 0.65;
constexpr double kTol = 1e-3;  // skill arrival tolerance
const double kLocations[3][2] = {{0.2, 0.2}, {0.8, 0.2}, {0.5, 0.72}};

using Vec = std::vector<double>;

double dist_inf(double ax, double ay, double bx, double by) {
  return std::max(std::abs(ax - bx), std::abs(ay - by));
}

double dist_inf(const Vec& a, const Vec& b) {
  return dist_inf(a[feat::kX], a[feat::kY], b[feat::kX], b[feat::kY]);
}

bool visible(const Vec& f) { return f[feat::kFlag] > 0.5; }
bool is(const Vec& f, int slot) { return visible(f) && f[slot] > 0.5; }
int code(const Vec& f) { return static_cast<int>(std::lround(f[feat::kCode])); }

Vec object_features(double x, double y, int type_slot, double code_v = 0) {
  Vec f(feat::kObject, 0.0);
  f[feat::kX] = x;
  f[feat::kY] = y;
  f[type_slot] = 1;
  f[feat::kCode] = code_v;
  f[feat::kFlag] = 1;
  return f;
}

int held_index(const LLState& s) {
  for (size_t i = 0; i < s.objects.size(); ++i)
    if (visible(s.objects[i]) && s.objects[i][feat::kHeld] > 0.5)
      return static_cast<int>(i);
  return -1;
}

struct Preds {
  const Domain& d;
  int operator()(const char* name) const { return d.predicate_index(name); }
};

HLState label_blocks(const LLState& s) {
  const Domain& d = env_domain(EnvKind::blocks);
  Preds P{d};
  const int at = P("at"), clear = P("clear"), free = P("gripperFree"),
            holding = P("holding");
  HLState out;
  const int h = held_index(s);
  if (h < 0)
    out.insert(Fact(free, {}));
  else
    out.insert(Fact(holding, {h}));
  std::vector<int32_t> ground;  // visible, not held blocks and pads
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const auto& f = s.objects[i];
    if (static_cast<int>(i) == h || !visible(f)) continue;
    if (f[feat::kBlock] > 0.5 || f[feat::kPlace] > 0.5)
      ground.push_back(static_cast<int32_t>(i));
  }
  for (auto i : ground) {
    bool is_clear = true;
    for (auto j : ground) {
      if (i == j) continue;
      if (dist_inf(s.objects[i], s.objects[j]) < geom::kEps) {
        is_clear = false;
        if (s.objects[i][feat::kBlock] > 0.5 && s.objects[j][feat::kPlace] > 0.5)
          out.insert(Fact(at, {i, j}));
      }
    }
    if (is_clear) out.insert(Fact(clear, {i}));
  }
  return out;
}

int nearest_location(const LLState& s) {
  int best = -1;
  double bd = 0;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (!is(s.objects[i], feat::kPlace)) continue;
    const double dx = s.objects[i][feat::kX];
    const double dy = s.objects[i][feat::kY];
    const double dd = dx * dx + dy * dy;
    if (best < 0 || dd < bd) {
      best = static_cast<int>(i);
      bd = dd;
    }
  }
  return best;
}

HLState label_pick_place(const LLState& s) {
  const Domain& d = env_domain(EnvKind::pick_place);
  Preds P{d};
  HLState out;
  const int h = held_index(s);
  if (h < 0)
    out.insert(Fact(P("free"), {}));
  else
    out.insert(Fact(P("hold"), {h}));
  const int r = nearest_location(s);
  if (r >= 0) out.insert(Fact(P("rAt"), {r}));
  for (size_t i = 0; i < s.objects.size(); ++i) {
    if (static_cast<int>(i) == h || !is(s.objects[i], feat::kBlock)) continue;
    for (size_t j = 0; j < s.objects.size(); ++j)
      if (is(s.objects[j], feat::kPlace) &&
          dist_inf(s.objects[i], s.objects[j]) < geom::kEps)
        out.insert(Fact(P("at"), {static_cast<int32_t>(i), static_cast<int32_t>(j)}));
  }
  return out;
}

HLState label_gacha(const LLState& s) {
  const Domain& d = env_domain(EnvKind::gacha);
  Preds P{d};
  HLState out;
  const int h = held_index(s);
  if (h < 0)
    out.insert(Fact(P("gripperFree"), {}));
  else
    out.insert(Fact(P("holding"), {h}));
  std::vector<int32_t> colour_of_code(64, -1);
  int box = -1;
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const auto& f = s.objects[i];
    if (is(f, feat::kColour) && code(f) >= 0 && code(f) < 64)
      colour_of_code[code(f)] = static_cast<int32_t>(i);
    if (is(f, feat::kBox)) box = static_cast<int>(i);
  }
  bool box_open = false;
  if (box >= 0) {
    const auto& f = s.objects[box];
    box_open = code(f) == 1;
    const bool occupied = f[feat::kAux] > 0.5;
    out.insert(Fact(P(box_open ? "opened" : "closed"), {box}));
    if (!occupied) out.insert(Fact(P("clear"), {box}));
    if (!box_open && occupied) out.insert(Fact(P("loaded"), {box}));
  }
  for (size_t i = 0; i < s.objects.size(); ++i) {
    const auto& f = s.objects[i];
    const int32_t id = static_cast<int32_t>(i);
    if (is(f, feat::kPlace)) {
      const int c = code(f);
      if (c > 0 && c < 64 && colour_of_code[c] >= 0)
        out.insert(Fact(P("trayColour"), {id, colour_of_code[c]}));
    }
    if (!is(f, feat::kBlock)) continue;
    const int c = code(f);
    if (c > 0 && c < 64 && colour_of_code[c] >= 0)
      out.insert(Fact(P("colourOf"), {id, colour_of_code[c]}));
    if (id == h) continue;
    if (box >= 0 && box_open && dist_inf(f, s.objects[box]) < geom::kEps)
      out.insert(Fact(P("in"), {id, static_cast<int32_t>(box)}));
    for (size_t j = 0; j < s.objects.size(); ++j) {
      const auto& t = s.objects[j];
      if (is(t, feat::kPlace) && code(t) == c && dist_inf(f, t) < geom::kEps &&
          colour_of_code[c] >= 0)
        out.insert(Fact(P("achievedGoal"), {colour_of_code[c]}));
    }
  }
  return out;
}

}  // namespace

std::string env_name(EnvKind k) {
  switch (k) {
    case EnvKind::blocks: return "blocks";
    case EnvKind::blocks_noisy: return "blocks-noisy";
    case EnvKind::factory: return "factory";
    case EnvKind::gacha: return "gacha";
    case EnvKind::pick_place: return "pick-place";
  }
  return "?";
}

EnvKind parse_env_kind(const std::string& s) {
  for (auto k : {EnvKind::blocks, EnvKind::blocks_noisy, EnvKind::factory,
                 EnvKind::gacha, EnvKind::pick_place})
    if (env_name(k) == s) return k;
  throw std::invalid_argument("unknown env kind: " + s);
}

size_t EnvConfig::step_cap() const {
  return max_steps ? max_steps : 2048 * static_cast<size_t>(std::max(1, n_objects));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

uint64_t uniform_index(std::mt19937_64& rng, uint64_t n) {
  // Rejection keeps the draw unbiased.
  const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t x;
  do x = rng();
  while (x >= limit);
  return x % n;
}

uint64_t episode_seed(uint64_t seed, uint64_t episode) {
  return seed * 10007 + episode;
}

const char* env_domain_text(EnvKind k) {
  switch (k) {
    case EnvKind::gacha: return kGachaDomain;
    case EnvKind::pick_place: return kPickPlaceDomain;
    default: return kBlocksDomain;
  }
}

const Domain& env_domain(EnvKind k) {
  static const Domain blocks = parse_domain(kBlocksDomain);
  static const Domain pick_place = parse_domain(kPickPlaceDomain);
  static const Domain gacha = parse_domain(kGachaDomain);
  switch (k) {
    case EnvKind::gacha: return gacha;
    case EnvKind::pick_place: return pick_place;
    default: return blocks;
  }
}

Labelling env_labelling(EnvKind k) {
  switch (k) {
    case EnvKind::gacha: return label_gacha;
    case EnvKind::pick_place: return label_pick_place;
    default: return label_blocks;
  }
}

Env::Env(const EnvConfig& cfg) : cfg_(cfg) {
  if (cfg.n_objects < 1) throw std::invalid_argument("n_objects must be >= 1");
  if (!(cfg.teleport_prob >= 0 && cfg.teleport_prob <= 1))
    throw std::invalid_argument("teleport_prob must be in [0, 1]");
  reset();
}

void Env::reset() {
  rng_.seed(cfg_.seed);
  steps_ = 0;
  teleports_ = 0;
  goal_.clear();
  spawned_.clear();
  box_ = -1;
  next_pool_ = 0;
  n_colours_ = 0;
  hidden_colour_.clear();
  state_ = LLState{};
  state_.ego = {0.5, 0.5, 1.0};
  switch (cfg_.kind) {
    case EnvKind::pick_place: reset_pick_place(); break;
    case EnvKind::gacha: reset_gacha(); break;
    default: reset_blocks(); break;
  }
}

bool Env::place_free(int idx) {
  // Rejection-sample a position at least kSpacing (inf-norm) from every other
  // visible object; falls back to the best candidate seen.
  double best_x = 0.5, best_y = 0.5, best_d = -1;
  for (int attempt = 0; attempt < 2000; ++attempt) {
    const double x = 0.05 + 0.9 * uniform01(rng_);
    const double y = 0.05 + 0.9 * uniform01(rng_);
    double md = 1e9;
    for (size_t j = 0; j < state_.objects.size(); ++j) {
      if (static_cast<int>(j) == idx || !visible(state_.objects[j])) continue;
      md = std::min(md, dist_inf(x, y, state_.objects[j][feat::kX],
                                 state_.objects[j][feat::kY]));
    }
    if (md > best_d) {
      best_d = md;
      best_x = x;
      best_y = y;
    }
    if (md >= geom::kSpacing) break;
  }
  state_.objects[idx][feat::kX] = best_x;
  state_.objects[idx][feat::kY] = best_y;
  return best_d >= geom::kSpacing;
}

void Env::reset_blocks() {
  const int n = cfg_.n_objects;
  const int total = cfg_.kind == EnvKind::factory ? 2 * n : n;
  for (int i = 0; i < total; ++i) state_.names.push_back("b" + std::to_string(i));
  for (int i = 0; i < total; ++i) state_.names.push_back("p" + std::to_string(i));
  state_.objects.assign(2 * total, Vec(feat::kObject, 0.0));
  auto activate = [&](int i) {
    state_.objects[i] = object_features(0, 0, feat::kBlock);
    place_free(i);
    state_.objects[total + i] = object_features(0, 0, feat::kPlace);
    place_free(total + i);
    goal_.push_back({"at", {state_.names[i], state_.names[total + i]}});
  };
  for (int i = 0; i < n; ++i) activate(i);
  state_.ego[0] = 0.05 + 0.9 * uniform01(rng_);
  state_.ego[1] = 0.05 + 0.9 * uniform01(rng_);
  if (cfg_.kind == EnvKind::factory) spawned_.assign(n, 0);
}

void Env::reset_pick_place() {
  state_.names = {"obj1", "loc1", "loc2", "loc3"};
  state_.objects.assign(4, Vec(feat::kObject, 0.0));
  for (int l = 0; l < 3; ++l)
    state_.objects[1 + l] = object_features(kLocations[l][0], kLocations[l][1], feat::kPlace);
  const int block_loc = static_cast<int>(uniform_index(rng_, 3));
  const int goal_loc = (block_loc + 1 + static_cast<int>(uniform_index(rng_, 2))) % 3;
  const int robot_loc = static_cast<int>(uniform_index(rng_, 3));
  state_.objects[0] = object_features(kLocations[block_loc][0], kLocations[block_loc][1],
                                      feat::kBlock);
  state_.ego = {kLocations[robot_loc][0], kLocations[robot_loc][1], 1.0};
  goal_.push_back({"at", {"obj1", state_.names[1 + goal_loc]}});
}

void Env::reset_gacha() {
  const int n = cfg_.n_objects;
  n_colours_ = n + 1;
  const int pool = 8 * n + 8;
  for (int i = 0; i < pool; ++i) state_.names.push_back("b" + std::to_string(i));
  for (int k = 0; k < n_colours_; ++k) state_.names.push_back("t" + std::to_string(k));
  state_.names.push_back("box");
  for (int k = 0; k < n_colours_; ++k) state_.names.push_back("c" + std::to_string(k));
  state_.objects.assign(state_.names.size(), Vec(feat::kObject, 0.0));
  for (int k = 0; k < n_colours_; ++k)
    state_.objects[pool + k] = object_features(
        static_cast<double>(k + 1) / (n_colours_ + 1), 0.15, feat::kPlace, k + 1);
  box_ = pool + n_colours_;
  state_.objects[box_] = object_features(kBoxX, kBoxY, feat::kBox, 0);
  for (int k = 0; k < n_colours_; ++k) {
    auto f = object_features(0, 0, feat::kColour, k + 1);
    state_.objects[box_ + 1 + k] = f;
  }
  hidden_colour_.assign(pool, 0);
  state_.ego[0] = 0.3 + 0.4 * uniform01(rng_);
  state_.ego[1] = 0.3 + 0.4 * uniform01(rng_);
  for (int k = 0; k < n; ++k) goal_.push_back({"achievedGoal", {"c" + std::to_string(k)}});
}

int Env::held() const { return held_index(state_); }

void Env::grip_event(double cmd) {
  double& open = state_.ego[2];
  if (cmd > geom::kTrigger && open > 0.5) {
    open = 0;
    if (held() >= 0) return;
    int best = -1;
    double bd = geom::kEps;
    for (size_t i = 0; i < state_.objects.size(); ++i) {
      if (!is(state_.objects[i], feat::kBlock)) continue;
      const double dd = dist_inf(state_.ego[0], state_.ego[1], state_.objects[i][feat::kX],
                                 state_.objects[i][feat::kY]);
      if (dd < bd) {
        bd = dd;
        best = static_cast<int>(i);
      }
    }
    if (best >= 0) {
      state_.objects[best][feat::kHeld] = 1;
      if (box_ >= 0 && dist_inf(state_.objects[best], state_.objects[box_]) < geom::kEps)
        state_.objects[box_][feat::kAux] = 0;
      return;
    }
    if (box_ < 0) return;
    auto& box = state_.objects[box_];
    const bool occupied = box[feat::kAux] > 0.5;
    if (dist_inf(state_.ego[0], state_.ego[1], kLidX, kBoxY) < geom::kEps) {
      const bool opening = code(box) == 0;
      box[feat::kCode] = opening ? 1 : 0;
      if (!occupied) return;
      // The occupant is the block sitting at the box (visible) or the hidden
      // one whose colour is still recorded.
      for (size_t i = 0; i < hidden_colour_.size(); ++i) {
        auto& f = state_.objects[i];
        if (opening && !visible(f) && hidden_colour_[i] > 0) {
          f = object_features(kBoxX, kBoxY, feat::kBlock, hidden_colour_[i]);
          hidden_colour_[i] = 0;
          break;
        }
        if (!opening && visible(f) && f[feat::kHeld] < 0.5 &&
            dist_inf(f, box) < geom::kEps) {
          hidden_colour_[i] = code(f);
          f.assign(feat::kObject, 0.0);
          break;
        }
      }
    } else if (dist_inf(state_.ego[0], state_.ego[1], kRollX, kBoxY) < geom::kEps) {
      if (code(box) != 0 || occupied ||
          next_pool_ >= static_cast<int>(hidden_colour_.size()))
        return;
      if (uniform01(rng_) < kJamProb) return;
      hidden_colour_[next_pool_++] = 1 + static_cast<int>(uniform_index(rng_, n_colours_));
      box[feat::kAux] = 1;
    }
  } else if (cmd < -geom::kTrigger && open < 0.5) {
    open = 1;
    const int h = held();
    if (h < 0) return;
    auto& f = state_.objects[h];
    f[feat::kHeld] = 0;
    if (box_ >= 0 && code(state_.objects[box_]) == 1 &&
        state_.objects[box_][feat::kAux] < 0.5 &&
        dist_inf(f, state_.objects[box_]) < geom::kEps) {
      f[feat::kX] = kBoxX;
      f[feat::kY] = kBoxY;
      state_.objects[box_][feat::kAux] = 1;
    }
  }
}

bool Env::at_goal(int block) const {
  const auto& names = state_.names;
  for (const auto& g : goal_) {
    if (g.pred != "at" || g.args[0] != names[block]) continue;
    const auto it = std::find(names.begin(), names.end(), g.args[1]);
    const auto& b = state_.objects[block];
    const auto& p = state_.objects[it - names.begin()];
    return visible(b) && b[feat::kHeld] < 0.5 && dist_inf(b, p) < geom::kEps;
  }
  return false;
}

void Env::factory_spawn() {
  const int n = cfg_.n_objects;
  const int total = 2 * n;
  for (int i = 0; i < n; ++i) {
    if (spawned_[i] || !at_goal(i)) continue;
    spawned_[i] = 1;
    const int b = n + i;
    state_.objects[b] = object_features(0, 0, feat::kBlock);
    place_free(b);
    state_.objects[total + b] = object_features(0, 0, feat::kPlace);
    place_free(total + b);
    goal_.push_back({"at", {state_.names[b], state_.names[total + b]}});
  }
}

void Env::teleport() {
  const int n = cfg_.n_objects;
  for (int i = 0; i < n; ++i) {
    if (!at_goal(i)) continue;
    if (uniform01(rng_) >= cfg_.teleport_prob) continue;
    if (place_free(i)) ++teleports_;
  }
}

void Env::step(const LLAction& a) {
  if (a.size() != feat::kAction)
    throw std::invalid_argument("LL action must have " + std::to_string(feat::kAction) +
                                " components");
  auto clamp = [](double v) { return std::isfinite(v) ? std::clamp(v, -1.0, 1.0) : 0.0; };
  state_.ego[0] = std::clamp(state_.ego[0] + clamp(a[0]) * geom::kDelta, 0.0, 1.0);
  state_.ego[1] = std::clamp(state_.ego[1] + clamp(a[1]) * geom::kDelta, 0.0, 1.0);
  grip_event(clamp(a[2]));
  if (const int h = held(); h >= 0) {
    state_.objects[h][feat::kX] = state_.ego[0];
    state_.objects[h][feat::kY] = state_.ego[1];
  }
  if (cfg_.kind == EnvKind::factory) factory_spawn();
  if (cfg_.kind == EnvKind::blocks_noisy) teleport();
  ++steps_;
}

FactSet Env::goal() const { return resolve(domain(), state_.names, goal_); }

HLState Env::label() const { return env_labelling(cfg_.kind)(state()); }

LLState Env::state() const {
  LLState o = state_;
  for (auto& f : o.objects)
    if (visible(f)) {
      f[feat::kX] -= o.ego[0];
      f[feat::kY] -= o.ego[1];
    }
  return o;
}

void Env::set_state(const LLState& observation) {
  state_ = observation;
  for (auto& f : state_.objects)
    if (visible(f)) {
      f[feat::kX] += state_.ego[0];
      f[feat::kY] += state_.ego[1];
    }
}

// ---------------------------------------------------------------------------
// Demonstrator

namespace {

bool has(const HLState& s, int pred, std::initializer_list<int32_t> args) {
  return s.count(Fact(pred, args)) > 0;
}

std::optional<GroundAction> choose_blocks(const HLState& hl, const FactSet& goal) {
  const Domain& d = env_domain(EnvKind::blocks);
  Preds P{d};
  const int at = P("at"), clear = P("clear"), free = P("gripperFree"),
            holding = P("holding");
  for (const auto& f : hl) {
    if (f.pred != holding) continue;
    for (const auto& g : goal)
      if (g.pred == at && g.args[0] == f.args[0] && has(hl, clear, {g.args[1]}))
        return GroundAction{d.schema_index("place"), {g.args[0], g.args[1]}};
    return std::nullopt;
  }
  if (!has(hl, free, {})) return std::nullopt;
  for (const auto& g : goal)
    if (g.pred == at && !hl.count(g) && has(hl, clear, {g.args[0]}))
      return GroundAction{d.schema_index("pick"), {g.args[0]}};
  return std::nullopt;
}

std::optional<GroundAction> choose_pick_place(const HLState& hl, const FactSet& goal) {
  const Domain& d = env_domain(EnvKind::pick_place);
  Preds P{d};
  const int at = P("at"), hold = P("hold"), rat = P("rAt");
  int32_t robot = -1;
  for (const auto& f : hl)
    if (f.pred == rat) robot = f.args[0];
  if (robot < 0) return std::nullopt;
  for (const auto& g : goal) {
    if (g.pred != at || hl.count(g)) continue;
    const int32_t o = g.args[0], l = g.args[1];
    if (has(hl, hold, {o})) {
      if (robot == l) return GroundAction{d.schema_index("place"), {o, l}};
      return GroundAction{d.schema_index("move"), {robot, l}};
    }
    for (const auto& f : hl) {
      if (f.pred != at || f.args[0] != o) continue;
      if (robot == f.args[1]) return GroundAction{d.schema_index("pick"), {o, robot}};
      return GroundAction{d.schema_index("move"), {robot, f.args[1]}};
    }
  }
  return std::nullopt;
}

std::optional<GroundAction> choose_gacha(const HLState& hl) {
  const Domain& d = env_domain(EnvKind::gacha);
  Preds P{d};
  int32_t box = -1;
  for (const auto& f : hl)
    if (f.pred == P("opened") || f.pred == P("closed")) box = f.args[0];
  if (box < 0) return std::nullopt;
  for (const auto& f : hl) {
    if (f.pred != P("holding")) continue;
    for (const auto& c : hl) {
      if (c.pred != P("colourOf") || c.args[0] != f.args[0]) continue;
      for (const auto& t : hl)
        if (t.pred == P("trayColour") && t.args[1] == c.args[1])
          return GroundAction{d.schema_index("placeGoal"), {f.args[0], t.args[0], c.args[1]}};
    }
    return std::nullopt;
  }
  if (has(hl, P("opened"), {box})) {
    FactSet inside;
    for (const auto& f : hl)
      if (f.pred == P("in")) inside.push_back(f);
    if (!inside.empty()) {
      std::sort(inside.begin(), inside.end());
      return GroundAction{d.schema_index("pick"), {inside[0].args[0], box}};
    }
    return GroundAction{d.schema_index("close"), {box}};
  }
  if (has(hl, P("loaded"), {box})) return GroundAction{d.schema_index("open"), {box}};
  return GroundAction{d.schema_index("roll"), {box, 0}};
}

// (dx, dy) is the target relative to the gripper.
LLAction go_to(double dx, double dy, double grip) {
  double vx = dx / geom::kDelta;
  double vy = dy / geom::kDelta;
  const double m = std::max(std::abs(vx), std::abs(vy));
  if (m > 1) {
    vx /= m;
    vy /= m;
  }
  return {vx, vy, grip};
}

// Moves to the target with an open gripper, then closes it there.
LLAction grasp_at(const LLState& s, double dx, double dy) {
  const bool open = s.ego[2] > 0.5;
  if (std::max(std::abs(dx), std::abs(dy)) < kTol && open) return {0, 0, 1};
  return go_to(dx, dy, open ? 0 : -1);
}

LLAction release_at(double dx, double dy) {
  if (std::max(std::abs(dx), std::abs(dy)) < kTol) return {0, 0, -1};
  return go_to(dx, dy, 0);
}

}  // namespace

std::optional<GroundAction> scripted_choice(EnvKind k, const LLState& s,
                                            const HLState& hl, const FactSet& goal) {
  (void)s;
  if (is_goal(hl, goal)) return std::nullopt;
  switch (k) {
    case EnvKind::gacha: return choose_gacha(hl);
    case EnvKind::pick_place: return choose_pick_place(hl, goal);
    default: return choose_blocks(hl, goal);
  }
}

LLAction skill(EnvKind k, const LLState& s, const GroundAction& a) {
  const Domain& d = env_domain(k);
  const std::string& name = d.schemata.at(a.schema).name;
  auto pos = [&](int32_t o) {
    const auto& f = s.objects.at(o);
    return std::pair{f[feat::kX], f[feat::kY]};
  };
  if (name == "pick") {
    auto [x, y] = pos(a.args[0]);
    return grasp_at(s, x, y);
  }
  if (name == "place" || name == "placeGoal") {
    auto [x, y] = pos(a.args[1]);
    return release_at(x, y);
  }
  if (name == "move") {
    auto [x, y] = pos(a.args[1]);
    return go_to(x, y, 0);
  }
  if (name == "open" || name == "close")
    return grasp_at(s, kLidX - s.ego[0], kBoxY - s.ego[1]);
  if (name == "roll") return grasp_at(s, kRollX - s.ego[0], kBoxY - s.ego[1]);
  throw std::invalid_argument("no skill for schema " + name);
}

LLAction oracle(EnvKind k, const LLState& s, const FactSet& goal) {
  const HLState hl = env_labelling(k)(s);
  auto a = scripted_choice(k, s, hl, goal);
  if (!a) return {};
  return skill(k, s, *a);
}

namespace {

std::optional<Demo> run_oracle_episode(EnvConfig cfg) {
  Env env(cfg);
  Demo demo;
  const size_t cap = cfg.step_cap();
  for (;;) {
    const FactSet goal = env.goal();
    if (is_goal(env.label(), goal)) {
      demo.steps.push_back({env.state(), {}});
      demo.goal = env.goal_atoms();
      return demo;
    }
    if (env.steps() >= cap) return std::nullopt;
    LLAction a = oracle(cfg.kind, env.state(), goal);
    if (a.empty()) return std::nullopt;
    demo.steps.push_back({env.state(), a});
    env.step(a);
  }
}

}  // namespace

std::vector<Demo> generate_demos(const EnvConfig& cfg, size_t count, size_t jobs,
                                 DemoGenStats* stats) {
  DemoGenStats local;
  DemoGenStats& st = stats ? *stats : local;
  std::vector<Demo> out;
  const size_t max_attempts = 10 * count + 10;
  jobs = std::max<size_t>(1, jobs);
  size_t next = 0;
  while (out.size() < count && next < max_attempts) {
    const size_t batch = std::min(max_attempts - next, std::max(count - out.size(), jobs));
    std::vector<std::optional<Demo>> results(batch);
    auto work = [&](size_t w) {
      for (size_t i = w; i < batch; i += jobs) {
        EnvConfig c = cfg;
        c.seed = episode_seed(cfg.seed, next + i);
        results[i] = run_oracle_episode(c);
      }
    };
    if (jobs == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (size_t w = 0; w < jobs; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    for (size_t i = 0; i < batch && out.size() < count; ++i) {
      ++st.attempts;
      if (results[i])
        out.push_back(std::move(*results[i]));
      else
        ++st.discarded;
    }
    next += batch;
  }
  if (out.size() < count)
    log::warn("generate_demos: only {} of {} demos after {} attempts", out.size(), count,
              st.attempts);
  return out;
}

}  // namespace bison
