#pragma once

#include <string>
#include <vector>

namespace bison {

// Ego vector plus named per-object feature vectors. Object order is stable
// within an episode and defines the HL object ids.
struct LLState {
  std::vector<double> ego;
  std::vector<std::string> names;
  std::vector<std::vector<double>> objects;

  bool operator==(const LLState&) const = default;
};

using LLAction = std::vector<double>;

// A fact written with names, as it appears in trace files.
struct NamedAtom {
  std::string pred;
  std::vector<std::string> args;

  bool operator==(const NamedAtom&) const = default;
};

struct DemoStep {
  LLState state;
  LLAction action;  // empty on the terminal step

  bool operator==(const DemoStep&) const = default;
};

struct Demo {
  std::vector<NamedAtom> goal;
  std::vector<DemoStep> steps;

  bool operator==(const Demo&) const = default;
};

}  // namespace bison
