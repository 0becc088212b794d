#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "bison/core.hpp"
#include "bison/ll.hpp"
#include "bison/policy.hpp"

namespace bison {

struct ParseError : std::runtime_error {
  int line;
  int col;
  ParseError(int line, int col, const std::string& msg);
};

// .bsd
Domain parse_domain(std::string_view text);
std::string serialize_domain(const Domain& d);

// .bsq
HLProblem parse_problem(std::string_view text, const Domain& d);
std::string serialize_problem(const Domain& d, const HLProblem& p);

// .bst: one demo per line.
std::vector<Demo> parse_traces(std::string_view text);
std::string serialize_demo(const Demo& demo);
std::string serialize_traces(const std::vector<Demo>& demos);

// .bsp: one rule per line.
HLPolicy parse_policy(std::string_view text, const Domain& d);
std::string serialize_policy(const Domain& d, const HLPolicy& p);

// Resolves named atoms against a domain and an object table.
FactSet resolve(const Domain& d, const std::vector<std::string>& objects,
                const std::vector<NamedAtom>& atoms);
std::vector<NamedAtom> unresolve(const Domain& d,
                                 const std::vector<std::string>& objects,
                                 const FactSet& facts);

std::string format_double(double x);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view text);

}  // namespace bison
