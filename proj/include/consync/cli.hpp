#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "consync/graph.hpp"

namespace consync {

struct RunConfig {
  std::string command;  // optimize | gain | bounds | simulate | analyze-edge | distributed | sweep
  std::string graph_path;
  std::string system_path;
  std::string params_path;
  std::string out_dir = ".";
  std::optional<Edge> edge;
  bool verify = false;
  std::string epsilons;  // "a:b:step"
  std::string x0_path;
  bool nonnegative = false;
  bool gnuplot = false;
  int stride = 10;
  bool parallel = false;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitConvergence = 3;

// "a:b:step" → a, a+step, …, b (inclusive up to rounding).
std::vector<double> parse_range(const std::string& spec);
Edge parse_edge(const std::string& spec);

// Executes one command, writing artifacts into config.out_dir and a short
// human-readable summary to `out`.  Errors propagate as exceptions.
void run(const RunConfig& config, std::ostream& out);

// Parses argv, runs, maps exceptions to exit codes (2 input/model, 3
// convergence/numerical) with the message on `err`.
int main_entry(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace consync
