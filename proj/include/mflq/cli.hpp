#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mflq/model.hpp"

namespace mflq {

enum class Command { solve, simulate, verify, certify };

std::optional<Command> parse_command(const std::string& name);

struct RunConfig {
  Command command = Command::solve;
  std::filesystem::path model_path;  // optional for certify
  std::filesystem::path out_dir = ".";
  std::optional<double> h;           // grid override, constant coefficients only
  std::size_t M = 10000;
  std::uint64_t seed = 42;
  std::vector<double> eps{0.2, 0.1, 0.05};
  int steps = 3;
  unsigned workers = 1;
  std::size_t save_paths = 0;  // simulate: paths written to paths.csv
  bool timestamp = true;       // add a wall-clock field to JSON summaries
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int invalid_input = 2;
inline constexpr int numerical_failure = 3;
}  // namespace exit_code

/// Executes one command, writing artifacts under out_dir. Messages go to
/// `log`. Returns the process exit status.
int run(const RunConfig& config, std::ostream& log);

/// Grid with every other node of `spec`; requires an even step count.
ModelSpec coarsen(const ModelSpec& spec);

/// Smooth pseudo-random direction sum_j a_j cos(j pi t / T), j = 0..2, sampled
/// on the grid of `spec`. Identical functions on any grid for a given seed.
std::vector<Vector> smooth_direction(const ModelSpec& spec, std::uint64_t seed, std::uint64_t index);

}  // namespace mflq
