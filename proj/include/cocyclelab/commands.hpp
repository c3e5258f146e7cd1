#pragma once

// Command implementations behind the cocyclelab executable. Each command
// writes one CSV artifact and a short verdict log, and returns the process
// exit status: 0 when every consistency check passes, 1 on a
// theorem-consistency violation. Library errors propagate to the caller,
// which maps them to exit status 2.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace cocyclelab {

struct CommandOptions {
  std::filesystem::path scenario;
  /// CSV destination; empty selects <output dir>/<command>.csv.
  std::filesystem::path out;
  std::filesystem::path sets;
  std::optional<int> horizon;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed_override;
  unsigned workers = 1;
  /// run-mixing: one notion or "all".
  std::string notion = "all";
  /// run-counterexample.
  int k = 8;
  std::optional<int> r_max;
  std::vector<double> eps;
  std::optional<std::size_t> omegas;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInconsistent = 1;
inline constexpr int kExitUsage = 2;

const std::vector<std::string>& command_names();

int run_mixing(const CommandOptions& opts, std::ostream& log);
int run_exactness(const CommandOptions& opts, std::ostream& log);
int run_asymp(const CommandOptions& opts, std::ostream& log);
int run_qc(const CommandOptions& opts, std::ostream& log);
int run_skew(const CommandOptions& opts, std::ostream& log);
int run_counterexample(const CommandOptions& opts, std::ostream& log);
int run_report(const CommandOptions& opts, std::ostream& log);

/// Dispatches by command name; throws PreconditionError for unknown names.
int run_command(const std::string& command, const CommandOptions& opts, std::ostream& log);

}  // namespace cocyclelab
