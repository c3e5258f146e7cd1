#pragma once

// Scenario files: JSON documents describing the space, the driving system,
// named operators, the cocycle table, analysis settings and outputs.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cocyclelab/cocycle.hpp"
#include "cocyclelab/skewprod.hpp"
#include "cocyclelab/transfer.hpp"

namespace cocyclelab {

struct OperatorDef {
  std::string name;
  MatrixPtr matrix;
  /// Set for operators built from a point map.
  std::optional<MapSpec> map;
  /// "exact", "ulam", "kernel" or "block_cycle".
  std::string builder;
};

struct AnalysisConfig {
  int horizon = 40;
  double tol = 1e-6;
  /// Tolerance of the exactness verdicts.
  double exact_tol = 1e-8;
  int pullback_max = 200;
  double pullback_tol = 1e-12;
  double support_floor = 1e-9;
  int r_max = 8;
  int burn_in = -1;
  std::vector<double> eps = {0.1, 0.01};
  std::size_t omega_samples = 64;
  std::size_t mc_samples = 2048;
  /// Tolerance of the skew-product discrepancy verdict.
  double skew_tol = 1e-3;
  std::uint64_t seed = 0;
};

struct SetPair {
  std::string id;
  ProductSet a;
  ProductSet b;
};

struct Scenario {
  std::string name;
  std::filesystem::path source;
  SpacePtr space;
  std::shared_ptr<const DrivingSystem> driving;
  std::map<std::string, OperatorDef> operators;
  std::shared_ptr<const CocycleFamily> cocycle;
  AnalysisConfig analysis;
  std::vector<SetPair> set_pairs;
  std::filesystem::path output_dir;
};

/// Throws ConfigError (parse errors carry line and column; unresolved
/// references name the missing operator) and InvariantError for objects
/// that fail their checks. A seed override replaces every seed in the file
/// (analysis, driving, Ulam builders) with values derived from it.
Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override = {});
Scenario parse_scenario(const std::string& text, const std::string& origin = "<string>",
                        std::optional<std::uint64_t> seed_override = {});

/// Set pairs in the scenario dialect: {"pairs": [{"id", "A", "B"}]}.
std::vector<SetPair> parse_set_pairs(const nlohmann::json& doc, const Scenario& s);
std::vector<SetPair> load_set_pairs(const std::filesystem::path& path, const Scenario& s);

/// The environment points analysed for a scenario: every point of a finite
/// driving system with at most `count` points, otherwise `count` draws
/// seeded by the analysis seed.
std::vector<EnvPoint> scenario_omegas(const Scenario& s, std::size_t count);

}  // namespace cocyclelab
