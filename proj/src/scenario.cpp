#include "cocyclelab/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "cocyclelab/errors.hpp"

namespace cocyclelab {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

const json& require(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) fail(where, "missing field '" + key + "'");
  return j.at(key);
}

template <typename T>
T read(const json& j, const std::string& key, const std::string& where) {
  const json& v = require(j, key, where);
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    fail(where + "." + key, std::string("wrong type (") + e.what() + ")");
  }
}

template <typename T>
T read_or(const json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  return read<T>(j, key, where);
}

void only_keys(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [k, v] : j.items()) {
    if (!allowed.contains(k)) fail(where, "unknown field '" + k + "'");
  }
}

std::pair<std::size_t, std::size_t> line_and_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  std::size_t col = 1;
  const std::size_t end = std::min(text.size(), byte > 0 ? byte - 1 : 0);
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

SpacePtr build_space(const json& j) {
  const std::string where = "space";
  only_keys(j, {"N", "weights", "nx", "ny"}, where);
  if (j.contains("weights")) return FiniteMeasureSpace::weighted(read<std::vector<double>>(j, "weights", where));
  if (j.contains("nx") || j.contains("ny")) {
    return FiniteMeasureSpace::grid(read<std::size_t>(j, "nx", where), read<std::size_t>(j, "ny", where));
  }
  const auto n = read<std::size_t>(j, "N", where);
  if (n == 0) fail(where + ".N", "must be positive");
  return FiniteMeasureSpace::uniform(n);
}

std::shared_ptr<const DrivingSystem> build_driving(const json& j) {
  const std::string where = "driving";
  only_keys(j, {"kind", "q", "p", "sigma", "seed", "window", "step"}, where);
  const auto kind = read<std::string>(j, "kind", where);
  if (kind == "finite_rotation") {
    const auto q = read<std::size_t>(j, "q", where);
    if (j.contains("p")) {
      return std::make_shared<const DrivingSystem>(
          DrivingSystem::finite_rotation(q, read<std::vector<double>>(j, "p", where)));
    }
    return std::make_shared<const DrivingSystem>(DrivingSystem::finite_rotation(q));
  }
  if (kind == "finite_permutation") {
    return std::make_shared<const DrivingSystem>(DrivingSystem::finite_permutation(
        read<std::vector<std::size_t>>(j, "sigma", where), read<std::vector<double>>(j, "p", where)));
  }
  if (kind == "bernoulli") {
    return std::make_shared<const DrivingSystem>(DrivingSystem::bernoulli_shift(
        read<std::vector<double>>(j, "p", where), read_or<int>(j, "window", where, 8),
        read<std::uint64_t>(j, "seed", where), read_or<int>(j, "step", where, 1)));
  }
  fail(where + ".kind", "unknown driving kind '" + kind + "'");
}

MapSpec build_map(const json& j, const std::string& where) {
  const auto name = read<std::string>(j, "map", where);
  if (name == "identity") return MapSpec::identity();
  if (name == "constant") return MapSpec::constant();
  if (name == "doubling") return MapSpec::doubling();
  if (name == "tent") return MapSpec::tent();
  if (name == "baker_planar") return MapSpec::baker_planar();
  if (name == "baker_cyclic") return MapSpec::baker_cyclic(read<int>(j, "bits", where));
  if (name == "piecewise_linear") {
    return MapSpec::piecewise_linear(read<std::vector<double>>(j, "breakpoints", where),
                                     read<std::vector<double>>(j, "slopes", where),
                                     read_or<std::vector<double>>(j, "offsets", where, {}));
  }
  fail(where + ".map", "unknown map '" + name + "'");
}

OperatorDef build_operator(const std::string& name, const json& j, const SpacePtr& space) {
  const std::string where = "operators." + name;
  OperatorDef def;
  def.name = name;
  if (j.contains("kernel")) {
    only_keys(j, {"kernel"}, where);
    const json& k = j.at("kernel");
    def.builder = "kernel";
    const auto n = static_cast<Eigen::Index>(space->size());
    if (k.contains("rows")) {
      const auto rows = read<std::vector<std::vector<double>>>(k, "rows", where + ".kernel");
      if (rows.size() != space->size()) fail(where + ".kernel.rows", "needs one row per cell");
      Eigen::MatrixXd dense(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (rows[static_cast<std::size_t>(i)].size() != space->size()) fail(where + ".kernel.rows", "ragged row");
        for (Eigen::Index c = 0; c < n; ++c) dense(i, c) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
      }
      def.matrix = std::make_shared<const MarkovMatrix>(MarkovMatrix::from_dense(space, dense));
    } else {
      const auto entries = read<std::vector<std::tuple<std::size_t, std::size_t, double>>>(k, "entries", where + ".kernel");
      std::vector<Eigen::Triplet<double>> t;
      for (const auto& [r, c, v] : entries) {
        if (r >= space->size() || c >= space->size()) fail(where + ".kernel.entries", "index out of range");
        t.emplace_back(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c), v);
      }
      Kernel kernel(n, n);
      kernel.setFromTriplets(t.begin(), t.end());
      def.matrix = std::make_shared<const MarkovMatrix>(space, std::move(kernel));
    }
    return def;
  }
  if (j.contains("block_cycle")) {
    only_keys(j, {"block_cycle"}, where);
    const json& b = j.at("block_cycle");
    def.builder = "block_cycle";
    def.matrix = std::make_shared<const MarkovMatrix>(
        block_cycle(space, read<std::size_t>(b, "blocks", where + ".block_cycle"),
                    read_or<std::vector<std::size_t>>(b, "order", where + ".block_cycle", {})));
    return def;
  }
  only_keys(j, {"map", "builder", "samples", "seed", "bits", "breakpoints", "slopes", "offsets"}, where);
  def.map = build_map(j, where);
  def.builder = read_or<std::string>(j, "builder", where, "exact");
  if (def.builder == "exact") {
    def.matrix = std::make_shared<const MarkovMatrix>(pf_exact(*def.map, space));
  } else if (def.builder == "ulam") {
    def.matrix = std::make_shared<const MarkovMatrix>(pf_ulam(*def.map, space, read_or<std::size_t>(j, "samples", where, 1000),
                                                              read<std::uint64_t>(j, "seed", where)));
  } else {
    fail(where + ".builder", "unknown builder '" + def.builder + "'");
  }
  return def;
}

const OperatorDef& resolve(const std::map<std::string, OperatorDef>& ops, const std::string& name,
                           const std::string& where) {
  const auto it = ops.find(name);
  if (it == ops.end()) fail(where, "unresolved reference '" + name + "'");
  return it->second;
}

std::vector<std::size_t> read_cells(const json& j, std::size_t n, const std::string& where) {
  std::vector<std::size_t> cells;
  if (j.is_string() && j.get<std::string>() == "all") {
    for (std::size_t i = 0; i < n; ++i) cells.push_back(i);
  } else if (j.is_object()) {
    only_keys(j, {"from", "to"}, where);
    const auto from = read<std::size_t>(j, "from", where);
    const auto to = read<std::size_t>(j, "to", where);
    for (std::size_t i = from; i < to; ++i) cells.push_back(i);
  } else {
    try {
      cells = j.get<std::vector<std::size_t>>();
    } catch (const json::exception&) {
      fail(where, "cells must be \"all\", {\"from\", \"to\"} or a list");
    }
  }
  for (std::size_t c : cells) {
    if (c >= n) fail(where, "cell " + std::to_string(c) + " out of range");
  }
  return cells;
}

EnvSet read_env(const json& j, const std::string& where) {
  if (j.is_string() && j.get<std::string>() == "all") return EnvSet::all();
  if (j.is_object() && j.contains("points")) return EnvSet::points(read<std::vector<std::size_t>>(j, "points", where));
  if (j.is_object() && j.contains("cylinder")) {
    const json& c = j.at("cylinder");
    return EnvSet::cylinder(Cylinder{read_or<std::int64_t>(c, "first", where + ".cylinder", 0),
                                     read<std::vector<int>>(c, "symbols", where + ".cylinder")});
  }
  fail(where, "env must be \"all\", {\"points\"} or {\"cylinder\"}");
}

ProductSet read_product_set(const json& j, std::size_t n, const std::string& where) {
  ProductSet s;
  if (!j.is_array()) fail(where, "expected a list of rectangles");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string here = where + "[" + std::to_string(i) + "]";
    only_keys(j[i], {"env", "cells"}, here);
    const EnvSet env = j[i].contains("env") ? read_env(j[i].at("env"), here + ".env") : EnvSet::all();
    s.add(env, read_cells(require(j[i], "cells", here), n, here + ".cells"));
  }
  return s;
}

void apply_seed_override(json& doc, std::uint64_t seed) {
  if (doc.contains("analysis")) doc["analysis"]["seed"] = seed;
  if (doc.contains("driving") && doc["driving"].contains("seed")) doc["driving"]["seed"] = mix_seed(seed, 1);
  if (doc.contains("operators") && doc["operators"].is_object()) {
    std::uint64_t k = 2;
    for (auto& [name, op] : doc["operators"].items()) {
      if (op.is_object() && op.contains("seed")) op["seed"] = mix_seed(seed, k);
      ++k;
    }
  }
}

}  // namespace

Scenario parse_scenario(const std::string& text, const std::string& origin, std::optional<std::uint64_t> seed_override) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text, e.byte);
    throw ConfigError(origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " + e.what());
  }
  if (seed_override) apply_seed_override(doc, *seed_override);
  only_keys(doc, {"name", "space", "driving", "operators", "cocycle", "analysis", "output", "skew"}, origin);

  Scenario s;
  s.source = origin;
  s.name = read_or<std::string>(doc, "name", "scenario", "scenario");
  s.space = build_space(require(doc, "space", "scenario"));
  s.driving = build_driving(require(doc, "driving", "scenario"));

  const json& ops = require(doc, "operators", "scenario");
  if (!ops.is_object() || ops.empty()) fail("operators", "expected a nonempty object");
  for (const auto& [name, def] : ops.items()) s.operators.emplace(name, build_operator(name, def, s.space));

  const json& cj = require(doc, "cocycle", "scenario");
  only_keys(cj, {"constant", "table"}, "cocycle");
  if (cj.contains("constant")) {
    const auto& def = resolve(s.operators, read<std::string>(cj, "constant", "cocycle"), "cocycle.constant");
    s.cocycle = std::make_shared<const CocycleFamily>(CocycleFamily::constant(s.driving, def.matrix));
  } else {
    const json& table = require(cj, "table", "cocycle");
    std::vector<MatrixPtr> entries(s.driving->feature_count());
    if (table.is_array()) {
      if (table.size() != entries.size()) {
        fail("cocycle.table", "needs " + std::to_string(entries.size()) + " entries, got " + std::to_string(table.size()));
      }
      for (std::size_t v = 0; v < table.size(); ++v) {
        const std::string where = "cocycle.table[" + std::to_string(v) + "]";
        if (!table[v].is_string()) fail(where, "expected an operator name");
        entries[v] = resolve(s.operators, table[v].get<std::string>(), where).matrix;
      }
    } else if (table.is_object()) {
      for (const auto& [key, value] : table.items()) {
        const std::string where = "cocycle.table." + key;
        std::size_t v = 0;
        try {
          v = static_cast<std::size_t>(std::stoul(key));
        } catch (const std::exception&) {
          fail(where, "feature keys must be integers");
        }
        if (v >= entries.size()) fail(where, "feature out of range");
        if (!value.is_string()) fail(where, "expected an operator name");
        entries[v] = resolve(s.operators, value.get<std::string>(), where).matrix;
      }
      for (std::size_t v = 0; v < entries.size(); ++v) {
        if (!entries[v]) fail("cocycle.table", "no operator for feature " + std::to_string(v));
      }
    } else {
      fail("cocycle.table", "expected a list or an object");
    }
    s.cocycle = std::make_shared<const CocycleFamily>(s.driving, s.space, std::move(entries));
  }

  const json& aj = require(doc, "analysis", "scenario");
  only_keys(aj, {"horizon", "tol", "exact_tol", "pullback", "support_floor", "r_max", "burn_in", "eps", "omega_samples",
                 "mc_samples", "skew_tol", "seed"},
            "analysis");
  auto& a = s.analysis;
  a.seed = read<std::uint64_t>(aj, "seed", "analysis");
  a.horizon = read_or<int>(aj, "horizon", "analysis", a.horizon);
  a.tol = read_or<double>(aj, "tol", "analysis", a.tol);
  a.exact_tol = read_or<double>(aj, "exact_tol", "analysis", a.exact_tol);
  a.support_floor = read_or<double>(aj, "support_floor", "analysis", a.support_floor);
  a.r_max = read_or<int>(aj, "r_max", "analysis", a.r_max);
  a.burn_in = read_or<int>(aj, "burn_in", "analysis", a.burn_in);
  a.eps = read_or<std::vector<double>>(aj, "eps", "analysis", a.eps);
  a.omega_samples = read_or<std::size_t>(aj, "omega_samples", "analysis", a.omega_samples);
  a.mc_samples = read_or<std::size_t>(aj, "mc_samples", "analysis", a.mc_samples);
  a.skew_tol = read_or<double>(aj, "skew_tol", "analysis", a.skew_tol);
  if (aj.contains("pullback")) {
    const json& pj = aj.at("pullback");
    only_keys(pj, {"K_max", "tol"}, "analysis.pullback");
    a.pullback_max = read_or<int>(pj, "K_max", "analysis.pullback", a.pullback_max);
    a.pullback_tol = read_or<double>(pj, "tol", "analysis.pullback", a.pullback_tol);
  }
  if (a.horizon < 1) fail("analysis.horizon", "must be at least 1");

  if (doc.contains("output")) {
    only_keys(doc.at("output"), {"dir"}, "output");
    s.output_dir = read_or<std::string>(doc.at("output"), "dir", "output", ".");
  } else {
    s.output_dir = ".";
  }
  if (doc.contains("skew")) s.set_pairs = parse_set_pairs(doc.at("skew"), s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_scenario(text.str(), path.string(), seed_override);
}

std::vector<SetPair> parse_set_pairs(const json& doc, const Scenario& s) {
  only_keys(doc, {"pairs"}, "skew");
  const json& pairs = require(doc, "pairs", "skew");
  if (!pairs.is_array()) fail("skew.pairs", "expected a list");
  std::vector<SetPair> out;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string where = "skew.pairs[" + std::to_string(i) + "]";
    only_keys(pairs[i], {"id", "A", "B"}, where);
    SetPair p;
    p.id = read_or<std::string>(pairs[i], "id", where, "pair" + std::to_string(i));
    try {
      p.a = read_product_set(require(pairs[i], "A", where), s.space->size(), where + ".A");
      p.b = read_product_set(require(pairs[i], "B", where), s.space->size(), where + ".B");
    } catch (const PreconditionError& e) {
      fail(where, e.what());
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<SetPair> load_set_pairs(const std::filesystem::path& path, const Scenario& s) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open set file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  json doc;
  try {
    doc = json::parse(text.str());
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_and_column(text.str(), e.byte);
    throw ConfigError(path.string() + ":" + std::to_string(line) + ":" + std::to_string(col) + ": parse error: " +
                      e.what());
  }
  return parse_set_pairs(doc, s);
}

std::vector<EnvPoint> scenario_omegas(const Scenario& s, std::size_t count) {
  const auto& d = *s.driving;
  if (d.is_finite() && d.point_count() <= count) return d.all_points();
  return d.sample(count, s.analysis.seed);
}

}  // namespace cocyclelab
