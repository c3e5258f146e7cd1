#include "cocyclelab/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cocyclelab/asymp.hpp"
#include "cocyclelab/csv.hpp"
#include "cocyclelab/errors.hpp"
#include "cocyclelab/exactness.hpp"
#include "cocyclelab/mixing.hpp"
#include "cocyclelab/scenario.hpp"
#include "cocyclelab/skewprod.hpp"

namespace cocyclelab {

namespace {

const char* yes_no(bool v) { return v ? "yes" : "no"; }

struct Loaded {
  Scenario s;
  int horizon;
  double tol;
};

Loaded load(const CommandOptions& opts) {
  if (opts.scenario.empty()) throw ConfigError("--scenario is required");
  Loaded l{load_scenario(opts.scenario, opts.seed_override), 0, 0.0};
  l.horizon = opts.horizon.value_or(l.s.analysis.horizon);
  l.tol = opts.tol.value_or(l.s.analysis.tol);
  if (l.horizon < 1) throw ConfigError("--horizon must be at least 1");
  if (!(l.tol > 0.0)) throw ConfigError("--tol must be positive");
  return l;
}

std::ofstream open_out(const CommandOptions& opts, const std::filesystem::path& fallback_dir, const std::string& name) {
  std::filesystem::path path = opts.out.empty() ? fallback_dir / (name + ".csv") : opts.out;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  return out;
}

std::vector<Notion> selected_notions(const std::string& text) {
  if (text == "all") return {Notion::prior_hom, Notion::post_hom, Notion::prior_inhom, Notion::post_inhom};
  try {
    return {parse_notion(text)};
  } catch (const PreconditionError& e) {
    throw ConfigError(e.what());
  }
}

MixingReport mix(const Scenario& s, Notion notion, const std::vector<EnvPoint>& omegas, int horizon, double tol,
                 unsigned workers, CurveSink sink = {}) {
  const auto f = difference_basis(s.space);
  const auto g = is_homogeneous(notion) ? homogeneous_maps(indicator_basis(s.space))
                                        : step_indicator_maps(s.driving, s.space);
  MixingOptions mo;
  mo.horizon = horizon;
  mo.tol = tol;
  mo.per_curve_rates = false;
  mo.workers = workers;
  mo.sink = std::move(sink);
  return estimate_mixing(*s.cocycle, notion, f, g, omegas, mo);
}

PeriodicityOptions periodicity_options(const Scenario& s, int horizon, std::optional<int> r_max) {
  PeriodicityOptions po;
  po.burn_in = s.analysis.burn_in;
  po.horizon = horizon;
  po.r_max = r_max.value_or(s.analysis.r_max);
  return po;
}

std::string format_residual(const std::optional<double>& r) { return r ? format_double(*r) : "NA"; }

struct Check {
  std::string name;
  std::string status;  // pass | fail | skipped
  std::string detail;
};

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"run-mixing", "run-exactness",      "run-asymp", "run-qc",
                                                 "run-skew",   "run-counterexample", "report"};
  return names;
}

// ------------------------------------------------------------------ mixing

int run_mixing(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  auto out = open_out(opts, s.output_dir, "mixing");
  CsvWriter csv(out, {"notion", "omega_id", "f_id", "g_id", "n", "value"});

  std::vector<bool> verdicts;
  for (Notion notion : selected_notions(opts.notion)) {
    const std::string tag = to_string(notion);
    const auto sink = [&](const CurveKey& key, std::span<const double> curve) {
      for (std::size_t n = 0; n < curve.size(); ++n) {
        csv.row({tag, std::to_string(key.omega), std::to_string(key.f), std::to_string(key.g), std::to_string(n),
                 format_double(curve[n])});
      }
    };
    const MixingReport r = mix(s, notion, omegas, l.horizon, l.tol, opts.workers, sink);
    verdicts.push_back(r.decayed);
    log << tag << ": " << (r.decayed ? "mixing" : "not mixing") << " (tail max " << format_double(r.tail_max)
        << ", envelope rate " << format_double(r.envelope_rate.rate) << ", " << r.omega_count << " omega)\n";
  }
  if (verdicts.size() == 4 && !std::all_of(verdicts.begin(), verdicts.end(), [&](bool v) { return v == verdicts[0]; })) {
    log << "inconsistent: the four mixing verdicts disagree\n";
    return kExitInconsistent;
  }
  return kExitOk;
}

// --------------------------------------------------------------- exactness

int run_exactness(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  ExactnessOptions eo;
  eo.horizon = l.horizon;
  eo.tol = opts.tol.value_or(s.analysis.exact_tol);
  eo.workers = opts.workers;
  const ExactnessReport r = assess_exactness(*s.cocycle, omegas, difference_block(s.space), eo);

  auto out = open_out(opts, s.output_dir, "exactness");
  CsvWriter csv(out, {"omega_id", "test", "n", "value_or_flag"});
  double max_increase = 0.0;
  for (const auto& ox : r.per_omega) {
    const std::string id = std::to_string(ox.omega_id);
    for (int n = 0; n <= l.horizon; ++n) {
      double worst = 0.0;
      for (const auto& curve : ox.norms.curves) worst = std::max(worst, curve[static_cast<std::size_t>(n)]);
      csv.row({id, "norm", std::to_string(n), format_double(worst)});
    }
    csv.row({id, "norm", "", ox.norms.decayed ? "exact" : "not exact"});
    for (std::size_t n = 0; n < ox.lin.diameter.size(); ++n) {
      csv.row({id, "lin", std::to_string(n), format_double(ox.lin.diameter[n])});
    }
    csv.row({id, "lin", "", ox.lin.trivial ? "trivial" : "not trivial"});
    if (ox.tail) {
      for (std::size_t n = 0; n < ox.tail->atoms.size(); ++n) {
        csv.row({id, "tail", std::to_string(n), std::to_string(ox.tail->atoms[n])});
      }
      csv.row({id, "tail", "", ox.tail->trivial ? "trivial" : "not trivial"});
    }
    max_increase = std::max(max_increase, ox.norms.max_increase);
  }
  log << "exact (norm): " << yes_no(r.norm_exact) << "\n"
      << "exact (dual ball): " << yes_no(r.lin_exact) << "\n"
      << "exact (tail partition): " << (r.tail_exact ? yes_no(*r.tail_exact) : "not map-derived") << "\n"
      << "sign witness gap: " << format_double(r.witness_gap) << "\n";
  bool ok = true;
  if (!r.agree) {
    log << "inconsistent: exactness criteria disagree\n";
    ok = false;
  }
  if (max_increase > 1e-12) {
    log << "inconsistent: a norm curve increases by " << format_double(max_increase) << "\n";
    ok = false;
  }
  if (r.witness_gap > 1e-10) {
    log << "inconsistent: sign witness identity fails\n";
    ok = false;
  }
  return ok ? kExitOk : kExitInconsistent;
}

// ------------------------------------------------------------------- asymp

int run_asymp(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  const PeriodicityResult r = detect_periodicity(*s.cocycle, omegas, periodicity_options(s, l.horizon, opts.r_max));

  auto out = open_out(opts, s.output_dir, "asymp");
  CsvWriter csv(out, {"omega_id", "r", "rho", "residual"});
  log << "asymptotic periodicity: " << to_string(r.status);
  if (r.decomposition) {
    const auto& d = *r.decomposition;
    for (const auto& f : d.fibers) {
      csv.row({std::to_string(f.omega_id), std::to_string(d.r), cycle_notation(f.rho), format_double(d.residual)});
    }
    log << ", r = " << d.r << ", rho = " << cycle_notation(d.fibers.front().rho)
        << (stability_check(d) ? " (asymptotically stable)" : "") << ", residual " << format_double(d.residual) << "\n";
    bool ok = true;
    if (!d.chain_consistent) {
      log << "inconsistent: one-step permutations do not compose to the tracked permutation\n";
      ok = false;
    }
    if (d.lambda_sum_defect > 1e-9) {
      log << "inconsistent: lambda does not sum to one (defect " << format_double(d.lambda_sum_defect) << ")\n";
      ok = false;
    }
    return ok ? kExitOk : kExitInconsistent;
  }
  csv.row({"all", r.status == PeriodicityStatus::indeterminate ? "indeterminate" : "none", "",
           format_residual(r.best_residual)});
  log << " (" << r.diagnostics << ")\n";
  return kExitOk;
}

int run_qc(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  QcOptions qo;
  qo.eps = opts.eps.empty() ? s.analysis.eps : opts.eps;
  qo.horizon = l.horizon;
  qo.workers = opts.workers;
  const QcReport r = quasi_constrictive_probe(*s.cocycle, omegas, qo);

  auto out = open_out(opts, s.output_dir, "qc");
  CsvWriter csv(out, {"eps", "resolved", "passed", "delta", "family_size", "min_measure", "witness_value"});
  for (const auto& row : r.rows) {
    csv.row({format_double(row.eps), row.resolved ? "true" : "false", row.passed ? "true" : "false",
             row.resolved ? format_double(row.delta) : "NA", std::to_string(row.family_size),
             format_double(row.min_measure), row.resolved ? format_double(row.witness_value) : "NA"});
    log << "eps " << format_double(row.eps) << ": "
        << (row.resolved ? (row.passed ? "delta " + format_double(row.delta) : std::string("no delta works"))
                         : std::string("unresolved"))
        << "\n";
  }
  log << "quasi-constrictive: " << yes_no(r.quasi_constrictive) << " (" << r.omega_count << " omega, " << r.set_count
      << " sets)\n";
  return kExitOk;
}

// -------------------------------------------------------------------- skew

int run_skew(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto pairs = opts.sets.empty() ? s.set_pairs : load_set_pairs(opts.sets, s);
  if (pairs.empty()) throw ConfigError("run-skew needs set pairs (--sets or a skew block in the scenario)");
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  PullbackOptions po;
  po.max_horizon = s.analysis.pullback_max;
  po.tolerance = s.analysis.pullback_tol;
  const auto h = InvariantDensityMap::build(s.cocycle, omegas, po);
  SkewOptions so;
  so.horizon = l.horizon;
  so.tol = opts.tol.value_or(s.analysis.skew_tol);
  so.mc_samples = s.analysis.mc_samples;
  so.seed = s.analysis.seed;
  so.workers = opts.workers;

  auto out = open_out(opts, s.output_dir, "skew");
  CsvWriter csv(out, {"set_pair_id", "n", "nu_joint", "nu_product", "discrepancy"});
  bool ok = true;
  for (const auto& p : pairs) {
    const SkewCurve curve = skew_mixing_curve(*s.cocycle, h, p.a, p.b, so);
    for (std::size_t n = 0; n < curve.joint.size(); ++n) {
      csv.row({p.id, std::to_string(n), format_double(curve.joint[n]), format_double(curve.product[n]),
               format_double(curve.discrepancy[n])});
    }
    log << p.id << ": " << (curve.decayed ? "decayed" : "not decayed") << " (tail max " << format_double(curve.tail_max)
        << ", " << curve.method << ")";
    if (!curve.flag.empty()) log << " [" << curve.flag << "]";
    log << "\n";
    if (curve.exact && curve.route_gap > 1e-9) {
      log << "inconsistent: operator and Koopman routes differ by " << format_double(curve.route_gap) << "\n";
      ok = false;
    }
    if (!curve.joint_product_formula.empty() && curve.formula_gap > 1e-12) {
      log << "inconsistent: product-set formula differs by " << format_double(curve.formula_gap) << "\n";
      ok = false;
    }
  }
  return ok ? kExitOk : kExitInconsistent;
}

// ---------------------------------------------------------- counterexample

int run_counterexample(const CommandOptions& opts, std::ostream& log) {
  const int horizon = opts.horizon.value_or(2 * opts.k);
  const CounterexampleReport r = orbit_counterexample(opts.k, horizon);
  auto out = open_out(opts, ".", "counterexample");
  CsvWriter csv(out, {"n", "inhomogeneous", "overlap", "square_integral", "homogeneous_fixed_a",
                      "homogeneous_cell_max"});
  for (int n = 1; n <= horizon; ++n) {
    const auto i = static_cast<std::size_t>(n);
    csv.row({std::to_string(n), format_double(r.inhomogeneous[i]), format_double(r.overlap[i]),
             format_double(r.square_integral[i]), format_double(r.homogeneous_fixed_a[i]),
             format_double(r.homogeneous_cell_max[i])});
  }
  log << "k = " << r.k << ", " << r.cells << " cells, n = 1.." << horizon << "\n"
      << "inhomogeneous correlation constant 1/2: " << yes_no(r.inhomogeneous_constant) << "\n"
      << "supports disjoint: " << yes_no(r.disjoint) << "\n";
  return r.inhomogeneous_constant && r.disjoint ? kExitOk : kExitInconsistent;
}

// ------------------------------------------------------------------ report

int run_report(const CommandOptions& opts, std::ostream& log) {
  const Loaded l = load(opts);
  const auto& s = l.s;
  const auto& c = *s.cocycle;
  const auto omegas = scenario_omegas(s, opts.omegas.value_or(s.analysis.omega_samples));
  std::vector<Check> checks;
  const auto check = [&](std::string name, bool pass, std::string detail) {
    checks.push_back({std::move(name), pass ? "pass" : "fail", std::move(detail)});
  };
  const auto skip = [&](std::string name, std::string why) { checks.push_back({std::move(name), "skipped", std::move(why)}); };

  // Mixing.
  std::map<Notion, MixingReport> mixing;
  for (Notion n : selected_notions("all")) mixing.emplace(n, mix(s, n, omegas, l.horizon, l.tol, opts.workers));
  const bool prior_hom = mixing.at(Notion::prior_hom).decayed;
  const bool post_hom = mixing.at(Notion::post_hom).decayed;
  const bool prior_inhom = mixing.at(Notion::prior_inhom).decayed;
  const bool post_inhom = mixing.at(Notion::post_inhom).decayed;
  {
    std::ostringstream d;
    d << "prior-hom " << yes_no(prior_hom) << ", post-hom " << yes_no(post_hom) << ", prior-inhom "
      << yes_no(prior_inhom) << ", post-inhom " << yes_no(post_inhom);
    check("mixing notions agree", prior_hom == post_hom && post_hom == prior_inhom && prior_inhom == post_inhom, d.str());
    check("post-hom implies post-inhom", !post_hom || post_inhom, "post-hom " + std::string(yes_no(post_hom)) + " => post-inhom " + yes_no(post_inhom));
  }

  // Exactness.
  ExactnessOptions eo;
  eo.horizon = l.horizon;
  eo.tol = s.analysis.exact_tol;
  eo.workers = opts.workers;
  const ExactnessReport ex = assess_exactness(c, omegas, difference_block(s.space), eo);
  check("norm and dual ball agree", ex.norm_exact == ex.lin_exact,
        std::string("norm ") + yes_no(ex.norm_exact) + ", dual ball " + yes_no(ex.lin_exact));
  if (ex.tail_exact) {
    check("tail and dual ball agree", *ex.tail_exact == ex.lin_exact,
          std::string("tail partition ") + yes_no(*ex.tail_exact) + ", dual ball " + yes_no(ex.lin_exact));
  } else {
    skip("tail and dual ball agree", "operators are not cell maps");
  }
  check("sign witness", ex.witness_gap <= 1e-10, "gap " + format_double(ex.witness_gap));

  // Asymptotic periodicity.
  const PeriodicityResult ap = detect_periodicity(c, omegas, periodicity_options(s, l.horizon, opts.r_max));
  std::string ap_text = to_string(ap.status);
  if (ap.decomposition) {
    const auto& d = *ap.decomposition;
    ap_text = "r=" + std::to_string(d.r) + ", rho=" + cycle_notation(d.fibers.front().rho);
    const bool stable = stability_check(d);
    std::ostringstream detail;
    detail << "exact " << yes_no(ex.norm_exact) << ", prior-inhom " << yes_no(prior_inhom) << ", post-inhom "
           << yes_no(post_inhom) << ", r=1 " << yes_no(stable);
    check("periodicity matches exactness", ex.norm_exact == prior_inhom && prior_inhom == post_inhom && post_inhom == stable,
          detail.str());
    if (s.driving->is_finite()) {
      check("prior-hom matches r=1", prior_hom == stable,
            std::string("prior-hom ") + yes_no(prior_hom) + ", r=1 " + yes_no(stable));
    } else {
      skip("prior-hom matches r=1", "needs finite driving");
    }
    check("decomposition invariants", d.chain_consistent && d.lambda_sum_defect <= 1e-9 && d.equivariance_defect <= 1e-9,
          "chain " + std::string(yes_no(d.chain_consistent)) + ", lambda defect " + format_double(d.lambda_sum_defect) +
              ", equivariance defect " + format_double(d.equivariance_defect));

    if (d.rho_constant && d.supports_constant) {
      const int k = permutation_order(d.fibers.front().rho);
      bool all_exact = true;
      std::ostringstream detail46;
      detail46 << "k=" << k;
      for (std::size_t i = 0; i < d.fibers.front().supports.size(); ++i) {
        const auto& support = d.fibers.front().supports[i];
        if (support.size() == 1) continue;
        const RestrictedCocycle rc = restrict_power(c, k, support);
        ExactnessOptions ro = eo;
        ro.tail_when_available = false;
        const auto rr = assess_exactness(*rc.cocycle, omegas, difference_block(rc.cocycle->space()), ro);
        all_exact = all_exact && rr.norm_exact && rr.lin_exact;
        detail46 << ", component " << i + 1 << " exact " << yes_no(rr.norm_exact && rr.lin_exact);
      }
      check("restricted powers exact", all_exact, detail46.str());
    } else {
      skip("restricted powers exact", "rho or supports vary with omega");
    }

    // k = 1 only: exactness plus a positive invariant density.
    const Density h = invariant_density_from_decomposition(c, d, 0);
    if (ex.norm_exact && h.values().minCoeff() > 0.0) {
      QcOptions qo;
      qo.eps = s.analysis.eps;
      qo.horizon = l.horizon;
      qo.workers = opts.workers;
      const QcReport qc = quasi_constrictive_probe(c, omegas, qo);
      const bool resolved = std::any_of(qc.rows.begin(), qc.rows.end(), [](const QcRow& r) { return r.resolved; });
      if (resolved) {
        check("exact implies quasi-constrictive", qc.quasi_constrictive, std::string("quasi-constrictive ") + yes_no(qc.quasi_constrictive));
      } else {
        skip("exact implies quasi-constrictive", "no eps resolved by the candidate sets");
      }
    } else {
      skip("exact implies quasi-constrictive", "hypotheses unmet (needs exactness and a positive invariant density)");
    }
  } else {
    skip("periodicity matches exactness", "no decomposition: " + ap.diagnostics);
    skip("prior-hom matches r=1", "no decomposition");
    skip("restricted powers exact", "no decomposition");
    skip("exact implies quasi-constrictive", "no decomposition");
  }

  // Skew product.
  if (!s.set_pairs.empty()) {
    PullbackOptions po;
    po.max_horizon = s.analysis.pullback_max;
    po.tolerance = s.analysis.pullback_tol;
    const auto h = InvariantDensityMap::build(s.cocycle, omegas, po);
    SkewOptions so;
    so.horizon = l.horizon;
    so.tol = s.analysis.skew_tol;
    so.mc_samples = s.analysis.mc_samples;
    so.seed = s.analysis.seed;
    so.workers = opts.workers;
    for (const auto& p : s.set_pairs) {
      const SkewCurve curve = skew_mixing_curve(c, h, p.a, p.b, so);
      if (curve.exact) {
        check("koopman route " + p.id, curve.route_gap <= 1e-9, "route gap " + format_double(curve.route_gap));
        check("invariance " + p.id, theta_invariance_defect(c, h, p.a, so) <= 1e-9, "nu(Theta^-1 A) = nu(A)");
      }
      if (!curve.joint_product_formula.empty()) {
        check("product formula " + p.id, curve.formula_gap <= 1e-12, "formula gap " + format_double(curve.formula_gap));
      }
      if (!curve.driving_mixing) {
        skip("skew mixing " + p.id, curve.flag);
      } else if (!prior_hom) {
        skip("skew mixing " + p.id, "cocycle not mixing");
      } else {
        check("skew mixing " + p.id, curve.decayed, "tail max " + format_double(curve.tail_max));
      }
    }
  }

  log << "scenario: " << s.name << "\n"
      << "exact: " << yes_no(ex.norm_exact) << "\n"
      << "mixing: prior-hom " << yes_no(prior_hom) << ", post-hom " << yes_no(post_hom) << ", prior-inhom "
      << yes_no(prior_inhom) << ", post-inhom " << yes_no(post_inhom) << "\n"
      << "asymptotic periodicity: " << ap_text << "\n";

  auto out = open_out(opts, s.output_dir, "report");
  CsvWriter csv(out, {"check", "status", "detail"});
  csv.row({"verdict exact", ex.norm_exact ? "exact" : "not exact", ""});
  csv.row({"verdict mixing", prior_hom ? "mixing" : "not mixing", ""});
  csv.row({"verdict periodicity", ap_text, ""});
  bool ok = true;
  for (const auto& ch : checks) {
    csv.row({ch.name, ch.status, ch.detail});
    log << "[" << ch.status << "] " << ch.name << ": " << ch.detail << "\n";
    ok = ok && ch.status != "fail";
  }
  log << (ok ? "all consistency checks pass\n" : "consistency violation\n");
  return ok ? kExitOk : kExitInconsistent;
}

int run_command(const std::string& command, const CommandOptions& opts, std::ostream& log) {
  if (command == "run-mixing") return run_mixing(opts, log);
  if (command == "run-exactness") return run_exactness(opts, log);
  if (command == "run-asymp") return run_asymp(opts, log);
  if (command == "run-qc") return run_qc(opts, log);
  if (command == "run-skew") return run_skew(opts, log);
  if (command == "run-counterexample") return run_counterexample(opts, log);
  if (command == "report") return run_report(opts, log);
  throw PreconditionError("unknown command '" + command + "'");
}

}  // namespace cocyclelab
