#include "fpdecay/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fpdecay/entropy.hpp"
#include "fpdecay/hyper.hpp"
#include "fpdecay/system.hpp"

namespace fpdecay {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Validate: return "validate";
    case ScenarioKind::Decay: return "decay";
    case ScenarioKind::Subspace: return "subspace";
    case ScenarioKind::Hyper: return "hyper";
    case ScenarioKind::Fisher: return "fisher";
  }
  return "unknown";
}

ScenarioKind parse_kind(const std::string& s) {
  for (auto k : {ScenarioKind::Validate, ScenarioKind::Decay, ScenarioKind::Subspace,
                 ScenarioKind::Hyper, ScenarioKind::Fisher}) {
    if (s == to_string(k)) return k;
  }
  throw ConfigError("kind", "unknown scenario kind '" + s + "'");
}

// ---------------------------------------------------------------------------
// Config parsing

namespace {

const json& field(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ConfigError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError(path.empty() ? key : path + "." + key, "missing field");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(path, "expected a finite number");
  return v;
}

long long integer(const json& j, const std::string& path) {
  if (!j.is_number_integer() && !j.is_number_unsigned()) throw ConfigError(path, "expected an integer");
  return j.get<long long>();
}

Vector vector_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

Matrix matrix_of(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw ConfigError(path, "expected a non-empty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  Matrix m;
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rp = path + "[" + std::to_string(r) + "]";
    const Vector row = vector_of(j[r], rp);
    if (r == 0) {
      cols = static_cast<std::size_t>(row.size());
      m.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    } else if (static_cast<std::size_t>(row.size()) != cols) {
      throw ConfigError(rp, "row length differs from the first row");
    }
    m.row(static_cast<Eigen::Index>(r)) = row.transpose();
  }
  return m;
}

}  // namespace

ScenarioConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("<root>", "expected an object");

  ScenarioConfig cfg;
  if (root.contains("kind")) {
    if (!root["kind"].is_string()) throw ConfigError("kind", "expected a string");
    cfg.kind = parse_kind(root["kind"].get<std::string>());
  }

  const json& sys = field(root, "system", "");
  cfg.d = matrix_of(field(sys, "D", "system"), "system.D");
  cfg.c = matrix_of(field(sys, "C", "system"), "system.C");
  if (cfg.d.rows() != cfg.d.cols()) throw ConfigError("system.D", "matrix must be square");
  if (cfg.c.rows() != cfg.c.cols()) throw ConfigError("system.C", "matrix must be square");
  if (cfg.c.rows() != cfg.d.rows()) throw ConfigError("system.C", "dimension differs from system.D");
  const auto dim = cfg.d.rows();

  if (root.contains("initial")) {
    const json& init = root["initial"];
    if (!init.is_object()) throw ConfigError("initial", "expected an object");
    if (init.contains("components")) {
      const json& comps = init["components"];
      if (!comps.is_array() || comps.empty()) {
        throw ConfigError("initial.components", "expected a non-empty array");
      }
      std::vector<GaussianComponent> out;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string cp = "initial.components[" + std::to_string(i) + "]";
        GaussianComponent gc;
        gc.weight = comps[i].contains("weight") ? number(comps[i]["weight"], cp + ".weight") : 1.0;
        gc.mean = vector_of(field(comps[i], "mean", cp), cp + ".mean");
        gc.cov = matrix_of(field(comps[i], "cov", cp), cp + ".cov");
        if (gc.mean.size() != dim) throw ConfigError(cp + ".mean", "dimension differs from system");
        if (gc.cov.rows() != dim || gc.cov.cols() != dim) {
          throw ConfigError(cp + ".cov", "dimension differs from system");
        }
        if (!(gc.weight > 0.0)) throw ConfigError(cp + ".weight", "must be positive");
        Eigen::LLT<Matrix> llt(0.5 * (gc.cov + gc.cov.transpose()));
        if (llt.info() != Eigen::Success || (gc.cov - gc.cov.transpose()).norm() > 1e-12 * gc.cov.norm()) {
          throw ConfigError(cp + ".cov", "must be symmetric positive definite");
        }
        out.push_back(std::move(gc));
      }
      cfg.mixture = GaussianMixture(std::move(out));
    }
    if (init.contains("hermite")) {
      const json& h = init["hermite"];
      if (!h.is_array()) throw ConfigError("initial.hermite", "expected an array");
      for (std::size_t i = 0; i < h.size(); ++i) {
        const std::string hp = "initial.hermite[" + std::to_string(i) + "]";
        const json& a = field(h[i], "alpha", hp);
        if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != dim) {
          throw ConfigError(hp + ".alpha", "expected " + std::to_string(dim) + " non-negative integers");
        }
        HermiteEntry e;
        for (std::size_t k = 0; k < a.size(); ++k) {
          const long long v = integer(a[k], hp + ".alpha[" + std::to_string(k) + "]");
          if (v < 0) throw ConfigError(hp + ".alpha[" + std::to_string(k) + "]", "must be >= 0");
          e.alpha.alpha.push_back(static_cast<int>(v));
        }
        if (e.alpha.order() == 0) throw ConfigError(hp + ".alpha", "use initial.mass for level 0");
        e.value = number(field(h[i], "value", hp), hp + ".value");
        cfg.hermite.push_back(std::move(e));
      }
    }
    if (init.contains("mass")) cfg.hermite_mass = number(init["mass"], "initial.mass");
    if (cfg.mixture && !cfg.hermite.empty()) {
      throw ConfigError("initial", "give either components or hermite coefficients, not both");
    }
  }

  if (root.contains("run")) {
    const json& run = root["run"];
    if (!run.is_object()) throw ConfigError("run", "expected an object");
    if (run.contains("t_max")) cfg.t_max = number(run["t_max"], "run.t_max");
    if (run.contains("t_steps")) cfg.t_steps = static_cast<int>(integer(run["t_steps"], "run.t_steps"));
    if (run.contains("p")) cfg.p = number(run["p"], "run.p");
    if (run.contains("fit_window")) {
      const Vector w = vector_of(run["fit_window"], "run.fit_window");
      if (w.size() != 2 || !(w(0) < w(1))) {
        throw ConfigError("run.fit_window", "expected [lo, hi] with lo < hi");
      }
      cfg.fit_window = std::make_pair(w(0), w(1));
    }
    if (run.contains("rate_tol")) cfg.rate_tol = number(run["rate_tol"], "run.rate_tol");
    if (run.contains("poly_tol")) cfg.poly_tol = number(run["poly_tol"], "run.poly_tol");
  }
  if (!(cfg.t_max > 0.0)) throw ConfigError("run.t_max", "must be positive");
  if (cfg.t_steps < 2) throw ConfigError("run.t_steps", "must be at least 2");
  if (!(cfg.p > 1.0 && cfg.p <= 2.0)) throw ConfigError("run.p", "must lie in (1, 2]");

  if (root.contains("seed")) {
    const json& s = root["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      throw ConfigError("seed", "expected a non-negative integer");
    }
    cfg.seed = s.get<std::uint64_t>();
  }

  cfg.quad = QuadratureSpec::defaults(static_cast<int>(dim));
  if (root.contains("quad")) {
    const json& q = root["quad"];
    if (!q.is_object()) throw ConfigError("quad", "expected an object");
    cfg.quad_given = true;
    if (q.contains("rule")) {
      if (!q["rule"].is_string()) throw ConfigError("quad.rule", "expected a string");
      const std::string r = q["rule"].get<std::string>();
      if (r == "gauss-hermite") {
        cfg.quad.rule = QuadratureSpec::Rule::GaussHermite;
      } else if (r == "monte-carlo") {
        cfg.quad.rule = QuadratureSpec::Rule::MonteCarlo;
      } else {
        throw ConfigError("quad.rule", "expected 'gauss-hermite' or 'monte-carlo'");
      }
    }
    if (q.contains("order")) {
      const long long o = integer(q["order"], "quad.order");
      if (o < 2 || o > 400) throw ConfigError("quad.order", "must lie in [2, 400]");
      cfg.quad.order = static_cast<int>(o);
    }
    if (q.contains("samples")) {
      const long long s = integer(q["samples"], "quad.samples");
      if (s < 1) throw ConfigError("quad.samples", "must be positive");
      cfg.quad.samples = static_cast<std::size_t>(s);
    }
  }
  cfg.quad.seed = cfg.seed;

  if (root.contains("fisher")) {
    const json& f = root["fisher"];
    if (!f.is_object()) throw ConfigError("fisher", "expected an object");
    if (f.contains("P")) {
      if (f["P"].is_string()) {
        const std::string s = f["P"].get<std::string>();
        if (s != "D" && s != "I") throw ConfigError("fisher.P", "expected \"D\", \"I\" or a matrix");
        cfg.fisher_p = s;
      } else {
        Matrix p = matrix_of(f["P"], "fisher.P");
        if (p.rows() != dim || p.cols() != dim) throw ConfigError("fisher.P", "dimension differs from system");
        if (!psd_check(p).is_symmetric_psd) throw ConfigError("fisher.P", "must be symmetric PSD");
        cfg.fisher_p = p;
      }
    }
  }

  if (root.contains("sde")) {
    const json& s = root["sde"];
    if (!s.is_object()) throw ConfigError("sde", "expected an object");
    SdeConfig sc;
    if (s.contains("paths")) {
      const long long n = integer(s["paths"], "sde.paths");
      if (n < 10000) throw ConfigError("sde.paths", "must be at least 10000");
      sc.paths = static_cast<std::size_t>(n);
    }
    if (s.contains("dt")) sc.dt = number(s["dt"], "sde.dt");
    if (!(sc.dt > 0.0)) throw ConfigError("sde.dt", "must be positive");
    const Vector times = vector_of(field(s, "times", "sde"), "sde.times");
    for (Eigen::Index i = 0; i < times.size(); ++i) {
      if (times(i) < 0.0) throw ConfigError("sde.times", "times must be non-negative");
      sc.times.push_back(times(i));
    }
    cfg.sde = sc;
  }
  return cfg;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("<file>", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// ---------------------------------------------------------------------------
// Running

namespace {

ojson num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

ojson mat(const Matrix& m) {
  ojson rows = ojson::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    ojson r = ojson::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(num(m(i, j)));
    rows.push_back(r);
  }
  return rows;
}

ojson vec(const Vector& v) {
  ojson r = ojson::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) r.push_back(num(v(i)));
  return r;
}

ojson cplx(const Complex& z) { return ojson::array({num(z.real()), num(z.imag())}); }

ojson condition_json(const ConditionReport& cr) {
  ojson j;
  j["dim"] = cr.dim;
  j["condition_a"] = cr.condition_a;
  j["diffusion_rank"] = cr.diffusion_rank;
  j["condition_b"] = cr.condition_b;
  ojson spec = ojson::array();
  for (const auto& z : cr.spectrum) spec.push_back(cplx(z));
  j["spectrum"] = spec;
  j["mu"] = num(cr.mu);
  j["n"] = cr.defect;
  j["condition_c"] = cr.condition_c;
  j["kappa"] = cr.kappa ? ojson(*cr.kappa) : ojson(nullptr);
  j["kalman_ranks"] = cr.kalman_ranks;
  j["overall"] = cr.overall;
  return j;
}

ojson fit_json(const DecayFit& f) {
  ojson j;
  j["window"] = ojson::array({f.window_lo, f.window_hi});
  j["points"] = f.points;
  j["fitted_rate"] = num(f.rate.value);
  j["fitted_rate_ci95"] = num(f.rate.ci);
  j["fitted_rate_ols_ci95"] = num(f.rate.ols_ci);
  j["fitted_rate_window_spread"] = num(f.rate.window_spread);
  j["fitted_poly_order"] = num(f.poly_order.value);
  j["fitted_poly_order_ci95"] = num(f.poly_order.ci);
  j["fitted_poly_order_ols_ci95"] = num(f.poly_order.ols_ci);
  j["fitted_poly_order_window_spread"] = num(f.poly_order.window_spread);
  j["free_fit_poly_order"] = num(f.free_poly_order);
  return j;
}

std::vector<double> time_grid(const ScenarioConfig& cfg) {
  std::vector<double> g(cfg.t_steps);
  for (int i = 0; i < cfg.t_steps; ++i) g[i] = cfg.t_max * i / (cfg.t_steps - 1);
  return g;
}

double envelope_shape(double mu, int n, double t) { return decay_envelope(mu, n, 1.0, t); }

Matrix fisher_weight(const ScenarioConfig& cfg, const NormalizedSystem& ns) {
  if (const auto* m = std::get_if<Matrix>(&cfg.fisher_p)) return *m;
  const std::string& s = std::get<std::string>(cfg.fisher_p);
  if (s == "I") return Matrix::Identity(ns.dim(), ns.dim());
  return ns.diffusion();
}

HermiteState build_hermite(const ScenarioConfig& cfg, int dim) {
  int top = 0;
  for (const auto& e : cfg.hermite) top = std::max(top, e.alpha.order());
  HermiteState st(dim, top, cfg.hermite_mass);
  for (const auto& e : cfg.hermite) st.set_coefficient(e.alpha, e.value);
  return st;
}

// Fills e2, ep, fisher for each grid time.
template <class At, class E2, class Ep, class Fi>
std::vector<SeriesRow> build_series(const std::vector<double>& grid, At at, E2 e2, Ep ep, Fi fi) {
  std::vector<SeriesRow> rows;
  rows.reserve(grid.size());
  for (double t : grid) {
    const auto state = at(t);
    SeriesRow r;
    r.t = t;
    r.e2 = e2(state);
    r.ep = ep(state);
    r.fisher = fi(state);
    rows.push_back(r);
  }
  return rows;
}

bool non_increasing(const std::vector<SeriesRow>& rows, double SeriesRow::*col, double slack) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::isfinite(rows[i - 1].*col) && rows[i].*col > rows[i - 1].*col + slack) return false;
  }
  return true;
}

}  // namespace

std::string series_csv(const std::vector<SeriesRow>& rows) {
  std::string out = "t,e2,ep,fisher,envelope,ratio\n";
  char buf[64];
  for (const auto& r : rows) {
    const double vals[] = {r.t, r.e2, r.ep, r.fisher, r.envelope, r.ratio};
    for (int k = 0; k < 6; ++k) {
      std::snprintf(buf, sizeof buf, "%.17g", vals[k]);
      out += buf;
      out += k < 5 ? ',' : '\n';
    }
  }
  return out;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  ScenarioResult res;
  DecayReport& rep = res.report;
  rep.kind = cfg.kind;
  ojson doc;
  doc["kind"] = to_string(cfg.kind);
  doc["seed"] = cfg.seed;
  doc["constants"] = "empirical";
  doc["system"] = {{"dim", cfg.d.rows()}, {"D", mat(cfg.d)}, {"C", mat(cfg.c)}};

  const ConditionReport cr = validate(cfg.d, cfg.c);
  doc["validation"] = condition_json(cr);
  auto flag = [&](const std::string& name, bool v) { rep.flags.emplace_back(name, v); };
  auto finish = [&](int fail_code) {
    ojson fl;
    rep.pass = true;
    for (const auto& [k, v] : rep.flags) {
      fl[k] = v;
      rep.pass = rep.pass && v;
    }
    doc["flags"] = fl;
    doc["pass"] = rep.pass;
    rep.report_text = doc.dump(2) + "\n";
    res.csv = series_csv(rep.series);
    res.exit_code = rep.pass ? kExitPass : fail_code;
    return res;
  };

  if (cfg.kind == ScenarioKind::Validate || !cr.overall) {
    rep.mu = cr.mu;
    rep.n = cr.defect;
    flag("condition_a", cr.condition_a);
    flag("condition_b", cr.condition_b);
    flag("condition_c", cr.condition_c);
    return finish(cfg.kind == ScenarioKind::Validate ? kExitFail : kExitInvalidSystem);
  }

  const FPSystem sys = FPSystem::create(cfg.d, cfg.c);
  const NormalizedSystem ns = normalize(sys);
  const int dim = ns.dim();
  doc["normalized"] = {{"A", mat(ns.transform())}, {"D", mat(ns.diffusion())}, {"C", mat(ns.drift())}};
  const SpectralGap gap = mu_and_defect(ns.drift());
  rep.mu = gap.mu;
  rep.n = gap.n;
  doc["mu"] = num(gap.mu);
  doc["n"] = gap.n;

  const std::vector<double> grid = time_grid(cfg);
  const EntropyGenerator gen = EntropyGenerator::power(cfg.p);
  const Matrix pw = fisher_weight(cfg, ns);
  doc["p"] = cfg.p;
  doc["fisher_P"] = mat(pw);
  doc["quadrature"] = {{"rule", cfg.quad.rule == QuadratureSpec::Rule::GaussHermite ? "gauss-hermite" : "monte-carlo"},
                       {"order", cfg.quad.order},
                       {"samples", cfg.quad.samples}};

  std::optional<GaussianMixture> mix_n;
  if (cfg.mixture) mix_n = cfg.mixture->linear_map(ns.transform());

  // ---- hyper --------------------------------------------------------------
  if (cfg.kind == ScenarioKind::Hyper) {
    if (!mix_n) throw ConfigError("initial.components", "hyper scenarios need a Gaussian mixture");
    if (!(cfg.p < 2.0)) throw ConfigError("run.p", "hyper scenarios need p < 2");
    try {
      const HyperReport hr = verify_hypercontractivity(ns, *mix_n, cfg.p, grid, cfg.quad);
      for (const auto& row : hr.rows) {
        const GaussianMixture ft = evolve_mixture(ns, *mix_n, row.t);
        SeriesRow r;
        r.t = row.t;
        r.e2 = row.e2;
        r.ep = ep_quadrature(ft, gen, cfg.quad);
        r.fisher = fisher_info(ft, gen, pw, cfg.quad);
        r.envelope = hr.bound;
        r.ratio = row.e2 / hr.bound;
        rep.series.push_back(r);
        if (std::isfinite(r.ratio)) rep.c_fit = std::max(rep.c_fit, r.ratio);
      }
      ojson h;
      h["c"] = num(hr.params.c);
      h["c2"] = num(hr.params.c2);
      h["alpha"] = num(hr.params.alpha);
      h["weighted_mass"] = num(hr.weighted_mass);
      h["ep0"] = num(hr.ep0);
      h["e2_0"] = num(hr.e2_0);
      h["T0"] = num(hr.T0);
      h["bound"] = num(hr.bound);
      h["first_finite_e2"] = hr.first_finite_e2 ? ojson(*hr.first_finite_e2) : ojson(nullptr);
      h["checked_rows"] = hr.checked_rows;
      doc["hyper"] = h;
      flag("ep0_finite", std::isfinite(hr.ep0));
      flag("e2_becomes_finite", hr.first_finite_e2.has_value());
      flag("e2_monotone_once_finite", hr.e2_monotone_once_finite);
      flag("bound_holds_after_T0", hr.overall);
    } catch (const HyperPreconditionError& e) {
      doc["hyper"] = {{"error", e.what()}};
      flag("precondition", false);
    }
    doc["envelope"] = {{"shape", "entropic hypercontractivity bound"}, {"max_ratio", num(rep.c_fit)}};
    return finish(kExitFail);
  }

  // ---- decay / subspace / fisher -------------------------------------------
  double mu_env = gap.mu;
  int n_env = gap.n;
  int level = 1;
  if (cfg.kind == ScenarioKind::Subspace) {
    if (cfg.hermite.empty()) throw ConfigError("initial.hermite", "subspace scenarios need Hermite data");
    const HermiteState st = build_hermite(cfg, dim);
    level = st.lowest_active_level();
    if (level == 0) throw ConfigError("initial.hermite", "all coefficients are zero");
    const SubspaceDecay sd = subspace_decay_exponent(ns.drift(), level);
    mu_env = level * gap.mu;
    n_env = sd.n_k;
    doc["subspace"] = {{"level", level}, {"rate", num(sd.rate)}, {"n_k", sd.n_k}};
  }

  if (mix_n) {
    rep.series = build_series(
        grid, [&](double t) { return evolve_mixture(ns, *mix_n, t); },
        [&](const GaussianMixture& f) { return e2_mixture(f); },
        [&](const GaussianMixture& f) { return ep_quadrature(f, gen, cfg.quad); },
        [&](const GaussianMixture& f) { return fisher_info(f, gen, pw, cfg.quad); });
  } else if (!cfg.hermite.empty()) {
    const HermiteState st = build_hermite(cfg, dim);
    QuadratureSpec q = cfg.quad;
    if (!cfg.quad_given && q.rule == QuadratureSpec::Rule::GaussHermite) {
      q.order = std::max(q.order, st.max_level() + 2);
    }
    rep.series = build_series(
        grid, [&](double t) { return evolve_hermite(st, ns.drift(), t); },
        [&](const HermiteState& f) { return f.e2(); },
        [&](const HermiteState& f) { return ep_quadrature(f, gen, q); },
        [&](const HermiteState& f) { return fisher_info(f, gen, pw, q); });
  } else {
    throw ConfigError("initial", "no initial data (components or hermite) given");
  }

  bool ratio_finite = true;
  for (auto& r : rep.series) {
    r.envelope = envelope_shape(mu_env, n_env, r.t);
    r.ratio = r.e2 / r.envelope;
    ratio_finite = ratio_finite && std::isfinite(r.ratio);
    if (std::isfinite(r.ratio)) rep.c_fit = std::max(rep.c_fit, r.ratio);
  }
  doc["envelope"] = {{"shape", n_env == 0 ? "exp(-2 mu t)" : "(1 + t^(2n)) exp(-2 mu t)"},
                     {"mu", num(mu_env)},
                     {"n", n_env},
                     {"c_fit", num(rep.c_fit)}};
  flag("ratio_finite", ratio_finite);
  flag("e2_nonincreasing", non_increasing(rep.series, &SeriesRow::e2, 1e-8));
  flag("ep_nonincreasing", non_increasing(rep.series, &SeriesRow::ep, 1e-8));

  const bool fisher_kind = cfg.kind == ScenarioKind::Fisher;
  std::vector<double> ts, vs;
  double peak = 0.0;
  for (const auto& r : rep.series) {
    ts.push_back(r.t);
    vs.push_back(fisher_kind ? r.fisher : r.e2);
    if (std::isfinite(vs.back())) peak = std::max(peak, vs.back());
  }
  doc["fitted_series"] = fisher_kind ? "fisher" : "e2";
  if (peak <= 1e-20) {
    doc["fit"] = nullptr;
    flag("equilibrium_data", true);
  } else {
    try {
      rep.fit = fit_decay(ts, vs, mu_env, cfg.fit_window);
      doc["fit"] = fit_json(*rep.fit);
      const double expected_rate = 2.0 * mu_env;
      const double default_rate_tol =
          fisher_kind ? 0.2 : (cfg.kind == ScenarioKind::Subspace ? 0.1 * level : 0.1);
      const double rate_tol = cfg.rate_tol.value_or(default_rate_tol);
      const double poly_tol = cfg.poly_tol.value_or(0.3);
      flag("rate_consistent", std::abs(rep.fit->rate.value - expected_rate) <= rate_tol);
      if (cfg.kind == ScenarioKind::Decay) {
        flag("poly_order_consistent", std::abs(rep.fit->poly_order.value - 2.0 * n_env) <= poly_tol);
      } else {
        flag("poly_order_within_envelope", rep.fit->poly_order.value <= 2.0 * n_env + poly_tol);
      }
    } catch (const InsufficientDataError& e) {
      doc["fit"] = {{"error", e.what()}};
      flag("fit_available", false);
    }
  }

  if (cfg.sde && mix_n) {
    SdeOptions opt;
    opt.n_paths = cfg.sde->paths;
    opt.dt = cfg.sde->dt;
    opt.seed = cfg.seed;
    const auto moments = sde_oracle(ns.base(), *mix_n, cfg.sde->times, opt);
    double worst = 0.0;
    ojson arr = ojson::array();
    for (const auto& m : moments) {
      Vector mean;
      Matrix cov;
      mixture_moments(evolve_mixture(ns, *mix_n, m.t), mean, cov);
      const double zm = ((m.mean - mean).array().abs() / m.mean_stderr.array()).maxCoeff();
      const double zc = ((m.cov - cov).array().abs() / m.cov_stderr.array()).maxCoeff();
      worst = std::max({worst, zm, zc});
      arr.push_back({{"t", m.t}, {"mean", vec(m.mean)}, {"cov", mat(m.cov)},
                     {"exact_mean", vec(mean)}, {"exact_cov", mat(cov)},
                     {"max_z_mean", num(zm)}, {"max_z_cov", num(zc)}});
    }
    doc["sde"] = {{"paths", opt.n_paths}, {"dt", opt.dt}, {"moments", arr}};
    flag("sde_agreement", worst <= 4.0);
  }
  return finish(kExitFail);
}

std::pair<std::string, std::string> write_outputs(const ScenarioResult& result,
                                                  const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const std::string kind = to_string(result.report.kind);
  const fs::path csv = fs::path(dir) / (kind + ".csv");
  const fs::path report = fs::path(dir) / (kind + "_report.json");
  {
    std::ofstream out(csv, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + csv.string());
    out << result.csv;
  }
  {
    std::ofstream out(report, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + report.string());
    out << result.report.report_text;
  }
  return {csv.string(), report.string()};
}

}  // namespace fpdecay
