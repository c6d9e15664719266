#pragma once

// Command layer behind the finsler executable: config normalization, per-item reports, replay.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "finsler/distance.hpp"
#include "finsler/kahler.hpp"
#include "finsler/metric_checks.hpp"
#include "finsler/parallel.hpp"
#include "finsler/schwarz.hpp"

namespace finsler::app {

inline constexpr int kSchema = 1;
inline constexpr const char* kVersion = "1.0.0";

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> c{"check", "curvature", "geodesic", "distance", "bounds", "schwarz", "replay"};
  return c;
}

/// One report per metric (or per map pair for schwarz).
struct ItemReport {
  std::string id;
  Json result = Json::object();
  bool passed = true;
  std::vector<std::string> failures;
  std::map<std::string, std::string> tables;  ///< file name -> CSV text

  void fail(std::string why) {
    passed = false;
    failures.push_back(std::move(why));
  }
};

struct RunResult {
  std::string command;
  Json config;  ///< effective
  std::vector<ItemReport> items;
  bool passed() const {
    for (const auto& i : items)
      if (!i.passed) return false;
    return true;
  }
};

// ---------------------------------------------------------------------------------------------
// Config

namespace detail {

inline Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

/// Real coordinates, or one complex entry per complex dimension.
inline Vec read_point(const Json& j, const Metric& m, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array");
  const auto n = static_cast<int>(j.size());
  if (n == m.real_dim()) {
    bool real = true;
    for (const auto& c : j) real = real && c.is_number();
    if (real) {
      Vec x(n);
      for (int i = 0; i < n; ++i) x[i] = j[static_cast<std::size_t>(i)].get<double>();
      return x;
    }
  }
  if (m.is_complex() && n == m.complex_dim()) {
    CVec z(n);
    for (int i = 0; i < n; ++i) z[i] = finsler::detail::parse_complex(j[static_cast<std::size_t>(i)]);
    return to_real_vector(z);
  }
  throw ConfigError(what + " has " + std::to_string(n) + " entries, expected " + std::to_string(m.real_dim()) +
                    " real coordinates" + (m.is_complex() ? " or " + std::to_string(m.complex_dim()) + " complex" : ""));
}

inline void check_id(const std::string& id) {
  static const std::regex ok("[A-Za-z0-9_.-]+");
  if (!std::regex_match(id, ok) || id == "." || id == "..")
    throw ConfigError("id '" + id + "' must match [A-Za-z0-9_.-]+");
}

template <class T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

inline Json section(const Json& raw, const char* key) {
  if (!raw.contains(key) || raw[key].is_null()) return Json::object();
  if (!raw[key].is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return raw[key];
}

}  // namespace detail

/// Fills every default, validates, and returns the document that reports echo.
inline Json effective_config(const Json& raw) {
  using detail::get_or;
  if (!raw.is_object()) throw ConfigError("config must be a mapping");
  static const std::set<std::string> known{"schema", "seed", "tolerance", "plan", "metrics", "maps",
                                           "check", "curvature", "geodesic", "distance", "bounds", "schwarz"};
  for (const auto& [k, v] : raw.items())
    if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");
  if (raw.contains("schema") && raw["schema"] != kSchema) throw ConfigError("unsupported config schema");
  if (!raw.contains("seed") || !raw["seed"].is_number_integer() || raw["seed"].get<long long>() < 0)
    throw ConfigError("'seed' is mandatory and must be a non-negative integer");
  Json e;
  e["schema"] = kSchema;
  e["seed"] = raw["seed"].get<std::uint64_t>();
  e["tolerance"] = raw.contains("tolerance") ? raw["tolerance"] : Json(nullptr);
  if (!e["tolerance"].is_null() && !(e["tolerance"].is_number() && e["tolerance"].get<double>() >= 0.0))
    throw ConfigError("'tolerance' must be a non-negative number");

  Json plan = detail::section(raw, "plan");
  if (!plan.contains("seed")) plan["seed"] = e["seed"];
  e["plan"] = SamplePlan::from_json(plan).to_json();

  std::set<std::string> ids;
  e["metrics"] = Json::array();
  if (raw.contains("metrics")) {
    if (!raw["metrics"].is_array()) throw ConfigError("'metrics' must be a list");
    for (std::size_t k = 0; k < raw["metrics"].size(); ++k) {
      Json def = raw["metrics"][k];
      if (!def.is_object()) throw ConfigError("metric entries must be mappings");
      if (def.contains("metric")) {  // already in effective form
        Json inner = def["metric"];
        if (def.contains("id")) inner["id"] = def["id"];
        if (def.contains("expect")) inner["expect"] = def["expect"];
        def = inner;
      }
      const std::string id = get_or<std::string>(def, "id", def.value("family", "metric") + "_" + std::to_string(k));
      detail::check_id(id);
      if (!ids.insert(id).second) throw ConfigError("duplicate metric id '" + id + "'");
      Json expect = def.contains("expect") ? def["expect"] : Json::object();
      if (!expect.is_object()) throw ConfigError("'expect' must be a mapping");
      def.erase("id");
      def.erase("expect");
      instantiate(def);  // validates
      e["metrics"].push_back({{"id", id}, {"metric", def}, {"expect", expect}});
    }
  }
  std::set<std::string> map_ids;
  e["maps"] = Json::array();
  if (raw.contains("maps")) {
    if (!raw["maps"].is_array()) throw ConfigError("'maps' must be a list");
    for (std::size_t k = 0; k < raw["maps"].size(); ++k) {
      Json def = raw["maps"][k];
      if (!def.is_object()) throw ConfigError("map entries must be mappings");
      const std::string id = get_or<std::string>(def, "id", def.value("type", "map") + "_" + std::to_string(k));
      detail::check_id(id);
      if (!map_ids.insert(id).second) throw ConfigError("duplicate map id '" + id + "'");
      def["id"] = id;
      HolomorphicMap::from_json(def);
      e["maps"].push_back(def);
    }
  }

  const Json c = detail::section(raw, "check");
  e["check"] = {{"metric_tolerance", get_or(c, "metric_tolerance", 1e-10)},
                {"kahler_tolerance", get_or(c, "kahler_tolerance", 1e-7)},
                {"pde_tolerance", get_or(c, "pde_tolerance", 1e-8)},
                {"pde_grid", {{"nt", 20}, {"ns", 20}}}};
  if (c.contains("pde_grid")) {
    e["check"]["pde_grid"]["nt"] = get_or(c["pde_grid"], "nt", 20);
    e["check"]["pde_grid"]["ns"] = get_or(c["pde_grid"], "ns", 20);
  }

  const Json k = detail::section(raw, "curvature");
  e["curvature"] = {{"tolerance", get_or(k, "tolerance", 1e-5)}};

  const Json g = detail::section(raw, "geodesic");
  e["geodesic"] = {{"length", get_or(g, "length", 1.0)},
                   {"steps", get_or(g, "steps", 32)},
                   {"drift_tolerance", get_or(g, "drift_tolerance", 1e-9)},
                   {"starts", g.contains("starts") ? g["starts"] : Json(nullptr)}};
  if (!(e["geodesic"]["length"].get<double>() > 0.0) || e["geodesic"]["steps"].get<int>() < 1)
    throw ConfigError("geodesic needs length > 0 and steps >= 1");

  const Json d = detail::section(raw, "distance");
  e["distance"] = {{"pole", d.contains("pole") ? d["pole"] : Json(nullptr)},
                   {"points", d.contains("points") ? d["points"] : Json(nullptr)},
                   {"hessian", get_or(d, "hessian", true)},
                   {"levi", get_or(d, "levi", false)},
                   {"tolerance", get_or(d, "tolerance", 1e-8)},
                   {"hessian_tolerance", get_or(d, "hessian_tolerance", 1e-4)}};

  const Json b = detail::section(raw, "bounds");
  e["bounds"] = {{"pole", b.contains("pole") ? b["pole"] : Json(nullptr)},
                 {"rho_max", get_or(b, "rho_max", 1.0)},
                 {"directions", get_or(b, "directions", 12)},
                 {"radii", get_or(b, "radii", 6)},
                 {"flags", get_or(b, "flags", 4)},
                 {"samples", get_or(b, "samples", 4)},
                 {"tolerance", get_or(b, "tolerance", 1e-3)}};
  if (!(e["bounds"]["rho_max"].get<double>() > 0.0)) throw ConfigError("bounds.rho_max must be positive");

  const Json s = detail::section(raw, "schwarz");
  e["schwarz"] = {{"fan", get_or(s, "fan", 17)},
                  {"tolerance", get_or(s, "tolerance", 1e-6)},
                  {"check_kahler", get_or(s, "check_kahler", true)},
                  {"pairs", Json::array()}};
  if (e["schwarz"]["fan"].get<int>() < 1) throw ConfigError("schwarz.fan must be positive");
  if (s.contains("pairs")) {
    if (!s["pairs"].is_array()) throw ConfigError("schwarz.pairs must be a list");
    std::set<std::string> pair_ids;
    for (const auto& p : s["pairs"]) {
      if (!p.is_object()) throw ConfigError("schwarz pairs must be mappings");
      for (const char* key : {"map", "domain", "target"})
        if (!p.contains(key) || !p[key].is_string()) throw ConfigError(std::string("schwarz pair needs '") + key + "' id");
      const std::string map = p["map"], dom = p["domain"], tgt = p["target"];
      if (!map_ids.count(map)) throw ConfigError("schwarz pair refers to unknown map '" + map + "'");
      if (!ids.count(dom) || !ids.count(tgt)) throw ConfigError("schwarz pair refers to an unknown metric id");
      const std::string id = get_or<std::string>(p, "id", map);
      detail::check_id(id);
      if (!pair_ids.insert(id).second) throw ConfigError("duplicate schwarz pair id '" + id + "'; set 'id'");
      const std::string expect = get_or<std::string>(p, "expect", "PASS");
      if (expect != "PASS" && expect != "FAIL") throw ConfigError("schwarz expect must be PASS or FAIL");
      e["schwarz"]["pairs"].push_back({{"id", id}, {"map", map}, {"domain", dom}, {"target", tgt}, {"expect", expect}});
    }
  }
  return e;
}

// ---------------------------------------------------------------------------------------------
// Commands

namespace detail {

inline const Json& find_by_id(const Json& list, const std::string& id, const char* key = "id") {
  for (const auto& x : list)
    if (x.at(key) == id) return x;
  throw ConfigError("no entry with id '" + id + "'");
}

inline double tol(const Json& cfg, const Json& fallback) {
  return cfg["tolerance"].is_null() ? fallback.get<double>() : cfg["tolerance"].get<double>();
}

inline std::string csv_header(const std::string& first, const char* prefix, int n) {
  std::string s = first;
  for (int i = 0; i < n; ++i) s += std::string(",") + prefix + std::to_string(i);
  return s;
}

inline void csv_vec(std::ostringstream& os, const Vec& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ',' << v[i];
}

inline std::vector<Vec> sample_unit_directions(const Metric& m, const Vec& x, const SamplePlan& plan) {
  std::vector<Vec> out;
  for (const Vec& d : sample_directions(m, plan)) out.push_back(d / std::sqrt(m.value(x, d)));
  return out;
}

/// "strongly_kahler", "Strongly Kähler" and "strongly kahler" name the same class.
inline std::string class_key(std::string s) {
  for (std::size_t i; (i = s.find("ä")) != std::string::npos;) s.replace(i, std::string("ä").size(), "a");
  for (char& c : s) c = c == '_' ? ' ' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

inline int class_rank(const Json& name) {
  if (!name.is_string()) throw ConfigError("Kähler class must be a string");
  for (KahlerClass k : {KahlerClass::none, KahlerClass::weakly_kahler, KahlerClass::kahler, KahlerClass::strongly_kahler})
    if (class_key(to_string(k)) == class_key(name)) return static_cast<int>(k);
  throw ConfigError("unknown Kähler class '" + name.get<std::string>() + "'");
}

inline ItemReport run_check(const Json& cfg, const Json& entry) {
  ItemReport r;
  r.id = entry["id"];
  const MetricPtr m = instantiate(entry["metric"]);
  const SamplePlan plan = SamplePlan::from_json(cfg["plan"]);
  const Json& c = cfg["check"];
  const VerificationReport v = check_metric(*m, plan, tol(cfg, c["metric_tolerance"]));
  r.result["metric_check"] = v.to_json();
  r.result["metric_check"].erase("samples");
  {
    std::ostringstream os;
    os.precision(17);
    os << "point,direction,G,homogeneity_residual,min_real_eigenvalue,min_levi_eigenvalue,error\n";
    for (const auto& s : v.samples)
      os << s["point"] << ',' << s["direction"] << ',' << s.value("G", 0.0) << ','
         << s.value("homogeneity_residual", 0.0) << ',' << s.value("min_real_eigenvalue", 0.0) << ','
         << s.value("min_levi_eigenvalue", 0.0) << ',' << s.value("error", "") << '\n';
    r.tables["metric_samples.csv"] = os.str();
  }
  Json facts = {{"valid", v.passed}, {"kind", to_string(m->kind())}};
  if (m->is_complex()) {
    facts["pseudoconvex"] = v.summary.contains("min_levi_eigenvalue") && v.summary["min_levi_eigenvalue"].get<double>() > 0.0;
    facts["strongly_convex"] = v.summary.value("strongly_convex", false);
    const KahlerReport k = classify(*m, plan, c["kahler_tolerance"].get<double>());
    r.result["kahler"] = k.report.to_json();
    r.result["kahler"].erase("samples");
    facts["class"] = to_string(k.classification);
    std::ostringstream os;
    os.precision(17);
    os << "point,direction,strong,kahler,weak,gamma_max\n";
    for (const auto& s : k.report.samples)
      os << s["point"] << ',' << s["direction"] << ',' << s["strong"].get<double>() << ',' << s["kahler"].get<double>()
         << ',' << s["weak"].get<double>() << ',' << s["gamma_max"].get<double>() << '\n';
    r.tables["kahler_samples.csv"] = os.str();
    if (const auto* u = dynamic_cast<const UnitaryMetric*>(m.get())) {
      ProfileGrid grid;
      grid.nt = c["pde_grid"]["nt"];
      grid.ns = c["pde_grid"]["ns"];
      const VerificationReport p = weakly_kahler_pde_residual(u->profile(), grid, c["pde_tolerance"].get<double>());
      r.result["weakly_kahler_pde"] = p.to_json();
      facts["weakly_kahler_pde"] = p.passed;
      facts["kahler_profile"] = is_kahler_profile(u->profile());
    }
  }
  r.result["facts"] = facts;
  // Expectations: each declared key must equal the computed fact; "at_least" compares classes.
  const Json& expect = entry["expect"];
  Json outcome = Json::object();
  for (const auto& [key, want] : expect.items()) {
    bool ok = false;
    if (key == "at_least") {
      if (!facts.contains("class")) throw ConfigError("expect.at_least needs a complex metric");
      ok = class_rank(facts["class"]) >= class_rank(want.get<std::string>());
    } else if (key == "class") {
      if (!facts.contains("class")) throw ConfigError("expect.class needs a complex metric");
      ok = class_rank(facts["class"]) == class_rank(want.get<std::string>());
    } else {
      if (!facts.contains(key)) throw ConfigError("expectation '" + key + "' is not computed for this metric");
      ok = facts[key] == want;
    }
    outcome[key] = {{"expected", want}, {"actual", key == "at_least" ? facts["class"] : facts[key]}, {"met", ok}};
    if (!ok) r.fail("expectation '" + key + "' not met");
  }
  r.result["expectations"] = outcome;
  return r;
}

inline ItemReport run_curvature(const Json& cfg, const Json& entry) {
  ItemReport r;
  r.id = entry["id"];
  const MetricPtr m = instantiate(entry["metric"]);
  const SamplePlan plan = SamplePlan::from_json(cfg["plan"]);
  const double tolerance = tol(cfg, cfg["curvature"]["tolerance"]);
  const auto points = sample_points(*m, plan);
  const auto dirs = sample_directions(*m, plan);
  const std::size_t nd = dirs.size(), N = points.size() * nd;
  const int dim = m->real_dim();
  std::vector<double> KG(N, 0.0), flag(N, 0.0);
  std::vector<std::string> errors(N);
  parallel_for(N, [&](std::size_t i) {
    const Vec& x = points[i / nd];
    const Vec& u = dirs[i % nd];
    try {
      if (m->is_complex()) {
        KG[i] = holomorphic_sectional_curvature(*m, to_complex_vector(x), to_complex_vector(u));
        flag[i] = flag_curvature(*m, x, u, apply_j(u));
      } else {
        flag[i] = flag_curvature(*m, x, u, dirs[(i + 1) % nd]);
      }
    } catch (const Error& e) {
      errors[i] = e.what();
    }
  });
  const GroundTruth truth = m->truths();
  std::ostringstream os;
  os.precision(17);
  os << detail::csv_header("point,direction", "x", dim) << (m->is_complex() ? ",K_G" : "") << ",flag,error\n";
  double kmin = INFINITY, kmax = -INFINITY, fmin = INFINITY, fmax = -INFINITY, dev = 0.0, fdev = 0.0;
  int nerr = 0;
  for (std::size_t i = 0; i < N; ++i) {
    os << i / nd << ',' << i % nd;
    csv_vec(os, points[i / nd]);
    if (m->is_complex()) os << ',' << KG[i];
    os << ',' << flag[i] << ',' << errors[i] << '\n';
    if (!errors[i].empty()) {
      ++nerr;
      continue;
    }
    kmin = std::min(kmin, KG[i]);
    kmax = std::max(kmax, KG[i]);
    fmin = std::min(fmin, flag[i]);
    fmax = std::max(fmax, flag[i]);
    if (truth.holomorphic_curvature) dev = std::max(dev, std::abs(KG[i] - *truth.holomorphic_curvature));
    if (truth.flag_curvature) fdev = std::max(fdev, std::abs(flag[i] - *truth.flag_curvature));
  }
  r.tables["curvature.csv"] = os.str();
  r.result = {{"samples", N}, {"errors", nerr}, {"flag_min", fmin}, {"flag_max", fmax}, {"tolerance", tolerance}};
  if (m->is_complex()) {
    r.result["K_G_min"] = kmin;
    r.result["K_G_max"] = kmax;
  }
  if (truth.holomorphic_curvature) {
    r.result["K_G_expected"] = *truth.holomorphic_curvature;
    r.result["K_G_max_deviation"] = dev;
    if (!(dev <= tolerance)) r.fail("holomorphic sectional curvature deviates from the closed form");
  }
  if (truth.flag_curvature) {
    r.result["flag_expected"] = *truth.flag_curvature;
    r.result["flag_max_deviation"] = fdev;
    if (!(fdev <= tolerance)) r.fail("flag curvature deviates from the closed form");
  }
  if (nerr > 0) r.fail(std::to_string(nerr) + " samples raised errors");
  return r;
}

inline ItemReport run_geodesic(const Json& cfg, const Json& entry) {
  ItemReport r;
  r.id = entry["id"];
  const MetricPtr m = instantiate(entry["metric"]);
  const Json& g = cfg["geodesic"];
  const double length = g["length"], drift_tol = tol(cfg, g["drift_tolerance"]);
  const int steps = g["steps"];
  std::vector<std::pair<Vec, Vec>> starts;
  if (g["starts"].is_null()) {
    const Vec o = Vec::Zero(m->real_dim());
    for (const Vec& u : sample_unit_directions(*m, o, SamplePlan::from_json(cfg["plan"]))) starts.emplace_back(o, u);
  } else {
    for (const auto& s : g["starts"]) {
      const Vec x = read_point(s.at("x"), *m, "geodesic start x");
      const Vec u = read_point(s.at("u"), *m, "geodesic start u");
      starts.emplace_back(x, s.value("normalize", true) ? Vec(u / std::sqrt(m->value(x, u))) : u);
    }
  }
  std::vector<GeodesicPath> paths(starts.size());
  std::vector<std::string> errors(starts.size());
  parallel_for(starts.size(), [&](std::size_t k) {
    try {
      paths[k] = integrate_geodesic(*m, starts[k].first, starts[k].second, length, steps);
    } catch (const Error& e) {
      errors[k] = e.what();
    }
  });
  const bool flat = m->truths().horizontally_flat;
  Json rows = Json::array();
  for (std::size_t k = 0; k < starts.size(); ++k) {
    Json row = {{"start", k}, {"x0", vec_json(starts[k].first)}, {"u0", vec_json(starts[k].second)}};
    if (!errors[k].empty()) {
      row["error"] = errors[k];
      r.fail("geodesic " + std::to_string(k) + ": " + errors[k]);
      rows.push_back(row);
      continue;
    }
    const GeodesicPath& p = paths[k];
    row["end"] = vec_json(p.end().x);
    row["t_end"] = p.end().t;
    row["arc_length"] = p.arc_length;
    row["energy_drift"] = p.energy_drift;
    row["truncated"] = p.truncated;
    row["steps"] = p.stats.steps;
    row["steps_rejected"] = p.stats.rejected;
    if (!(p.energy_drift <= drift_tol)) r.fail("geodesic " + std::to_string(k) + " energy drift above tolerance");
    if (flat) {
      const double ray = (p.end().x - (starts[k].first + p.end().t * starts[k].second)).norm();
      row["ray_error"] = ray;
      if (!(ray <= 1e-9)) r.fail("geodesic " + std::to_string(k) + " of a flat metric is not a ray");
    }
    r.tables["geodesic_" + std::to_string(k) + ".csv"] = p.to_csv();
    rows.push_back(row);
  }
  r.result = {{"geodesics", rows}, {"length", length}, {"steps", steps}, {"drift_tolerance", drift_tol}};
  return r;
}

inline Vec pole_of(const Json& j, const Metric& m) {
  return j.is_null() ? Vec::Zero(m.real_dim()) : read_point(j, m, "pole");
}

/// Configured points, or the sampling plan without the origin.
inline std::vector<Vec> points_of(const Json& j, const Metric& m, const SamplePlan& plan, const Vec& pole) {
  std::vector<Vec> pts;
  if (!j.is_null()) {
    for (const auto& p : j) pts.push_back(read_point(p, m, "point"));
  } else {
    for (const Vec& x : sample_points(m, plan))
      if (x.norm() > 0.0) pts.push_back(pole + x);
  }
  for (const Vec& x : pts) m.check_point(x);
  return pts;
}

inline ItemReport run_distance(const Json& cfg, const Json& entry) {
  ItemReport r;
  r.id = entry["id"];
  const MetricPtr m = instantiate(entry["metric"]);
  const Json& d = cfg["distance"];
  const SamplePlan plan = SamplePlan::from_json(cfg["plan"]);
  const Vec p = pole_of(d["pole"], *m);
  m->check_point(p);
  const auto pts = points_of(d["points"], *m, plan, p);
  const bool hess = d["hessian"], levi = d["levi"].get<bool>() && m->is_complex();
  const double tolerance = tol(cfg, d["tolerance"]), htol = d["hessian_tolerance"];
  const Vec probe = sample_directions(*m, plan).front();
  struct Row {
    RadialData R;
    double chord = 0.0;
    HessianResult H;
    LeviSample L;
    std::string error;
    double upper = NAN;
  };
  std::vector<Row> rows(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    Row& w = rows[i];
    try {
      w.chord = std::sqrt(m->value(p, pts[i] - p));
      w.R = radial(*m, p, pts[i]);
      if (hess) w.H = hessian_rho(*m, p, pts[i], probe);
      if (levi) w.L = levi_rho2(*m, to_complex_vector(p), to_complex_vector(pts[i]), to_complex_vector(probe), 0.0);
    } catch (const ShootingError& e) {
      w.error = e.what();
      w.upper = e.upper_bound();
    } catch (const Error& e) {
      w.error = e.what();
    }
  });
  const bool flat = m->truths().horizontally_flat;
  std::ostringstream os;
  os.precision(17);
  os << csv_header("point", "x", m->real_dim()) << ",rho,chord,residual,iterations";
  if (hess) os << ",hessian_route_a,hessian_route_b,hessian_agree";
  if (levi) os << ",levi_value,levi_direct";
  os << ",upper_bound,error\n";
  double worst_flat = 0.0, worst_gauss = 0.0;
  int agree = 0, errors = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& w = rows[i];
    os << i;
    csv_vec(os, pts[i]);
    if (!w.error.empty()) {
      ++errors;
      os << ",,," << ",";
      if (hess) os << ",,,";
      if (levi) os << ",,";
      os << ',' << w.upper << ',' << '"' << w.error << '"' << '\n';
      continue;
    }
    os << ',' << w.R.rho << ',' << w.chord << ',' << w.R.shot.residual << ',' << w.R.shot.iterations;
    if (hess) os << ',' << w.H.route_a << ',' << w.H.route_b << ',' << (w.H.agree ? 1 : 0);
    if (levi) os << ',' << w.L.levi_value << ',' << w.L.levi_direct;
    os << ",," << '\n';
    if (flat) worst_flat = std::max(worst_flat, std::abs(w.R.rho - w.chord) / std::max(1.0, w.chord));
    worst_gauss = std::max(worst_gauss, (w.R.drho2 - w.R.drho2_end).norm() / std::max(1.0, w.R.drho2.norm()));
    if (hess) {
      agree += w.H.agree ? 1 : 0;
      if (!(std::abs(w.H.route_a - w.H.route_b) <= htol * std::max(1.0, std::abs(w.H.route_b))))
        r.fail("Hessian routes disagree at point " + std::to_string(i));
    }
  }
  r.tables["distance.csv"] = os.str();
  r.result = {{"pole", vec_json(p)},
              {"points", pts.size()},
              {"errors", errors},
              {"gauss_lemma_max_error", worst_gauss},
              {"tolerance", tolerance},
              {"probe_direction", vec_json(probe)}};
  if (flat) {
    r.result["flat_max_error"] = worst_flat;
    if (!(worst_flat <= tolerance)) r.fail("distance of a flat metric differs from the norm of the chord");
  }
  if (hess) r.result["hessian_routes_agree"] = agree;
  if (errors > 0) r.fail(std::to_string(errors) + " points raised errors");
  return r;
}

inline ItemReport run_bounds(const Json& cfg, const Json& entry) {
  ItemReport r;
  r.id = entry["id"];
  const MetricPtr m = instantiate(entry["metric"]);
  const Json& b = cfg["bounds"];
  const SamplePlan plan = SamplePlan::from_json(cfg["plan"]);
  const Vec p = pole_of(b["pole"], *m);
  const double tolerance = tol(cfg, b["tolerance"]);
  const RadialBound rb = radial_flag_bounds(*m, p, b["rho_max"], b["directions"], b["radii"], b["flags"], plan.seed);
  r.result["radial"] = {{"inf_flag", rb.inf_flag}, {"sup_flag", rb.sup_flag}, {"K", rb.K}, {"samples", rb.samples}};
  if (m->is_complex()) {
    try {
      r.result["K_G_domain"] = curvature_bounds(*m, CurvatureRole::domain, plan).to_json();
      r.result["K_G_target"] = curvature_bounds(*m, CurvatureRole::target, plan).to_json();
    } catch (const HypothesisError& e) {
      r.result["K_G_target"] = {{"error", e.what()}};
    }
  }
  // Comparison bounds at the first `samples` plan points: H(rho)(u,u) <= 1/rho + K and Levi(rho^2) <= 2 + rho K.
  auto pts = points_of(Json(nullptr), *m, plan, p);
  pts.resize(std::min<std::size_t>(pts.size(), b["samples"].get<std::size_t>()));
  const Vec probe = sample_directions(*m, plan).front();
  struct Row {
    HessianResult H;
    double unit = 1.0;
    LeviSample L;
    std::string error;
  };
  std::vector<Row> rows(pts.size());
  parallel_for(pts.size(), [&](std::size_t i) {
    try {
      rows[i].H = hessian_rho(*m, p, pts[i], probe);
      rows[i].unit = rows[i].H.gTuu;
      if (m->is_complex())
        rows[i].L = levi_rho2(*m, to_complex_vector(p), to_complex_vector(pts[i]), to_complex_vector(probe), rb.K);
    } catch (const Error& e) {
      rows[i].error = e.what();
    }
  });
  std::ostringstream os;
  os.precision(17);
  os << csv_header("point", "x", m->real_dim()) << ",rho,hessian_rho,hessian_bound,hessian_margin";
  if (m->is_complex()) os << ",levi_value,levi_bound,levi_margin";
  os << ",error\n";
  double hmin = INFINITY, lmin = INFINITY;
  int errors = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Row& w = rows[i];
    os << i;
    csv_vec(os, pts[i]);
    if (!w.error.empty()) {
      ++errors;
      os << ",,,," << (m->is_complex() ? ",,," : "") << ",\"" << w.error << "\"\n";
      continue;
    }
    // H(rho) is quadratic in u; compare on the g_T-unit vector.
    const double h = w.H.route_b / w.unit, bound = 1.0 / w.H.rho + rb.K;
    hmin = std::min(hmin, bound - h);
    os << ',' << w.H.rho << ',' << h << ',' << bound << ',' << bound - h;
    if (m->is_complex()) {
      lmin = std::min(lmin, w.L.margin);
      os << ',' << w.L.levi_value << ',' << w.L.bound << ',' << w.L.margin;
    }
    os << ",\n";
  }
  r.tables["comparison.csv"] = os.str();
  r.result["hessian_min_margin"] = rows.empty() ? Json(nullptr) : Json(hmin);
  if (m->is_complex()) r.result["levi_min_margin"] = rows.empty() ? Json(nullptr) : Json(lmin);
  r.result["samples"] = rows.size();
  r.result["errors"] = errors;
  r.result["tolerance"] = tolerance;
  if (hmin < -tolerance) r.fail("Hessian comparison bound violated");
  if (m->is_complex() && lmin < -tolerance) r.fail("Levi comparison bound violated");
  if (errors > 0) r.fail(std::to_string(errors) + " points raised errors");
  return r;
}

inline ItemReport run_schwarz(const Json& cfg, const Json& pair) {
  ItemReport r;
  r.id = pair["id"];
  const HolomorphicMap f = HolomorphicMap::from_json(find_by_id(cfg["maps"], pair["map"]));
  const MetricPtr mG = instantiate(find_by_id(cfg["metrics"], pair["domain"])["metric"]);
  const MetricPtr mH = instantiate(find_by_id(cfg["metrics"], pair["target"])["metric"]);
  const Json& s = cfg["schwarz"];
  SchwarzOptions o;
  o.plan = SamplePlan::from_json(cfg["plan"]);
  o.fan = s["fan"];
  o.tolerance = tol(cfg, s["tolerance"]);
  o.check_kahler = s["check_kahler"];
  const SchwarzCertificate c = certify_schwarz(f, *mG, *mH, o);
  r.result = c.to_json();
  r.result["expect"] = pair["expect"];
  r.tables["ratios.csv"] = c.csv();
  if (f.domain_dim() == 1) {
    // Radial pullback table along the unit disk probe through the origin.
    std::vector<cd> grid;
    const double R = std::isfinite(mG->domain_radius()) ? mG->domain_radius() : o.plan.scale;
    for (int i = 0; i <= 8; ++i) grid.emplace_back(R * o.plan.r_max * i / 8.0, 0.0);
    const CVec e1 = CVec::Ones(1);
    r.tables["pullback.csv"] = pullback_csv(pullback(f, *mG, *mH, DiskProbe::linear(CVec::Zero(1), e1), grid));
  }
  const bool want = pair["expect"] == "PASS";
  const bool got = c.passed && c.hypotheses_met;
  if (want != got) r.fail("certificate " + c.status() + ", expected " + pair["expect"].get<std::string>());
  return r;
}

inline ItemReport guarded(const std::string& id, const std::function<ItemReport()>& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    ItemReport r;
    r.id = id;
    r.result = {{"error", e.what()}};
    r.fail(e.what());
    return r;
  }
}

}  // namespace detail

/// Runs a non-replay command on an effective config; `only` restricts it to one item id.
inline RunResult run(const std::string& command, const Json& cfg, const std::string& only = "") {
  RunResult out;
  out.command = command;
  out.config = cfg;
  if (command == "schwarz") {
    for (const auto& pair : cfg["schwarz"]["pairs"]) {
      if (!only.empty() && pair["id"] != only) continue;
      out.items.push_back(detail::guarded(pair["id"], [&] { return detail::run_schwarz(cfg, pair); }));
    }
  } else {
    ItemReport (*fn)(const Json&, const Json&) = nullptr;
    if (command == "check") fn = detail::run_check;
    if (command == "curvature") fn = detail::run_curvature;
    if (command == "geodesic") fn = detail::run_geodesic;
    if (command == "distance") fn = detail::run_distance;
    if (command == "bounds") fn = detail::run_bounds;
    if (!fn) throw ConfigError("unknown command '" + command + "'");
    for (const auto& e : cfg["metrics"]) {
      if (!only.empty() && e["id"] != only) continue;
      out.items.push_back(detail::guarded(e["id"], [&] { return fn(cfg, e); }));
    }
  }
  if (!only.empty() && out.items.empty()) throw ConfigError("no item with id '" + only + "' in the config");
  if (out.items.empty()) throw ConfigError("config declares nothing to run for '" + command + "'");
  return out;
}

/// Report body without the metadata block; identical configs give identical payloads.
inline Json payload(const std::string& command, const Json& cfg, const ItemReport& item) {
  Json p = {{"schema", kSchema},  {"command", command},       {"id", item.id},         {"passed", item.passed},
            {"failures", item.failures}, {"config", cfg}, {"result", item.result}};
  // Round trip so that non-finite doubles compare the way they are stored (as null).
  return Json::parse(p.dump());
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json metadata() { return {{"timestamp", utc_timestamp()}, {"threads", thread_count()}, {"version", kVersion}}; }

inline void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("failed writing " + p.string());
}

/// <out>/<command>/<id>/{report.json, *.csv}; returns the report paths.
inline std::vector<std::filesystem::path> write_reports(const RunResult& r, const std::filesystem::path& out) {
  std::vector<std::filesystem::path> paths;
  for (const auto& item : r.items) {
    const auto dir = out / r.command / item.id;
    std::filesystem::create_directories(dir);
    Json report = payload(r.command, r.config, item);
    report["metadata"] = metadata();
    write_file(dir / "report.json", report.dump(2) + "\n");
    for (const auto& [name, text] : item.tables) write_file(dir / name, text);
    paths.push_back(dir / "report.json");
  }
  return paths;
}

// ---------------------------------------------------------------------------------------------
// Replay

struct ReplayResult {
  std::string command, id;
  bool passed = false;
  bool bitwise = false;
  double tolerance = 0.0;
  std::vector<std::string> differences;

  Json to_json() const {
    return {{"command", command}, {"id", id}, {"passed", passed}, {"mode", bitwise ? "bitwise" : "tolerance"},
            {"tolerance", tolerance}, {"differences", differences}};
  }
};

namespace detail {

inline void compare(const Json& a, const Json& b, const std::string& path, double tol, std::vector<std::string>& diffs) {
  if (diffs.size() >= 50) return;
  if (a.is_number() && b.is_number()) {
    const double x = a.get<double>(), y = b.get<double>();
    const bool same = tol > 0.0 ? std::abs(x - y) <= tol * std::max({1.0, std::abs(x), std::abs(y)}) : a == b;
    if (!same) {
      std::ostringstream os;
      os.precision(17);
      os << path << ": stored " << x << ", recomputed " << y;
      diffs.push_back(os.str());
    }
    return;
  }
  if (a.type() != b.type()) {
    diffs.push_back(path + ": stored " + a.dump() + ", recomputed " + b.dump());
    return;
  }
  if (a.is_object()) {
    for (const auto& [k, v] : a.items()) {
      if (!b.contains(k))
        diffs.push_back(path + "/" + k + ": missing from recomputed report");
      else
        compare(v, b[k], path + "/" + k, tol, diffs);
    }
    for (const auto& [k, v] : b.items())
      if (!a.contains(k)) diffs.push_back(path + "/" + k + ": missing from stored report");
  } else if (a.is_array()) {
    if (a.size() != b.size()) {
      diffs.push_back(path + ": length " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
      return;
    }
    for (std::size_t i = 0; i < a.size(); ++i) compare(a[i], b[i], path + "/" + std::to_string(i), tol, diffs);
  } else if (a != b) {
    diffs.push_back(path + ": stored " + a.dump() + ", recomputed " + b.dump());
  }
}

}  // namespace detail

/// Recomputes a stored report from its embedded config and compares the payloads:
/// bitwise when tolerance is 0, else numbers within tolerance * max(1, |a|, |b|).
inline ReplayResult replay(const Json& stored, double tolerance = 0.0) {
  if (!stored.is_object() || !stored.contains("schema")) throw ConfigError("not a report: missing 'schema'");
  if (stored["schema"] != kSchema)
    throw ConfigError("schema mismatch: report has " + stored["schema"].dump() + ", engine reads " + std::to_string(kSchema));
  for (const char* key : {"command", "id", "config", "result", "passed"})
    if (!stored.contains(key)) throw ConfigError(std::string("report lacks '") + key + "'");
  const std::string command = stored["command"];
  if (command == "replay") throw ConfigError("cannot replay a replay report");
  ReplayResult r;
  r.command = command;
  r.id = stored["id"];
  r.tolerance = tolerance;
  r.bitwise = tolerance == 0.0;
  const Json cfg = Json::parse(effective_config(stored["config"]).dump());
  const RunResult rerun = run(command, cfg, r.id);
  const Json fresh = payload(command, cfg, rerun.items.front());
  Json old = stored;
  old.erase("metadata");
  detail::compare(old, fresh, "", tolerance, r.differences);
  r.passed = r.differences.empty();
  return r;
}

inline Json read_json_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot open " + p.string());
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError("malformed JSON in " + p.string() + ": " + e.what());
  }
}

}  // namespace finsler::app
