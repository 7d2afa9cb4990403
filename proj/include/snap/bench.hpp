#pragma once

// Experiment harness: key=value spec files, (init scale x algorithm x seed)
// grids, trace CSVs, summary tables and SVG loss curves.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "snap/invariants.hpp"
#include "snap/oracle.hpp"
#include "snap/solver.hpp"

namespace snap {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Small text helpers

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

inline double to_double(const std::string& s, const std::string& key) {
  try {
    size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (trim(s.substr(pos)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw ParseError("'" + key + "': expected a number, got '" + s + "'");
}

inline long to_long(const std::string& s, const std::string& key) {
  const double v = to_double(s, key);
  if (v != std::floor(v)) throw ParseError("'" + key + "': expected an integer, got '" + s + "'");
  return static_cast<long>(v);
}

inline bool to_bool(const std::string& s, const std::string& key) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError("'" + key + "': expected true/false, got '" + s + "'");
}

inline Vector to_vector(const std::string& s, const std::string& key) {
  const auto parts = split(s, ',');
  if (parts.empty()) throw ParseError("'" + key + "': empty vector");
  Vector v(static_cast<Index>(parts.size()));
  for (size_t i = 0; i < parts.size(); ++i) v[static_cast<Index>(i)] = to_double(parts[i], key);
  return v;
}

/// Rows separated by ';', entries by ','.
inline Matrix to_matrix(const std::string& s, const std::string& key) {
  const auto rows = split(s, ';');
  if (rows.empty()) throw ParseError("'" + key + "': empty matrix");
  std::vector<Vector> r;
  for (const auto& row : rows) r.push_back(to_vector(row, key));
  Matrix M(static_cast<Index>(r.size()), r[0].size());
  for (size_t i = 0; i < r.size(); ++i) {
    if (r[i].size() != M.cols()) throw ParseError("'" + key + "': ragged matrix");
    M.row(static_cast<Index>(i)) = r[i].transpose();
  }
  return M;
}

/// Shortest decimal form that round-trips.
inline std::string fmt(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Solver settings shared by the CLI and spec files

/// Applies one `key = value` solver setting. Returns false for unknown keys.
inline bool apply_solver_setting(SolverConfig& cfg, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "eps_g") cfg.eps_G = to_double(v, key);
  else if (key == "eps_h") cfg.eps_H = to_double(v, key);
  else if (key == "alpha") cfg.alpha_pi = to_double(v, key);
  else if (key == "delta") cfg.delta = to_double(v, key);
  else if (key == "r_th") cfg.r_th = to_long(v, key);
  else if (key == "max_iter") cfg.max_iter = to_long(v, key);
  else if (key == "no_stop") cfg.no_stop = to_bool(v, key);
  else if (key == "beta") cfg.spgd.beta = to_double(v, key);
  else if (key == "spgd_T") cfg.spgd.T = to_long(v, key);
  else if (key == "spgd_R") cfg.spgd.script_R = to_double(v, key);
  else if (key == "spgd_F") cfg.spgd.script_F = to_double(v, key);
  else if (key == "spgd_c_hat") cfg.spgd.c_hat = to_double(v, key);
  else if (key == "spgd_restart") cfg.spgd.restart_on_infeasible_probe = to_bool(v, key);
  else if (key == "spgd_theoretical") cfg.spgd_theoretical = to_bool(v, key);
  else if (key == "power_max_iters") cfg.power.max_iters = to_long(v, key);
  else if (key == "active_tol") cfg.active_tol = to_double(v, key);
  else if (key == "rank_tol") cfg.rank_tol = to_double(v, key);
  else if (key == "oracle") cfg.oracle = parse_oracle_kind(v);
  else return false;
  return true;
}

/// Algorithm labels used by the harness.
inline SolverConfig configure_algorithm(SolverConfig cfg, const std::string& algo) {
  if (algo == "pgd") {
    cfg.variant = Variant::pgd;
  } else if (algo == "pgd-ls") {
    cfg.variant = Variant::pgd_ls;
  } else if (algo == "snap") {
    cfg.variant = Variant::snap;
    cfg.oracle = OracleKind::hessian;
  } else if (algo == "snap-plus") {
    cfg.variant = Variant::snap;
    cfg.oracle = OracleKind::spgd;
  } else if (algo == "snap-simplified") {
    cfg.variant = Variant::snap_simplified;
  } else {
    throw ParameterError("unknown algorithm '" + algo +
                         "' (expected pgd, pgd-ls, snap, snap-plus, snap-simplified)");
  }
  return cfg;
}

// ---------------------------------------------------------------------------
// Experiment spec

struct ExperimentSpec {
  std::string name = "experiment";
  ProblemKind problem = ProblemKind::box_qp;
  ProblemParams params;
  std::vector<double> init_scales{1.0};
  std::optional<Vector> x0;
  std::vector<std::string> algorithms{"snap"};
  std::vector<std::uint64_t> seeds{1};
  double perturb = 0.0;
  std::optional<Vector> q;
  SolverConfig base;
  /// algorithm -> ordered (key, value) overrides
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> overrides;
  std::string output_dir;
  bool canonical = false;
  int threads = 0;  ///< 0: hardware concurrency

  void validate() const {
    if (seeds.empty()) throw ParameterError("spec '" + name + "': seeds must be nonempty");
    if (algorithms.empty()) throw ParameterError("spec '" + name + "': no algorithms");
    if (init_scales.empty() && !x0) throw ParameterError("spec '" + name + "': no init scale");
    for (const auto& a : algorithms) configure_algorithm(base, a);
    for (const auto& [algo, kv] : overrides)
      if (std::find(algorithms.begin(), algorithms.end(), algo) == algorithms.end())
        throw ParameterError("override for algorithm '" + algo + "' that is not in the list");
  }
};

namespace detail {

inline void apply_spec_key(ExperimentSpec& s, const std::string& key, const std::string& v,
                           const std::string& where) {
  if (key == "name") s.name = v;
  else if (key == "problem") s.problem = parse_problem_kind(v);
  else if (key == "m") s.params.m = to_long(v, key);
  else if (key == "n") s.params.n = to_long(v, key);
  else if (key == "k") s.params.k = to_long(v, key);
  else if (key == "hidden") s.params.hidden = to_long(v, key);
  else if (key == "rho") s.params.rho = to_double(v, key);
  else if (key == "zero_fraction") s.params.zero_fraction = to_double(v, key);
  else if (key == "dim") s.params.dim = to_long(v, key);
  else if (key == "constraints") s.params.constraints = to_long(v, key);
  else if (key == "convex") s.params.convex = to_bool(v, key);
  else if (key == "Q") s.params.Q = to_matrix(v, key);
  else if (key == "c") s.params.c = to_vector(v, key);
  else if (key == "lo") s.params.lo = to_vector(v, key);
  else if (key == "hi") s.params.hi = to_vector(v, key);
  else if (key == "init_scale" || key == "init_scales") {
    s.init_scales.clear();
    for (const auto& p : split(v, ',')) s.init_scales.push_back(to_double(p, key));
  } else if (key == "x0") s.x0 = to_vector(v, key);
  else if (key == "algorithms") s.algorithms = split(v, ',');
  else if (key == "seeds") {
    s.seeds.clear();
    for (const auto& p : split(v, ',')) s.seeds.push_back(static_cast<std::uint64_t>(to_long(p, key)));
  } else if (key == "perturb") s.perturb = to_double(v, key);
  else if (key == "q") s.q = to_vector(v, key);
  else if (key == "output") s.output_dir = v;
  else if (key == "canonical") s.canonical = to_bool(v, key);
  else if (key == "threads") s.threads = static_cast<int>(to_long(v, key));
  else if (key == "seed") s.base.seed = static_cast<std::uint64_t>(to_long(v, key));
  else if (!apply_solver_setting(s.base, key, v))
    throw ParseError(where + ": unknown key '" + key + "'");
}

}  // namespace detail

/// Parses `key = value` lines; '#' starts a comment; `algo.key = value`
/// overrides a setting for one algorithm.
inline ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& source = "<spec>") {
  ExperimentSpec s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno);
    if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (const auto dot = key.find('.'); dot != std::string::npos) {
      const std::string algo = key.substr(0, dot), sub = key.substr(dot + 1);
      SolverConfig probe;
      if (sub != "perturb" && sub != "q" && !apply_solver_setting(probe, sub, val))
        throw ParseError(where + ": unknown per-algorithm key '" + sub + "'");
      s.overrides[algo].emplace_back(sub, val);
      continue;
    }
    detail::apply_spec_key(s, key, val, where);
  }
  if (s.output_dir.empty()) s.output_dir = "runs/" + s.name;
  return s;
}

/// Directory holding the shipped presets: $SNAP_PRESET_DIR, else the
/// compiled-in default, else ./presets.
inline fs::path preset_dir() {
  if (const char* env = std::getenv("SNAP_PRESET_DIR")) return env;
#ifdef SNAP_PRESET_DIR
  return SNAP_PRESET_DIR;
#else
  return "presets";
#endif
}

/// Accepts a file path or a preset name (`example1` -> presets/example1.spec).
inline fs::path resolve_spec(const std::string& name_or_path) {
  if (fs::is_regular_file(name_or_path)) return name_or_path;
  const fs::path p = preset_dir() / (name_or_path + ".spec");
  if (fs::is_regular_file(p)) return p;
  throw ParseError("no spec file or preset named '" + name_or_path + "'");
}

inline ExperimentSpec load_experiment_spec(const std::string& name_or_path) {
  const fs::path p = resolve_spec(name_or_path);
  std::ifstream in(p);
  if (!in) throw ParseError("cannot open " + p.string());
  return parse_experiment_spec(in, p.string());
}

inline std::vector<std::string> list_presets() {
  std::vector<std::string> out;
  const fs::path dir = preset_dir();
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".spec") out.push_back(e.path().stem().string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Relative output directories resolve under $SNAP_OUTPUT_ROOT when set.
inline fs::path resolve_output_dir(const std::string& dir) {
  fs::path p(dir);
  if (p.is_relative())
    if (const char* root = std::getenv("SNAP_OUTPUT_ROOT")) return fs::path(root) / p;
  return p;
}

// ---------------------------------------------------------------------------
// One grid cell

struct CellSetup {
  ProblemInstance problem;
  Vector x1;
  SolverConfig cfg;
};

/// Builds the problem, starting point and config of one (algorithm, scale, seed) cell.
inline CellSetup setup_cell(const ExperimentSpec& spec, const std::string& algo, double scale,
                            std::uint64_t seed) {
  SolverConfig cfg = configure_algorithm(spec.base, algo);
  double perturb = spec.perturb;
  std::optional<Vector> q = spec.q;
  if (auto it = spec.overrides.find(algo); it != spec.overrides.end()) {
    for (const auto& [k, v] : it->second) {
      if (k == "perturb") {
        perturb = detail::to_double(v, k);
        q.reset();
      } else if (k == "q") {
        q = detail::to_vector(v, k);
      } else {
        apply_solver_setting(cfg, k, v);
      }
    }
  }
  cfg.seed = mix_seed(seed, 13);
  ProblemInstance problem = make_problem(spec.problem, spec.params, seed);
  if (q) problem = perturb_with(problem, *q);
  else if (perturb > 0.0) problem = perturb_linear(problem, perturb, mix_seed(seed, 7));
  Vector x1 = spec.x0 ? project_feasible(problem.feasible, *spec.x0)
                      : initial_point(problem, scale, mix_seed(seed, 11));
  if (x1.size() != problem.dim()) throw ParameterError("x0 has the wrong dimension");
  return CellSetup{std::move(problem), std::move(x1), std::move(cfg)};
}

// ---------------------------------------------------------------------------
// Trace I/O

inline constexpr const char* kTraceHeader =
    "iter,elapsed_s,f,fosp1_gap,step_kind,alpha,curvature_est,active_count,free_dim";

inline void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace,
                            bool canonical) {
  using detail::fmt;
  out << kTraceHeader << '\n';
  for (const auto& t : trace) {
    out << t.iter << ',' << fmt(canonical ? 0.0 : t.elapsed_s) << ',' << fmt(t.f) << ','
        << fmt(t.fosp1_gap) << ',' << to_string(t.step_kind) << ',' << fmt(t.alpha) << ','
        << (t.curvature_est ? fmt(*t.curvature_est) : std::string()) << ',' << t.active_count
        << ',' << t.free_dim << '\n';
  }
}

inline StepKind parse_step_kind(const std::string& s) {
  for (auto k : {StepKind::pgd, StepKind::ncd_grad, StepKind::ncd_curv, StepKind::boundary,
                 StepKind::oracle_call, StepKind::final_point})
    if (s == to_string(k)) return k;
  throw ParseError("unknown step kind '" + s + "'");
}

inline std::vector<TraceRecord> read_trace_csv(std::istream& in, const std::string& source = "<trace>") {
  std::string line;
  if (!std::getline(in, line) || detail::trim(line) != kTraceHeader)
    throw ParseError(source + ": missing or wrong trace header");
  std::vector<TraceRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (cols.size() == 8 && !line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 9) throw ParseError(source + ":" + std::to_string(lineno) + ": expected 9 columns");
    TraceRecord t;
    t.iter = detail::to_long(cols[0], "iter");
    t.elapsed_s = detail::to_double(cols[1], "elapsed_s");
    t.f = detail::to_double(cols[2], "f");
    t.fosp1_gap = detail::to_double(cols[3], "fosp1_gap");
    t.step_kind = parse_step_kind(cols[4]);
    t.alpha = detail::to_double(cols[5], "alpha");
    if (!detail::trim(cols[6]).empty()) t.curvature_est = detail::to_double(cols[6], "curvature_est");
    t.active_count = detail::to_long(cols[7], "active_count");
    t.free_dim = detail::to_long(cols[8], "free_dim");
    out.push_back(t);
  }
  return out;
}

inline std::vector<TraceRecord> read_trace_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return read_trace_csv(in, path.string());
}

// ---------------------------------------------------------------------------
// SVG loss curves

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// One panel with a log-scale y axis. Non-positive data are shifted by
/// 1e-12 - min(y) and the axis label says so.
inline std::string render_svg_panel(const std::string& title, const std::string& xlabel,
                                    std::string ylabel, std::vector<Series> series) {
  const double W = 640, H = 420, ml = 80, mr = 150, mt = 40, mb = 55;
  double ymin = std::numeric_limits<double>::infinity(), xmin = ymin;
  double ymax = -ymin, xmax = -ymin;
  for (const auto& s : series)
    for (size_t i = 0; i < s.y.size(); ++i) ymin = std::min(ymin, s.y[i]);
  double shift = 0.0;
  if (ymin <= 0.0 && std::isfinite(ymin)) {
    shift = 1e-12 - ymin;
    ylabel += " (shifted by " + detail::fmt(shift) + ")";
  }
  ymin = std::numeric_limits<double>::infinity();
  for (auto& s : series)
    for (size_t i = 0; i < s.y.size(); ++i) {
      s.y[i] += shift;
      if (!std::isfinite(s.y[i]) || s.y[i] <= 0.0) continue;
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
    }
  if (!std::isfinite(ymin)) ymin = 1e-12, ymax = 1.0, xmin = 0.0, xmax = 1.0;
  double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax));
  if (ly1 <= ly0) ly1 = ly0 + 1;
  if (xmax <= xmin) xmax = xmin + 1.0;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return mt + (ly1 - std::log10(y)) / (ly1 - ly0) * ph; };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
    << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  o << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const int step = std::max(1, static_cast<int>((ly1 - ly0) / 8));
  for (int e = static_cast<int>(ly0); e <= static_cast<int>(ly1); e += step) {
    const double yy = py(std::pow(10.0, e));
    o << "<line x1=\"" << ml << "\" y1=\"" << yy << "\" x2=\"" << ml + pw << "\" y2=\"" << yy
      << "\" stroke=\"#ddd\"/>\n";
    o << "<text x=\"" << ml - 6 << "\" y=\"" << yy + 4 << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    o << "<text x=\"" << px(xv) << "\" y=\"" << mt + ph + 18 << "\" text-anchor=\"middle\">"
      << detail::fmt(std::round(xv * 1e4) / 1e4) << "</text>\n";
  }
  o << "<text x=\"" << ml + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  o << "<text transform=\"translate(18," << mt + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << ylabel << "</text>\n";
  for (size_t s = 0; s < series.size(); ++s) {
    const auto& sr = series[s];
    const char* col = colors[s % 6];
    const size_t n = sr.y.size();
    const size_t stride = std::max<size_t>(1, n / 2000);
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (size_t i = 0; i < n; i += stride) {
      if (!std::isfinite(sr.y[i]) || sr.y[i] <= 0.0) continue;
      o << px(sr.x[i]) << ',' << py(std::max(sr.y[i], std::pow(10.0, ly0))) << ' ';
    }
    if (n > 0 && (n - 1) % stride != 0 && std::isfinite(sr.y[n - 1]) && sr.y[n - 1] > 0.0)
      o << px(sr.x[n - 1]) << ',' << py(sr.y[n - 1]);
    o << "\"/>\n";
    const double ly = mt + 16 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << ml + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw + 30 << "\" y2=\""
      << ly << "\" stroke=\"" << col << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << ml + pw + 35 << "\" y=\"" << ly + 4 << "\">" << sr.label << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Running a grid

struct CellResult {
  std::string algorithm;
  double init_scale = 0.0;
  std::uint64_t seed = 0;
  std::string status;
  long iterations = 0;
  long oracle_calls = 0;
  double f_final = 0.0;
  double f_best = 0.0;
  double wall_time = 0.0;
  std::string trace_file;  ///< relative to the artifact directory
  std::string error;
  std::vector<std::string> invariant_violations;
};

struct RunArtifact {
  fs::path out_dir;
  std::vector<CellResult> cells;
  fs::path summary_csv;
  fs::path summary_json;
  std::vector<fs::path> figures;
  std::vector<std::string> warnings;
};

inline std::string cell_stem(const std::string& algo, double scale, std::uint64_t seed) {
  return algo + "__c" + detail::fmt(scale) + "__s" + std::to_string(seed);
}

/// Renders loss-vs-iteration and loss-vs-time panels per (scale, seed) group.
inline std::vector<fs::path> emit_plots(const RunArtifact& art, std::vector<std::string>* warnings = nullptr) {
  std::vector<fs::path> out;
  fs::create_directories(art.out_dir / "figures");
  std::map<std::pair<double, std::uint64_t>, std::vector<const CellResult*>> groups;
  for (const auto& c : art.cells) groups[{c.init_scale, c.seed}].push_back(&c);
  for (const auto& [key, cells] : groups) {
    std::vector<Series> by_iter, by_time;
    for (const CellResult* c : cells) {
      if (c->trace_file.empty()) continue;
      const auto tr = read_trace_csv(art.out_dir / c->trace_file);
      if (tr.empty()) {
        if (warnings) warnings->push_back("empty trace for " + c->trace_file + "; skipped in plots");
        continue;
      }
      Series si{c->algorithm, {}, {}}, st{c->algorithm, {}, {}};
      for (const auto& t : tr) {
        si.x.push_back(static_cast<double>(t.iter));
        si.y.push_back(t.f);
        st.x.push_back(t.elapsed_s);
        st.y.push_back(t.f);
      }
      by_iter.push_back(std::move(si));
      by_time.push_back(std::move(st));
    }
    if (by_iter.empty()) continue;
    const std::string suffix = "__c" + detail::fmt(key.first) + "__s" + std::to_string(key.second);
    const std::string title = "c = " + detail::fmt(key.first) + ", seed " + std::to_string(key.second);
    const fs::path pi = art.out_dir / "figures" / ("loss_vs_iter" + suffix + ".svg");
    const fs::path pt = art.out_dir / "figures" / ("loss_vs_time" + suffix + ".svg");
    std::ofstream(pi) << render_svg_panel("Loss vs iteration, " + title, "iteration", "loss", by_iter);
    std::ofstream(pt) << render_svg_panel("Loss vs time, " + title, "elapsed time (s)", "loss", by_time);
    out.push_back(pi);
    out.push_back(pt);
  }
  return out;
}

struct RunOptions {
  bool write_files = true;
  bool check_invariants = true;
  bool plots = true;
  /// Caps every cell's max_iter when positive (used by quick verification runs).
  long max_iter_cap = 0;
};

/// Runs every (scale, algorithm, seed) cell; failures are recorded per cell.
inline RunArtifact run_experiment(const ExperimentSpec& spec, const RunOptions& ropt = {}) {
  spec.validate();
  RunArtifact art;
  art.out_dir = resolve_output_dir(spec.output_dir);
  if (ropt.write_files) fs::create_directories(art.out_dir / "traces");

  struct Job {
    std::string algo;
    double scale;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  const std::vector<double> scales = spec.x0 ? std::vector<double>{0.0} : spec.init_scales;
  for (double sc : scales)
    for (const auto& a : spec.algorithms)
      for (auto s : spec.seeds) jobs.push_back({a, sc, s});

  auto run_one = [&](const Job& j) {
    CellResult c;
    c.algorithm = j.algo;
    c.init_scale = j.scale;
    c.seed = j.seed;
    try {
      CellSetup cs = setup_cell(spec, j.algo, j.scale, j.seed);
      if (ropt.max_iter_cap > 0) cs.cfg.max_iter = std::min(cs.cfg.max_iter, ropt.max_iter_cap);
      const SolveResult res = solve(cs.problem, cs.x1, cs.cfg);
      c.status = to_string(res.status);
      c.iterations = res.iterations;
      c.oracle_calls = res.oracle_calls;
      c.f_final = res.f_final;
      c.f_best = res.f_best;
      c.wall_time = spec.canonical ? 0.0 : res.wall_time;
      if (ropt.check_invariants) {
        InvariantOptions io;
        io.dim = cs.problem.dim();
        io.constraints = cs.problem.feasible.rows();
        io.expect_monotone = monotone_expected(cs.cfg, res.L1);
        c.invariant_violations = check_trace_invariants(res, cs.cfg, io).violations;
      }
      if (ropt.write_files) {
        c.trace_file = "traces/" + cell_stem(j.algo, j.scale, j.seed) + ".csv";
        std::ofstream out(art.out_dir / c.trace_file);
        write_trace_csv(out, res.trace, spec.canonical);
      }
    } catch (const std::exception& e) {
      c.status = "error";
      c.error = e.what();
    }
    return c;
  };

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const size_t width = spec.threads > 0 ? static_cast<size_t>(spec.threads) : hw;
  art.cells.resize(jobs.size());
  for (size_t start = 0; start < jobs.size(); start += width) {
    const size_t stop = std::min(jobs.size(), start + width);
    if (width == 1) {
      art.cells[start] = run_one(jobs[start]);
      continue;
    }
    std::vector<std::future<CellResult>> fut;
    for (size_t i = start; i < stop; ++i) fut.push_back(std::async(std::launch::async, run_one, jobs[i]));
    for (size_t i = start; i < stop; ++i) art.cells[i] = fut[i - start].get();
  }

  if (!ropt.write_files) return art;

  art.summary_csv = art.out_dir / "summary.csv";
  {
    std::ofstream out(art.summary_csv);
    out << "algorithm,init_scale,seed,status,iterations,oracle_calls,f_final,f_best,wall_time,trace_file,error\n";
    for (const auto& c : art.cells) {
      std::string err = c.error;
      std::replace(err.begin(), err.end(), ',', ';');
      out << c.algorithm << ',' << detail::fmt(c.init_scale) << ',' << c.seed << ',' << c.status << ','
          << c.iterations << ',' << c.oracle_calls << ',' << detail::fmt(c.f_final) << ','
          << detail::fmt(c.f_best) << ',' << detail::fmt(c.wall_time) << ',' << c.trace_file << ','
          << err << '\n';
    }
  }
  art.summary_json = art.out_dir / "summary.json";
  {
    nlohmann::ordered_json j;
    j["name"] = spec.name;
    j["problem"] = to_string(spec.problem);
    nlohmann::ordered_json cells = nlohmann::ordered_json::array();
    for (const auto& c : art.cells) {
      nlohmann::ordered_json e;
      e["algorithm"] = c.algorithm;
      e["init_scale"] = c.init_scale;
      e["seed"] = c.seed;
      e["status"] = c.status;
      e["iterations"] = c.iterations;
      e["oracle_calls"] = c.oracle_calls;
      e["f_final"] = c.f_final;
      e["f_best"] = c.f_best;
      e["wall_time"] = c.wall_time;
      e["trace_file"] = c.trace_file;
      if (!c.error.empty()) e["error"] = c.error;
      if (!c.invariant_violations.empty()) e["invariant_violations"] = c.invariant_violations;
      cells.push_back(e);
    }
    j["cells"] = cells;
    std::ofstream(art.summary_json) << j.dump(2) << '\n';
  }
  if (ropt.plots) art.figures = emit_plots(art, &art.warnings);
  return art;
}

}  // namespace snap
