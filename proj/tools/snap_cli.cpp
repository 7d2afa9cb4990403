// snap command-line interface: solve, check, bench, verify.
//
// Exit codes: 0 success, 1 solver or verification failure, 2 usage error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "snap/snap.hpp"

namespace {

using namespace snap;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solver flags shared by `solve` and `bench`, stored as spec-file keys.
struct SolverFlags {
  std::map<std::string, std::string> values;
  bool no_stop = false;

  void add_to(CLI::App* app) {
    auto opt = [&](const char* flag, const char* key, const char* help) {
      app->add_option_function<std::string>(
          flag, [this, key](const std::string& v) { values[key] = v; }, help);
    };
    opt("--eps-g", "eps_g", "first-order tolerance eps_G");
    opt("--eps-h", "eps_h", "second-order tolerance eps_H");
    opt("--alpha", "alpha", "PGD step alpha_pi (default 1/L1)");
    opt("--beta", "beta", "SP-GD step beta");
    opt("--delta", "delta", "eigen-oracle failure probability");
    opt("--r-th", "r_th", "PGD iterations between backtracked NCD steps and the next oracle call");
    opt("--max-iter", "max_iter", "iteration budget");
    opt("--spgd-T", "spgd_T", "SP-GD iterations T");
    opt("--spgd-R", "spgd_R", "SP-GD initial radius R");
    opt("--spgd-F", "spgd_F", "SP-GD descent threshold F");
    opt("--oracle", "oracle", "eigen oracle: hessian | spgd");
    opt("--active-tol", "active_tol", "relative activity tolerance");
    app->add_flag("--no-stop", no_stop, "keep iterating after the stopping test passes");
  }

  void apply(SolverConfig& cfg) const {
    for (const auto& [k, v] : values) apply_solver_setting(cfg, k, v);
    if (no_stop) cfg.no_stop = true;
  }
};

/// Problem selection shared by `solve` and `check`.
struct ProblemFlags {
  std::string preset;
  std::string poly_file;
  std::string quad_file;
  std::optional<double> perturb;
  std::optional<std::uint64_t> seed;

  void add_to(CLI::App* app) {
    app->add_option("--preset", preset, "preset name or spec file");
    app->add_option("--poly", poly_file, "polyhedron file (header 'm d', rows A_j b_j)");
    app->add_option("--quad", quad_file, "quadratic file (header 'd d+1', rows Q_j c_j)");
    app->add_option("--perturb", perturb, "norm of a random linear perturbation q");
    app->add_option("--seed", seed, "data seed (default: first seed of the preset)");
  }

  bool from_files() const { return !poly_file.empty() || !quad_file.empty(); }

  void check() const {
    if (from_files() && !preset.empty()) throw UsageError("use either --preset or --poly/--quad");
    if (!from_files() && preset.empty()) throw UsageError("a problem is required: --preset or --poly with --quad");
    if (from_files() && (poly_file.empty() || quad_file.empty()))
      throw UsageError("--poly and --quad must be given together");
  }
};

ProblemInstance load_quadratic_problem(const std::string& poly_file, const std::string& quad_file) {
  Polyhedron poly = load_polyhedron(poly_file);
  std::ifstream in(quad_file);
  if (!in) throw ParseError("cannot open " + quad_file);
  const Matrix Qc = parse_matrix_text(in, quad_file);
  const Index d = Qc.rows();
  if (Qc.cols() != d + 1) throw ParseError(quad_file + ": expected d rows of d+1 numbers");
  return make_quadratic(fs::path(quad_file).stem().string(), Qc.leftCols(d), Qc.col(d), std::move(poly));
}

Vector parse_point(const std::string& text) {
  if (fs::is_regular_file(text)) {
    std::ifstream in(text);
    std::string all((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    for (char& ch : all)
      if (ch == '\n' || ch == ' ' || ch == '\t') ch = ',';
    return detail::to_vector(all, "point");
  }
  return detail::to_vector(text, "point");
}

void print_summary(const SolveResult& res, const std::string& problem, const std::string& algo,
                   const std::string& trace_path, bool canonical) {
  nlohmann::ordered_json j;
  j["problem"] = problem;
  j["algorithm"] = algo;
  j["status"] = to_string(res.status);
  j["iterations"] = res.iterations;
  j["oracle_calls"] = res.oracle_calls;
  j["f_final"] = res.f_final;
  j["f_best"] = res.f_best;
  j["L1"] = res.L1;
  j["L2"] = res.L2;
  j["wall_time"] = canonical ? 0.0 : res.wall_time;
  if (res.certificate_verified) j["certificate_verified"] = *res.certificate_verified;
  if (!res.message.empty()) j["message"] = res.message;
  j["trace"] = trace_path;
  std::vector<double> x(res.x_final.data(), res.x_final.data() + std::min<Index>(res.x_final.size(), 16));
  j["x_final_head"] = x;
  std::cout << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

int cmd_solve(ProblemFlags& pf, SolverFlags& sf, const std::string& algo_in, std::optional<double> init_scale,
              const std::string& x0, std::string trace_path, bool canonical) {
  pf.check();
  ProblemInstance problem = [&]() -> ProblemInstance {
    if (pf.from_files()) return load_quadratic_problem(pf.poly_file, pf.quad_file);
    return example1();  // placeholder, replaced below
  }();
  Vector x1;
  SolverConfig cfg;
  std::string algo = algo_in.empty() ? "snap" : algo_in;
  std::string label;
  if (!pf.from_files()) {
    ExperimentSpec spec = load_experiment_spec(pf.preset);
    if (algo_in.empty()) algo = spec.algorithms.front();
    if (pf.perturb) {
      spec.perturb = *pf.perturb;
      spec.q.reset();
      for (auto& [a, kv] : spec.overrides)
        std::erase_if(kv, [](const auto& p) { return p.first == "perturb" || p.first == "q"; });
    }
    if (!x0.empty()) spec.x0 = parse_point(x0);
    const double scale = init_scale.value_or(spec.init_scales.empty() ? 1.0 : spec.init_scales.front());
    const std::uint64_t seed = pf.seed.value_or(spec.seeds.front());
    CellSetup cs = setup_cell(spec, algo, scale, seed);
    problem = std::move(cs.problem);
    x1 = std::move(cs.x1);
    cfg = std::move(cs.cfg);
    label = spec.name;
  } else {
    cfg = configure_algorithm(cfg, algo);
    const std::uint64_t seed = pf.seed.value_or(1);
    cfg.seed = mix_seed(seed, 13);
    if (pf.perturb && *pf.perturb > 0.0) problem = perturb_linear(problem, *pf.perturb, mix_seed(seed, 7));
    x1 = x0.empty() ? initial_point(problem, init_scale.value_or(1.0), mix_seed(seed, 11))
                    : project_feasible(problem.feasible, parse_point(x0));
    label = problem.name;
  }
  sf.apply(cfg);
  if (x1.size() != problem.dim()) throw UsageError("--x0 has the wrong dimension");

  const SolveResult res = solve(problem, x1, cfg);
  if (trace_path.empty()) {
    trace_path = (resolve_output_dir("runs/solve") / (label + "__" + algo + ".csv")).string();
  }
  fs::create_directories(fs::path(trace_path).parent_path().empty() ? fs::path(".")
                                                                     : fs::path(trace_path).parent_path());
  {
    std::ofstream out(trace_path);
    if (!out) throw ParseError("cannot write " + trace_path);
    write_trace_csv(out, res.trace, canonical);
  }
  print_summary(res, label, algo, trace_path, canonical);
  return res.status == Status::line_search_failure ? kExitFailure : kExitOk;
}

int cmd_check(ProblemFlags& pf, const std::string& point, double eps_G, double eps_H, double alpha,
              int grid) {
  pf.check();
  if (point.empty()) throw UsageError("--point is required");
  ProblemInstance problem = example1();
  if (pf.from_files()) {
    problem = load_quadratic_problem(pf.poly_file, pf.quad_file);
  } else {
    const ExperimentSpec spec = load_experiment_spec(pf.preset);
    const std::uint64_t seed = pf.seed.value_or(spec.seeds.front());
    problem = make_problem(spec.problem, spec.params, seed);
    const double q = pf.perturb.value_or(0.0);
    if (q > 0.0) problem = perturb_linear(problem, q, mix_seed(seed, 7));
  }
  if (pf.from_files() && pf.perturb && *pf.perturb > 0.0)
    problem = perturb_linear(problem, *pf.perturb, mix_seed(pf.seed.value_or(1), 7));
  const Vector x = parse_point(point);
  if (x.size() != problem.dim()) throw UsageError("--point has dimension " + std::to_string(x.size()) +
                                                  ", problem has " + std::to_string(problem.dim()));
  const StationarityReport rep = check_sosp1(problem, x, eps_G, eps_H, alpha);
  std::optional<Sosp2Result> s2;
  if (problem.dim() <= kSosp2MaxDim && problem.oracle.has_hessian())
    s2 = check_sosp2_bruteforce(problem, x, eps_G, eps_H, grid);

  auto opt_num = [](const std::optional<double>& v) { return v ? detail::fmt(*v) : std::string("vacuous"); };
  std::cout << "problem            " << problem.name << " (d = " << problem.dim() << ")\n"
            << "f                  " << detail::fmt(rep.f) << '\n'
            << "fosp1_gap          " << detail::fmt(rep.fosp1_gap) << '\n'
            << "active / free dim  " << rep.active_count << " / " << rep.free_dim << '\n'
            << "restricted_min_eig " << opt_num(rep.restricted_min_eig) << '\n'
            << "SOSP1              " << (rep.sosp1 ? "true" : "false") << '\n'
            << "kkt_residual       " << detail::fmt(rep.kkt_residual) << '\n'
            << "min multiplier     "
            << (rep.active_count ? detail::fmt(rep.min_active_multiplier) : std::string("n/a")) << '\n'
            << "SC                 " << (rep.sc_holds ? "true" : "false") << '\n';
  if (s2) {
    std::cout << "FOSP2(brute)       " << (s2->fosp2 ? "true" : "false") << '\n'
              << "SOSP2(brute)       " << (s2->sosp2 ? "true" : "false") << '\n'
              << "min quadratic form " << detail::fmt(s2->min_quadratic) << '\n';
    if (s2->witness) {
      std::cout << "witness            ";
      for (Index i = 0; i < s2->witness->size(); ++i) std::cout << (i ? "," : "") << detail::fmt((*s2->witness)[i]);
      std::cout << '\n';
    }
  } else {
    std::cout << "SOSP2(brute)       skipped (needs d <= " << kSosp2MaxDim << " and Hessian access)\n";
  }
  std::cout << "\nf,fosp1_gap,restricted_min_eig,sosp1,kkt_residual,min_active_multiplier,sc_holds,"
               "active_count,free_dim,fosp2,sosp2,min_quadratic\n"
            << detail::fmt(rep.f) << ',' << detail::fmt(rep.fosp1_gap) << ','
            << opt_num(rep.restricted_min_eig) << ',' << (rep.sosp1 ? "true" : "false") << ','
            << detail::fmt(rep.kkt_residual) << ','
            << (rep.active_count ? detail::fmt(rep.min_active_multiplier) : std::string()) << ','
            << (rep.sc_holds ? "true" : "false") << ',' << rep.active_count << ',' << rep.free_dim << ','
            << (s2 ? (s2->fosp2 ? "true" : "false") : "") << ',' << (s2 ? (s2->sosp2 ? "true" : "false") : "")
            << ',' << (s2 ? detail::fmt(s2->min_quadratic) : std::string()) << '\n';
  return kExitOk;
}

int cmd_bench(const std::string& spec_name, SolverFlags& sf, const std::string& output, bool canonical,
              int threads, long cap) {
  if (spec_name.empty()) throw UsageError("--spec is required");
  ExperimentSpec spec;
  try {
    spec = load_experiment_spec(spec_name);
  } catch (const ParseError& e) {
    throw UsageError(e.what());
  }
  for (const auto& [k, v] : sf.values) apply_solver_setting(spec.base, k, v);
  if (sf.no_stop) spec.base.no_stop = true;
  if (!output.empty()) spec.output_dir = output;
  if (canonical) spec.canonical = true;
  if (threads > 0) spec.threads = threads;
  RunOptions ro;
  ro.max_iter_cap = cap;
  const RunArtifact art = run_experiment(spec, ro);
  int rc = kExitOk;
  std::cout << "algorithm        c        seed  status               iters   f_final\n";
  for (const auto& c : art.cells) {
    char line[256];
    std::snprintf(line, sizeof line, "%-16s %-8s %-5llu %-20s %-7ld %s", c.algorithm.c_str(),
                  detail::fmt(c.init_scale).c_str(), static_cast<unsigned long long>(c.seed),
                  c.status.c_str(), c.iterations, detail::fmt(c.f_final).c_str());
    std::cout << line << '\n';
    if (!c.error.empty()) {
      std::cout << "  error: " << c.error << '\n';
      rc = kExitFailure;
    }
    for (const auto& v : c.invariant_violations) std::cout << "  invariant: " << v << '\n';
  }
  for (const auto& w : art.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "summary: " << art.summary_csv.string() << '\n';
  for (const auto& f : art.figures) std::cout << "figure:  " << f.string() << '\n';
  return rc;
}

int cmd_verify(std::vector<std::string> presets, long cap) {
  if (presets.empty()) presets = list_presets();
  if (presets.empty()) throw UsageError("no presets found in " + preset_dir().string());
  bool ok = true;
  for (const auto& name : presets) {
    ExperimentSpec spec = load_experiment_spec(name);
    RunOptions ro;
    ro.write_files = false;
    ro.max_iter_cap = cap;
    const RunArtifact art = run_experiment(spec, ro);
    long bad = 0;
    for (const auto& c : art.cells) {
      if (!c.error.empty() || !c.invariant_violations.empty()) ++bad;
      for (const auto& v : c.invariant_violations)
        std::cout << "  " << name << " " << c.algorithm << " c=" << detail::fmt(c.init_scale) << " seed "
                  << c.seed << ": " << v << '\n';
      if (!c.error.empty()) std::cout << "  " << name << " " << c.algorithm << ": error " << c.error << '\n';
    }
    std::cout << (bad ? "FAIL " : "PASS ") << name << " (" << art.cells.size() << " runs, " << bad
              << " with violations)\n";
    ok = ok && bad == 0;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"snap: second-order stationary points under linear inequality constraints"};
  app.require_subcommand(1);

  auto* solve_cmd = app.add_subcommand("solve", "run one algorithm on a preset or matrix files");
  ProblemFlags solve_pf;
  SolverFlags solve_sf;
  std::string algo, x0, trace;
  std::optional<double> init_scale;
  bool canonical = false;
  solve_pf.add_to(solve_cmd);
  solve_sf.add_to(solve_cmd);
  solve_cmd->add_option("--algo", algo, "pgd | pgd-ls | snap | snap-plus | snap-simplified");
  solve_cmd->add_option("--init-scale", init_scale, "scale c of the random starting point");
  solve_cmd->add_option("--x0", x0, "explicit starting point, comma separated");
  solve_cmd->add_option("--trace", trace, "trace CSV path");
  solve_cmd->add_flag("--canonical", canonical, "write elapsed times as 0");

  auto* check_cmd = app.add_subcommand("check", "stationarity report at a point");
  ProblemFlags check_pf;
  std::string point;
  double eps_G = 1e-6, eps_H = 1e-6, alpha = 0.0;
  int grid = 64;
  check_pf.add_to(check_cmd);
  check_cmd->add_option("--point", point, "point, comma separated, or a file of numbers");
  check_cmd->add_option("--eps-g", eps_G, "first-order tolerance");
  check_cmd->add_option("--eps-h", eps_H, "second-order tolerance");
  check_cmd->add_option("--alpha", alpha, "step for the proximal gradient (default 1/L1)");
  check_cmd->add_option("--grid", grid, "grid points per axis for the brute-force SOSP2 check");

  auto* bench_cmd = app.add_subcommand("bench", "run an experiment spec");
  std::string spec_name, output;
  bool bench_canonical = false;
  int threads = 0;
  long bench_cap = 0;
  SolverFlags bench_sf;
  bench_cmd->add_option("--spec", spec_name, "spec file or preset name");
  bench_cmd->add_option("--output", output, "output directory");
  bench_cmd->add_flag("--canonical", bench_canonical, "zero the wall-clock columns");
  bench_cmd->add_option("--threads", threads, "parallel cells");
  bench_cmd->add_option("--max-iter-cap", bench_cap, "cap every cell's iteration budget");
  bench_sf.add_to(bench_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "run the trace invariant suite over presets");
  std::vector<std::string> presets;
  long verify_cap = 0;
  verify_cmd->add_option("--presets", presets, "presets to check (default: all)")->delimiter(',');
  verify_cmd->add_option("--max-iter-cap", verify_cap, "cap every run's iteration budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*solve_cmd) return cmd_solve(solve_pf, solve_sf, algo, init_scale, x0, trace, canonical);
    if (*check_cmd) return cmd_check(check_pf, point, eps_G, eps_H, alpha, grid);
    if (*bench_cmd) return cmd_bench(spec_name, bench_sf, output, bench_canonical, threads, bench_cap);
    if (*verify_cmd) return cmd_verify(presets, verify_cap);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}
