#include "rcis/cli/commands.hpp"

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "rcis/cli/config.hpp"
#include "rcis/errors.hpp"
#include "rcis/hj_solver.hpp"
#include "rcis/oracle.hpp"
#include "rcis/parallel.hpp"
#include "rcis/setops.hpp"
#include "rcis/synthesis.hpp"

namespace rcis::cli {

namespace fs = std::filesystem;

namespace {

constexpr double bound_tol = 1e-9;
constexpr double oracle_match_tol = 1e-10;

std::string paint(const Console& c, const std::string& text, bool good) {
  if (!c.color) return text;
  return std::string(good ? "\x1b[32m" : "\x1b[31m") + text + "\x1b[0m";
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path);
  if (!os) throw IoError("cannot write '" + path.string() + "'");
  return os;
}

Vec parse_vector(const std::string& text) {
  Vec v;
  std::string item;
  std::istringstream ss(text);
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw ConfigError("cannot parse '" + text + "' as a comma-separated vector");
    }
  }
  return v;
}

struct Loaded {
  RunConfig config;
  std::unique_ptr<GameModel> model;
  std::optional<Grid> grid;
};

Loaded load(const std::string& path, bool need_grid) {
  Loaded l;
  l.config = load_config(path);
  if (!l.config.model) throw ConfigError(path + ": missing 'model' section");
  l.model = std::make_unique<GameModel>(l.config.model->build());
  if (l.config.grid) {
    l.grid = l.config.grid->build();
    l.model->check_constraint_bound(*l.grid);
    l.model->check_box_margin(*l.grid, l.config.extract.epsilon_set);
  } else if (need_grid) {
    throw ConfigError(path + ": missing 'grid' section");
  }
  return l;
}

fs::path field_path(const fs::path& dir, ValueKind kind) {
  return dir / ("value_" + std::string(to_string(kind)) + ".txt");
}

void print_solve_summary(const Console& c, const SolveReport& r) {
  c.out << to_string(r.kind) << ": " << paint(c, r.converged ? "converged" : "not converged", r.converged)
        << " after " << r.iterations << " iterations, residual " << format_scalar(r.final_residual) << ", "
        << std::fixed << std::setprecision(2) << r.wall_seconds << " s" << std::defaultfloat
        << std::setprecision(6) << '\n';
}

// --- solve ------------------------------------------------------------------

struct SolveArgs {
  std::string config;
  std::string out;
  std::string value;
  std::string backend;
  std::size_t max_iters = 0;
  double tol = 0.0;
  std::size_t progress = 0;
};

int cmd_solve(const SolveArgs& a, const Console& c) {
  Loaded l = load(a.config, true);
  RunConfig& cfg = l.config;
  if (!a.value.empty()) cfg.solve.value = parse_value_selection(a.value);
  if (!a.backend.empty()) cfg.solve.config.backend = parse_backend(a.backend);
  if (a.max_iters > 0) cfg.solve.config.max_iters = a.max_iters;
  if (a.tol > 0.0) cfg.solve.config.tol = a.tol;
  if (a.progress > 0) cfg.solve.config.progress_interval = a.progress;
  cfg.solve.config.validate();
  const fs::path dir = a.out.empty() ? fs::path(cfg.paths.out) : fs::path(a.out);
  fs::create_directories(dir);

  std::vector<const SolveResult*> results;
  std::optional<BothValues> both;
  std::optional<SolveResult> single;
  if (cfg.solve.value == ValueSelection::both) {
    both = solve_both_values(*l.model, *l.grid, cfg.solve.config);
    results = {&both->lower, &both->upper};
  } else {
    SolveConfig sc = cfg.solve.config;
    sc.kind = cfg.solve.value == ValueSelection::lower ? ValueKind::lower : ValueKind::upper;
    single = solve(*l.model, *l.grid, sc);
    results = {&*single};
  }

  auto report = open_output(dir / "solve_report.txt");
  report << "model = " << l.model->name() << '\n';
  bool converged = true;
  for (const SolveResult* r : results) {
    save_value_field(field_path(dir, r->report.kind).string(), r->field);
    write_solve_report(report, r->report);
    report << '\n';
    print_solve_summary(c, r->report);
    for (const auto& w : r->report.warnings) c.err << "warning: " << w << '\n';
    converged = converged && r->report.converged;
  }
  if (both) {
    report << "isaacs_gap_max = " << format_scalar(both->gap.max) << '\n';
    report << "isaacs_gap_min = " << format_scalar(both->gap.min) << '\n';
    report << "minimax_ok = " << (both->minimax_ok ? "true" : "false") << '\n';
    c.out << "isaacs gap: max " << format_scalar(both->gap.max) << ", min " << format_scalar(both->gap.min)
          << '\n';
  }
  c.out << "wrote " << dir.string() << '\n';
  return converged ? exit_ok : exit_not_converged;
}

// --- extract ----------------------------------------------------------------

struct ExtractArgs {
  std::string config;
  std::string field;
  std::optional<double> epsilon;
  std::vector<double> levels;
  bool vtk = false;
  std::string out;
};

int cmd_extract(const ExtractArgs& a, const Console& c) {
  ExtractSection ex;
  std::string out = "out";
  if (!a.config.empty()) {
    const RunConfig cfg = load_config(a.config);
    ex = cfg.extract;
    out = cfg.paths.out;
  }
  if (a.epsilon) ex.epsilon_set = *a.epsilon;
  if (!a.levels.empty()) ex.levels = a.levels;
  if (a.vtk) ex.vtk = true;
  if (!a.out.empty()) out = a.out;
  if (!(ex.epsilon_set >= 0.0)) throw ConfigError("epsilon_set must be >= 0");

  const ValueField field = load_value_field(a.field);
  if (!ex.levels.empty() && field.grid.dim() != 2)
    throw UnsupportedDimensionError("contours need a 2-D field, got dimension " +
                                    std::to_string(field.grid.dim()));
  const fs::path dir(out);
  const std::string stem = fs::path(a.field).stem().string();

  const GridMask mask = extract_sublevel(field, ex.epsilon_set);
  {
    auto os = open_output(dir / (stem + "_mask.csv"));
    write_mask_csv(os, mask);
  }
  c.out << "mask: " << mask.count() << " of " << field.grid.size() << " nodes with V <= "
        << format_scalar(ex.epsilon_set) << '\n';
  if (!ex.levels.empty()) {
    std::vector<Contour2D> contours;
    for (double level : ex.levels) contours.push_back(marching_squares(field, level));
    auto os = open_output(dir / (stem + "_contours.csv"));
    write_contour_csv(os, contours);
    for (const auto& ct : contours)
      c.out << "contour level " << format_scalar(ct.level) << ": " << ct.polylines.size() << " polylines\n";
  }
  if (ex.vtk) {
    auto os = open_output(dir / (stem + ".vtk"));
    write_vtk(os, field);
  }
  return exit_ok;
}

// --- compare ----------------------------------------------------------------

GridMask load_mask(const std::string& path, double epsilon) {
  if (fs::path(path).extension() == ".csv") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return read_mask_csv(in);
  }
  return extract_sublevel(load_value_field(path), epsilon);
}

int cmd_compare(const std::string& a, const std::string& b, double epsilon, const std::string& out,
                const Console& c) {
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon_set must be >= 0");
  const MaskComparison cmp = compare_masks(load_mask(a, epsilon), load_mask(b, epsilon));
  write_comparison(c.out, cmp);
  if (!out.empty()) {
    auto os = open_output(out);
    write_comparison(os, cmp);
  }
  return exit_ok;
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string field;
  std::string x0;
  std::optional<double> t_final;
  std::optional<double> dt_sim;
  std::optional<std::uint64_t> seed;
  std::string control;
  std::string disturbance;
  std::string control_value;
  std::string disturbance_value;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, const Console& c) {
  Loaded l = load(a.config, false);
  SimulateSection s = l.config.simulate;
  if (!a.x0.empty()) s.x0 = parse_vector(a.x0);
  if (a.t_final) s.t_final = *a.t_final;
  if (a.dt_sim) s.dt_sim = *a.dt_sim;
  if (a.seed) s.seed = *a.seed;
  if (!a.control.empty()) s.control = PolicySpec{a.control, {}};
  if (!a.disturbance.empty()) s.disturbance = PolicySpec{a.disturbance, {}};
  if (!a.control_value.empty()) s.control.values = {parse_vector(a.control_value)};
  if (!a.disturbance_value.empty()) s.disturbance.values = {parse_vector(a.disturbance_value)};
  if (s.x0.size() != l.model->state_dim())
    throw ConfigError("simulate: x0 has " + std::to_string(s.x0.size()) + " entries, model state dimension is " +
                      std::to_string(l.model->state_dim()));

  const bool needs_field = s.control.type == "feedback" || s.disturbance.type == "worst";
  std::optional<ValueField> field;
  std::unique_ptr<HamiltonianEvaluator> evaluator;
  std::unique_ptr<FeedbackPolicy> policy;
  if (needs_field) {
    if (a.field.empty()) throw ConfigError("simulate: --field is required for feedback/worst policies");
    field = load_value_field(a.field);
    evaluator = std::make_unique<HamiltonianEvaluator>(*l.model, l.config.solve.config.hamiltonian);
    policy = std::make_unique<FeedbackPolicy>(*field, *evaluator);
  }

  auto fixed = [](const PolicySpec& p, const std::string& role) -> std::variant<ConstantAction, ActionSequence> {
    if (p.values.empty()) throw ConfigError("simulate." + role + ": '" + p.type + "' needs values");
    if (p.type == "constant") return ConstantAction{p.values.front()};
    return ActionSequence{p.values};
  };
  ControlPolicy control = FeedbackControl{policy.get()};
  if (s.control.type == "constant" || s.control.type == "sequence") {
    std::visit([&](auto&& v) { control = v; }, fixed(s.control, "control"));
  } else if (s.control.type != "feedback") {
    throw ConfigError("simulate.control: unknown type '" + s.control.type + "' (feedback|constant|sequence)");
  }
  DisturbancePolicy disturbance = WorstCaseDisturbance{policy.get()};
  if (s.disturbance.type == "random") {
    disturbance = RandomDisturbance{s.seed};
  } else if (s.disturbance.type == "constant" || s.disturbance.type == "sequence") {
    std::visit([&](auto&& v) { disturbance = v; }, fixed(s.disturbance, "disturbance"));
  } else if (s.disturbance.type != "worst") {
    throw ConfigError("simulate.disturbance: unknown type '" + s.disturbance.type +
                      "' (worst|random|constant|sequence)");
  }

  const fs::path path = a.out.empty() ? fs::path(l.config.paths.out) / "trajectory.csv" : fs::path(a.out);
  Trajectory traj;
  int code = exit_ok;
  try {
    traj = simulate(*l.model, control, disturbance, s.x0, s.t_final, s.dt_sim);
  } catch (const DivergedError& e) {
    c.err << "error: " << e.what() << " (partial trajectory written)\n";
    traj = e.partial();
    code = exit_usage;
  }
  auto os = open_output(path);
  write_trajectory_csv(os, traj);
  c.out << traj.size() << " samples, max h = " << format_scalar(traj.max_constraint()) << ", wrote "
        << path.string() << '\n';
  return code;
}

// --- verify -----------------------------------------------------------------

struct VerifyArgs {
  std::string config;
  std::string field;
  std::string upper;
  bool quick = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> trials;
  std::string out;
};

class CheckLog {
 public:
  CheckLog(const Console& c, std::ostream* file) : c_(c), file_(file) {}

  void record(const std::string& name, bool ok, const std::string& detail) {
    const std::string status = ok ? "PASS" : "FAIL";
    c_.out << paint(c_, status, ok) << ' ' << name << ": " << detail << '\n';
    if (file_) *file_ << status << ' ' << name << ": " << detail << '\n';
    failed_ = failed_ || !ok;
  }
  bool failed() const { return failed_; }

 private:
  const Console& c_;
  std::ostream* file_;
  bool failed_ = false;
};

void check_field(CheckLog& log, const GameModel& model, const ValueField& f, const std::string& label) {
  const double bound = model.constraint().bound;
  const double lo = f.min(), hi = f.max();
  std::ostringstream d;
  d << "min " << format_scalar(lo) << ", max " << format_scalar(hi) << ", M " << format_scalar(bound);
  log.record(label + " bounds", lo >= -bound_tol && hi <= bound + bound_tol, d.str());

  double worst = 0.0;
  Vec x(f.grid.dim());
  for (std::size_t k = 0; k < f.grid.size(); ++k) {
    f.grid.node_point(k, x);
    worst = std::max(worst, model.eval_constraint(x) - f.values[k]);
  }
  log.record(label + " obstacle", worst <= bound_tol, "max(h - V) = " + format_scalar(worst));
}

void check_oracle(CheckLog& log, const GameModel& model, const Grid& grid, const RunConfig& cfg) {
  const std::size_t nodes = cfg.verify.oracle_nodes;
  const Grid coarse(grid.lower(), grid.upper(), std::vector<std::size_t>(grid.dim(), nodes));
  SolveConfig sc = cfg.solve.config;
  sc.backend = Backend::sl;
  sc.tol = cfg.verify.oracle_tol;
  sc.progress_interval = 0;
  const BothValues sl = solve_both_values(model, coarse, sc);
  const HamiltonianEvaluator ev(model, sc.hamiltonian);
  const oracle::DiscreteGame game = oracle::build_discrete_game(
      model, coarse, ev.control_samples(), ev.disturbance_samples(), sc.gamma, sl.lower.report.dt);
  for (const SolveResult* r : {&sl.lower, &sl.upper}) {
    const auto truth = oracle::brute_force_value(game, r->report.kind, cfg.verify.oracle_tol);
    double diff = 0.0;
    for (std::size_t k = 0; k < truth.values.size(); ++k)
      diff = std::max(diff, std::abs(truth.values[k] - r->field.values[k]));
    std::ostringstream d;
    d << nodes << "^" << grid.dim() << " nodes, sup |SL - oracle| = " << format_scalar(diff);
    log.record("oracle equivalence (" + std::string(to_string(r->report.kind)) + ")",
               r->report.converged && diff <= oracle_match_tol, d.str());
  }
}

int cmd_verify(const VerifyArgs& a, const Console& c) {
  Loaded l = load(a.config, true);
  const RunConfig& cfg = l.config;
  std::ofstream file;
  if (!a.out.empty()) file = open_output(a.out);
  CheckLog log(c, a.out.empty() ? nullptr : &file);

  std::optional<ValueField> lower, upper;
  if (!a.field.empty()) lower = load_value_field(a.field);
  if (!a.upper.empty()) upper = load_value_field(a.upper);
  if (lower) check_field(log, *l.model, *lower, "field");
  if (upper) check_field(log, *l.model, *upper, "upper field");
  if (lower && upper) {
    if (!(lower->grid == upper->grid)) throw ShapeError("verify: the two fields live on different grids");
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lower->values.size(); ++k)
      worst = std::max(worst, lower->values[k] - upper->values[k]);
    log.record("minimax order", worst <= bound_tol, "max(V- - V+) = " + format_scalar(worst));
  }

  check_oracle(log, *l.model, *l.grid, cfg);

  if (lower && !a.quick) {
    VerificationOptions opt;
    opt.trials = a.trials.value_or(cfg.verify.trials);
    opt.epsilon = cfg.verify.epsilon;
    opt.t_final = cfg.verify.t_final;
    opt.dt_sim = cfg.verify.dt_sim;
    opt.seed = a.seed.value_or(cfg.verify.seed);
    opt.margin = cfg.verify.margin;
    const HamiltonianEvaluator ev(*l.model, cfg.solve.config.hamiltonian);
    const GridMask mask = extract_sublevel(*lower, cfg.extract.epsilon_set);
    const VerificationReport rep = verify_invariance(*l.model, *lower, mask, ev, opt);
    if (!a.out.empty()) write_verification_report(file, rep);
    std::ostringstream d;
    if (rep.no_interior) {
      d << "mask has no interior node";
    } else {
      d << rep.passes << "/" << rep.runs << " runs kept sup h <= " << format_scalar(opt.epsilon)
        << " (fraction " << format_scalar(rep.pass_fraction) << ", threshold " << format_scalar(cfg.verify.threshold)
        << "), worst sup h " << format_scalar(rep.worst_sup_h);
    }
    log.record("closed-loop invariance", rep.passed(cfg.verify.threshold), d.str());
  }
  return log.failed() ? exit_check_failed : exit_ok;
}

template <typename F>
int guarded(const Console& c, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    c.err << "error: " << e.what() << '\n';
  } catch (const fs::filesystem_error& e) {
    c.err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    c.err << "error: " << e.what() << '\n';
  }
  return exit_usage;
}

}  // namespace

bool color_enabled() {
  const char* no_color = std::getenv("NO_COLOR");
  if (no_color && *no_color) return false;
  return isatty(STDOUT_FILENO) != 0;
}

int run(const std::vector<std::string>& args, const Console& console) {
  CLI::App app{"Robust controlled invariant sets via Hamilton-Jacobi value functions", "rcis"};
  app.require_subcommand(1);
  app.fallthrough();
  std::size_t threads = 0;
  app.add_option("--threads", threads, "Worker threads (0 = runtime default)");

  SolveArgs sa;
  auto* solve_cmd = app.add_subcommand("solve", "Solve for the lower and/or upper value function");
  solve_cmd->add_option("--config", sa.config, "JSON run configuration")->required();
  solve_cmd->add_option("--out", sa.out, "Output directory (default: paths.out)");
  solve_cmd->add_option("--value", sa.value, "lower | upper | both");
  solve_cmd->add_option("--backend", sa.backend, "sl | fd");
  solve_cmd->add_option("--max-iters", sa.max_iters, "Iteration cap");
  solve_cmd->add_option("--tol", sa.tol, "Sup-norm residual tolerance");
  solve_cmd->add_option("--progress", sa.progress, "Progress line to stderr every N iterations");

  ExtractArgs ea;
  double extract_eps = 0.0;
  auto* extract_cmd = app.add_subcommand("extract", "Extract sublevel masks and contours from a value field");
  extract_cmd->add_option("--field", ea.field, "Value field file")->required();
  extract_cmd->add_option("--config", ea.config, "JSON run configuration (extract and paths sections)");
  auto* eps_opt = extract_cmd->add_option("--epsilon", extract_eps, "Sublevel threshold epsilon_set");
  extract_cmd->add_option("--level", ea.levels, "Contour level (repeatable)");
  extract_cmd->add_flag("--vtk", ea.vtk, "Also write a legacy VTK file of the field");
  extract_cmd->add_option("--out", ea.out, "Output directory");

  std::string cmp_a, cmp_b, cmp_out;
  double cmp_eps = 0.01;
  auto* compare_cmd = app.add_subcommand("compare", "Compare two masks (CSV) or fields (extracted at --epsilon)");
  compare_cmd->add_option("a", cmp_a, "Mask CSV or value field")->required();
  compare_cmd->add_option("b", cmp_b, "Mask CSV or value field")->required();
  compare_cmd->add_option("--epsilon", cmp_eps, "Threshold applied to field inputs");
  compare_cmd->add_option("--out", cmp_out, "Also write the report to this file");

  SimulateArgs ma;
  double t_final = 0.0, dt_sim = 0.0;
  std::uint64_t sim_seed = 0;
  auto* simulate_cmd = app.add_subcommand("simulate", "Simulate one closed-loop trajectory");
  simulate_cmd->add_option("--config", ma.config, "JSON run configuration")->required();
  simulate_cmd->add_option("--field", ma.field, "Value field for feedback/worst-case policies");
  simulate_cmd->add_option("--x0", ma.x0, "Initial state, comma separated");
  auto* tf_opt = simulate_cmd->add_option("--t-final", t_final, "Horizon");
  auto* dt_opt = simulate_cmd->add_option("--dt-sim", dt_sim, "Integration step");
  auto* sim_seed_opt = simulate_cmd->add_option("--seed", sim_seed, "Seed for random disturbances");
  simulate_cmd->add_option("--control", ma.control, "feedback | constant | sequence");
  simulate_cmd->add_option("--disturbance", ma.disturbance, "worst | random | constant | sequence");
  simulate_cmd->add_option("--control-value", ma.control_value, "Action for a constant control, comma separated");
  simulate_cmd->add_option("--disturbance-value", ma.disturbance_value,
                           "Action for a constant disturbance, comma separated");
  simulate_cmd->add_option("--out", ma.out, "Trajectory CSV path");

  VerifyArgs va;
  std::uint64_t verify_seed = 0;
  std::size_t trials = 0;
  auto* verify_cmd = app.add_subcommand("verify", "Check invariants, oracle equivalence and closed-loop invariance");
  verify_cmd->add_option("--config", va.config, "JSON run configuration")->required();
  verify_cmd->add_option("--field", va.field, "Lower value field to check");
  verify_cmd->add_option("--upper", va.upper, "Upper value field to check against --field");
  verify_cmd->add_flag("--quick", va.quick, "Skip closed-loop simulation");
  auto* verify_seed_opt = verify_cmd->add_option("--seed", verify_seed, "Seed for trial selection");
  auto* trials_opt = verify_cmd->add_option("--trials", trials, "Number of start nodes");
  verify_cmd->add_option("--out", va.out, "Write the check log to this file");

  std::vector<const char*> argv{"rcis"};
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, console.out, console.err);
    return code == 0 ? exit_ok : exit_usage;
  }

  set_thread_count(threads);
  if (*eps_opt) ea.epsilon = extract_eps;
  if (*tf_opt) ma.t_final = t_final;
  if (*dt_opt) ma.dt_sim = dt_sim;
  if (*sim_seed_opt) ma.seed = sim_seed;
  if (*verify_seed_opt) va.seed = verify_seed;
  if (*trials_opt) va.trials = trials;

  return guarded(console, [&] {
    if (*solve_cmd) return cmd_solve(sa, console);
    if (*extract_cmd) return cmd_extract(ea, console);
    if (*compare_cmd) return cmd_compare(cmp_a, cmp_b, cmp_eps, cmp_out, console);
    if (*simulate_cmd) return cmd_simulate(ma, console);
    return cmd_verify(va, console);
  });
}

}  // namespace rcis::cli
