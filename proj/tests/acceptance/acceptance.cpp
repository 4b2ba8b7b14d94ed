// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero if any criterion fails.
//
// The full suite runs three times: twice with one thread and once with
// several. Every deterministic artifact of the three runs must match byte for
// byte (criterion 7). Wall-clock limits are judged on the first run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rcis/dynamics.hpp"
#include "rcis/hamiltonian.hpp"
#include "rcis/hj_solver.hpp"
#include "rcis/oracle.hpp"
#include "rcis/parallel.hpp"
#include "rcis/setops.hpp"
#include "rcis/synthesis.hpp"
#include "rcis/value_field.hpp"

namespace fs = std::filesystem;
using namespace rcis;

namespace {

// Criterion 1: jet benchmark.
constexpr std::size_t jet_nodes = 201;
constexpr double jet_half_width = 1.0;
constexpr double jet_gamma = 0.1;
constexpr double jet_tol = 1e-8;
constexpr double bound_slack = 1e-9;
constexpr double jet_bound = 0.5;
constexpr double isaacs_gap_limit = 5e-3;
constexpr double epsilon_set = 0.01;
constexpr double mask_lower_upper_limit = 0.01;
constexpr double jet_seconds_limit = 300.0;

// Criterion 2: oracle equivalence.
constexpr std::size_t oracle_nodes = 21;
constexpr double oracle_tol = 1e-14;
constexpr double oracle_match = 1e-10;
constexpr double oracle_seconds_limit = 10.0;

// Criterion 3: backend consistency.
constexpr std::size_t coarse_nodes = 101;
constexpr double backend_sup_limit = 0.02;
constexpr double backend_mask_limit = 0.02;
constexpr std::size_t band_width = 2;

// Criterion 4: contraction and monotone iterates.
constexpr double contraction_slack = 1e-12;
constexpr double monotone_slack = 1e-12;

// Criterion 5: singleton oracle.
constexpr double singleton_dx = 0.005;
constexpr std::size_t singleton_samples = 50;
constexpr std::uint64_t singleton_seed = 20240501;
constexpr double singleton_tol = 1e-10;
constexpr double payoff_t_final = 140.0;
constexpr double payoff_dt = 0.01;
constexpr double singleton_match = 0.05;

// Criterion 6: closed-loop invariance.
constexpr std::size_t invariance_trials = 100;
constexpr double invariance_epsilon = 0.05;
constexpr double invariance_t_final = 10.0;
constexpr double invariance_dt = 0.01;
constexpr std::uint64_t invariance_seed = 1;
constexpr double invariance_threshold = 0.99;
constexpr double invariance_seconds_limit = 60.0;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Outcome {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

struct SlRun {
  std::string label;
  SolveReport report;
  std::vector<double> residuals;
};

double sup_diff_off_band(const ValueField& a, const ValueField& b) {
  double sup = 0.0;
  for (std::size_t k = 0; k < a.grid.size(); ++k) {
    if (a.grid.in_boundary_band(k, band_width)) continue;
    sup = std::max(sup, std::abs(a.values[k] - b.values[k]));
  }
  return sup;
}

class Suite {
 public:
  Suite(fs::path dir, std::size_t threads) : dir_(std::move(dir)), threads_(threads) {
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    summary_.open(dir_ / "summary.txt");
  }

  std::vector<Outcome> run() {
    set_thread_count(threads_);
    const GameModel jet = builtin_model("jet_engine");
    const Grid grid(Vec(2, -jet_half_width), Vec(2, jet_half_width), {jet_nodes, jet_nodes});
    SolveConfig sl;
    sl.gamma = jet_gamma;
    sl.tol = jet_tol;

    auto start = Clock::now();
    const BothValues jet_sl = solve_both_values(jet, grid, sl);
    const double jet_seconds = seconds_since(start);
    keep_sl("jet 201 sl", jet_sl);
    criterion_jet(jet, jet_sl, jet_seconds);
    criterion_oracle(jet);
    criterion_backends(jet, grid, jet_sl);
    criterion_singleton();
    criterion_contraction();
    criterion_invariance(jet, jet_sl);
    set_thread_count(0);
    return outcomes_;
  }

  const std::map<std::string, double>& timings() const { return timings_; }

 private:
  std::ofstream open(const std::string& name) { return std::ofstream(dir_ / name, std::ios::binary); }

  void record(int id, const std::string& name, bool pass, const std::string& detail) {
    outcomes_.push_back({id, name, pass, detail});
  }

  void metric(const std::string& key, double value) {
    summary_ << key << " = " << format_scalar(value) << '\n';
  }

  void keep_sl(const std::string& label, const BothValues& both) {
    sl_runs_.push_back({label + " lower", both.lower.report, both.lower.field.residual_history});
    sl_runs_.push_back({label + " upper", both.upper.report, both.upper.field.residual_history});
  }

  void save_both(const std::string& prefix, const BothValues& both) {
    for (const SolveResult* r : {&both.lower, &both.upper}) {
      const std::string kind(to_string(r->report.kind));
      auto field = open(prefix + "_value_" + kind + ".txt");
      write_value_field(field, r->field);
      auto report = open(prefix + "_report_" + kind + ".txt");
      write_solve_report(report, r->report);
    }
  }

  void criterion_jet(const GameModel& jet, const BothValues& both, double seconds) {
    save_both("c1", both);
    const bool converged = both.lower.report.converged && both.upper.report.converged;
    double vmin = std::numeric_limits<double>::infinity(), vmax = -vmin;
    for (const SolveResult* r : {&both.lower, &both.upper}) {
      vmin = std::min(vmin, r->field.min());
      vmax = std::max(vmax, r->field.max());
    }
    const bool bounded = vmin >= -bound_slack && vmax <= jet_bound + bound_slack;
    double order = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < both.lower.field.values.size(); ++k)
      order = std::max(order, both.lower.field.values[k] - both.upper.field.values[k]);
    const bool ordered = order <= bound_slack;
    const bool gap_ok = both.gap.max <= isaacs_gap_limit;

    const GridMask lower = extract_sublevel(both.lower.field, epsilon_set);
    const GridMask upper = extract_sublevel(both.upper.field, epsilon_set);
    const MaskComparison cmp = compare_masks(lower, upper);
    const bool masks_ok = cmp.symmetric_difference_fraction <= mask_lower_upper_limit;
    double worst_h = -std::numeric_limits<double>::infinity();
    for (const GridMask* m : {&lower, &upper}) {
      for (std::size_t k = 0; k < m->grid.size(); ++k)
        if (m->flags[k]) worst_h = std::max(worst_h, jet.eval_constraint(m->grid.node_point(k)));
    }
    const bool inside_ok = lower.count() > 0 && worst_h <= epsilon_set;
    const bool fast = seconds <= jet_seconds_limit;
    timings_["c1_solve_seconds"] = seconds;
    {
      auto os = open("c1_mask_lower.csv");
      write_mask_csv(os, lower);
      auto us = open("c1_mask_upper.csv");
      write_mask_csv(us, upper);
      auto cs = open("c1_contours_lower.csv");
      write_contour_csv(cs, {marching_squares(both.lower.field, 0.0), marching_squares(both.lower.field, epsilon_set)});
    }
    metric("c1_iterations", static_cast<double>(both.lower.report.iterations));
    metric("c1_value_min", vmin);
    metric("c1_value_max", vmax);
    metric("c1_order_max", order);
    metric("c1_isaacs_gap_max", both.gap.max);
    metric("c1_mask_lower_nodes", static_cast<double>(lower.count()));
    metric("c1_mask_upper_nodes", static_cast<double>(upper.count()));
    metric("c1_mask_symmetric_difference", cmp.symmetric_difference_fraction);
    metric("c1_mask_max_h", worst_h);

    std::ostringstream d;
    d << "converged " << (converged ? "yes" : "no") << " after " << both.lower.report.iterations
      << " sweeps, V in [" << num(vmin) << ", " << num(vmax) << "], max(V- - V+) " << num(order)
      << ", isaacs gap " << num(both.gap.max) << ", mask difference " << num(cmp.symmetric_difference_fraction)
      << " (" << lower.count() << " nodes), max h on masks " << num(worst_h) << ", " << num(seconds) << " s";
    record(1, "jet benchmark", converged && bounded && ordered && gap_ok && masks_ok && inside_ok && fast,
           d.str());
  }

  void criterion_oracle(const GameModel& jet) {
    const auto start = Clock::now();
    const Grid g(Vec(2, -jet_half_width), Vec(2, jet_half_width), {oracle_nodes, oracle_nodes});
    SolveConfig c;
    c.gamma = jet_gamma;
    c.tol = oracle_tol;
    const BothValues sl = solve_both_values(jet, g, c);
    keep_sl("oracle 21 sl", sl);
    const HamiltonianEvaluator ev(jet);
    const oracle::DiscreteGame game = oracle::build_discrete_game(jet, g, ev.control_samples(),
                                                                  ev.disturbance_samples(), c.gamma, sl.lower.report.dt);
    double worst = 0.0;
    bool converged = sl.lower.report.converged && sl.upper.report.converged;
    auto os = open("c2_oracle_values.txt");
    for (const SolveResult* r : {&sl.lower, &sl.upper}) {
      const auto truth = oracle::brute_force_value(game, r->report.kind, oracle_tol);
      converged = converged && truth.residual <= oracle_tol;
      double diff = 0.0;
      for (std::size_t k = 0; k < truth.values.size(); ++k)
        diff = std::max(diff, std::abs(truth.values[k] - r->field.values[k]));
      worst = std::max(worst, diff);
      os << "kind = " << to_string(r->report.kind) << '\n';
      for (double v : truth.values) os << format_scalar(v) << '\n';
      metric(std::string("c2_sup_diff_") + std::string(to_string(r->report.kind)), diff);
    }
    const double seconds = seconds_since(start);
    timings_["c2_seconds"] = seconds;
    std::ostringstream d;
    d << oracle_nodes << "x" << oracle_nodes << " nodes, sup |SL - brute force| " << num(worst) << " over both kinds, "
      << num(seconds) << " s";
    record(2, "oracle equivalence", converged && worst <= oracle_match && seconds <= oracle_seconds_limit, d.str());
  }

  void criterion_backends(const GameModel& jet, const Grid& fine, const BothValues& fine_sl) {
    SolveConfig fd;
    fd.gamma = jet_gamma;
    fd.tol = jet_tol;
    fd.backend = Backend::fd;
    SolveConfig sl;
    sl.gamma = jet_gamma;
    sl.tol = jet_tol;

    struct Discrepancy {
      double sup = 0.0;
      double mask = 0.0;
      bool converged = true;
    };
    auto measure = [&](const BothValues& a, const BothValues& b) {
      Discrepancy out;
      for (auto [x, y] : {std::pair{&a.lower, &b.lower}, std::pair{&a.upper, &b.upper}}) {
        out.sup = std::max(out.sup, sup_diff_off_band(x->field, y->field));
        out.mask = std::max(out.mask, compare_masks(extract_sublevel(x->field, epsilon_set),
                                                    extract_sublevel(y->field, epsilon_set))
                                          .symmetric_difference_fraction);
        out.converged = out.converged && x->report.converged && y->report.converged;
      }
      return out;
    };

    auto start = Clock::now();
    const BothValues fine_fd = solve_both_values(jet, fine, fd);
    timings_["c3_fd_201_seconds"] = seconds_since(start);
    save_both("c3_fd201", fine_fd);
    const Discrepancy at_fine = measure(fine_fd, fine_sl);

    const Grid coarse(fine.lower(), fine.upper(), {coarse_nodes, coarse_nodes});
    start = Clock::now();
    const BothValues coarse_fd = solve_both_values(jet, coarse, fd);
    const BothValues coarse_sl = solve_both_values(jet, coarse, sl);
    timings_["c3_101_seconds"] = seconds_since(start);
    keep_sl("jet 101 sl", coarse_sl);
    save_both("c3_fd101", coarse_fd);
    save_both("c3_sl101", coarse_sl);
    const Discrepancy at_coarse = measure(coarse_fd, coarse_sl);

    metric("c3_sup_201", at_fine.sup);
    metric("c3_mask_201", at_fine.mask);
    metric("c3_sup_101", at_coarse.sup);
    metric("c3_mask_101", at_coarse.mask);
    const bool within = at_fine.sup <= backend_sup_limit && at_fine.mask <= backend_mask_limit;
    const bool not_growing = at_fine.sup <= at_coarse.sup && at_fine.mask <= at_coarse.mask;
    std::ostringstream d;
    d << "201x201: sup off band " << num(at_fine.sup) << ", mask difference " << num(at_fine.mask)
      << "; 101x101: sup " << num(at_coarse.sup) << ", mask difference " << num(at_coarse.mask);
    record(3, "backend consistency", at_fine.converged && at_coarse.converged && within && not_growing, d.str());
  }

  void criterion_singleton() {
    const GameModel model = builtin_model("singleton_1d");
    const auto n = static_cast<std::size_t>(std::llround(2.0 / singleton_dx)) + 1;
    const Grid g({-1.0}, {1.0}, {n});
    SolveConfig c;
    c.gamma = jet_gamma;
    c.tol = singleton_tol;
    const SolveResult r = solve_sl(model, g, c);
    sl_runs_.push_back({"singleton sl", r.report, r.field.residual_history});

    std::mt19937_64 rng(singleton_seed);
    auto os = open("c5_singleton.csv");
    os << "x0,value,payoff,error_bar,abs_diff\n";
    double worst_diff = 0.0;
    bool ok = r.report.converged;
    for (std::size_t i = 0; i < singleton_samples; ++i) {
      const double x0 = -1.0 + 2.0 * uniform01(rng);
      const double v = interpolate(r.field, Vec{x0});
      const oracle::PayoffEstimate est = oracle::direct_payoff(model, Vec{x0}, c.gamma, payoff_t_final, payoff_dt);
      const double diff = std::abs(v - est.value);
      worst_diff = std::max(worst_diff, diff);
      ok = ok && diff <= singleton_match + est.error_bar;
      os << format_scalar(x0) << ',' << format_scalar(v) << ',' << format_scalar(est.value) << ','
         << format_scalar(est.error_bar) << ',' << format_scalar(diff) << '\n';
    }
    metric("c5_worst_abs_diff", worst_diff);
    std::ostringstream d;
    d << singleton_samples << " initial states on " << n << " nodes, max |V - payoff| " << num(worst_diff)
      << ", limit 0.05 plus error bar";
    record(5, "singleton oracle", ok, d.str());
  }

  void criterion_contraction() {
    bool ok = true;
    double worst_excess = -std::numeric_limits<double>::infinity();
    double lowest = std::numeric_limits<double>::infinity();
    std::string first_failure;
    for (const SlRun& run : sl_runs_) {
      const double beta = run.report.contraction_factor;
      bool run_ok = beta > 0.0 && beta < 1.0 && run.report.min_increment >= -monotone_slack;
      for (std::size_t k = 1; k < run.residuals.size(); ++k) {
        const double excess = run.residuals[k] - (beta * run.residuals[k - 1] + contraction_slack);
        worst_excess = std::max(worst_excess, excess);
        run_ok = run_ok && excess <= 0.0;
      }
      lowest = std::min(lowest, run.report.min_increment);
      if (!run_ok && first_failure.empty()) first_failure = run.label;
      ok = ok && run_ok;
    }
    metric("c4_worst_contraction_excess", worst_excess);
    metric("c4_min_increment", lowest);
    std::ostringstream d;
    d << sl_runs_.size() << " SL runs, max(r_k+1 - beta r_k) " << num(worst_excess + contraction_slack)
      << ", smallest iterate change " << num(lowest);
    if (!first_failure.empty()) d << ", first failure: " << first_failure;
    record(4, "contraction and monotone iterates", ok, d.str());
  }

  void criterion_invariance(const GameModel& jet, const BothValues& both) {
    const GridMask mask = extract_sublevel(both.lower.field, epsilon_set);
    const HamiltonianEvaluator ev(jet);
    VerificationOptions opt;
    opt.trials = invariance_trials;
    opt.epsilon = invariance_epsilon;
    opt.t_final = invariance_t_final;
    opt.dt_sim = invariance_dt;
    opt.seed = invariance_seed;
    auto start = Clock::now();
    const VerificationReport first = verify_invariance(jet, both.lower.field, mask, ev, opt);
    const double seconds = seconds_since(start);
    timings_["c6_seconds"] = seconds;
    const VerificationReport again = verify_invariance(jet, both.lower.field, mask, ev, opt);
    std::ostringstream a, b;
    write_verification_report(a, first);
    write_verification_report(b, again);
    auto os = open("c6_invariance.txt");
    os << a.str();
    const bool reproducible = a.str() == b.str();
    const bool ok = first.trials == invariance_trials && first.passed(invariance_threshold) && reproducible &&
                    seconds <= invariance_seconds_limit;
    std::ostringstream d;
    d << first.passes << "/" << first.runs << " runs from " << first.trials << " interior nodes kept sup h <= "
      << invariance_epsilon << " (fraction " << num(first.pass_fraction) << "), worst sup h "
      << num(first.worst_sup_h) << ", rerun " << (reproducible ? "identical" : "DIFFERENT") << ", " << num(seconds)
      << " s";
    record(6, "closed-loop invariance", ok, d.str());
  }

  fs::path dir_;
  std::size_t threads_;
  std::ofstream summary_;
  std::vector<Outcome> outcomes_;
  std::vector<SlRun> sl_runs_;
  std::map<std::string, double> timings_;
};

std::vector<fs::path> files_under(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out.push_back(fs::relative(e.path(), dir));
  std::sort(out.begin(), out.end());
  return out;
}

Outcome compare_runs(const fs::path& reference, const std::vector<fs::path>& others) {
  const auto names = files_under(reference);
  bool ok = !names.empty();
  std::string mismatch;
  for (const fs::path& other : others) {
    if (files_under(other) != names) {
      ok = false;
      mismatch = "file sets differ in " + other.filename().string();
    }
    for (const fs::path& name : names) {
      if (slurp(reference / name) != slurp(other / name)) {
        ok = false;
        if (mismatch.empty()) mismatch = name.string() + " differs in " + other.filename().string();
      }
    }
  }
  std::ostringstream d;
  d << names.size() << " files compared across " << others.size() + 1 << " runs";
  if (!mismatch.empty()) d << ", " << mismatch;
  return {7, "determinism", ok, d.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks for the invariant-set solver", "rcis_acceptance"};
  std::string out = "acceptance_artifacts";
  std::size_t threads = 4;
  app.add_option("--out", out, "Directory for artifacts");
  app.add_option("--threads", threads, "Thread count for the multi-threaded rerun")->check(CLI::Range(2, 256));
  CLI11_PARSE(app, argc, argv);

  const fs::path root(out);
  const std::vector<std::pair<std::string, std::size_t>> runs = {
      {"run_single", 1}, {"run_single_repeat", 1}, {"run_threads_" + std::to_string(threads), threads}};

  std::vector<Outcome> outcomes;
  std::vector<fs::path> dirs;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto start = Clock::now();
    Suite suite(root / runs[i].first, runs[i].second);
    std::vector<Outcome> got = suite.run();
    dirs.push_back(root / runs[i].first);
    std::cerr << runs[i].first << ": " << num(seconds_since(start)) << " s";
    for (const auto& [key, value] : suite.timings()) std::cerr << ", " << key << " " << num(value);
    std::cerr << '\n';
    if (i == 0) {
      outcomes = std::move(got);
    } else {
      // Later runs must agree on the verdicts; timings only count for the first.
      for (std::size_t k = 0; k < got.size(); ++k) {
        if (got[k].pass != outcomes[k].pass)
          std::cerr << "note: criterion " << got[k].id << " verdict changed in " << runs[i].first << '\n';
      }
    }
  }
  outcomes.push_back(compare_runs(dirs.front(), {dirs.begin() + 1, dirs.end()}));
  std::sort(outcomes.begin(), outcomes.end(), [](const Outcome& a, const Outcome& b) { return a.id < b.id; });

  bool all = true;
  for (const Outcome& o : outcomes) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << o.id << " " << o.name << ": " << o.detail << '\n';
    all = all && o.pass;
  }
  return all ? 0 : 1;
}
