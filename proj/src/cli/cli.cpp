#include "fcrpool/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "fcrpool/agents.hpp"
#include "fcrpool/io.hpp"
#include "fcrpool/rng.hpp"

namespace fcrpool::cli {
namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Fn>
double time_ms(Fn&& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

FamilySummary summarize(const CircleFamily& family, int circle_cap) {
  return {family.size(), family.max_set_size(),
          family.count_larger_than(static_cast<std::size_t>(circle_cap))};
}

std::vector<CapacityRow> capacity_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const auto points = resolve_points(spec);
  std::vector<CapacityRow> rows;
  for (double rate : spec.participation_rates) {
    const auto mc =
        monte_carlo_usable_fraction(points, rate, spec.trials, spec.seed, spec.radius, spec.caps);
    for (std::size_t t = 0; t < mc.fractions.size(); ++t) {
      rows.push_back({rate, t, mc.fractions[t], mc.capacities_kw[t]});
    }
    rows.push_back({rate, std::nullopt, mc.mean_fraction, mean_of(mc.capacities_kw)});
  }
  return rows;
}

std::string capacity_csv(const std::vector<CapacityRow>& rows) {
  std::ostringstream os;
  os << "rate,trial,usable_fraction,total_kW\n";
  for (const auto& r : rows) {
    os << fmt(r.rate) << ',' << (r.trial ? std::to_string(*r.trial) : std::string("mean")) << ','
       << fmt(r.usable_fraction) << ',' << fmt(r.total_kw) << '\n';
  }
  return os.str();
}

double relative_gap(double objective, double exact_objective) {
  if (objective == exact_objective) return 0.0;
  return (objective - exact_objective) / std::abs(exact_objective);
}

std::vector<SweepRow> rho_sweep(const ExperimentSpec& spec, double rate,
                                const std::vector<double>& rho_values, std::size_t trials,
                                const AdmmParams& base) {
  spec.validate();
  base.validate();
  const auto pool = resolve_points(spec);
  std::vector<Scenario> scenarios;
  std::vector<double> exact;
  for (std::size_t t = 0; t < trials; ++t) {
    scenarios.push_back(build_scenario(pool, spec, rate, t));
    exact.push_back(solve_exact(scenarios.back()).solution.objective);
  }
  std::vector<SweepRow> rows;
  for (double rho : rho_values) {
    AdmmParams params = base;
    params.rho_circle = rho;
    params.validate();
    for (std::size_t t = 0; t < trials; ++t) {
      const auto rep = run_admm(scenarios[t], params);
      rows.push_back({rho, t, rep.iterations, relative_gap(rep.solution.objective, exact[t]),
                      rep.solution.objective, exact[t], rep.status});
    }
  }
  return rows;
}

std::vector<SweepMean> sweep_means(const std::vector<SweepRow>& rows) {
  std::vector<SweepMean> out;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const SweepMean& m) { return m.rho_c == r.rho_c; });
    if (it == out.end()) {
      out.push_back({r.rho_c, 0.0, 0.0, 0, 0});
      it = out.end() - 1;
    }
    it->mean_iterations += r.iterations;
    it->mean_gap += r.gap;
    it->converged += r.status == AdmmStatus::kConverged ? 1 : 0;
    ++it->runs;
  }
  for (auto& m : out) {
    m.mean_iterations /= static_cast<double>(m.runs);
    m.mean_gap /= static_cast<double>(m.runs);
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, const std::vector<SweepMean>& means) {
  std::ostringstream os;
  os << "rho_c,seed,iterations,gap,objective,exact_objective,status\n";
  for (const auto& r : rows) {
    os << fmt(r.rho_c) << ',' << r.trial << ',' << r.iterations << ',' << fmt(r.gap) << ','
       << fmt(r.objective) << ',' << fmt(r.exact_objective) << ',' << to_string(r.status) << '\n';
  }
  for (const auto& m : means) {
    os << fmt(m.rho_c) << ",mean," << fmt(m.mean_iterations) << ',' << fmt(m.mean_gap) << ",,,"
       << m.converged << '/' << m.runs << " converged\n";
  }
  return os.str();
}

ExperimentSpec bench_spec(std::size_t n_assets, const BenchOptions& o) {
  if (n_assets == 0 || o.points_per_neighborhood == 0 || !(o.rate > 0.0 && o.rate <= 1.0) ||
      !(o.pitch > 0.0) || o.horizon == 0) {
    throw Error(ErrorKind::kInvalidArgument, "bench: sizes, rate, pitch and horizon must be positive");
  }
  const auto per = static_cast<double>(o.points_per_neighborhood);
  const auto hoods = static_cast<std::size_t>(std::ceil(static_cast<double>(n_assets) / (o.rate * per)));
  const auto cols = static_cast<std::size_t>(std::ceil(std::sqrt(per)));
  const double side = static_cast<double>(cols) * o.pitch;
  ExperimentSpec spec;
  for (std::size_t h = 0; h < hoods; ++h) {
    SyntheticSpec g;
    g.kind = SyntheticKind::kGridStreet;
    g.n_points = o.points_per_neighborhood;
    g.extent = side;
    g.density_param = o.pitch;
    g.seed = derive_seed(o.seed, "bench-neighborhood", 0.0, h);
    g.origin = {static_cast<double>(h) * side, 0.0};
    g.first_id = static_cast<AssetId>(h * o.points_per_neighborhood);
    spec.synthetic.push_back(g);
  }
  // Half-asset offset so floor(rate * pool) lands exactly on n_assets.
  const double total = per * static_cast<double>(hoods);
  spec.participation_rates = {(static_cast<double>(n_assets) + 0.5) / total};
  spec.horizon = o.horizon;
  spec.seed = o.seed;
  spec.validate();
  return spec;
}

std::vector<BenchRow> bench(const std::vector<std::size_t>& sizes, const BenchOptions& o) {
  o.params.validate();
  if (o.repetitions == 0) throw Error(ErrorKind::kInvalidArgument, "bench: repetitions must be >= 1");
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    const ExperimentSpec spec = bench_spec(n, o);
    const Scenario s = build_scenario(spec, spec.participation_rates.front(), 0);
    BenchRow row;
    row.n_assets = s.num_assets();
    const bool run_exact = o.exact_cutoff == 0 || n <= o.exact_cutoff;
    std::vector<double> te, ta;
    for (std::size_t r = 0; r < o.repetitions; ++r) {
      if (run_exact) {
        te.push_back(time_ms([&] {
          const auto ex = solve_exact(s);
          row.exact_objective = ex.solution.objective;
          row.exact_bound = ex.lower_bound;
        }));
      }
      ta.push_back(time_ms([&] {
        const auto rep = run_admm(s, o.params);
        row.admm_objective = rep.solution.objective;
        row.admm_iterations = rep.iterations;
        row.admm_status = rep.status;
      }));
    }
    if (run_exact) row.t_exact_ms = median_of(te);
    row.t_admm_ms = median_of(ta);
    rows.push_back(row);
  }
  return rows;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "n_assets,t_exact_ms,t_admm_ms,exact_objective,exact_bound,admm_objective,admm_iterations,"
        "admm_status\n";
  auto opt = [](const std::optional<double>& v) { return v ? fmt(*v) : std::string(); };
  for (const auto& r : rows) {
    os << r.n_assets << ',' << opt(r.t_exact_ms) << ',' << fmt(r.t_admm_ms) << ','
       << opt(r.exact_objective) << ',' << opt(r.exact_bound) << ',' << fmt(r.admm_objective)
       << ',' << r.admm_iterations << ',' << to_string(r.admm_status) << '\n';
  }
  return os.str();
}

std::optional<std::size_t> crossover(const std::vector<BenchRow>& rows) {
  for (const auto& r : rows) {
    if (r.t_exact_ms && r.t_admm_ms < *r.t_exact_ms) return r.n_assets;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Command-line front end.

namespace {

struct Emit {
  std::ostream& out;
  std::string path;

  // CSV outputs get the resolved spec next to them so every number can be
  // regenerated.
  void text(const std::string& body, const io::json* spec_sidecar = nullptr) const {
    if (path.empty() || path == "-") {
      out << body;
      return;
    }
    io::write_text(path, body);
    if (spec_sidecar) io::write_text(path + ".spec.json", spec_sidecar->dump(2) + "\n");
  }
};

struct AdmmFlags {
  double rho_c = AdmmParams{}.rho_circle;
  double rho_f = AdmmParams{}.rho_pool;
  int k_ip = AdmmParams{}.k_ip;
  double alpha = AdmmParams{}.alpha;
  int max_iter = AdmmParams{}.max_iter;
  unsigned workers = 1;
  bool scalar = false;
  bool cold = false;

  void attach(CLI::App* app, bool with_rho_c) {
    if (with_rho_c) app->add_option("--rho-c", rho_c, "circle consensus penalty")->capture_default_str();
    app->add_option("--rho-f", rho_f, "pool balance penalty")->capture_default_str();
    app->add_option("--k-ip", k_ip, "integer round period")->capture_default_str();
    app->add_option("--alpha", alpha, "relative balance tolerance")->capture_default_str();
    app->add_option("--max-iter", max_iter, "iteration limit")->capture_default_str();
    app->add_option("--workers", workers, "worker threads")->capture_default_str();
    app->add_flag("--scalar", scalar, "force scalar kernels");
    app->add_flag("--cold", cold, "skip the bang-bang warm start");
  }

  AdmmParams params() const {
    AdmmParams p;
    p.rho_circle = rho_c;
    p.rho_pool = rho_f;
    p.k_ip = k_ip;
    p.alpha = alpha;
    p.max_iter = max_iter;
    p.workers = workers;
    p.force_scalar = scalar;
    p.warm_start = !cold;
    p.validate();
    return p;
  }
};

ExperimentSpec load_spec(const std::string& path, const std::optional<std::uint64_t>& seed) {
  ExperimentSpec spec = io::experiment_from_json(io::read_json(path));
  if (seed) spec.seed = *seed;
  spec.validate();
  return spec;
}

void require_seed(const std::optional<std::uint64_t>& seed, const char* cmd) {
  if (!seed) {
    throw Error(ErrorKind::kInvalidArgument, std::string(cmd) + " draws random numbers: pass --seed");
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LV-grid FCR pooling under the circle constraint", "fcrpool"};
  app.require_subcommand(1);
  std::string out_path;

  // circles
  auto* c_circles = app.add_subcommand("circles", "build the circle family of a point CSV");
  std::string points_path;
  double radius = 100.0;
  int circle_cap = kDefaultCircleCap;
  c_circles->add_option("--points", points_path, "CSV with header id,x,y")->required();
  c_circles->add_option("--radius", radius, "circle radius in m")->capture_default_str();
  c_circles->add_option("--circle-cap", circle_cap, "assets per circle")->capture_default_str();

  // capacity
  auto* c_capacity = app.add_subcommand("capacity", "usable capacity per participation rate");
  std::string spec_path;
  std::optional<std::uint64_t> seed;
  c_capacity->add_option("--spec", spec_path, "experiment JSON")->required();
  c_capacity->add_option("--seed", seed, "master seed (required)");

  // make-scenario
  auto* c_make = app.add_subcommand("make-scenario", "sample one scenario from an experiment");
  double rate = 1.0;
  std::size_t trial = 0;
  c_make->add_option("--spec", spec_path, "experiment JSON")->required();
  c_make->add_option("--seed", seed, "master seed (required)");
  c_make->add_option("--rate", rate, "participation rate")->capture_default_str();
  c_make->add_option("--trial", trial, "trial index")->capture_default_str();

  // solve
  auto* c_solve = app.add_subcommand("solve", "solve one scenario");
  std::string scenario_path, mode = "admm", trace_path, msg_log_path, reference_path;
  std::size_t node_limit = ExactOptions{}.node_limit;
  AdmmFlags solve_flags;
  c_solve->add_option("--scenario", scenario_path, "scenario JSON (from make-scenario)");
  c_solve->add_option("--spec", spec_path, "experiment JSON, sampled with --seed/--rate/--trial");
  c_solve->add_option("--seed", seed, "master seed when sampling from --spec");
  c_solve->add_option("--rate", rate, "participation rate when sampling")->capture_default_str();
  c_solve->add_option("--trial", trial, "trial index when sampling")->capture_default_str();
  c_solve->add_option("--mode", mode, "exact | admm | agents")
      ->check(CLI::IsMember({"exact", "admm", "agents"}))
      ->capture_default_str();
  c_solve->add_option("--trace", trace_path, "per-iteration CSV (admm, agents)");
  c_solve->add_option("--msg-log", msg_log_path, "NDJSON message log (agents)");
  c_solve->add_option("--reference", reference_path, "exact report JSON for the gap");
  c_solve->add_option("--node-limit", node_limit, "branch-and-bound node budget")->capture_default_str();
  solve_flags.attach(c_solve, true);

  // sweep
  auto* c_sweep = app.add_subcommand("sweep", "iterations and gap over circle penalties");
  std::vector<double> rho_values{0.1, 0.3, 0.6, 1.0, 2.0};
  std::size_t seeds = 8;
  AdmmFlags sweep_flags;
  c_sweep->add_option("--spec", spec_path, "experiment JSON (scenario template)")->required();
  c_sweep->add_option("--seed", seed, "master seed (required)");
  c_sweep->add_option("--rate", rate, "participation rate")->capture_default_str();
  c_sweep->add_option("--rho-c", rho_values, "circle penalties")->delimiter(',')->capture_default_str();
  c_sweep->add_option("--seeds", seeds, "scenarios per penalty")->capture_default_str();
  sweep_flags.attach(c_sweep, false);

  // bench
  auto* c_bench = app.add_subcommand("bench", "wall time of exact vs ADMM over sizes");
  std::vector<std::size_t> sizes{50, 100, 200, 400};
  BenchOptions bo;
  AdmmFlags bench_flags;
  c_bench->add_option("--sizes", sizes, "asset counts")->delimiter(',')->capture_default_str();
  c_bench->add_option("--seed", seed, "master seed (required)");
  c_bench->add_option("--horizon", bo.horizon, "time steps")->capture_default_str();
  c_bench->add_option("--pitch", bo.pitch, "street grid pitch in m")->capture_default_str();
  c_bench->add_option("--per-neighborhood", bo.points_per_neighborhood, "points per neighborhood")
      ->capture_default_str();
  c_bench->add_option("--bench-rate", bo.rate, "participation rate")->capture_default_str();
  c_bench->add_option("--repetitions", bo.repetitions, "runs per size (median)")->capture_default_str();
  c_bench->add_option("--exact-cutoff", bo.exact_cutoff, "skip exact above this size; 0 = never")
      ->capture_default_str();
  bench_flags.attach(c_bench, true);

  for (auto* sub : {c_circles, c_capacity, c_make, c_solve, c_sweep, c_bench}) {
    sub->add_option("--out", out_path, "output file (default stdout)");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  const Emit emit{out, out_path};
  try {
    if (c_circles->parsed()) {
      const auto points = load_points(points_path);
      const auto family = build_circle_family(points, radius);
      const auto sum = summarize(family, circle_cap);
      io::json j = io::to_json(family);
      j["summary"] = {{"n_sets", sum.n_sets},
                      {"max_set_size", sum.max_set_size},
                      {"sets_over_cap", sum.sets_over_cap},
                      {"circle_cap", circle_cap}};
      emit.text(j.dump(2) + "\n");
      err << "n_S=" << sum.n_sets << " max|C_s|=" << sum.max_set_size << " sets over "
          << circle_cap << "=" << sum.sets_over_cap << '\n';
      return kExitOk;
    }
    if (c_capacity->parsed()) {
      require_seed(seed, "capacity");
      const auto spec = load_spec(spec_path, seed);
      const io::json sidecar = io::to_json(spec);
      emit.text(capacity_csv(capacity_experiment(spec)), &sidecar);
      return kExitOk;
    }
    if (c_make->parsed()) {
      require_seed(seed, "make-scenario");
      const auto spec = load_spec(spec_path, seed);
      const Scenario s = build_scenario(spec, rate, trial);
      io::json j = io::to_json(s);
      j["spec"] = io::to_json(spec);
      j["rate"] = rate;
      j["trial"] = trial;
      emit.text(j.dump(2) + "\n");
      return kExitOk;
    }
    if (c_solve->parsed()) {
      if (scenario_path.empty() == spec_path.empty()) {
        throw Error(ErrorKind::kInvalidArgument, "solve: pass exactly one of --scenario, --spec");
      }
      io::json report;
      std::optional<Scenario> sc;
      if (!scenario_path.empty()) {
        const io::json j = io::read_json(scenario_path);
        sc.emplace(io::scenario_from_json(j));
        report["scenario"] = scenario_path;
      } else {
        require_seed(seed, "solve --spec");
        const auto spec = load_spec(spec_path, seed);
        sc.emplace(build_scenario(spec, rate, trial));
        report["spec"] = io::to_json(spec);
        report["rate"] = rate;
        report["trial"] = trial;
      }
      const Scenario& s = *sc;
      report["mode"] = mode;
      report["scenario_hash"] = scenario_hash(s);
      report["n_assets"] = s.num_assets();
      report["horizon"] = s.horizon();
      report["n_circles"] = s.num_circles();

      if (mode == "exact") {
        ExactOptions eo;
        eo.node_limit = node_limit;
        int code = kExitOk;
        ExactResult res;
        try {
          res = solve_exact(s, eo);
        } catch (const BudgetExceededError& e) {
          res = e.partial();
          code = kExitBudget;
        }
        report["status"] = res.status == ExactStatus::kOptimal ? "optimal" : "budget_exceeded";
        report["objective"] = res.solution.objective;
        report["lower_bound"] = res.lower_bound;
        report["nodes"] = res.nodes;
        report["active_per_step"] = res.active_per_step;
        report["feasibility"] = io::to_json(check_feasible(s, res.solution));
        report["solution"] = io::to_json(res.solution);
        emit.text(report.dump(2) + "\n");
        if (code != kExitOk) err << "node budget exhausted; partial bound reported\n";
        return code;
      }

      const AdmmParams params = solve_flags.params();
      report["params"] = io::to_json(params);
      SolveReport rep;
      if (mode == "admm") {
        rep = run_admm(s, params);
      } else {
        std::ofstream log;
        agents::SimulationOptions so;
        if (!msg_log_path.empty()) {
          log.open(msg_log_path, std::ios::binary);
          if (!log) throw Error(ErrorKind::kInvalidArgument, "cannot write " + msg_log_path);
          so.message_log = &log;
        }
        auto sim = agents::run_simulation(s, params, so);
        rep = std::move(sim.report);
        std::size_t msgs = sim.closing.messages_sent, bytes = sim.closing.bytes_estimate;
        for (const auto& r : sim.rounds) {
          msgs += r.messages_sent;
          bytes += r.bytes_estimate;
        }
        report["messages"] = msgs;
        report["bytes_estimate"] = bytes;
        report["messages_per_round"] = sim.topology.messages_per_round();
        report["privacy_hits"] = sim.privacy_hits;
      }
      report["status"] = std::string(to_string(rep.status));
      report["iterations"] = rep.iterations;
      report["objective"] = rep.solution.objective;
      report["consensus_p_F"] = rep.consensus_p_F;
      report["kernel_isa"] = rep.kernel_isa;
      report["wall_ms"] = rep.wall_ms;
      report["feasibility"] = io::to_json(check_feasible(s, rep.solution));
      report["solution"] = io::to_json(rep.solution);
      if (!reference_path.empty()) {
        const io::json ref = io::read_json(reference_path);
        if (!ref.contains("objective") || !ref["objective"].is_number()) {
          throw Error(ErrorKind::kParseError, reference_path + ": no numeric 'objective'");
        }
        const double ex = ref["objective"].get<double>();
        report["reference_objective"] = ex;
        report["gap"] = relative_gap(rep.solution.objective, ex);
        err << "gap vs reference: " << fmt(relative_gap(rep.solution.objective, ex)) << '\n';
      }
      if (!trace_path.empty()) io::write_text(trace_path, trace_csv(rep.trace));
      emit.text(report.dump(2) + "\n");
      return rep.status == AdmmStatus::kMaxIter ? kExitBudget : kExitOk;
    }
    if (c_sweep->parsed()) {
      require_seed(seed, "sweep");
      const auto spec = load_spec(spec_path, seed);
      const AdmmParams base = sweep_flags.params();
      const auto rows = rho_sweep(spec, rate, rho_values, seeds, base);
      io::json sidecar = {{"spec", io::to_json(spec)},
                          {"params", io::to_json(base)},
                          {"rate", rate},
                          {"rho_c", rho_values},
                          {"seeds", seeds}};
      emit.text(sweep_csv(rows, sweep_means(rows)), &sidecar);
      return kExitOk;
    }
    if (c_bench->parsed()) {
      require_seed(seed, "bench");
      bo.seed = *seed;
      bo.params = bench_flags.params();
      const auto rows = bench(sizes, bo);
      io::json sidecar = {{"sizes", sizes},
                          {"seed", bo.seed},
                          {"horizon", bo.horizon},
                          {"pitch", bo.pitch},
                          {"per_neighborhood", bo.points_per_neighborhood},
                          {"rate", bo.rate},
                          {"repetitions", bo.repetitions},
                          {"exact_cutoff", bo.exact_cutoff},
                          {"params", io::to_json(bo.params)}};
      emit.text(bench_csv(rows), &sidecar);
      const auto x = crossover(rows);
      err << "crossover: " << (x ? std::to_string(*x) + " assets" : std::string("none in range"))
          << '\n';
      return kExitOk;
    }
  } catch (const BudgetExceededError& e) {
    err << "error: " << e.what() << '\n';
    return kExitBudget;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.kind() == ErrorKind::kBudgetExceeded ? kExitBudget : kExitValidation;
  }
  return kExitValidation;
}

}  // namespace fcrpool::cli
