#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fcrpool/cli.hpp"
#include "fcrpool/io.hpp"

using namespace fcrpool;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("fcrpool_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& body = "") const {
    const auto p = path / name;
    if (!body.empty()) io::write_text(p, body);
    return p.string();
  }
};

std::string slurp(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string csv_points(const std::vector<std::pair<double, double>>& xy) {
  std::string s = "id,x,y\n";
  for (std::size_t i = 0; i < xy.size(); ++i) {
    s += std::to_string(i) + "," + std::to_string(xy[i].first) + "," + std::to_string(xy[i].second) + "\n";
  }
  return s;
}

std::string cluster_spec(std::size_t n, double sigma, double extent, const std::string& rates = "[1.0]",
                         std::size_t trials = 1, std::size_t horizon = 4) {
  return R"({"synthetic": {"kind": "clustered_gaussian", "n_points": )" + std::to_string(n) +
         R"(, "extent": )" + std::to_string(extent) + R"(, "density_param": )" +
         std::to_string(sigma) + R"(, "clusters": 1}, "participation_rates": )" + rates +
         R"(, "trials": )" + std::to_string(trials) + R"(, "horizon": )" + std::to_string(horizon) + "}";
}

}  // namespace

TEST_CASE("circles command") {
  TempDir tmp;
  auto r = run({"circles", "--points", tmp.file("one.csv", csv_points({{3, 4}}))});
  REQUIRE(r.code == cli::kExitOk);
  auto j = io::json::parse(r.out);
  CHECK(j["summary"]["n_sets"] == 1);
  CHECK(j["radius"] == 100.0);

  r = run({"circles", "--points", tmp.file("line.csv", csv_points({{0, 0}, {150, 0}, {300, 0}}))});
  j = io::json::parse(r.out);
  CHECK(j["summary"]["n_sets"] == 2);
  CHECK(j["sets"][0]["members"] == io::json::array({0, 1}));

  std::vector<std::pair<double, double>> crowd;
  for (int i = 0; i < 15; ++i) crowd.emplace_back(3.0 * i, 0);
  const auto out = tmp.file("fam.json");
  r = run({"circles", "--points", tmp.file("crowd.csv", csv_points(crowd)), "--out", out});
  REQUIRE(r.code == 0);
  CHECK(io::read_json(out)["summary"]["sets_over_cap"].get<int>() > 0);

  CHECK(run({"circles", "--points", tmp.file("missing.csv")}).code == cli::kExitValidation);
  CHECK(run({"circles", "--points", tmp.file("dup.csv", "id,x,y\n1,0,0\n1,2,2\n")}).code ==
        cli::kExitValidation);
  CHECK(run({"circles"}).code == cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == cli::kExitValidation);
}

TEST_CASE("capacity command") {
  TempDir tmp;
  const auto spec = tmp.file("dense.json", cluster_spec(40, 10, 50));
  CHECK(run({"capacity", "--spec", spec}).code == cli::kExitValidation);  // no seed

  const auto out = tmp.file("cap.csv");
  auto r = run({"capacity", "--spec", spec, "--seed", "3", "--out", out});
  REQUIRE(r.code == 0);
  const auto csv = slurp(out);
  CHECK(csv.rfind("rate,trial,usable_fraction,total_kW\n", 0) == 0);
  CHECK(csv.find("1,0,0.25,50\n") != std::string::npos);
  CHECK(csv.find("1,mean,0.25,50\n") != std::string::npos);
  CHECK(fs::exists(out + ".spec.json"));
  CHECK(io::read_json(out + ".spec.json")["seed"] == 3);

  const auto sparse = tmp.file(
      "sparse.json",
      R"({"synthetic": {"kind": "grid_street", "n_points": 9, "density_param": 500}, "trials": 2})");
  r = run({"capacity", "--spec", sparse, "--seed", "1"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1,mean,1,45\n") != std::string::npos);
}

TEST_CASE("solve command in every mode") {
  TempDir tmp;
  const auto spec = tmp.file("s.json", cluster_spec(24, 40, 200, "[1.0]", 1, 4));
  const auto scen = tmp.file("scenario.json");
  REQUIRE(run({"make-scenario", "--spec", spec, "--seed", "2", "--out", scen}).code == 0);

  const auto exact = tmp.file("exact.json");
  REQUIRE(run({"solve", "--scenario", scen, "--mode", "exact", "--out", exact}).code == 0);
  const auto ej = io::read_json(exact);
  CHECK(ej["status"] == "optimal");
  CHECK(ej["feasibility"]["feasible"] == true);

  const auto admm = tmp.file("admm.json"), tr1 = tmp.file("t1.csv"), tr2 = tmp.file("t2.csv");
  auto r = run({"solve", "--scenario", scen, "--mode", "admm", "--reference", exact, "--trace", tr1,
                "--out", admm});
  CHECK((r.code == cli::kExitOk || r.code == cli::kExitBudget));
  const auto aj = io::read_json(admm);
  CHECK(aj["gap"].get<double>() >= 0.0);
  CHECK(aj["reference_objective"] == ej["objective"]);

  const auto agents = tmp.file("agents.json"), log = tmp.file("msgs.ndjson");
  run({"solve", "--scenario", scen, "--mode", "agents", "--trace", tr2, "--msg-log", log, "--out",
       agents});
  CHECK(slurp(tr1) == slurp(tr2));
  CHECK(io::read_json(agents)["privacy_hits"] == 0);
  CHECK(fs::file_size(log) > 0);

  // Reproducible apart from wall time.
  auto again = io::read_json(admm);
  run({"solve", "--scenario", scen, "--mode", "admm", "--reference", exact, "--out", admm});
  auto second = io::read_json(admm);
  again.erase("wall_ms");
  second.erase("wall_ms");
  CHECK(again == second);

  // Sampling straight from the experiment file gives the same instance.
  r = run({"solve", "--spec", spec, "--seed", "2", "--mode", "exact"});
  CHECK(io::json::parse(r.out)["scenario_hash"] == ej["scenario_hash"]);

  CHECK(run({"solve", "--scenario", scen, "--mode", "fancy"}).code == cli::kExitValidation);
  CHECK(run({"solve", "--scenario", scen, "--rho-c", "-1"}).code == cli::kExitValidation);
  CHECK(run({"solve", "--scenario", scen, "--spec", spec}).code == cli::kExitValidation);
  CHECK(run({"solve", "--scenario", scen, "--max-iter", "2"}).code == cli::kExitBudget);
}

TEST_CASE("exact budget exhaustion exits with the budget code") {
  TempDir tmp;
  const auto spec = tmp.file(
      "grid.json",
      R"({"synthetic": {"kind": "grid_street", "n_points": 81, "density_param": 40}, "horizon": 2})");
  const auto scen = tmp.file("grid_scenario.json");
  REQUIRE(run({"make-scenario", "--spec", spec, "--seed", "4", "--out", scen}).code == 0);
  auto j = io::read_json(scen);
  j["circle_cap"] = 3;
  io::write_text(scen, j.dump());
  const auto r = run({"solve", "--scenario", scen, "--mode", "exact", "--node-limit", "1"});
  CHECK(r.code == cli::kExitBudget);
  const auto rep = io::json::parse(r.out);
  CHECK(rep["status"] == "budget_exceeded");
  CHECK(rep["lower_bound"].get<double>() <= rep["objective"].get<double>());
}

TEST_CASE("sweep command") {
  TempDir tmp;
  const auto spec = tmp.file("s.json", cluster_spec(20, 40, 200, "[1.0]", 1, 3));
  const auto out = tmp.file("sweep.csv");
  const auto r = run({"sweep", "--spec", spec, "--seed", "1", "--rho-c", "0.3", "--seeds", "1", "--out", out});
  REQUIRE(r.code == 0);
  std::istringstream in(slurp(out));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);  // header, one run, one mean row
  CHECK(lines[0].rfind("rho_c,seed,iterations,gap", 0) == 0);
  CHECK(lines[1].rfind("0.29999999999999999,0,", 0) == 0);
  CHECK(lines[2].find(",mean,") != std::string::npos);
  CHECK(fs::exists(out + ".spec.json"));
}

TEST_CASE("bench command") {
  const auto r = run({"bench", "--sizes", "20", "--seed", "1", "--horizon", "2", "--repetitions", "3"});
  REQUIRE(r.code == 0);
  std::istringstream in(r.out);
  std::string header, row, extra;
  std::getline(in, header);
  std::getline(in, row);
  CHECK_FALSE(std::getline(in, extra));
  CHECK(header.rfind("n_assets,t_exact_ms,t_admm_ms", 0) == 0);
  std::vector<std::string> cells;
  std::stringstream rs(row);
  std::string cell;
  while (std::getline(rs, cell, ',')) cells.push_back(cell);
  REQUIRE(cells.size() == 8);
  CHECK(cells[0] == "20");
  CHECK(std::stod(cells[1]) > 0);
  CHECK(std::stod(cells[2]) > 0);
  CHECK(r.err.find("crossover") != std::string::npos);

  const auto again = run({"bench", "--sizes", "20", "--seed", "1", "--horizon", "2", "--repetitions", "3"});
  std::istringstream in2(again.out);
  std::getline(in2, header);
  std::getline(in2, row);
  std::vector<std::string> cells2;
  std::stringstream rs2(row);
  while (std::getline(rs2, cell, ',')) cells2.push_back(cell);
  for (std::size_t c : {0u, 3u, 4u, 5u, 6u, 7u}) CHECK(cells[c] == cells2[c]);

  CHECK(run({"bench", "--sizes", "20"}).code == cli::kExitValidation);
}

TEST_CASE("bench layout yields the requested asset count") {
  cli::BenchOptions o;
  o.horizon = 1;
  for (std::size_t n : {50u, 100u, 200u, 400u}) {
    const auto spec = cli::bench_spec(n, o);
    CHECK(build_scenario(spec, spec.participation_rates.front(), 0).num_assets() == n);
  }
}

TEST_CASE("helpers") {
  CHECK(cli::relative_gap(-90, -100) == doctest::Approx(0.1));
  CHECK(cli::relative_gap(0, 0) == 0.0);
  std::vector<cli::BenchRow> rows(2);
  rows[0].n_assets = 10;
  rows[0].t_exact_ms = 1.0;
  rows[0].t_admm_ms = 2.0;
  rows[1].n_assets = 20;
  rows[1].t_exact_ms = 5.0;
  rows[1].t_admm_ms = 3.0;
  CHECK(cli::crossover(rows) == std::optional<std::size_t>(20));
  rows.pop_back();
  CHECK_FALSE(cli::crossover(rows).has_value());
}
