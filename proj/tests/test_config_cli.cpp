#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "mg1/bounds.hpp"
#include "mg1/config.hpp"
#include "mg1/csv.hpp"
#include "mg1/experiments.hpp"
#include "test_util.hpp"

using namespace mg1;
using testutil::rel_err;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mg1lab_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> parse_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

int run_cli(const std::string& args) {
  std::string cmd = std::string(MG1LAB_BIN) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

ExperimentConfig small_reference_config(const fs::path& out) {
  ExperimentConfig c;
  c.lambda = 1.0;
  c.dist = "pareto:alpha=3";
  c.policy = "po-lcfs(lcfs,s=1)";
  c.s_list = {0.5, 1.0};
  c.n_periods = 20000;
  c.seed = 42;
  c.out_dir = out.string();
  return c;
}

}  // namespace

TEST_CASE("config loads from JSON and validates", "[cli]") {
  auto dir = fresh_dir("cfg");
  auto path = dir / "cfg.json";
  {
    std::ofstream out(path);
    out << R"json({"lambda": 0.25, "dist": "pareto:alpha=1.5",
               "policy": "po-lcfs(gittins,s=10)", "reference": "fb",
               "s_list": [10, 20], "n_periods": 5000, "seed": 7,
               "confidence": 0.95, "out_dir": ")json"
        << dir.string() << R"json(", "threads": 1})json";
  }
  auto c = ExperimentConfig::from_json_file(path.string());
  CHECK(c.lambda == 0.25);
  CHECK(c.dist == "pareto:alpha=1.5");
  CHECK(c.policy == "po-lcfs(gittins,s=10)");
  CHECK(c.s_list == std::vector<double>{10, 20});
  CHECK(c.n_periods == 5000);
  CHECK(c.seed == 7);
  CHECK(c.confidence == 0.95);
  CHECK(c.threads == 1);
  CHECK_NOTHROW(c.validate());
  REQUIRE(c.dist_parsed.has_value());
  CHECK(rel_err(c.dist_parsed->mean(), 2.0) < 1e-12);
  CHECK(c.policy_parsed->has_threshold());

  CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "no.json").string()),
                  std::invalid_argument);
  {
    std::ofstream out(dir / "bad.json");
    out << "{ not json";
  }
  CHECK_THROWS_AS(ExperimentConfig::from_json_file((dir / "bad.json").string()),
                  std::invalid_argument);
  {
    std::ofstream out(dir / "type.json");
    out << R"({"lambda": "fast"})";
  }
  CHECK_THROWS_AS(
      ExperimentConfig::from_json_file((dir / "type.json").string()),
      std::invalid_argument);
}

TEST_CASE("config rejects inconsistent setups", "[cli]") {
  auto good = [] {
    ExperimentConfig c;
    c.lambda = 1.0;
    c.dist = "pareto:alpha=3";
    c.policy = "po-lcfs(lcfs,s=1)";
    c.s_list = {1, 2};
    return c;
  };
  CHECK_NOTHROW(good().validate());

  auto c = good();
  c.lambda = 2.1;  // rho = 1.05
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.dist = "pareto:alpha=1.0";  // infinite mean
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.dist = "zeta:q=2";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.policy = "po-lcfs(";
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.reference = "po-lcfs(lcfs,s=1)";  // reference must not truncate
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.s_list = {2, 1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.s_list = {-1, 1};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.n_periods = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.confidence = 1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = good();
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("csv formatting and atomic write", "[cli]") {
  CHECK(csv::fmt(0.5) == "0.5");
  CHECK(csv::fmt(1.0 / 3.0) == "0.333333333333");  // 12 significant digits
  CHECK(csv::fmt(88.0) == "88");
  CHECK(csv::fmt(kInf) == "inf");
  CHECK(csv::fmt(1.5e-300) == "1.5e-300");

  auto dir = fresh_dir("csv");
  auto target = dir / "t.csv";
  {
    csv::Writer w(target, {"a", "b"});
    w.row(1.0 / 3.0, "x");
    CHECK_THROWS_AS(w.row("only-one"), std::invalid_argument);
    CHECK(!fs::exists(target));  // nothing visible before commit
    CHECK(fs::exists(dir / "t.csv.tmp"));
    w.commit();
  }
  CHECK(fs::exists(target));
  CHECK(!fs::exists(dir / "t.csv.tmp"));
  CHECK(slurp(target) == "a,b\n0.333333333333,x\n");

  // Abandoned writer cleans up and never publishes.
  auto target2 = dir / "u.csv";
  {
    csv::Writer w(target2, {"a"});
    w.row(1.0);
  }
  CHECK(!fs::exists(target2));
  CHECK(!fs::exists(dir / "u.csv.tmp"));
}

TEST_CASE("bounds table matches the bounds module cell for cell", "[cli]") {
  auto dir = fresh_dir("bounds_csv");
  ExperimentConfig c;
  c.lambda = 1.0;
  c.dist = "pareto:alpha=3";
  c.policy = "po-lcfs(lcfs,s=1)";
  c.s_list = {1, 2, 4};
  c.out_dir = dir.string();
  auto path = write_bounds_csv(c);

  auto rows = parse_csv(path);
  REQUIRE(rows.size() == 4);
  REQUIRE(rows[0] ==
          std::vector<std::string>{"s", "p_tail", "m1_tail", "m2_tail", "K1",
                                   "K2", "g_formula", "g_paper_constants",
                                   "EM", "EL", "ER_ub", "lemma1_W_ub",
                                   "lemma1_N_ub", "PAc_ub"});

  auto d = ServiceDistribution::parse(c.dist);
  auto params = BoundParams::from(c.lambda, d);
  for (std::size_t i = 0; i < c.s_list.size(); ++i) {
    const double s = c.s_list[i];
    auto ts = d.tail_stats(s);
    auto gb = thm2_gap(params, ts);
    auto ch = thm1_chain(params, ts);
    auto lb = lemma1_bounds(params, ts);
    const auto& r = rows[i + 1];
    CHECK(r[0] == csv::fmt(s));
    CHECK(r[1] == csv::fmt(ts.p_tail));
    CHECK(r[4] == csv::fmt(gb.k.K1));
    CHECK(r[5] == csv::fmt(gb.k.K2));
    CHECK(r[6] == csv::fmt(gb.g));
    CHECK(r[7] == csv::fmt(gb.g_reported));
    CHECK(r[8] == csv::fmt(ch.EM));
    CHECK(r[10] == csv::fmt(ch.ER_ub));
    CHECK(r[11] == csv::fmt(lb.W_ub));
    CHECK(r[13] == csv::fmt(lb.PAc_ub));
  }
  // Reference row frozen outright: every bound at s = 1 in one line.
  CHECK(rows[1] == std::vector<std::string>{"1", "0.125", "0.25", "0.875",
                                            "88", "80", "92", "156", "0.2",
                                            "0.6", "1.3", "8", "10", "0.25"});
}

TEST_CASE("heavy-tailed laws blank out second-moment columns", "[cli]") {
  auto dir = fresh_dir("bounds_na");
  ExperimentConfig c;
  c.lambda = 0.25;
  c.dist = "pareto:alpha=1.5";
  c.policy = "po-lcfs(gittins,s=10)";
  c.s_list = {10, 20};
  c.out_dir = dir.string();
  auto rows = parse_csv(write_bounds_csv(c));
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    CHECK(rows[i][3] == "inf");  // E[X^2 1{X>s}] diverges
    CHECK(rows[i][4] == "NA");   // K1
    CHECK(rows[i][5] == "NA");   // K2
    CHECK(rows[i][6] == "NA");   // g_formula
    CHECK(rows[i][7] == "NA");   // g_paper_constants
    CHECK(rows[i][10] != "NA");  // the residual chain still applies
    CHECK(rows[i][10] != "inf");
  }
}

TEST_CASE("experiment reruns are byte-identical", "[cli]") {
  auto d1 = fresh_dir("rerun1");
  auto d2 = fresh_dir("rerun2");
  auto c1 = small_reference_config(d1);
  auto c2 = small_reference_config(d2);

  auto r1 = run_validate(c1);
  auto r2 = run_validate(c2);
  CHECK(r1.all_pass);
  CHECK(slurp(r1.csv_path) == slurp(r2.csv_path));

  c1.policy = "trunc-switch(lcfs,s=1)";
  c2.policy = "trunc-switch(lcfs,s=1)";
  c1.n_periods = c2.n_periods = 10000;
  auto s1 = run_sweep(c1);
  auto s2 = run_sweep(c2);
  CHECK(slurp(s1.csv_path) == slurp(s2.csv_path));
  CHECK(s1.csv_path.filename() == "gap.csv");
  REQUIRE(s1.gap.size() == 2);
  CHECK(s1.gap[0].verdict == "PASS");

  // Different seed must actually change the simulated columns.
  c2.seed = 43;
  auto s3 = run_sweep(c2);
  CHECK(slurp(s1.csv_path) != slurp(s3.csv_path));
}

TEST_CASE("validate flags starved rare-event estimates", "[cli]") {
  auto dir = fresh_dir("starved");
  ExperimentConfig c;
  c.lambda = 1.0;
  c.dist = "pareto:alpha=3";
  c.policy = "po-lcfs(lcfs,s=8)";
  c.s_list = {8};  // P(X > 8) = 1/729: a few thousand periods cannot feed it
  c.n_periods = 2000;
  c.seed = 5;
  c.out_dir = dir.string();
  auto rep = run_validate(c);
  CHECK_FALSE(rep.all_pass);
  bool saw = false;
  for (const auto& r : rep.rows)
    if (r.verdict == "INSUFFICIENT") saw = true;
  CHECK(saw);
  auto rows = parse_csv(rep.csv_path);
  bool saw_na = false;
  for (const auto& r : rows)
    if (r.size() > 2 && r[2] == "NA") saw_na = true;
  CHECK(saw_na);
}

TEST_CASE("gittins table output", "[cli]") {
  auto dir = fresh_dir("gtab");
  ExperimentConfig c;
  c.lambda = 1.0;
  c.dist = "pareto:alpha=3";
  c.policy = "po-lcfs(lcfs,s=1)";
  c.out_dir = dir.string();
  auto rows = parse_csv(write_gittins_csv(c, 2.0));
  REQUIRE(rows.size() > 100);
  CHECK(rows[0] == std::vector<std::string>{"attained", "index"});
  CHECK(rows[1][0] == "0");
  CHECK(rows.back()[1] == "inf");  // the atom at the truncation level
}

TEST_CASE("binary exit codes", "[cli]") {
  auto dir = fresh_dir("exit");
  const std::string out = " --out " + (dir / "o").string();

  // 0: clean simulate and a passing validate.
  CHECK(run_cli("simulate --lambda 0.5 --dist exp:rate=1 --policy fcfs "
                "--n 2000 --seed 3") == 0);
  CHECK(run_cli("validate --lambda 1 --dist pareto:alpha=3 "
                "--policy \"po-lcfs(lcfs,s=1)\" --s 0.5 --s 1 --n 30000 "
                "--seed 42" + out) == 0);

  // 1: usage and configuration mistakes.
  CHECK(run_cli("") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("simulate --lambda 2 --dist exp:rate=1 --policy fcfs") == 1);
  CHECK(run_cli("simulate --lambda 0.5 --dist exp:rate=1 "
                "--policy \"po-lcfs(lcfs)\" --n 10") == 1);  // s never set
  CHECK(run_cli("validate --lambda 1 --dist pareto:alpha=3 "
                "--policy fcfs --s 1 --n 10" + out) == 1);  // no threshold
  CHECK(run_cli("validate --lambda 1 --dist pareto:alpha=3 "
                "--policy \"po-lcfs(lcfs,s=1)\" --n 10" + out) ==
        1);  // no levels
  CHECK(run_cli("sweep --config " + (dir / "missing.json").string() + out) ==
        1);

  // 2: a bound check that could not be satisfied (starved estimate).
  CHECK(run_cli("validate --lambda 1 --dist pareto:alpha=3 "
                "--policy \"po-lcfs(lcfs,s=8)\" --s 8 --n 2000 --seed 5" +
                out) == 2);

  // 3: runaway period tripping the event cap.
  CHECK(run_cli("simulate --lambda 0.9 --dist exp:rate=1 --policy fcfs "
                "--n 1000 --seed 1 --max-events 40") == 3);
}
