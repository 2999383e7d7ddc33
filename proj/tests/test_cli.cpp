// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <cmath>
#include <fstream>
#include <sstream>

#ifndef MFGP_CLI_PATH
#define MFGP_CLI_PATH "mfgp"
#endif

namespace {

int run(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = std::string(MFGP_CLI_PATH) + " " + args + " 2>cli_stderr.txt >cli_stdout.txt";
  const int rc = std::system(cmd.c_str());
  if (output) {
    std::ifstream f("cli_stdout.txt");
    std::stringstream ss;
    ss << f.rdbuf();
    *output = ss.str();
  }
  return WEXITSTATUS(rc);
}

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double parse_metric(const std::string& text, const std::string& key) {
  const auto pos = text.find(key);
  REQUIRE(pos != std::string::npos);
  return std::stod(text.substr(pos + key.size()));
}

// tiny deterministic generator for test fixtures
struct CounterRngLike {
  unsigned long long s = 88172645463325252ULL;
  double next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return static_cast<double>(s % 1000000ULL) / 1000000.0;
  }
};

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("defaults mirror the option tables") {
  std::string help;
  run("fit --help", &help);
  CHECK(help.find("--restarts") != std::string::npos);
  CHECK(help.find("[32]") != std::string::npos);          // num_restarts
  CHECK(help.find("[2]") != std::string::npos);           // embedding-dim
  CHECK(help.find("[1e-08]") != std::string::npos);       // lb-noise
  CHECK(help.find("[1e-05]") != std::string::npos);       // fix-noise-val
  CHECK(help.find("[20]") != std::string::npos);          // num-pass-train
  CHECK(help.find("[30]") != std::string::npos);          // num-pass-pred
  CHECK(help.find("[0.08]") != std::string::npos);        // interval-score eps
  run("bo --help", &help);
  CHECK(help.find("[40000]") != std::string::npos);       // max-cost
  CHECK(help.find("[50]") != std::string::npos);          // stall
}

TEST_CASE("fit, predict and metrics on a noise-free sinusoidal emulator") {
  CHECK(run("benchmark --name sinusoidal --source 0 --n 20 --no-noise --seed 1 --out cli_train.csv") == 0);
  CHECK(run("fit --data cli_train.csv --out cli_model.json --restarts 8 --seed 0") == 0);
  CHECK(run("benchmark --name sinusoidal --source 0 --n 60 --no-noise --seed 2 --out cli_test.csv") == 0);
  CHECK(run("predict --model cli_model.json --data cli_test.csv --response y --out cli_pred.csv") == 0);
  std::string metrics;
  CHECK(run("metrics --pred cli_pred.csv --truth cli_test.csv", &metrics) == 0);
  CHECK(parse_metric(metrics, "NRMSE") < 0.01);
  CHECK(parse_metric(metrics, "NIS") < 0.1);
}

TEST_CASE("metrics on identical prediction and truth yields zero NRMSE") {
  {
    std::ofstream f("cli_truth.csv");
    f << "x,y\n0,1\n1,2\n2,4\n";
  }
  {
    std::ofstream f("cli_same.csv");
    f << "x,mean,std\n0,1,0.5\n1,2,0.5\n2,4,0.5\n";
  }
  std::string metrics;
  CHECK(run("metrics --pred cli_same.csv --truth cli_truth.csv", &metrics) == 0);
  CHECK(parse_metric(metrics, "NRMSE") == 0.0);
}

TEST_CASE("save load predict twice produces identical output files") {
  CHECK(run("predict --model cli_model.json --data cli_test.csv --response y --out cli_p1.csv") == 0);
  CHECK(run("predict --model cli_model.json --data cli_test.csv --response y --out cli_p2.csv") == 0);
  CHECK(slurp("cli_p1.csv") == slurp("cli_p2.csv"));
}

TEST_CASE("benchmark files are deterministic per seed") {
  CHECK(run("benchmark --name borehole --source 2 --n 30 --seed 5 --out cli_b1.csv") == 0);
  CHECK(run("benchmark --name borehole --source 2 --n 30 --seed 5 --out cli_b2.csv") == 0);
  CHECK(slurp("cli_b1.csv") == slurp("cli_b2.csv"));
  CHECK(run("benchmark --name borehole --source 2 --n 30 --seed 6 --out cli_b3.csv") == 0);
  CHECK(slurp("cli_b1.csv") != slurp("cli_b3.csv"));
}

TEST_CASE("usage and data errors map to the documented exit codes") {
  CHECK(run("fit --data cli_train.csv") == 2);  // missing --out
  CHECK(run("fit --data nonexistent.csv --out cli_x.json") == 3);
  CHECK(run("benchmark --name bogus --out cli_x.csv") == 2);
  CHECK(run("fit --data cli_train.csv --out cli_x.json --qual-dict banana") == 2);
  // calibrate without any HF rows: all rows belong to source 1
  {
    std::ofstream f("cli_nohf.csv");
    f << "x,zeta,src,y\n0.1,0.3,1,1\n0.2,0.4,1,2\n0.4,0.2,1,3\n";
  }
  CHECK(run("calibrate --data cli_nohf.csv --source src --calibration-ids 1 --mode det") == 2);
}

TEST_CASE("calibration through the front end prints the estimate") {
  // LF(x, zeta) matches HF(x) at zeta = 0.6 with a linear departure
  {
    std::ofstream f("cli_cal.csv");
    f << "x,zeta,src,y\n";
    f << "0.2,,0," << 2.0 * std::sin(0.4) << "\n";
    f << "0.9,,0," << 2.0 * std::sin(1.8) << "\n";
    f << "1.7,,0," << 2.0 * std::sin(3.4) << "\n";
    for (int i = 0; i < 24; ++i) {
      const double x = 0.08 * i;
      const double z = 0.1 * (i % 11);
      f << x << "," << z << ",1," << 2.0 * std::sin(2.0 * x) + 2.0 * (z - 0.6) << "\n";
    }
  }
  std::string out;
  CHECK(run("calibrate --data cli_cal.csv --source src --calibration-ids 1 --mode det "
            "--mean per-source --restarts 6 --seed 1",
            &out) == 0);
  const double zeta = parse_metric(out, "zeta[0]");
  CHECK(std::abs(zeta - 0.6) < 0.15);
}

TEST_CASE("single-fidelity bayesian optimization through the front end") {
  std::string out;
  CHECK(run("bo --problem sinusoidal --sf --costs 1 --max-cost 14 --pool 200 --restarts 8 "
            "--seed 3 --out-history cli_hist.csv",
            &out) == 0);
  const std::string hist = slurp("cli_hist.csv");
  CHECK(hist.find("iteration,source,x0,y,incumbent_hf,acquisition,accumulated_cost") !=
        std::string::npos);
  // running cost column is the exact cumulative sum of unit costs
  std::stringstream ss(hist);
  std::string line;
  std::getline(ss, line);
  int rows = 0;
  while (std::getline(ss, line)) {
    ++rows;
    const auto last = line.rfind(',');
    CHECK(std::stod(line.substr(last + 1)) == doctest::Approx(rows));
  }
  CHECK(rows >= 1);
}

TEST_CASE("probabilistic fusion and continuation run through the front end") {
  {
    std::ofstream f("cli_mf.csv");
    f << "x,src,y\n";
    CounterRngLike rng;
    for (int i = 0; i < 6; ++i) {
      const double x = 6.0 * rng.next();
      f << x << ",0," << 2.0 * std::sin(x) + 0.05 * (rng.next() - 0.5) << "\n";
    }
    for (int i = 0; i < 14; ++i) {
      const double x = 6.0 * rng.next();
      f << x << ",1," << 2.0 * std::sin(x) + 0.4 + 0.05 * (rng.next() - 0.5) << "\n";
    }
  }
  std::string out;
  CHECK(run("fit --data cli_mf.csv --source src --probabilistic --num-pass-train 6 "
            "--num-pass-pred 8 --mean per-source --restarts 4 --seed 1 --out cli_prob.json",
            &out) == 0);
  CHECK(run("predict --model cli_prob.json --data cli_mf.csv --response y --source src "
            "--out cli_prob_pred.csv") == 0);
  std::string metrics;
  CHECK(run("metrics --pred cli_prob_pred.csv --truth cli_mf.csv", &metrics) == 0);
  CHECK(parse_metric(metrics, "NRMSE") < 0.2);

  CHECK(run("fit --data cli_mf.csv --source src --continuation --ladder 1e-1,1e-2,1e-3 "
            "--mean per-source --restarts 4 --seed 1 --out cli_cont.json",
            &out) == 0);
  CHECK(out.find("continuation selected floor") != std::string::npos);
}

TEST_CASE("sobol on an analytic problem prints the report table") {
  std::string out;
  CHECK(run("sobol --problem borehole --n 4096 --seed 1", &out) == 0);
  CHECK(out.find("feature") != std::string::npos);
  CHECK(out.find("main") != std::string::npos);
  CHECK(out.find("total") != std::string::npos);
}

}  // TEST_SUITE
