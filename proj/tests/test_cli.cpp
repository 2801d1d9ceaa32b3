/**
 * Copyright 2026 The hthc Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "hthc/coordinator.hpp"
#include "hthc/data.hpp"
#include "hthc/tuner.hpp"

using namespace hthc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path& dir() {
  static const fs::path d = [] {
    auto p = fs::temp_directory_path() / "hthc_test_cli";
    fs::create_directories(p);
    return p;
  }();
  return d;
}

std::string at(const std::string& name) { return (dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(HTHC_CLI_PATH) + " " + args + " > " +
                          at("stdout.txt") + " 2> " + at("stderr.txt");
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

void check_summary_schema(const json& j) {
  for (const char* key : {"model", "mode", "config", "epochs", "wall_s", "final_gap",
                          "final_objective", "converged", "coverage_A"})
    CHECK_MESSAGE(j.contains(key), key);
  for (const char* key : {"m", "t_a", "t_b", "v_b", "sync", "tol"})
    CHECK_MESSAGE(j["config"].contains(key), key);
}

}  // namespace

TEST_CASE("huge tolerance exits after one epoch") {
  CHECK(run("train --model lasso --mode st --tol 1e30 --trace " + at("t1.csv") +
            " --summary " + at("s1.json")) == 0);
  const auto rows = lines(at("t1.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == trace_csv_header());
  const auto j = json::parse(slurp(at("s1.json")));
  check_summary_schema(j);
  CHECK(j["epochs"] == 1);
  CHECK(j["converged"] == true);
}

TEST_CASE("hthc summary lists coverage per epoch") {
  CHECK(run("train --mode hthc --batch-frac 0.25 --synth-n 300 --synth-d 60 --precision f64 "
            "--summary " + at("s2.json") + " --trace " + at("t2.csv")) == 0);
  const auto j = json::parse(slurp(at("s2.json")));
  check_summary_schema(j);
  REQUIRE(j["coverage_A"].is_array());
  CHECK(j["coverage_A"].size() == j["epochs"].get<std::size_t>());
  CHECK(j["config"]["m"] == 75);
  CHECK(lines(at("t2.csv")).size() == j["epochs"].get<std::size_t>() + 1);
}

TEST_CASE("epoch limit exits with 2") {
  CHECK(run("train --max-epochs 2 --tol 1e-12 --summary " + at("s3.json")) == 2);
  const auto j = json::parse(slurp(at("s3.json")));
  CHECK(j["converged"] == false);
  CHECK(j["status"] == "epoch_limit");
  CHECK(run("train --timeout-s 0.01 --max-epochs 100000000 --tol 1e-14 --summary " +
            at("s3b.json")) == 2);
  CHECK(json::parse(slurp(at("s3b.json")))["status"] == "timeout");
}

TEST_CASE("usage and input errors exit with 1") {
  CHECK(run("train --batch-frac 0.1 --batch-size 10") == 1);
  CHECK(run("train --auto-tune " + at("no_such_table.json")) == 1);
  CHECK(run("train --model ridge") == 1);
  CHECK(run("train --data " + at("no_such.svm")) == 1);
  CHECK(run("train --auto-tune x.json --tb 2") == 1);
  CHECK(run("") == 1);
  CHECK(run("--help") == 0);
}

TEST_CASE("auto-tune echoes the tuner choice") {
  TimingTable t;
  t.host = "test";
  for (std::size_t ta : {1, 2, 4})
    for (std::size_t d : {100, 400}) t.a.push_back({ta, d, 1e-6 * double(d) / 100 / ta});
  for (std::size_t tb : {1, 2})
    for (std::size_t vb : {1, 2})
      for (std::size_t d : {100, 400})
        t.b.push_back({tb, vb, d, 3e-6 * double(d) / 100 / (tb * (vb == 1 ? 1.0 : 1.5))});
  save_timing_table(t, at("table.json"));
  const auto expect = choose_parameters(t, 500, 200, 0.2, 6);
  CHECK(run("train --synth-n 500 --synth-d 200 --max-epochs 3 --tol 1e-12 --cores 6 "
            "--r-tilde 0.2 --auto-tune " + at("table.json") + " --summary " + at("s4.json")) == 2);
  const auto j = json::parse(slurp(at("s4.json")));
  const auto& c = j["config"];
  CHECK(c["m"] == expect.m);
  CHECK(c["t_a"] == expect.t_a);
  CHECK(c["t_b"] == expect.t_b);
  CHECK(c["v_b"] == expect.v_b);
  CHECK(c["predicted_epoch_s"].get<double>() == expect.predicted_epoch_s);
  CHECK(c["predicted_coverage"].get<double>() == expect.predicted_coverage);
  CHECK(c["auto_tuned"] == true);
}

TEST_CASE("tune prints the worked example") {
  TimingTable t;
  t.a.push_back({8, 1000, 2e-6});
  t.b.push_back({4, 1, 1000, 1e-6});
  save_timing_table(t, at("example.json"));
  CHECK(run("tune --table " + at("example.json") + " --n 1000 --d 1000 --cores 12") == 0);
  CHECK(slurp(at("stdout.txt")).rfind("m=300 t_a=8 t_b=4 v_b=1", 0) == 0);
  CHECK(run("tune --json --table " + at("example.json") + " --n 1000 --d 1000 --cores 12") == 0);
  CHECK(json::parse(slurp(at("stdout.txt")))["m"] == 300);
}

TEST_CASE("convert round trip") {
  {
    std::ofstream out(at("small.svm"));
    out << "+1 1:1 3:2\n-1 2:4\n+1 1:0.25 4:-1.5\n";
  }
  CHECK(run("convert --in " + at("small.svm") + " --out " + at("small.bin")) == 0);
  const auto text = load_libsvm<float>(at("small.svm"));
  const auto bin = load_binary<float>(at("small.bin"));
  REQUIRE(bin.rows() == text.matrix.rows());
  REQUIRE(bin.cols() == text.matrix.cols());
  CHECK(std::memcmp(bin.values().data(), text.matrix.values().data(),
                    bin.values().size() * sizeof(float)) == 0);
  const auto labels = load_binary<float>(at("small.bin.labels"));
  CHECK(std::vector<float>(labels.values().begin(), labels.values().end()) == text.labels);

  CHECK(run("train --model svm --lambda 0.1 --data " + at("small.bin") +
            " --format bin --max-epochs 200 --summary " + at("s5.json")) == 0);
  CHECK(json::parse(slurp(at("s5.json")))["n"] == 3);
  CHECK(run("train --model lasso --lambda 0.1 --data " + at("small.svm") +
            " --max-epochs 200 --summary " + at("s6.json")) == 0);
  const auto j = json::parse(slurp(at("s6.json")));
  CHECK(j["n"] == 4);
  CHECK(j["d"] == 3);
}

TEST_CASE("compare emits one block per mode") {
  CHECK(run("compare --synth-n 300 --synth-d 60 --precision f64 --trace " + at("cmp.csv") +
            " --summary " + at("cmp.json")) == 0);
  const auto rows = lines(at("cmp.csv"));
  REQUIRE(rows.size() > 2);
  CHECK(rows[0] == trace_csv_header());
  std::size_t hthc = 0, st = 0;
  bool in_st = false, ordered = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    const bool is_st = rows[k].find(",st,") != std::string::npos;
    if (is_st) ++st, in_st = true;
    else ++hthc, ordered = ordered && !in_st;
    CHECK(std::count(rows[k].begin(), rows[k].end(), ',') ==
          std::count(rows[0].begin(), rows[0].end(), ','));
  }
  CHECK(ordered);
  const auto j = json::parse(slurp(at("cmp.json")));
  REQUIRE(j["runs"].size() == 2);
  CHECK(j["runs"][0]["mode"] == "hthc");
  CHECK(j["runs"][1]["mode"] == "st");
  CHECK(j["runs"][0]["epochs"] == hthc);
  CHECK(j["runs"][1]["epochs"] == st);
  for (const auto& r : j["runs"]) check_summary_schema(r);
}

TEST_CASE("reference flag fills suboptimality") {
  CHECK(run("train --precision f64 --synth-n 200 --synth-d 40 --reference --trace " +
            at("t7.csv") + " --summary " + at("s7.json")) == 0);
  const auto rows = lines(at("t7.csv"));
  REQUIRE(rows.size() > 1);
  // suboptimality is the fifth column.
  std::stringstream ss(rows.back());
  std::string field;
  for (int k = 0; k < 5; ++k) std::getline(ss, field, ',');
  CHECK_FALSE(field.empty());
}

TEST_CASE("profile writes a table") {
  CHECK(run("profile --d-grid 100,300 --ta-grid 1 --tb-grid 1 --vb-grid 1 --reps 1 --n 50 "
            "--cores 2 --out " + at("prof.json")) == 0);
  const auto t = load_timing_table(at("prof.json"));
  CHECK(t.a.size() == 2);
  CHECK(t.b.size() == 2);
}
