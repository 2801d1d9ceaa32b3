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


// hthc: train, profile, tune, convert, compare.
//
// Exit codes: 0 converged (or success), 2 epoch limit or timeout, 1 error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "hthc/baselines.hpp"
#include "hthc/coordinator.hpp"
#include "hthc/data.hpp"
#include "hthc/errors.hpp"
#include "hthc/tuner.hpp"

using namespace hthc;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct DataArgs {
  std::string data;
  std::string format = "libsvm";
  std::size_t synth_n = 1000;
  std::size_t synth_d = 200;
  double synth_support = 0.05;
  double synth_noise = 0.01;
  double synth_separation = 1.0;
  std::uint64_t synth_seed = 1;
};

struct TrainArgs {
  DataArgs data;
  std::string model = "lasso";
  double lambda = 0.1;
  std::string mode = "hthc";
  std::string sync = "atomic";
  std::optional<double> batch_frac;
  std::optional<std::size_t> batch_size;
  std::size_t ta = 1, tb = 1, vb = 1;
  std::string auto_tune;
  std::size_t cores = 0;
  double r_tilde = kDefaultRTilde;
  double tol = kDefaultTolerance;
  std::size_t max_epochs = 1000;
  double timeout_s = std::numeric_limits<double>::infinity();
  std::uint64_t seed = 0;
  std::uint64_t a_quota = 0;
  std::size_t gap_every = 1;
  std::string trace;
  std::string summary;
  std::string precision = "f32";
  bool reference = false;
};

fs::path labels_path(const fs::path& p) { return fs::path(p.string() + ".labels"); }

// Raw dataset as read from disk: one column per sample, unfolded labels.
template <typename Real>
Dataset<Real> read_samples(const DataArgs& a) {
  if (a.format == "libsvm") return load_libsvm<Real>(a.data);
  if (a.format == "bin") {
    Dataset<Real> ds;
    ds.matrix = load_binary<Real>(a.data);
    const auto lp = labels_path(a.data);
    if (!fs::exists(lp)) throw std::runtime_error("missing label file " + lp.string());
    const auto lab = load_binary<Real>(lp);
    if (lab.cols() != ds.matrix.cols())
      throw FormatError("label file does not match the matrix column count");
    ds.labels.assign(lab.values().begin(), lab.values().end());
    return ds;
  }
  throw ConfigError("unknown format '" + a.format + "'");
}

// Lasso: rows are samples, coordinates are features, targets are labels.
// SVM: coordinates are samples with label-folded columns.
template <typename Real>
struct Loaded {
  DataMatrix<Real> matrix;
  std::vector<Real> targets;
  std::string source;
};

template <typename Real>
Loaded<Real> load_problem_data(const DataArgs& a, ModelKind kind) {
  Loaded<Real> out;
  if (a.data.empty()) {
    out.source = "synthetic";
    if (kind == ModelKind::lasso) {
      auto inst = synth_lasso<Real>(a.synth_n, a.synth_d, a.synth_support,
                                    a.synth_noise, a.synth_seed);
      out.matrix = std::move(inst.matrix);
      out.targets = std::move(inst.targets);
    } else {
      auto ds = synth_svm<Real>(a.synth_n, a.synth_d, a.synth_separation, a.synth_seed);
      out.matrix = std::move(ds.matrix);
    }
    return out;
  }
  out.source = a.data;
  auto ds = read_samples<Real>(a);
  if (kind == ModelKind::lasso) {
    out.matrix = transpose(ds.matrix);
    out.targets = std::move(ds.labels);
  } else {
    out.matrix = fold_labels<Real>(ds.matrix, ds.labels);
  }
  return out;
}

void add_data_options(CLI::App* app, DataArgs& a) {
  app->add_option("--data", a.data, "LIBSVM or binary dataset (synthetic when absent)");
  app->add_option("--format", a.format, "Input format")
      ->check(CLI::IsMember({"libsvm", "bin"}));
  app->add_option("--synth-n", a.synth_n, "Synthetic coordinates");
  app->add_option("--synth-d", a.synth_d, "Synthetic dimension");
  app->add_option("--synth-support", a.synth_support, "Synthetic Lasso support fraction");
  app->add_option("--synth-noise", a.synth_noise, "Synthetic Lasso noise level");
  app->add_option("--synth-separation", a.synth_separation, "Synthetic SVM class separation");
  app->add_option("--synth-seed", a.synth_seed, "Synthetic data seed");
}

void add_train_options(CLI::App* app, TrainArgs& a, bool with_mode) {
  add_data_options(app, a.data);
  app->add_option("--model", a.model)->check(CLI::IsMember({"lasso", "svm"}));
  app->add_option("--lambda", a.lambda, "Regularization strength");
  if (with_mode) app->add_option("--mode", a.mode)->check(CLI::IsMember({"hthc", "st"}));
  app->add_option("--sync", a.sync)->check(CLI::IsMember({"atomic", "wild"}));
  auto* frac = app->add_option("--batch-frac", a.batch_frac, "Fraction of coordinates per epoch");
  auto* size = app->add_option("--batch-size", a.batch_size, "Coordinates per epoch");
  frac->excludes(size);
  auto* ta = app->add_option("--ta", a.ta, "Task A workers");
  auto* tb = app->add_option("--tb", a.tb, "Parallel updates in task B");
  auto* vb = app->add_option("--vb", a.vb, "Workers per task-B update");
  auto* tune = app->add_option("--auto-tune", a.auto_tune, "Timing table for parameter selection");
  for (auto* o : {frac, size, ta, tb, vb}) tune->excludes(o);
  app->add_option("--cores", a.cores, "Core budget for --auto-tune");
  app->add_option("--r-tilde", a.r_tilde, "Required fraction of gaps refreshed per epoch");
  app->add_option("--tol", a.tol, "Duality gap target");
  app->add_option("--max-epochs", a.max_epochs);
  app->add_option("--timeout-s", a.timeout_s);
  app->add_option("--seed", a.seed);
  app->add_option("--a-quota", a.a_quota, "Fixed task-A scores per epoch (0: run until B ends)");
  app->add_option("--gap-every", a.gap_every, "Epochs between duality gap evaluations");
  app->add_option("--trace", a.trace, "Trace CSV output");
  app->add_option("--summary", a.summary, "Summary JSON output (stdout when absent)");
  app->add_option("--precision", a.precision)->check(CLI::IsMember({"f32", "f64"}));
  app->add_flag("--reference", a.reference, "Also solve with the sequential reference for suboptimality");
}

struct Resolved {
  TrainConfig cfg;
  std::optional<TunedConfig> tuned;
};

template <typename Real>
Resolved resolve_config(const TrainArgs& a, const Loaded<Real>& data) {
  Resolved r;
  TrainConfig& c = r.cfg;
  c.r_tilde = a.r_tilde;
  c.tol = a.tol;
  c.max_epochs = a.max_epochs;
  c.timeout_s = a.timeout_s;
  c.seed = a.seed;
  c.a_quota = a.a_quota;
  c.gap_every = a.gap_every;
  c.solver.mode = parse_sync_mode(a.sync);
  c.solver.t_b = a.tb;
  c.solver.v_b = a.vb;
  c.gap.t_a = a.ta;
  if (a.batch_frac) c.batch_frac = *a.batch_frac;
  if (a.batch_size) c.batch_size = *a.batch_size;
  if (!a.auto_tune.empty()) {
    const auto table = load_timing_table(a.auto_tune);
    std::size_t cores = a.cores ? a.cores : std::thread::hardware_concurrency();
    cores = std::max<std::size_t>(cores, 2);
    const auto t = choose_parameters(table, data.matrix.cols(), data.matrix.rows(),
                                     a.r_tilde, cores);
    if (!t.feasible)
      std::cerr << "warning: no timing tuple meets r_tilde = " << a.r_tilde
                << "; using the best coverage found\n";
    c.batch_size = t.m;
    c.gap.t_a = t.t_a;
    c.solver.t_b = t.t_b;
    c.solver.v_b = t.v_b;
    r.tuned = t;
  }
  return r;
}

json config_json(const TrainArgs& a, const TrainConfig& c, std::size_t n,
                 const std::optional<TunedConfig>& tuned) {
  json j{{"m", c.resolve_batch_size(n)},
         {"t_a", c.gap.t_a},
         {"t_b", c.solver.t_b},
         {"v_b", c.solver.v_b},
         {"sync", std::string(to_string(c.solver.mode))},
         {"lambda", a.lambda},
         {"tol", c.tol},
         {"max_epochs", c.max_epochs},
         {"seed", c.seed},
         {"r_tilde", c.r_tilde},
         {"a_quota", c.a_quota},
         {"gap_every", c.gap_every},
         {"precision", a.precision},
         {"auto_tuned", tuned.has_value()}};
  j["timeout_s"] = std::isfinite(c.timeout_s) ? json(c.timeout_s) : json(nullptr);
  if (tuned) {
    j["predicted_epoch_s"] = tuned->predicted_epoch_s;
    j["predicted_coverage"] = tuned->predicted_coverage;
    j["feasible"] = tuned->feasible;
  }
  return j;
}

json mode_config(const TrainArgs& a, const std::string& mode, const Resolved& r,
                 std::size_t n) {
  json j = config_json(a, r.cfg, n, r.tuned);
  if (mode == "st") {
    j["m"] = n;
    j["t_a"] = 0;
  }
  return j;
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

template <typename Real>
Problem make_problem(const TrainArgs& a, const Loaded<Real>& data) {
  const std::size_t n = data.matrix.cols();
  if (a.model == "lasso")
    return Problem::lasso(a.lambda, n,
                          init_lipschitz_bound<Real>(a.lambda, std::span<const Real>(data.targets)));
  return Problem::svm(a.lambda, n);
}

template <typename Real>
TrainResult<Real> run_mode(const std::string& mode, const Loaded<Real>& data,
                           const Problem& p, const TrainConfig& cfg) {
  if (mode == "st") return st_train<Real>(data.matrix, data.targets, p, cfg);
  return train<Real>(data.matrix, data.targets, p, cfg);
}

template <typename Real>
json result_json(const TrainArgs& a, const std::string& mode, const Resolved& r,
                 const Loaded<Real>& data, const TrainResult<Real>& res) {
  json cov = json::array();
  for (const auto& row : res.trace) cov.push_back(row.coverage_a);
  return json{{"model", a.model},
              {"mode", mode},
              {"data", data.source},
              {"n", data.matrix.cols()},
              {"d", data.matrix.rows()},
              {"config", mode_config(a, mode, r, data.matrix.cols())},
              {"epochs", res.epochs},
              {"wall_s", res.wall_s},
              {"final_gap", number_or_null(res.final_gap)},
              {"final_objective", number_or_null(res.final_objective)},
              {"converged", res.converged()},
              {"status", std::string(to_string(res.status))},
              {"coverage_A", cov}};
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

template <typename Real>
std::optional<double> reference_optimum(const TrainArgs& a, const Loaded<Real>& data,
                                        const Problem& p) {
  if (!a.reference) return std::nullopt;
  const auto ref = reference_scd<Real>(data.matrix, data.targets, p, 1e-9);
  if (!ref.converged) std::cerr << "warning: reference solver did not reach 1e-9\n";
  return ref.objective;
}

template <typename Real>
int cmd_train(const TrainArgs& a) {
  const auto kind = parse_model_kind(a.model);
  const auto data = load_problem_data<Real>(a.data, kind);
  const auto p = make_problem(a, data);
  Resolved r = resolve_config(a, data);
  r.cfg.f_star = reference_optimum(a, data, p);
  const auto res = run_mode<Real>(a.mode, data, p, r.cfg);
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw std::runtime_error("cannot write " + a.trace);
    write_trace_csv(out, res.trace);
  }
  write_text(a.summary, result_json(a, a.mode, r, data, res).dump(2) + "\n");
  return res.converged() ? 0 : 2;
}

template <typename Real>
int cmd_compare(const TrainArgs& a, const std::vector<std::string>& modes) {
  const auto kind = parse_model_kind(a.model);
  const auto data = load_problem_data<Real>(a.data, kind);
  const auto p = make_problem(a, data);
  Resolved r = resolve_config(a, data);
  r.cfg.f_star = reference_optimum(a, data, p);
  json runs = json::array();
  std::vector<TraceRow> merged;
  bool all_converged = true;
  for (const auto& mode : modes) {
    const auto res = run_mode<Real>(mode, data, p, r.cfg);
    merged.insert(merged.end(), res.trace.begin(), res.trace.end());
    runs.push_back(result_json(a, mode, r, data, res));
    all_converged = all_converged && res.converged();
  }
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw std::runtime_error("cannot write " + a.trace);
    write_trace_csv(out, merged);
  }
  write_text(a.summary, json{{"runs", runs}}.dump(2) + "\n");
  return all_converged ? 0 : 2;
}

struct ProfileArgs {
  ProfileOptions opt;
  std::string out;
  std::string precision = "f32";
};

int cmd_profile(ProfileArgs& a) {
  a.opt.log = &std::cerr;
  const auto table = a.precision == "f64" ? profile_tasks<double>(a.opt)
                                          : profile_tasks<float>(a.opt);
  if (a.out.empty()) {
    std::cout << to_json(table) << '\n';
  } else {
    save_timing_table(table, a.out);
  }
  return 0;
}

struct TuneArgs {
  std::string table;
  std::size_t n = 0, d = 0;
  double r_tilde = kDefaultRTilde;
  std::size_t cores = 0;
  bool as_json = false;
};

int cmd_tune(const TuneArgs& a) {
  const auto table = load_timing_table(a.table);
  const std::size_t cores = a.cores ? a.cores : std::max(2u, std::thread::hardware_concurrency());
  const auto t = choose_parameters(table, a.n, a.d, a.r_tilde, cores);
  if (a.as_json) {
    std::cout << json{{"m", t.m},
                      {"t_a", t.t_a},
                      {"t_b", t.t_b},
                      {"v_b", t.v_b},
                      {"predicted_epoch_s", t.predicted_epoch_s},
                      {"predicted_coverage", t.predicted_coverage},
                      {"feasible", t.feasible}}
                     .dump(2)
              << '\n';
  } else {
    std::printf("m=%zu t_a=%zu t_b=%zu v_b=%zu predicted_epoch_s=%.6g "
                "predicted_coverage=%.6g feasible=%s\n",
                t.m, t.t_a, t.t_b, t.v_b, t.predicted_epoch_s,
                t.predicted_coverage, t.feasible ? "true" : "false");
  }
  return 0;
}

struct ConvertArgs {
  std::string in, out;
  std::string precision = "f32";
};

template <typename Real>
int cmd_convert(const ConvertArgs& a) {
  const auto ds = load_libsvm<Real>(a.in);
  save_binary(ds.matrix, a.out);
  DataMatrix<Real> labels(1, ds.labels.size(), ds.labels);
  save_binary(labels, labels_path(a.out));
  std::cerr << "wrote " << a.out << " (d = " << ds.matrix.rows()
            << ", n = " << ds.matrix.cols() << ") and " << labels_path(a.out).string()
            << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heterogeneous-task coordinate descent for Lasso and SVM"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  add_train_options(train_cmd, train_args, true);

  TrainArgs cmp_args;
  std::vector<std::string> cmp_modes{"hthc", "st"};
  auto* cmp_cmd = app.add_subcommand("compare", "Run several modes on one dataset");
  add_train_options(cmp_cmd, cmp_args, false);
  cmp_cmd->add_option("--modes", cmp_modes, "Modes to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"hthc", "st"}));

  ProfileArgs prof;
  auto* prof_cmd = app.add_subcommand("profile", "Measure per-update task costs");
  prof_cmd->add_option("--d-grid", prof.opt.d_grid)->delimiter(',');
  prof_cmd->add_option("--ta-grid", prof.opt.ta_grid)->delimiter(',');
  prof_cmd->add_option("--tb-grid", prof.opt.tb_grid)->delimiter(',');
  prof_cmd->add_option("--vb-grid", prof.opt.vb_grid)->delimiter(',');
  prof_cmd->add_option("--reps", prof.opt.reps);
  prof_cmd->add_option("--n", prof.opt.n, "Synthetic columns per measurement");
  prof_cmd->add_option("--cores", prof.opt.core_budget);
  prof_cmd->add_option("--seed", prof.opt.seed);
  prof_cmd->add_option("--precision", prof.precision)->check(CLI::IsMember({"f32", "f64"}));
  prof_cmd->add_option("--out", prof.out, "Timing table JSON (stdout when absent)");

  TuneArgs tune;
  auto* tune_cmd = app.add_subcommand("tune", "Choose m, T_A, T_B, V_B from a timing table");
  tune_cmd->add_option("--table", tune.table)->required();
  tune_cmd->add_option("--n", tune.n)->required();
  tune_cmd->add_option("--d", tune.d)->required();
  tune_cmd->add_option("--r-tilde", tune.r_tilde);
  tune_cmd->add_option("--cores", tune.cores);
  tune_cmd->add_flag("--json", tune.as_json);

  ConvertArgs conv;
  auto* conv_cmd = app.add_subcommand("convert", "LIBSVM text to binary");
  conv_cmd->add_option("--in", conv.in)->required();
  conv_cmd->add_option("--out", conv.out)->required();
  conv_cmd->add_option("--precision", conv.precision)->check(CLI::IsMember({"f32", "f64"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*train_cmd) {
      return train_args.precision == "f64" ? cmd_train<double>(train_args)
                                           : cmd_train<float>(train_args);
    }
    if (*cmp_cmd) {
      return cmp_args.precision == "f64" ? cmd_compare<double>(cmp_args, cmp_modes)
                                         : cmd_compare<float>(cmp_args, cmp_modes);
    }
    if (*prof_cmd) return cmd_profile(prof);
    if (*tune_cmd) return cmd_tune(tune);
    if (*conv_cmd) {
      return conv.precision == "f64" ? cmd_convert<double>(conv)
                                     : cmd_convert<float>(conv);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
