// SPDX-License-Identifier: Apache-2.0

// Command line front end. Talks to the engine exclusively through the
// public C API (ltshap.h).
//
// Exit codes: 0 success, 1 usage error, 2 parse/validation error,
// 3 conformance check failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ltshap.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitCheckFailed = 3;

struct ModelDeleter {
  void operator()(lts_model* m) const { lts_model_free(m); }
};
struct ExplainerDeleter {
  void operator()(lts_explainer* e) const { lts_explainer_free(e); }
};
using ModelPtr = std::unique_ptr<lts_model, ModelDeleter>;
using ExplainerPtr = std::unique_ptr<lts_explainer, ExplainerDeleter>;

[[noreturn]] void die(int code, const std::string& msg) {
  std::cerr << "ltshap: " << msg << "\n";
  std::exit(code);
}

ModelPtr load_model_or_die(const std::string& path) {
  lts_model* m = nullptr;
  if (lts_model_load_file(path.c_str(), &m) != LTS_OK)
    die(kExitValidation, std::string(path) + ": " + lts_last_error());
  return ModelPtr(m);
}

ExplainerPtr make_explainer_or_die(const lts_model* m) {
  lts_explainer* ex = nullptr;
  if (lts_explainer_create(m, &ex) != LTS_OK)
    die(kExitValidation, lts_last_error());
  return ExplainerPtr(ex);
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Deterministic uniform draws for sampling probe instances.
struct MiniRng {
  uint64_t s;
  explicit MiniRng(uint64_t seed) : s(seed ^ 0x9e3779b97f4a7c15ull) {}
  uint64_t next() {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    return s;
  }
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * (static_cast<double>(next() >> 11) * 0x1.0p-53);
  }
  int below(int n) { return static_cast<int>(next() % static_cast<uint64_t>(n)); }
};

// ------------------------------------------------------------------ explain

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  cells.push_back(cur);
  return cells;
}

bool parse_double_cell(const std::string& cell, double* out) {
  const char* b = cell.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(b, &end);
  while (end && *end == ' ')
    ++end;
  if (end == b || (end && *end != '\0'))
    return false;
  *out = v;
  return true;
}

int cmd_explain(const std::string& model_path, const std::string& data_path,
                const std::string& output_path, int threads) {
  ModelPtr model = load_model_or_die(model_path);
  ExplainerPtr ex = make_explainer_or_die(model.get());
  const int m = lts_model_num_features(model.get());

  std::ifstream in(data_path, std::ios::binary);
  if (!in)
    die(kExitValidation, "cannot open data file: " + data_path);

  std::vector<double> X;
  std::vector<size_t> row_numbers; // 1-based line numbers of parsed rows
  std::vector<std::pair<size_t, std::string>> bad_rows;
  std::string line;
  size_t lineno = 0;
  bool first_content_line = true;
  std::optional<std::vector<std::string>> header;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r")
      continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (first_content_line) {
      first_content_line = false;
      bool numeric = true;
      double tmp;
      for (const auto& c : cells)
        if (!parse_double_cell(c, &tmp)) {
          numeric = false;
          break;
        }
      if (!numeric) {
        header = cells;
        continue;
      }
    }
    if (static_cast<int>(cells.size()) != m) {
      bad_rows.emplace_back(lineno, "expected " + std::to_string(m) + " columns, found " +
                                        std::to_string(cells.size()));
      continue;
    }
    std::vector<double> row(m);
    bool ok = true;
    for (int j = 0; j < m; ++j) {
      if (!parse_double_cell(cells[j], &row[j])) {
        bad_rows.emplace_back(lineno, "column " + std::to_string(j) + " is not a number: '" +
                                          cells[j] + "'");
        ok = false;
        break;
      }
    }
    if (!ok)
      continue;
    X.insert(X.end(), row.begin(), row.end());
    row_numbers.push_back(lineno);
  }

  if (header && lts_model_feature_name(model.get(), 0) != nullptr) {
    for (int j = 0; j < m; ++j) {
      const char* name = lts_model_feature_name(model.get(), j);
      if (static_cast<int>(header->size()) != m || (*header)[j] != name)
        die(kExitValidation, "data header does not match the model's feature names");
    }
  }

  const size_t rows = row_numbers.size();
  std::vector<double> phi(rows * std::max(m, 1)), base(rows), pred(rows);
  std::vector<int> row_status(rows, LTS_OK);
  if (rows > 0) {
    const lts_status s = lts_explain_batch(ex.get(), LTS_METHOD_FUSED, X.data(), rows, m,
                                           threads, phi.data(), base.data(), pred.data(),
                                           row_status.data());
    if (s != LTS_OK && s != LTS_ERR_NUMERIC)
      die(kExitValidation, lts_last_error());
  }

  std::ofstream out(output_path, std::ios::binary);
  if (!out)
    die(kExitValidation, "cannot open output file: " + output_path);
  for (int j = 0; j < m; ++j) {
    const char* name = lts_model_feature_name(model.get(), j);
    out << "phi_" << (name ? name : std::to_string(j)) << ",";
  }
  out << "base_value,prediction\n";
  for (size_t i = 0; i < rows; ++i) {
    if (row_status[i] != LTS_OK) {
      bad_rows.emplace_back(row_numbers[i], lts_status_name(static_cast<lts_status>(row_status[i])));
      continue;
    }
    for (int j = 0; j < m; ++j)
      out << fmt17(phi[i * m + j]) << ",";
    out << fmt17(base[i]) << "," << fmt17(pred[i]) << "\n";
  }
  out.flush();
  if (!out)
    die(kExitValidation, "error writing output file: " + output_path);

  if (!bad_rows.empty()) {
    std::sort(bad_rows.begin(), bad_rows.end());
    for (const auto& [ln, msg] : bad_rows)
      std::cerr << "ltshap: " << data_path << " line " << ln << ": " << msg << "\n";
    return kExitValidation;
  }
  return 0;
}

// -------------------------------------------------------------------- check

struct MethodEntry {
  lts_method method;
  const char* name;
};

constexpr MethodEntry kMethods[] = {
    {LTS_METHOD_FUSED, "fused"},
    {LTS_METHOD_TWO_PASS, "two_pass"},
    {LTS_METHOD_BRUTE_FORCE, "brute_force"},
    {LTS_METHOD_PER_RULE, "per_rule"},
    {LTS_METHOD_COEFF_REF, "coeff_ref"},
};
constexpr int kNumMethods = 5;

// Per-feature threshold ranges straight from the model document, so probe
// instances land on both sides of (and exactly on) real split points.
struct ProbeRanges {
  std::vector<std::vector<double>> thresholds; // per feature
};

ProbeRanges probe_ranges(const lts_model* model) {
  ProbeRanges pr;
  pr.thresholds.resize(std::max(lts_model_num_features(model), 0));
  char* json = nullptr;
  if (lts_model_to_json(model, &json) != LTS_OK)
    return pr;
  auto doc = nlohmann::json::parse(json, nullptr, false);
  lts_string_free(json);
  if (doc.is_discarded())
    return pr;
  for (const auto& tree : doc["trees"])
    for (const auto& node : tree["nodes"])
      if (node["kind"] == "split")
        pr.thresholds[node["feature"].get<int>()].push_back(node["threshold"].get<double>());
  return pr;
}

std::vector<double> probe_instance(const ProbeRanges& pr, MiniRng& rng) {
  std::vector<double> x(pr.thresholds.size());
  for (size_t f = 0; f < x.size(); ++f) {
    const auto& th = pr.thresholds[f];
    if (th.empty()) {
      x[f] = rng.uniform(0.0, 1.0);
    } else if (rng.uniform(0.0, 1.0) < 0.25) {
      x[f] = th[rng.below(static_cast<int>(th.size()))]; // exact tie
    } else {
      const auto [mn, mx] = std::minmax_element(th.begin(), th.end());
      x[f] = rng.uniform(*mn - 1.0, *mx + 1.0);
    }
  }
  return x;
}

struct CheckStats {
  double pair_dev[kNumMethods][kNumMethods] = {};
  double efficiency = 0.0;
  bool brute_skipped = false;
};

void check_one_model(const lts_model* model, int instances, MiniRng& rng, CheckStats& st) {
  ExplainerPtr ex = make_explainer_or_die(model);
  const int m = lts_model_num_features(model);
  const ProbeRanges pr = probe_ranges(model);
  const bool use_brute = m <= 24;
  if (!use_brute)
    st.brute_skipped = true;

  std::vector<std::vector<double>> phi(kNumMethods, std::vector<double>(std::max(m, 1)));
  for (int k = 0; k < instances; ++k) {
    const std::vector<double> x = probe_instance(pr, rng);
    double base = 0, pred = 0;
    for (int a = 0; a < kNumMethods; ++a) {
      if (kMethods[a].method == LTS_METHOD_BRUTE_FORCE && !use_brute)
        continue;
      if (lts_explain_method(ex.get(), kMethods[a].method, x.data(), x.size(), phi[a].data(),
                             &base, &pred) != LTS_OK)
        die(kExitValidation, std::string(kMethods[a].name) + ": " + lts_last_error());
      if (kMethods[a].method == LTS_METHOD_FUSED) {
        double sum = 0;
        for (int j = 0; j < m; ++j)
          sum += phi[a][j];
        st.efficiency = std::max(st.efficiency, std::abs(sum + base - pred));
      }
    }
    for (int a = 0; a < kNumMethods; ++a)
      for (int b = a + 1; b < kNumMethods; ++b) {
        if (!use_brute &&
            (kMethods[a].method == LTS_METHOD_BRUTE_FORCE || kMethods[b].method == LTS_METHOD_BRUTE_FORCE))
          continue;
        for (int j = 0; j < m; ++j) {
          const double d = std::abs(phi[a][j] - phi[b][j]) /
                           (1.0 + std::max(std::abs(phi[a][j]), std::abs(phi[b][j])));
          st.pair_dev[a][b] = std::max(st.pair_dev[a][b], d);
        }
      }
  }
}

int cmd_check(const std::string& model_path, int random_trees, int max_depth, int num_features,
              int leaves, double tolerance, uint64_t seed, int instances) {
  MiniRng rng(seed);
  CheckStats st;
  if (!model_path.empty()) {
    ModelPtr model = load_model_or_die(model_path);
    check_one_model(model.get(), instances > 0 ? instances : 8, rng, st);
  } else {
    for (int k = 0; k < random_trees; ++k) {
      lts_model* raw = nullptr;
      const int target = 2 + rng.below(std::max(leaves - 1, 1));
      if (lts_model_generate_random(num_features, target, max_depth, 0, 0, seed + k, &raw) !=
          LTS_OK)
        die(kExitValidation, lts_last_error());
      ModelPtr model(raw);
      check_one_model(model.get(), instances > 0 ? instances : 5, rng, st);
    }
  }

  double worst = st.efficiency;
  std::printf("%-28s %s\n", "efficiency residual", fmt17(st.efficiency).c_str());
  for (int a = 0; a < kNumMethods; ++a)
    for (int b = a + 1; b < kNumMethods; ++b) {
      if (st.brute_skipped &&
          (kMethods[a].method == LTS_METHOD_BRUTE_FORCE || kMethods[b].method == LTS_METHOD_BRUTE_FORCE))
        continue;
      const std::string pair = std::string(kMethods[a].name) + " vs " + kMethods[b].name;
      std::printf("%-28s %s\n", pair.c_str(), fmt17(st.pair_dev[a][b]).c_str());
      worst = std::max(worst, st.pair_dev[a][b]);
    }
  if (st.brute_skipped)
    std::printf("note: brute_force skipped (more than 24 features)\n");
  std::printf("max deviation %s tolerance %s -> %s\n", fmt17(worst).c_str(),
              fmt17(tolerance).c_str(), worst <= tolerance ? "OK" : "FAIL");
  return worst <= tolerance ? 0 : kExitCheckFailed;
}

// -------------------------------------------------------------------- bench

struct BenchRow {
  int depth = 0;
  int leaves = 0;
  int instances = 0;
  int reps = 0;
  double linear_mean = 0, linear_stderr = 0;
  double quad_mean = 0, quad_stderr = 0;
  double speedup = 0;
};

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v)
    s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  if (v.size() < 2)
    return 0.0;
  const double mu = mean_of(v);
  double ss = 0;
  for (double x : v)
    ss += (x - mu) * (x - mu);
  return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0)) /
         std::sqrt(static_cast<double>(v.size()));
}

double time_batch(lts_explainer* ex, lts_method method, const std::vector<double>& X, size_t rows,
                  size_t m, std::vector<double>& phi, std::vector<double>& base,
                  std::vector<double>& pred) {
  const auto t0 = std::chrono::steady_clock::now();
  const lts_status s = lts_explain_batch(ex, method, X.data(), rows, m, 1, phi.data(),
                                         base.data(), pred.data(), nullptr);
  const auto t1 = std::chrono::steady_clock::now();
  if (s != LTS_OK)
    die(kExitValidation, lts_last_error());
  return std::chrono::duration<double>(t1 - t0).count();
}

int cmd_bench(const std::vector<int>& depths, int leaves, int reps, int instances, uint64_t seed,
              const std::string& output_path) {
  std::vector<BenchRow> table;
  for (const int depth : depths) {
    const int eff_leaves =
        depth >= 30 ? leaves : std::min<long long>(leaves, 1ll << std::max(depth, 1));
    BenchRow row;
    row.depth = depth;
    row.leaves = eff_leaves;
    row.instances = instances;
    row.reps = reps;
    std::vector<double> lin_t, quad_t;
    for (int r = 0; r < reps; ++r) {
      lts_model* raw = nullptr;
      const uint64_t tree_seed = seed * 1000003ull + static_cast<uint64_t>(depth) * 101ull + r;
      if (lts_model_generate_random(std::max(depth, 1), eff_leaves, depth, depth, 0, tree_seed,
                                    &raw) != LTS_OK)
        die(kExitValidation, lts_last_error());
      ModelPtr model(raw);
      ExplainerPtr ex = make_explainer_or_die(model.get());
      const size_t m = static_cast<size_t>(lts_model_num_features(model.get()));

      MiniRng rng(tree_seed ^ 0xabcdef12345ull);
      std::vector<double> X(static_cast<size_t>(instances) * m);
      for (double& v : X)
        v = rng.uniform(-0.25, 1.25);
      std::vector<double> phi(static_cast<size_t>(instances) * m), base(instances), pred(instances);

      if (r == 0) // warm up caches and the allocator once per depth
        time_batch(ex.get(), LTS_METHOD_FUSED, X, instances, m, phi, base, pred);
      lin_t.push_back(time_batch(ex.get(), LTS_METHOD_FUSED, X, instances, m, phi, base, pred));
      quad_t.push_back(
          time_batch(ex.get(), LTS_METHOD_COEFF_REF, X, instances, m, phi, base, pred));
    }
    row.linear_mean = mean_of(lin_t);
    row.linear_stderr = stderr_of(lin_t);
    row.quad_mean = mean_of(quad_t);
    row.quad_stderr = stderr_of(quad_t);
    row.speedup = row.quad_mean / row.linear_mean;
    table.push_back(row);
    std::printf("depth %2d leaves %3d: linear %.6f s +/- %.6f, reference %.6f s +/- %.6f, "
                "speedup %.2fx\n",
                row.depth, row.leaves, row.linear_mean, row.linear_stderr, row.quad_mean,
                row.quad_stderr, row.speedup);
  }

  if (!output_path.empty()) {
    std::ofstream out(output_path, std::ios::binary);
    if (!out)
      die(kExitValidation, "cannot open output file: " + output_path);
    out << "depth,leaves,instances,reps,linear_mean_s,linear_stderr_s,quad_mean_s,"
           "quad_stderr_s,linear_us_per_instance,quad_us_per_instance,speedup\n";
    for (const BenchRow& r : table) {
      out << r.depth << "," << r.leaves << "," << r.instances << "," << r.reps << ","
          << fmt17(r.linear_mean) << "," << fmt17(r.linear_stderr) << "," << fmt17(r.quad_mean)
          << "," << fmt17(r.quad_stderr) << ","
          << fmt17(1e6 * r.linear_mean / r.instances) << ","
          << fmt17(1e6 * r.quad_mean / r.instances) << "," << fmt17(r.speedup) << "\n";
    }
    if (!out)
      die(kExitValidation, "error writing output file: " + output_path);
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"exact Shapley value attributions for decision tree ensembles"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lts_version()));

  auto* ex_cmd = app.add_subcommand("explain", "explain instances from a CSV file");
  std::string model_path, data_path, output_path;
  int threads = 1;
  ex_cmd->add_option("--model", model_path, "model JSON file")->required();
  ex_cmd->add_option("--data", data_path, "CSV file, one instance per row")->required();
  ex_cmd->add_option("--output", output_path, "CSV file to write")->required();
  ex_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* ck_cmd = app.add_subcommand("check", "compare the engine against the reference "
                                             "implementations");
  std::string ck_model;
  int random_trees = 0, ck_depth = 6, ck_features = 10, ck_leaves = 16, ck_instances = 0;
  double tolerance = 0.0;
  uint64_t ck_seed = 1;
  ck_cmd->add_option("--model", ck_model, "model JSON file to check");
  ck_cmd->add_option("--random-trees", random_trees, "number of random models to generate");
  ck_cmd->add_option("--max-depth", ck_depth, "max depth of generated trees");
  ck_cmd->add_option("--num-features", ck_features, "feature count of generated trees");
  ck_cmd->add_option("--leaves", ck_leaves, "leaf target of generated trees");
  ck_cmd->add_option("--instances", ck_instances, "instances per model");
  ck_cmd->add_option("--tolerance", tolerance, "max allowed deviation (> 0)")->required();
  ck_cmd->add_option("--seed", ck_seed, "random seed");

  auto* be_cmd = app.add_subcommand("bench", "timing comparison against the quadratic reference");
  std::string depths_arg, bench_out;
  int be_leaves = 16, be_reps = 5, be_instances = 200;
  uint64_t be_seed = 1;
  be_cmd->add_option("--depths", depths_arg, "comma-separated depth list, e.g. 4,8,12,16")
      ->required();
  be_cmd->add_option("--leaves", be_leaves, "leaf target (clamped to 2^depth)");
  be_cmd->add_option("--reps", be_reps, "repetitions per depth")->check(CLI::PositiveNumber);
  be_cmd->add_option("--instances", be_instances, "instances per repetition")
      ->check(CLI::PositiveNumber);
  be_cmd->add_option("--seed", be_seed, "random seed");
  be_cmd->add_option("--output", bench_out, "CSV file for machine-readable results");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  if (ex_cmd->parsed())
    return cmd_explain(model_path, data_path, output_path, threads);

  if (ck_cmd->parsed()) {
    if (tolerance <= 0.0)
      die(kExitUsage, "--tolerance must be > 0");
    if (ck_model.empty() == (random_trees == 0))
      die(kExitUsage, "check needs exactly one of --model or --random-trees");
    return cmd_check(ck_model, random_trees, ck_depth, ck_features, ck_leaves, tolerance,
                     ck_seed, ck_instances);
  }

  if (be_cmd->parsed()) {
    std::vector<int> depths;
    std::stringstream ss(depths_arg);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      try {
        depths.push_back(std::stoi(tok));
      } catch (...) {
        die(kExitUsage, "bad depth value: '" + tok + "'");
      }
      if (depths.back() < 1 || depths.back() > 32)
        die(kExitUsage, "depths must be in [1, 32]");
    }
    if (depths.empty())
      die(kExitUsage, "--depths is empty");
    return cmd_bench(depths, be_leaves, be_reps, be_instances, be_seed, bench_out);
  }
  return kExitUsage;
}
