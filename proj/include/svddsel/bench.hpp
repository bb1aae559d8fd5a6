#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "svddsel/dataset.hpp"
#include "svddsel/error.hpp"
#include "svddsel/parallel.hpp"
#include "svddsel/risk.hpp"
#include "svddsel/select.hpp"
#include "svddsel/svdd.hpp"

namespace svddsel {

inline constexpr double kMinQuality = 1e-6;
inline constexpr const char* kQualityMapping = "quality = 2 - validation_error, clamped below at 1e-6";

/// Higher-is-better score for a validation error in [0, 2].
inline double quality_from_error(double validation_error) {
  if (!(validation_error >= 0.0 && validation_error <= 2.0))
    throw InvalidArgument("validation error must lie in [0, 2]");
  return std::max(2.0 - validation_error, kMinQuality);
}

/// Scores of K methods on M tasks; q(i, t) is method i on task t.
struct QualityTable {
  QualityTable(std::vector<std::string> method_names, std::vector<std::string> task_names, Eigen::MatrixXd scores)
      : methods(std::move(method_names)), tasks(std::move(task_names)), q(std::move(scores)) {
    if (methods.empty() || tasks.empty()) throw InvalidArgument("quality table must have methods and tasks");
    if (q.rows() != static_cast<Eigen::Index>(methods.size()) || q.cols() != static_cast<Eigen::Index>(tasks.size()))
      throw InvalidArgument("quality matrix shape does not match method/task names");
    if (!(q.array() > 0.0).all() || !q.allFinite()) throw InvalidArgument("qualities must be positive and finite");
  }

  std::vector<std::string> methods;
  std::vector<std::string> tasks;
  Eigen::MatrixXd q;
};

struct DolanMoreCurve {
  std::string method;
  std::vector<double> beta;
  std::vector<double> p;
};

/// 100 log-spaced values on [1, 10].
inline std::vector<double> default_beta_grid() { return GammaGrid::log_spaced(1.0, 10.0, 100).values(); }

/// p_i(beta) = |{t : q(i, t) >= max_j q(j, t) / beta}| / M.
inline std::vector<DolanMoreCurve> dolan_more_curves(const QualityTable& table, const std::vector<double>& beta_grid) {
  if (beta_grid.empty()) throw InvalidArgument("beta grid is empty");
  for (std::size_t b = 0; b < beta_grid.size(); ++b)
    if (!(beta_grid[b] >= 1.0) || (b > 0 && !(beta_grid[b] > beta_grid[b - 1])))
      throw InvalidArgument("beta grid must be increasing with every beta >= 1");
  const Eigen::RowVectorXd best = table.q.colwise().maxCoeff();
  const auto tasks = static_cast<double>(table.tasks.size());
  std::vector<DolanMoreCurve> curves;
  for (Eigen::Index i = 0; i < table.q.rows(); ++i) {
    DolanMoreCurve c{table.methods[static_cast<std::size_t>(i)], beta_grid, {}};
    for (double beta : beta_grid) {
      Eigen::Index hits = 0;
      for (Eigen::Index t = 0; t < table.q.cols(); ++t)
        if (table.q(i, t) >= best[t] / beta) ++hits;
      c.p.push_back(static_cast<double>(hits) / tasks);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

struct Method {
  RiskKind kind;
  PlateauSpec plateau;

  std::string name() const { return std::string(to_string(kind)) + "/" + std::string(to_string(plateau.rule)); }
};

inline std::vector<Method> default_methods() {
  std::vector<Method> out;
  for (auto kind : kAllRiskKinds) out.push_back({kind, default_plateau_spec(kind)});
  return out;
}

struct BenchmarkTask {
  std::string name;
  Dataset train;
  LabeledDataset validation;
};

struct BenchmarkOptions {
  SvddConfig svdd;
  Seed seed = 0;
  /// Shared grid; when unset each task gets auto_grid(train, grid_steps).
  std::optional<GammaGrid> grid;
  std::size_t grid_steps = 50;
  std::optional<Eigen::Index> mc_count;
  int smote_k = 5;
  double smote_multiplier = 1.0;
  double box_factor = 2.0;
  std::vector<double> beta_grid = default_beta_grid();
  std::size_t jobs = 1;
  /// Wall times make reports run-dependent, so they are opt-in.
  bool record_timings = false;
};

struct TaskRecord {
  std::string task;
  std::string method;
  double grid_min = 0.0;
  double grid_max = 0.0;
  std::size_t selected_index = 0;
  double selected_gamma = 0.0;
  double validation_error = 0.0;
  double quality = 0.0;
  double wall_seconds = 0.0;
};

struct TaskFailure {
  std::string task;
  std::string method;
  std::string message;
};

struct BenchmarkReport {
  std::vector<TaskRecord> records;
  std::vector<TaskFailure> failures;
  std::optional<QualityTable> table;
  std::vector<DolanMoreCurve> curves;
  nlohmann::json config;
  bool has_timings = false;
};

inline Seed task_seed(Seed seed, std::size_t task_index) { return derive_seed(seed, {task_index}); }

/// Sweep, select, refit and validate every (task, method) pair. Pairs run
/// concurrently; results are assembled in (task, method) order. A failed
/// pair is logged and enters the quality table at the minimum quality.
inline BenchmarkReport run_benchmark(const std::vector<BenchmarkTask>& tasks, const std::vector<Method>& methods,
                                     const BenchmarkOptions& options) {
  if (tasks.empty() || methods.empty()) throw InvalidArgument("benchmark needs at least one task and one method");
  options.svdd.validate();
  for (const auto& m : methods) m.plateau.validate();

  const std::size_t n_methods = methods.size();
  std::vector<std::optional<TaskRecord>> records(tasks.size() * n_methods);
  std::vector<std::optional<TaskFailure>> failures(records.size());
  parallel_for(records.size(), options.jobs, [&](std::size_t slot) {
    const std::size_t t = slot / n_methods;
    const Method& method = methods[slot % n_methods];
    const BenchmarkTask& task = tasks[t];
    const auto start = std::chrono::steady_clock::now();
    try {
      const GammaGrid grid = options.grid ? *options.grid : auto_grid(task.train, options.grid_steps).grid;
      SweepOptions sweep;
      sweep.svdd = options.svdd;
      sweep.kind = method.kind;
      sweep.seed = task_seed(options.seed, t);
      sweep.mc_count = options.mc_count;
      sweep.smote_k = options.smote_k;
      sweep.smote_multiplier = options.smote_multiplier;
      sweep.box_factor = options.box_factor;
      const RiskCurve curve = sweep_risk_curve(task.train, grid, sweep);
      const std::size_t index = select_index(curve, method.plateau);
      const SvddModel model = fit(task.train, grid[index], options.svdd, point_seeds(sweep.seed, index).fit);
      const double err = validation_error(model, task.validation);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
      records[slot] = TaskRecord{task.name, method.name(), grid.values().front(), grid.values().back(), index,
                                 grid.values()[index], err, quality_from_error(err), elapsed.count()};
    } catch (const Error& e) {
      failures[slot] = TaskFailure{task.name, method.name(), e.what()};
    }
  });

  BenchmarkReport report;
  Eigen::MatrixXd q = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n_methods),
                                                static_cast<Eigen::Index>(tasks.size()), kMinQuality);
  for (std::size_t slot = 0; slot < records.size(); ++slot) {
    if (records[slot]) {
      q(static_cast<Eigen::Index>(slot % n_methods), static_cast<Eigen::Index>(slot / n_methods)) = records[slot]->quality;
      report.records.push_back(*records[slot]);
    } else {
      report.failures.push_back(*failures[slot]);
    }
  }
  std::vector<std::string> method_names, task_names;
  for (const auto& m : methods) method_names.push_back(m.name());
  for (const auto& t : tasks) task_names.push_back(t.name);
  report.table.emplace(std::move(method_names), std::move(task_names), std::move(q));
  report.curves = dolan_more_curves(*report.table, options.beta_grid);
  report.has_timings = options.record_timings;

  nlohmann::json method_json = nlohmann::json::array();
  for (const auto& m : methods)
    method_json.push_back({{"name", m.name()},
                           {"risk", to_string(m.kind)},
                           {"rule", to_string(m.plateau.rule)},
                           {"rel_tol", m.plateau.rel_tol}});
  report.config = {
      {"nu", options.svdd.nu},
      {"solver_tolerance", options.svdd.solver_tolerance},
      {"sv_threshold", options.svdd.sv_threshold},
      {"seed", options.seed},
      {"grid", options.grid ? nlohmann::json(options.grid->values()) : nlohmann::json("auto")},
      {"grid_steps", options.grid ? options.grid->size() : options.grid_steps},
      {"mc_count", options.mc_count ? nlohmann::json(*options.mc_count) : nlohmann::json("max(10000, 100*l)")},
      {"smote_k", options.smote_k},
      {"smote_multiplier", options.smote_multiplier},
      {"box_factor", options.box_factor},
      {"beta_grid", {{"min", options.beta_grid.front()}, {"max", options.beta_grid.back()},
                     {"steps", options.beta_grid.size()}}},
      {"methods", std::move(method_json)},
      {"quality_mapping", kQualityMapping},
  };
  return report;
}

inline nlohmann::json to_json(const BenchmarkReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const auto& r : report.records) {
    nlohmann::json j = {{"task", r.task},
                        {"method", r.method},
                        {"grid_min", r.grid_min},
                        {"grid_max", r.grid_max},
                        {"selected_index", r.selected_index},
                        {"selected_gamma", r.selected_gamma},
                        {"validation_error", r.validation_error},
                        {"quality", r.quality}};
    if (report.has_timings) j["wall_seconds"] = r.wall_seconds;
    records.push_back(std::move(j));
  }
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures)
    failures.push_back({{"task", f.task}, {"method", f.method}, {"message", f.message}});
  nlohmann::json curves = nlohmann::json::array();
  for (const auto& c : report.curves) curves.push_back({{"method", c.method}, {"beta", c.beta}, {"p", c.p}});
  nlohmann::json table = nullptr;
  if (report.table) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < report.table->q.rows(); ++i) {
      std::vector<double> row(static_cast<std::size_t>(report.table->q.cols()));
      for (Eigen::Index t = 0; t < report.table->q.cols(); ++t) row[static_cast<std::size_t>(t)] = report.table->q(i, t);
      rows.push_back(std::move(row));
    }
    table = {{"methods", report.table->methods}, {"tasks", report.table->tasks}, {"q", std::move(rows)}};
  }
  return {{"config", report.config},
          {"quality_mapping", kQualityMapping},
          {"records", std::move(records)},
          {"failures", std::move(failures)},
          {"quality_table", std::move(table)},
          {"dolan_more", std::move(curves)}};
}

inline void write_dolan_more_csv(std::ostream& out, const std::vector<DolanMoreCurve>& curves) {
  out << "method,beta,p\n";
  for (const auto& c : curves)
    for (std::size_t b = 0; b < c.beta.size(); ++b)
      out << c.method << ',' << detail::format_double(c.beta[b]) << ',' << detail::format_double(c.p[b]) << '\n';
}

/// One-class tasks from every class of a multiclass dataset at each
/// anomaly fraction. Task t uses seed derive_seed(seed, {t}).
inline std::vector<BenchmarkTask> one_class_tasks(const LabeledDataset& source, const std::vector<double>& fractions,
                                                  double box_factor, double val_fraction, Seed seed) {
  std::vector<int> classes = source.labels;
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  std::vector<BenchmarkTask> tasks;
  for (int c : classes)
    for (double f : fractions) {
      auto task = make_one_class_task(source, c, f, box_factor, val_fraction, derive_seed(seed, {tasks.size()}));
      std::string name = task.validation.data.name();
      name.erase(name.size() - std::string(":validation").size());
      tasks.push_back({std::move(name), std::move(task.train), std::move(task.validation)});
    }
  return tasks;
}

}  // namespace svddsel
