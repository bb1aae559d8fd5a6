#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "svddsel/svddsel.hpp"

namespace svddsel::cli {

namespace fs = std::filesystem;
using nlohmann::json;

/// "auto" or "min:max:steps".
struct GridSpec {
  bool automatic = true;
  double min = 0.0;
  double max = 0.0;
  std::size_t steps = 50;
};

inline GridSpec parse_grid_spec(const std::string& text, std::size_t auto_steps) {
  if (text == "auto") return GridSpec{true, 0.0, 0.0, auto_steps};
  GridSpec g{false};
  char c1 = 0, c2 = 0;
  std::istringstream in(text);
  long long steps = 0;
  if (!(in >> g.min >> c1 >> g.max >> c2 >> steps) || c1 != ':' || c2 != ':' || !in.eof())
    throw InvalidArgument("--grid must be 'auto' or 'min:max:steps', got '" + text + "'");
  if (!(g.min > 0.0) || !(g.max > g.min) || steps < 2)
    throw InvalidArgument("--grid needs 0 < min < max and steps >= 2");
  g.steps = static_cast<std::size_t>(steps);
  return g;
}

struct ResolvedGrid {
  GammaGrid grid;
  json echo;
};

inline ResolvedGrid resolve_grid(const GridSpec& spec, const Dataset& train) {
  if (!spec.automatic) {
    auto grid = GammaGrid::log_spaced(spec.min, spec.max, spec.steps);
    return {grid, {{"mode", "explicit"}, {"min", spec.min}, {"max", spec.max}, {"steps", spec.steps}}};
  }
  auto resolved = auto_grid(train, spec.steps);
  return {resolved.grid,
          {{"mode", "auto"},
           {"median_sq_distance", resolved.median_sq_distance},
           {"min", resolved.grid.values().front()},
           {"max", resolved.grid.values().back()},
           {"steps", spec.steps}}};
}

inline void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ParseError("write to '" + path.string() + "' failed");
}

inline std::string csv_text(const Dataset& data, const std::vector<int>* labels = nullptr) {
  std::ostringstream out;
  write_csv(out, data, labels);
  return out.str();
}

inline std::string curve_text(const RiskCurve& curve) {
  std::ostringstream out;
  write_curve_csv(out, curve);
  return out.str();
}

inline json svdd_echo(const SvddConfig& c) {
  return {{"nu", c.nu},
          {"solver_tolerance", c.solver_tolerance},
          {"sv_threshold", c.sv_threshold},
          {"max_passes", c.max_passes ? json(*c.max_passes) : json("10*l*l")}};
}

inline std::vector<RiskKind> parse_kinds(const std::vector<std::string>& names) {
  std::vector<RiskKind> out;
  for (const auto& n : names) {
    if (n == "all") {
      out.assign(std::begin(kAllRiskKinds), std::end(kAllRiskKinds));
      continue;
    }
    const auto k = parse_risk_kind(n);
    if (!k) throw InvalidArgument("unknown risk kind '" + n + "' (expected sv, empirical, smote, kernel, polarization)");
    out.push_back(*k);
  }
  return out;
}

/// Command-line entry point: generate, sweep, select, fit, benchmark.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"SVDD anomaly detection with automatic kernel bandwidth selection", "svddsel"};
  app.require_subcommand(1);

  // Shared solver flags.
  SvddConfig svdd;
  std::int64_t max_passes = 0;
  const auto add_svdd_flags = [&](CLI::App* sub) {
    sub->add_option("--nu", svdd.nu, "SVDD regularization nu in (0, 1]")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    sub->add_option("--tolerance", svdd.solver_tolerance, "KKT violation bound")->check(CLI::PositiveNumber)->capture_default_str();
    sub->add_option("--sv-threshold", svdd.sv_threshold, "alpha above this is a support vector")->check(CLI::NonNegativeNumber)->capture_default_str();
    sub->add_option("--max-passes", max_passes, "solver cap in sweeps of l pair updates (default 10*l*l)")->check(CLI::PositiveNumber);
  };
  std::uint64_t seed = 0;
  std::size_t jobs = 1;

  // generate
  auto* gen = app.add_subcommand("generate", "write synthetic or converted one-class datasets");
  std::string scenario = "paper-4.2", out_dir, input, label_column = "class";
  Eigen::Index n_normals = 100, n_anomalies = 100, val_normals = 5000, val_anomalies = 5000;
  int target_class = 0;
  double anomaly_fraction = 0.1, box_factor = 2.0, val_fraction = 0.3;
  gen->add_option("--scenario", scenario, "paper-4.2 (5-d Gaussian mixture) or one-class (from a multiclass CSV)")
      ->check(CLI::IsMember({"paper-4.2", "one-class"}))->capture_default_str();
  gen->add_option("--seed", seed)->capture_default_str();
  gen->add_option("--out-dir", out_dir, "output directory")->required();
  gen->add_option("--normals", n_normals, "training normals (paper-4.2)")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--anomalies", n_anomalies, "uniform anomalies on [-5,5]^5 (paper-4.2)")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--val-normals", val_normals, "validation normals (paper-4.2)")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--val-anomalies", val_anomalies, "validation anomalies (paper-4.2)")->check(CLI::PositiveNumber)->capture_default_str();
  gen->add_option("--input", input, "multiclass CSV (one-class)");
  gen->add_option("--label-column", label_column, "class column name (one-class)")->capture_default_str();
  gen->add_option("--target-class", target_class, "class treated as normal (one-class)")->capture_default_str();
  gen->add_option("--anomaly-fraction", anomaly_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  gen->add_option("--box-factor", box_factor, "anomaly box scale about the normal class")->check(CLI::Range(1.0, 1e300))->capture_default_str();
  gen->add_option("--val-fraction", val_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "risk curve over a gamma grid");
  add_svdd_flags(sweep);
  std::string train_path, risk_name = "empirical", grid_text = "auto", out_path, validation_path, validation_out;
  std::size_t grid_steps = 50;
  Eigen::Index mc_count = 0;
  int smote_k = 5;
  double smote_multiplier = 1.0;
  sweep->add_option("--train", train_path, "training CSV (features only)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--risk", risk_name, "sv, empirical, smote, kernel or polarization")
      ->check(CLI::IsMember({"sv", "empirical", "smote", "kernel", "polarization"}))->capture_default_str();
  sweep->add_option("--seed", seed)->capture_default_str();
  sweep->add_option("--grid", grid_text, "'auto' or min:max:steps")->capture_default_str();
  sweep->add_option("--grid-steps", grid_steps, "steps of the auto grid")->check(CLI::Range(2, 100000))->capture_default_str();
  sweep->add_option("--mc-count", mc_count, "Monte-Carlo samples (default max(10000, 100*l))")->check(CLI::PositiveNumber);
  sweep->add_option("--smote-k", smote_k)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--smote-multiplier", smote_multiplier)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--box-factor", box_factor, "anomaly box scale about the training data")->check(CLI::Range(1.0, 1e300))->capture_default_str();
  sweep->add_option("--out", out_path, "risk curve CSV")->required();
  sweep->add_option("--validation", validation_path, "labelled validation CSV (label column 'label')")->check(CLI::ExistingFile);
  sweep->add_option("--validation-out", validation_out, "validation-error curve CSV");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::Range(1, 1024))->capture_default_str();

  // select
  auto* sel = app.add_subcommand("select", "pick gamma from a risk curve");
  std::string curve_path, rule_name;
  double rel_tol = 0.05;
  sel->add_option("--curve", curve_path, "risk curve CSV")->required()->check(CLI::ExistingFile);
  sel->add_option("--rule", rule_name, "argmin or plateau-max (default: argmin for sv, else plateau-max)")
      ->check(CLI::IsMember({"argmin", "plateau-max"}));
  sel->add_option("--rel-tol", rel_tol, "plateau tolerance relative to the curve range")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  sel->add_option("--out", out_path, "write JSON here instead of stdout");

  // fit
  auto* fitc = app.add_subcommand("fit", "fit an SVDD model at a fixed gamma");
  add_svdd_flags(fitc);
  double gamma = 0.0;
  fitc->add_option("--train", train_path, "training CSV")->required()->check(CLI::ExistingFile);
  fitc->add_option("--gamma", gamma, "kernel bandwidth")->required()->check(CLI::PositiveNumber);
  fitc->add_option("--seed", seed)->capture_default_str();
  fitc->add_option("--out", out_path, "model JSON")->required();

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "compare selection methods with Dolan-More curves");
  add_svdd_flags(bench);
  std::vector<std::string> inputs, risk_names{"all"};
  std::string corpus_dir, curves_out;
  std::vector<double> fractions{0.05, 0.10, 0.15};
  double beta_min = 1.0, beta_max = 10.0;
  std::size_t beta_steps = 100;
  bool timings = false;
  bench->add_option("--corpus", corpus_dir, "directory of multiclass CSV files")->check(CLI::ExistingDirectory);
  bench->add_option("--input", inputs, "multiclass CSV files")->check(CLI::ExistingFile);
  bench->add_option("--label-column", label_column)->capture_default_str();
  bench->add_option("--fractions", fractions, "anomaly fractions per class")->delimiter(',')->check(CLI::Range(0.0, 1.0))->capture_default_str();
  bench->add_option("--val-fraction", val_fraction)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  bench->add_option("--box-factor", box_factor)->check(CLI::Range(1.0, 1e300))->capture_default_str();
  bench->add_option("--risks", risk_names, "risk kinds to compare, or 'all'")->delimiter(',')->capture_default_str();
  bench->add_option("--seed", seed)->capture_default_str();
  bench->add_option("--grid", grid_text, "'auto' (per task) or min:max:steps")->capture_default_str();
  bench->add_option("--grid-steps", grid_steps)->check(CLI::Range(2, 100000))->capture_default_str();
  bench->add_option("--mc-count", mc_count)->check(CLI::PositiveNumber);
  bench->add_option("--smote-k", smote_k)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--smote-multiplier", smote_multiplier)->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--rel-tol", rel_tol)->check(CLI::Range(0.0, 1.0))->capture_default_str();
  bench->add_option("--beta-min", beta_min)->check(CLI::Range(1.0, 1e300))->capture_default_str();
  bench->add_option("--beta-max", beta_max)->check(CLI::Range(1.0, 1e300))->capture_default_str();
  bench->add_option("--beta-steps", beta_steps)->check(CLI::Range(2, 100000))->capture_default_str();
  bench->add_option("--out", out_path, "report JSON")->required();
  bench->add_option("--curves-out", curves_out, "Dolan-More curves CSV (method,beta,p)");
  bench->add_option("--jobs", jobs)->check(CLI::Range(1, 1024))->capture_default_str();
  bench->add_flag("--timings", timings, "include wall times in the report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (max_passes > 0) svdd.max_passes = max_passes;

    if (gen->parsed()) {
      json echo = {{"subcommand", "generate"}, {"scenario", scenario}, {"seed", seed}, {"out_dir", out_dir}};
      const fs::path dir(out_dir);
      if (scenario == "paper-4.2") {
        const auto study = mixture_study(seed, n_normals, n_anomalies, val_normals, val_anomalies);
        write_text(dir / "train.csv", csv_text(study.train));
        write_text(dir / "anomalies.csv", csv_text(study.anomalies));
        write_text(dir / "validation.csv", csv_text(study.validation.data, &study.validation.labels));
        echo.update({{"normals", n_normals},
                     {"anomalies", n_anomalies},
                     {"val_normals", val_normals},
                     {"val_anomalies", val_anomalies},
                     {"means", {std::vector<double>(5, 1.0), std::vector<double>(5, -1.0)}},
                     {"anomaly_box", {-5.0, 5.0}},
                     {"files", {"train.csv", "anomalies.csv", "validation.csv"}}});
      } else {
        if (input.empty()) throw InvalidArgument("--scenario one-class requires --input");
        const auto source = load_csv(input, label_column, LabelDomain::kMulticlass);
        const auto task = make_one_class_task(source, target_class, anomaly_fraction, box_factor, val_fraction, seed);
        write_text(dir / "train.csv", csv_text(task.train));
        write_text(dir / "validation.csv", csv_text(task.validation.data, &task.validation.labels));
        echo.update({{"input", input},
                     {"label_column", label_column},
                     {"target_class", target_class},
                     {"anomaly_fraction", anomaly_fraction},
                     {"box_factor", box_factor},
                     {"val_fraction", val_fraction},
                     {"train_rows", task.train.size()},
                     {"validation_normals", task.validation.normals()},
                     {"validation_anomalies", task.validation.anomalies()},
                     {"files", {"train.csv", "validation.csv"}}});
      }
      write_text(dir / "generate.json", echo.dump(2) + "\n");
      return 0;
    }

    if (sweep->parsed()) {
      const auto kind = *parse_risk_kind(risk_name);
      const auto spec = parse_grid_spec(grid_text, grid_steps);
      if (!validation_out.empty() && validation_path.empty())
        throw InvalidArgument("--validation-out requires --validation");
      svdd.validate();
      const Dataset train = load_csv(train_path).data;
      const auto grid = resolve_grid(spec, train);
      SweepOptions options;
      options.svdd = svdd;
      options.kind = kind;
      options.seed = seed;
      if (mc_count > 0) options.mc_count = mc_count;
      options.smote_k = smote_k;
      options.smote_multiplier = smote_multiplier;
      options.box_factor = box_factor;
      options.jobs = jobs;
      const RiskCurve curve = sweep_risk_curve(train, grid.grid, options);
      write_text(out_path, curve_text(curve));
      json echo = {{"subcommand", "sweep"},
                   {"train", train_path},
                   {"risk", risk_name},
                   {"seed", seed},
                   {"svdd", svdd_echo(svdd)},
                   {"grid", grid.echo},
                   {"mc_count", options.mc_count.value_or(default_mc_count(train.size()))},
                   {"smote_k", smote_k},
                   {"smote_multiplier", smote_multiplier},
                   {"box_factor", box_factor},
                   {"out", out_path}};
      if (!validation_path.empty()) {
        const auto validation = load_csv(validation_path, std::string("label"));
        const RiskCurve vcurve = validation_curve(train, validation, grid.grid, svdd, seed, jobs);
        const std::string vout = validation_out.empty() ? out_path + ".validation.csv" : validation_out;
        write_text(vout, curve_text(vcurve));
        echo["validation"] = validation_path;
        echo["validation_out"] = vout;
      }
      write_text(out_path + ".json", echo.dump(2) + "\n");
      return 0;
    }

    if (sel->parsed()) {
      const RiskCurve curve = load_curve_csv(curve_path);
      PlateauSpec spec = curve.kind ? default_plateau_spec(*curve.kind) : PlateauSpec{};
      spec.rel_tol = rel_tol;
      if (!rule_name.empty()) spec.rule = *parse_selection_rule(rule_name);
      const Plateau plateau = find_plateau(curve, spec);
      const std::size_t index = select_index(curve, spec);
      const json result = {{"subcommand", "select"},
                           {"curve", curve_path},
                           {"kind", curve.kind_name()},
                           {"nu", curve.nu},
                           {"rule", to_string(spec.rule)},
                           {"rel_tol", spec.rel_tol},
                           {"gamma", curve.gammas[index]},
                           {"index", index},
                           {"plateau_start", plateau.start},
                           {"plateau_end", plateau.end},
                           {"plateau_gamma_min", curve.gammas[plateau.start]},
                           {"plateau_gamma_max", curve.gammas[plateau.end]},
                           {"plateau_threshold", plateau.threshold}};
      if (out_path.empty()) out << result.dump(2) << '\n';
      else write_text(out_path, result.dump(2) + "\n");
      return 0;
    }

    if (fitc->parsed()) {
      svdd.validate();
      const Dataset train = load_csv(train_path).data;
      FitReport report;
      const SvddModel model = fit(train, Bandwidth(gamma), svdd, seed, &report);
      const auto stats = model_stats(model, train);
      json j = to_json(model);
      j["config"] = {{"subcommand", "fit"}, {"train", train_path}, {"seed", seed}, {"svdd", svdd_echo(svdd)}};
      j["solver"] = {{"iterations", report.iterations}, {"max_violation", report.max_violation}};
      j["stats"] = {{"sv_fraction", stats.sv_fraction}, {"outlier_fraction", stats.outlier_fraction}};
      write_text(out_path, j.dump(2) + "\n");
      return 0;
    }

    if (bench->parsed()) {
      const auto kinds = parse_kinds(risk_names);
      const auto spec = parse_grid_spec(grid_text, grid_steps);
      if (!(beta_max > beta_min)) throw InvalidArgument("--beta-max must exceed --beta-min");
      for (double f : fractions)
        if (!(f > 0.0 && f < 1.0)) throw InvalidArgument("--fractions entries must lie in (0, 1)");
      if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidArgument("--val-fraction must lie in (0, 1)");
      svdd.validate();
      PlateauSpec{rel_tol}.validate();
      std::vector<std::string> files = inputs;
      if (!corpus_dir.empty())
        for (const auto& entry : fs::directory_iterator(corpus_dir))
          if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path().string());
      if (files.empty()) throw InvalidArgument("benchmark needs --corpus or --input");
      std::sort(files.begin(), files.end());

      std::vector<BenchmarkTask> tasks;
      for (std::size_t f = 0; f < files.size(); ++f) {
        const auto source = load_csv(files[f], label_column, LabelDomain::kMulticlass);
        for (auto& t : one_class_tasks(source, fractions, box_factor, val_fraction, derive_seed(seed, {f, 0xc0ffee})))
          tasks.push_back(std::move(t));
      }
      std::vector<Method> methods;
      for (auto k : kinds) {
        auto p = default_plateau_spec(k);
        p.rel_tol = rel_tol;
        methods.push_back({k, p});
      }
      BenchmarkOptions options;
      options.svdd = svdd;
      options.seed = seed;
      if (!spec.automatic) options.grid = GammaGrid::log_spaced(spec.min, spec.max, spec.steps);
      options.grid_steps = spec.steps;
      if (mc_count > 0) options.mc_count = mc_count;
      options.smote_k = smote_k;
      options.smote_multiplier = smote_multiplier;
      options.box_factor = box_factor;
      options.beta_grid = GammaGrid::log_spaced(beta_min, beta_max, beta_steps).values();
      options.jobs = jobs;
      options.record_timings = timings;
      const BenchmarkReport report = run_benchmark(tasks, methods, options);
      json j = to_json(report);
      j["config"].update({{"subcommand", "benchmark"},
                          {"inputs", files},
                          {"label_column", label_column},
                          {"fractions", fractions},
                          {"val_fraction", val_fraction},
                          {"task_count", tasks.size()}});
      write_text(out_path, j.dump(2) + "\n");
      if (!curves_out.empty()) {
        std::ostringstream csv;
        write_dolan_more_csv(csv, report.curves);
        write_text(curves_out, csv.str());
      }
      return 0;
    }
  } catch (const ParseError& e) {
    err << "svddsel: input error: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "svddsel: invalid argument: " << e.what() << '\n';
    return 3;
  } catch (const Error& e) {
    err << "svddsel: " << e.what() << '\n';
    return 4;
  } catch (const fs::filesystem_error& e) {
    err << "svddsel: I/O error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "svddsel: unexpected failure: " << e.what() << '\n';
    return 5;
  }
  return 1;
}

}  // namespace svddsel::cli
