// trackdeg: file-mediated pipeline for track geometry degradation modelling.
//
//   trackdeg simulate --config scenario.ini --out runs/s0
//   trackdeg identify --config run.ini --out runs/s0
//   trackdeg fit      --config run.ini --out runs/s0 --seed 1
//   trackdeg validate / predict / hit / compare ...
//
// Exit codes: 0 success, 1 usage/config error, 2 data error,
// 3 convergence failure.
#include <CLI11.hpp>

#include "trackdeg/config.hpp"
#include "trackdeg/ingest.hpp"
#include "trackdeg/io.hpp"
#include "trackdeg/maintenance.hpp"
#include "trackdeg/mcmc.hpp"
#include "trackdeg/predict.hpp"
#include "trackdeg/synthgen.hpp"

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace trackdeg;

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 1;
  bool force = false;
};

std::string resolve_out_dir(const CommonArgs& args, const Config& cfg) {
  if (!args.out_dir.empty()) return args.out_dir;
  if (const char* env = std::getenv("TRACKDEG_OUT"); env && *env) return env;
  return cfg.get_string("io", "out_dir", ".");
}

std::uint64_t resolve_seed(const CommonArgs& args, const Config& cfg, const std::string& section) {
  if (args.seed_given) return args.seed;
  return static_cast<std::uint64_t>(cfg.get_int(section, "seed", 0));
}

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

// Per-indicator vector key: a single value broadcasts, a list must match d.
Eigen::VectorXd vector_key(const Config& cfg, const std::string& section,
                           const std::string& key, int d, double fallback) {
  if (!cfg.has(section, key)) return Eigen::VectorXd::Constant(d, fallback);
  const auto v = cfg.get_double_list(section, key);
  if (v.size() == 1) return Eigen::VectorXd::Constant(d, v[0]);
  if (static_cast<int>(v.size()) != d)
    throw ConfigError("[" + section + "] " + key + ": expected 1 or " + std::to_string(d) +
                      " values");
  return to_vector(v);
}

// Correlation matrix: "identity", "block:<within>" (left/right pairs), or
// full rows separated by ';'.
Eigen::MatrixXd matrix_key(const Config& cfg, const std::string& section,
                           const std::string& key, int d) {
  const std::string text = cfg.get_string(section, key, "identity");
  if (text == "identity") return Eigen::MatrixXd::Identity(d, d);
  if (text.rfind("block:", 0) == 0) {
    if (d % 2 != 0) throw ConfigError("[" + section + "] " + key + ": block form needs even d");
    const double r = std::stod(text.substr(6));
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
    for (int p = 0; p < d / 2; ++p) m(2 * p, 2 * p + 1) = m(2 * p + 1, 2 * p) = r;
    return m;
  }
  std::vector<std::vector<double>> rows;
  std::string row;
  std::istringstream in(text);
  while (std::getline(in, row, ';')) {
    std::vector<double> vals;
    for (const auto& tok : split_csv(trim(row))) vals.push_back(std::stod(trim(tok)));
    rows.push_back(std::move(vals));
  }
  if (static_cast<int>(rows.size()) != d)
    throw ConfigError("[" + section + "] " + key + ": expected " + std::to_string(d) + " rows");
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d)
      throw ConfigError("[" + section + "] " + key + ": row " + std::to_string(i) +
                        " has wrong length");
    for (int j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

SegmentationConfig segmentation_from_config(const Config& cfg) {
  SegmentationConfig sc;
  sc.segment_length = cfg.get_double("ingest", "segment_length", 100.0);
  sc.statistic = parse_statistic(cfg.get_string("ingest", "statistic", "max_abs"));
  sc.track_start = cfg.get_double("ingest", "track_start", 0.0);
  sc.track_end = cfg.get_double("ingest", "track_end");
  sc.indicators = cfg.get_list("ingest", "indicators");
  sc.nominal_spacing = cfg.get_double("ingest", "nominal_spacing", 0.25);
  sc.spacing_tolerance = cfg.get_double("ingest", "spacing_tolerance", 0.15);
  sc.validate();
  return sc;
}

IdentificationConfig identification_from_config(const Config& cfg, int d) {
  IdentificationConfig ic;
  ic.min_drop = vector_key(cfg, "identify", "min_drop", d, 0.5);
  ic.require_all = cfg.get_bool("identify", "require_all", true);
  ic.validate();
  return ic;
}

HyperpriorConfig hyperprior_from_config(const Config& cfg, int d) {
  HyperpriorConfig hp = HyperpriorConfig::defaults(d);
  auto range_key = [&](const std::string& key, std::vector<UniformRange>& dst) {
    if (!cfg.has("hyperprior", key)) return;
    const auto v = cfg.get_double_list("hyperprior", key);
    if (v.size() != 2) throw ConfigError("[hyperprior] " + key + ": expected 'a,b'");
    dst.assign(d, {v[0], v[1]});
  };
  range_key("s_mu_range", hp.s_mu_range);
  range_key("s_sigma_range", hp.s_sigma_range);
  range_key("s_z_range", hp.s_z_range);
  if (cfg.has("hyperprior", "m_z_lognorm")) {
    const auto v = cfg.get_double_list("hyperprior", "m_z_lognorm");
    if (v.size() != 2) throw ConfigError("[hyperprior] m_z_lognorm: expected 'M,S'");
    hp.m_z_location = Eigen::VectorXd::Constant(d, v[0]);
    hp.m_z_scale = Eigen::VectorXd::Constant(d, v[1]);
  }
  hp.eta_fixed = cfg.get_double("hyperprior", "eta", 1.0);
  hp.validate();
  return hp;
}

FitConfig fit_from_config(const Config& cfg, const CommonArgs& args, int d) {
  FitConfig fc;
  fc.model_kind = parse_model_kind(cfg.get_string("fit", "model", "multivariate"));
  fc.n_chains = static_cast<int>(cfg.get_int("fit", "chains", 4));
  fc.n_warmup = static_cast<int>(cfg.get_int("fit", "warmup", 2000));
  fc.n_draws = static_cast<int>(cfg.get_int("fit", "draws", 2000));
  fc.target_accept = cfg.get_double("fit", "target_accept", 0.35);
  fc.seed = resolve_seed(args, cfg, "fit");
  fc.threads = args.threads;
  fc.hyperprior = hyperprior_from_config(cfg, d);
  fc.validate();
  return fc;
}

Thresholds thresholds_from_config(const Config& cfg, int d) {
  Thresholds th;
  th.limits = vector_key(cfg, "thresholds", "limits", d, 0.0);
  if (!cfg.has("thresholds", "limits"))
    throw ConfigError("[thresholds] limits: required (no standard values are assumed)");
  th.label = cfg.get_string("thresholds", "label", "custom");
  th.validate();
  return th;
}

ScenarioSpec scenario_from_config(const Config& cfg, const CommonArgs& args) {
  ScenarioSpec spec = ScenarioSpec::defaults();
  spec.n_segments = static_cast<int>(cfg.get_int("scenario", "segments", 20));
  spec.n_indicators = static_cast<int>(cfg.get_int("scenario", "indicators", 4));
  spec.n_inspections = static_cast<int>(cfg.get_int("scenario", "inspections", 20));
  spec.nominal_interval_days = cfg.get_double("scenario", "interval_days", 90.0);
  spec.jitter_days = cfg.get_double("scenario", "jitter_days", 30.0);
  spec.t0 = cfg.get_double("scenario", "t0", 0.0);
  const int d = spec.n_indicators;
  if (cfg.has("scenario", "labels")) {
    spec.labels = cfg.get_list("scenario", "labels");
  } else if (d != 4) {
    spec.labels.clear();
    for (int q = 0; q < d; ++q) spec.labels.push_back("ind" + std::to_string(q));
  }
  spec.draw_from_hyper = cfg.get_bool("scenario", "draw_from_hyper", true);
  spec.s_mu_true = vector_key(cfg, "scenario", "s_mu_true", d, 0.02);
  spec.s_sigma_true = vector_key(cfg, "scenario", "s_sigma_true", d, 0.1);
  spec.mu_fixed = vector_key(cfg, "scenario", "mu_fixed", d, 0.02);
  spec.sigma_fixed = vector_key(cfg, "scenario", "sigma_fixed", d, 0.08);
  spec.correlation_true = matrix_key(cfg, "scenario", "correlation", d);
  spec.initial_state = vector_key(cfg, "scenario", "initial_state", d, 2.0);
  const std::string tamping = cfg.get_string("scenario", "tamping", "none");
  if (tamping == "none") {
    spec.tamping = ScenarioSpec::Tamping::none;
  } else if (tamping == "threshold") {
    spec.tamping = ScenarioSpec::Tamping::threshold;
  } else if (tamping == "scheduled") {
    spec.tamping = ScenarioSpec::Tamping::scheduled;
  } else {
    throw ConfigError("[scenario] tamping: expected none|threshold|scheduled");
  }
  spec.tamping_threshold = cfg.get_double("scenario", "tamping_threshold", 12.0);
  if (cfg.has("scenario", "scheduled_days"))
    spec.scheduled_days = cfg.get_double_list("scenario", "scheduled_days");
  spec.zplus_m = vector_key(cfg, "scenario", "zplus_m", d, std::log(2.5));
  spec.zplus_s = vector_key(cfg, "scenario", "zplus_s", d, 0.3);
  spec.zplus_truncnormal = cfg.get_bool("scenario", "zplus_truncnormal", false);
  spec.seed = resolve_seed(args, cfg, "scenario");
  spec.validate();
  return spec;
}

std::vector<double> quantiles_from_config(const Config& cfg, const std::string& section) {
  auto q = cfg.get_double_list(section, "quantiles", {0.025, 0.5, 0.975});
  std::sort(q.begin(), q.end());
  return q;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const SegmentationConfig sc = segmentation_from_config(cfg);
  const std::string input = cfg.get_string("ingest", "input");
  const std::string dir = resolve_out_dir(args, cfg);

  LoadReport report;
  const Dataset dataset = ingest_file(input, sc, &report);
  write_series_file(out_path(dir, "series.csv"), dataset, /*with_flags=*/false);
  write_text_file(out_path(dir, "load_report.txt"), report.to_text());
  std::cout << "wrote " << dir << "/series.csv (" << dataset.segments.size() << " segments)\n";
  return 0;
}

int cmd_identify(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string input = cfg.get_string("identify", "input");
  const std::string dir = resolve_out_dir(args, cfg);

  Dataset dataset = read_series_file(input);
  const IdentificationConfig ic = identification_from_config(cfg, dataset.n_indicators());
  dataset = identify_all(dataset, ic);

  std::vector<WorkOrder> orders;
  if (cfg.has("identify", "workorders"))
    orders = read_workorder_file(cfg.get_string("identify", "workorders"));
  const ConsistencyReport rep = report(dataset, orders);

  write_series_file(out_path(dir, "series_flagged.csv"), dataset);
  write_text_file(out_path(dir, "consistency.txt"), rep.to_text());
  std::cout << rep.to_text();
  return 0;
}

int cmd_fit(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string input = cfg.get_string("fit", "input");
  const double rhat_limit = cfg.get_double("fit", "rhat_limit", 1.05);
  // holdout > 0 fits on each series minus its last observations, leaving
  // them for a later `validate` run against the full file
  const int holdout = static_cast<int>(cfg.get_int("fit", "holdout", 0));
  const std::string dir = resolve_out_dir(args, cfg);

  Dataset dataset = read_series_file(input);
  if (holdout > 0) dataset = drop_last_observations(dataset, holdout);
  const FitConfig fc = fit_from_config(cfg, args, dataset.n_indicators());

  const PosteriorSamples samples = fit(dataset, fc);
  write_posterior_csv(out_path(dir, "posterior.csv"), samples);

  const auto diags = diagnostics(samples);
  Table table;
  table.columns = {"parameter", "split_rhat", "ess"};
  for (const auto& d : diags)
    table.add_row({d.name, format_double(d.split_rhat), format_double(d.ess)});
  write_table(out_path(dir, "diagnostics.csv"), table);

  std::ostringstream acc;
  for (const auto& [block, rate] : samples.block_acceptance)
    acc << block << "_acceptance: " << format_double(rate) << "\n";
  const double worst = max_rhat(diags);
  acc << "max_split_rhat: " << format_double(worst) << "\n";
  write_text_file(out_path(dir, "fit_summary.txt"), acc.str());
  std::cout << acc.str();

  if (worst > rhat_limit && !args.force) {
    std::cerr << "warning: not converged (max split-Rhat " << worst << " > " << rhat_limit
              << "); rerun with more draws or pass --force\n";
    return 3;
  }
  return 0;
}

int cmd_validate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string posterior = cfg.get_string("validate", "posterior");
  const std::string series = cfg.get_string("validate", "series");
  const int holdout = static_cast<int>(cfg.get_int("validate", "holdout", 3));
  const double band = cfg.get_double("validate", "band", 0.95);
  const double rhat_limit = cfg.get_double("validate", "rhat_limit", 1.05);
  const std::string dir = resolve_out_dir(args, cfg);

  const PosteriorSamples samples = read_posterior_csv(posterior);
  const Dataset dataset = read_series_file(series);
  const CoverageReport rep = validate(samples, dataset, holdout, band,
                                      resolve_seed(args, cfg, "validate"), args.force,
                                      rhat_limit);
  write_text_file(out_path(dir, "coverage.txt"), rep.to_text(dataset.labels));
  std::cout << rep.to_text(dataset.labels);
  return 0;
}

int cmd_predict(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string posterior = cfg.get_string("predict", "posterior");
  const std::string series = cfg.get_string("predict", "series");
  const double horizon = cfg.get_double("predict", "horizon_days", 365.0);
  const double step = cfg.get_double("predict", "step_days", 30.0);
  const auto quantiles = quantiles_from_config(cfg, "predict");
  const double rhat_limit = cfg.get_double("predict", "rhat_limit", 1.05);
  const std::string dir = resolve_out_dir(args, cfg);

  const PosteriorSamples samples = read_posterior_csv(posterior);
  const Dataset dataset = read_series_file(series);
  std::vector<int> segments;
  if (cfg.has("predict", "segment")) {
    segments.push_back(static_cast<int>(cfg.get_int("predict", "segment")));
  } else {
    segments = samples.segment_ids;
  }

  Table table;
  table.columns = {"segment_id", "time", "indicator", "quantile", "value"};
  const std::uint64_t seed = resolve_seed(args, cfg, "predict");
  for (int sid : segments) {
    const BandsResult bands = predictive_bands_horizon(
        samples, dataset, sid, horizon, step, quantiles,
        derive_seed(seed, static_cast<std::uint64_t>(sid)), args.force, rhat_limit);
    for (int t = 0; t < bands.times.size(); ++t)
      for (std::size_t p = 0; p < bands.quantiles.size(); ++p)
        for (int q = 0; q < bands.values[t].cols(); ++q)
          table.add_row({std::to_string(sid), format_double(bands.times[t]),
                         dataset.labels[q], format_double(bands.quantiles[p]),
                         format_double(bands.values[t](static_cast<int>(p), q))});
  }
  write_table(out_path(dir, "bands.csv"), table);
  std::cout << "wrote " << dir << "/bands.csv\n";
  return 0;
}

int cmd_hit(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string posterior = cfg.get_string("hit", "posterior");
  const std::string series = cfg.get_string("hit", "series");
  const int segment = static_cast<int>(cfg.get_int("hit", "segment"));
  const double horizon = cfg.get_double("hit", "horizon_days", 3650.0);
  const double step = cfg.get_double("hit", "step_days", 1.0);
  const int n_paths = static_cast<int>(cfg.get_int("hit", "n_paths", 10000));
  const double rhat_limit = cfg.get_double("hit", "rhat_limit", 1.05);
  const std::string dir = resolve_out_dir(args, cfg);

  const PosteriorSamples samples = read_posterior_csv(posterior);
  const Dataset dataset = read_series_file(series);
  const Thresholds thresholds = thresholds_from_config(cfg, dataset.n_indicators());

  const HittingTimeResult result =
      hitting_time(samples, dataset, segment, thresholds, horizon, n_paths,
                   resolve_seed(args, cfg, "hit"), step, args.threads, args.force, rhat_limit);

  // histogram of non-censored hitting times
  const int n_bins = static_cast<int>(cfg.get_int("hit", "bins", 60));
  Table hist;
  hist.columns = {"bin_lo", "bin_hi", "count"};
  if (!result.hitting_times.empty()) {
    const double lo = *std::min_element(result.hitting_times.begin(), result.hitting_times.end());
    const double hi = *std::max_element(result.hitting_times.begin(), result.hitting_times.end());
    const double width = std::max((hi - lo) / n_bins, 1e-9);
    std::vector<long> counts(n_bins, 0);
    for (double t : result.hitting_times) {
      int b = static_cast<int>((t - lo) / width);
      counts[std::clamp(b, 0, n_bins - 1)]++;
    }
    for (int b = 0; b < n_bins; ++b)
      hist.add_row({format_double(lo + b * width), format_double(lo + (b + 1) * width),
                    std::to_string(counts[b])});
  }
  write_table(out_path(dir, "hitting_times.csv"), hist);

  Table probs;
  probs.columns = {"indicator", "first_hit_probability", "fraction_of_all_paths"};
  for (int q = 0; q < result.first_hit_probabilities.size(); ++q)
    probs.add_row({dataset.labels[q], format_double(result.first_hit_probabilities[q]),
                   format_double(result.hit_fraction_all[q])});
  probs.add_row({"censored", "0", format_double(result.censored_fraction)});
  write_table(out_path(dir, "first_hit.csv"), probs);

  std::ostringstream os;
  os << "n_paths: " << result.n_paths << "\n";
  os << "censored_fraction: " << format_double(result.censored_fraction) << "\n";
  os << "ties: " << result.ties << "\n";
  if (!result.hitting_times.empty()) {
    const auto q = result.time_quantiles({0.05, 0.25, 0.5, 0.75, 0.95});
    os << "t_q05: " << format_double(q[0]) << "\n";
    os << "t_q25: " << format_double(q[1]) << "\n";
    os << "t_median: " << format_double(q[2]) << "\n";
    os << "t_q75: " << format_double(q[3]) << "\n";
    os << "t_q95: " << format_double(q[4]) << "\n";
  }
  write_text_file(out_path(dir, "hit_summary.txt"), os.str());
  std::cout << os.str();
  return 0;
}

int cmd_compare(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const std::string multi_path = cfg.get_string("compare", "multi_posterior");
  const std::string uni_path = cfg.get_string("compare", "uni_posterior");
  const std::string series = cfg.get_string("compare", "series");
  const int segment = static_cast<int>(cfg.get_int("compare", "segment"));
  const double horizon = cfg.get_double("compare", "horizon_days", 3650.0);
  const double step = cfg.get_double("compare", "step_days", 1.0);
  const int n_paths = static_cast<int>(cfg.get_int("compare", "n_paths", 10000));
  const std::string dir = resolve_out_dir(args, cfg);

  const PosteriorSamples multi = read_posterior_csv(multi_path);
  const PosteriorSamples uni = read_posterior_csv(uni_path);
  const Dataset dataset = read_series_file(series);
  const Thresholds thresholds = thresholds_from_config(cfg, dataset.n_indicators());

  const ModelComparison cmp =
      compare_models(multi, uni, dataset, segment, thresholds, horizon, n_paths,
                     resolve_seed(args, cfg, "compare"), step, args.threads, args.force);

  Table table;
  table.columns = {"model", "t_q05", "t_q25", "t_median", "t_q75", "t_q95",
                   "censored_fraction"};
  const std::vector<double> probs = {0.05, 0.25, 0.5, 0.75, 0.95};
  auto add = [&](const std::string& name, const HittingTimeResult& r) {
    const auto q = r.time_quantiles(probs);
    table.add_row({name, format_double(q[0]), format_double(q[1]), format_double(q[2]),
                   format_double(q[3]), format_double(q[4]),
                   format_double(r.censored_fraction)});
  };
  add("multivariate", cmp.multivariate);
  add("univariate", cmp.univariate);
  write_table(out_path(dir, "compare.csv"), table);

  std::ostringstream os;
  os << "median_multivariate: " << format_double(cmp.median_multivariate) << "\n";
  os << "median_univariate: " << format_double(cmp.median_univariate) << "\n";
  os << "median_diff: " << format_double(cmp.median_diff) << "\n";
  write_text_file(out_path(dir, "compare.txt"), os.str());
  std::cout << os.str();
  return 0;
}

int cmd_simulate(const CommonArgs& args) {
  const Config cfg = Config::parse_file(args.config_path);
  const ScenarioSpec spec = scenario_from_config(cfg, args);
  const std::string dir = resolve_out_dir(args, cfg);

  const auto [dataset, truth] = generate(spec);
  write_series_file(out_path(dir, "series.csv"), dataset);
  write_truth_file(out_path(dir, "truth.csv"), truth.entries);
  std::cout << "wrote " << dir << "/series.csv and truth.csv (" << dataset.segments.size()
            << " segments)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Track geometry degradation modelling pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", args.config_path, "Run configuration file")->required();
    sub->add_option("--out", args.out_dir, "Output directory (overrides config and TRACKDEG_OUT)");
    sub->add_option("--seed", args.seed, "Random seed (overrides config)")
        ->each([&](const std::string&) { args.seed_given = true; });
    sub->add_option("--threads", args.threads, "Worker thread cap")->check(CLI::PositiveNumber);
    sub->add_flag("--force", args.force, "Ignore the convergence gate");
  };

  auto* ingest_cmd = app.add_subcommand("ingest", "Segment raw TRV channels into series");
  auto* identify_cmd = app.add_subcommand("identify", "Flag tamping intervals");
  auto* fit_cmd = app.add_subcommand("fit", "Fit the hierarchical Wiener model");
  auto* validate_cmd = app.add_subcommand("validate", "Score held-out inspections");
  auto* predict_cmd = app.add_subcommand("predict", "Posterior predictive bands");
  auto* hit_cmd = app.add_subcommand("hit", "Threshold hitting-time Monte Carlo");
  auto* compare_cmd = app.add_subcommand("compare", "Multivariate vs univariate hitting times");
  auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic dataset with truth");
  for (auto* sub : {ingest_cmd, identify_cmd, fit_cmd, validate_cmd, predict_cmd, hit_cmd,
                    compare_cmd, simulate_cmd})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (ingest_cmd->parsed()) return cmd_ingest(args);
    if (identify_cmd->parsed()) return cmd_identify(args);
    if (fit_cmd->parsed()) return cmd_fit(args);
    if (validate_cmd->parsed()) return cmd_validate(args);
    if (predict_cmd->parsed()) return cmd_predict(args);
    if (hit_cmd->parsed()) return cmd_hit(args);
    if (compare_cmd->parsed()) return cmd_compare(args);
    if (simulate_cmd->parsed()) return cmd_simulate(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return 3;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
