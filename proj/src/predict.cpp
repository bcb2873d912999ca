#include "trackdeg/predict.hpp"

#include "trackdeg/io.hpp"
#include "trackdeg/priors.hpp"
#include "trackdeg/wiener.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace trackdeg {

namespace {

void convergence_gate(const PosteriorSamples& samples, bool force, double rhat_limit) {
  if (force || samples.n_chains() < 2 || samples.n_draws() < 4) return;
  check_convergence(samples, rhat_limit);
}

// Cholesky factors of every stored draw's covariance for one segment, plus
// (when requested) the draw's post-maintenance hyperparameters.
struct DrawParams {
  Eigen::VectorXd drift;
  Eigen::MatrixXd chol_lower;
  Eigen::VectorXd m_z;
  Eigen::VectorXd s_z;
};

std::vector<DrawParams> collect_draws(const PosteriorSamples& samples, int segment_id,
                                      bool with_zplus_hyper = false) {
  const int d = samples.n_indicators;
  std::vector<int> m_z_col(d, -1), s_z_col(d, -1);
  if (with_zplus_hyper) {
    for (int q = 0; q < d; ++q) {
      m_z_col[q] = samples.column("hyper.m_z[" + std::to_string(q) + "]");
      s_z_col[q] = samples.column("hyper.s_z[" + std::to_string(q) + "]");
      if (m_z_col[q] < 0 || s_z_col[q] < 0)
        throw std::invalid_argument(
            "posterior lacks hyper.m_z/hyper.s_z columns needed to predict through "
            "maintained intervals");
    }
  }
  std::vector<DrawParams> out;
  out.reserve(static_cast<std::size_t>(samples.n_chains()) * samples.n_draws());
  for (int c = 0; c < samples.n_chains(); ++c) {
    for (int t = 0; t < samples.n_draws(); ++t) {
      const WienerParams p = extract_params(samples, segment_id, c, t);
      const Eigen::MatrixXd sigma =
          p.marginal_sd.asDiagonal() * p.correlation * p.marginal_sd.asDiagonal();
      Eigen::LLT<Eigen::MatrixXd> llt(sigma);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("stored draw has a non-positive-definite covariance");
      DrawParams dp{p.drift, Eigen::MatrixXd(llt.matrixL()), {}, {}};
      if (with_zplus_hyper) {
        dp.m_z.resize(d);
        dp.s_z.resize(d);
        for (int q = 0; q < d; ++q) {
          dp.m_z[q] = samples.chains[c](t, m_z_col[q]);
          dp.s_z[q] = samples.chains[c](t, s_z_col[q]);
        }
      }
      out.push_back(std::move(dp));
    }
  }
  return out;
}

}  // namespace

double sample_quantile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
  std::sort(values.begin(), values.end());
  const double h = p * (static_cast<double>(values.size()) - 1.0);
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - lo) * (values[hi] - values[lo]);
}

BandsResult predictive_bands(const PosteriorSamples& samples, const Dataset& dataset,
                             int segment_id, const Eigen::VectorXd& future_times,
                             const std::vector<double>& quantiles, std::uint64_t seed,
                             bool force, double rhat_limit) {
  convergence_gate(samples, force, rhat_limit);
  if (future_times.size() == 0) throw std::invalid_argument("predictive_bands: no times");
  for (double p : quantiles)
    if (!(p > 0.0 && p < 1.0))
      throw std::invalid_argument("predictive_bands: quantiles must lie in (0,1)");

  const SegmentSeries& series = dataset.by_id(segment_id);
  const int last = series.n_obs() - 1;
  const double t_last = series.times[last];
  const Eigen::VectorXd z_last = series.observations.row(last).transpose();
  const int d = series.n_indicators();
  for (int i = 0; i < future_times.size(); ++i) {
    if (future_times[i] <= t_last)
      throw std::invalid_argument("predictive_bands: horizon must exceed the last observation");
    if (i > 0 && future_times[i] <= future_times[i - 1])
      throw std::invalid_argument("predictive_bands: times must be strictly increasing");
  }

  const auto draws = collect_draws(samples, segment_id);
  const int n_draws = static_cast<int>(draws.size());
  const int n_times = static_cast<int>(future_times.size());

  // ensemble[t](draw, q)
  std::vector<Eigen::MatrixXd> ensemble(n_times, Eigen::MatrixXd(n_draws, d));
  Eigen::VectorXd z(d), eps(d);
  for (int j = 0; j < n_draws; ++j) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(j)));
    z = z_last;
    double t_prev = t_last;
    for (int t = 0; t < n_times; ++t) {
      const double dt = future_times[t] - t_prev;
      for (int q = 0; q < d; ++q) eps[q] = rng.normal();
      z += draws[j].drift * dt + std::sqrt(dt) * (draws[j].chol_lower * eps);
      ensemble[t].row(j) = z.transpose();
      t_prev = future_times[t];
    }
  }

  BandsResult out;
  out.times = future_times;
  out.quantiles = quantiles;
  std::sort(out.quantiles.begin(), out.quantiles.end());
  out.values.assign(n_times, Eigen::MatrixXd(out.quantiles.size(), d));
  std::vector<double> column(n_draws);
  for (int t = 0; t < n_times; ++t)
    for (int q = 0; q < d; ++q) {
      for (int j = 0; j < n_draws; ++j) column[j] = ensemble[t](j, q);
      for (std::size_t p = 0; p < out.quantiles.size(); ++p)
        out.values[t](static_cast<int>(p), q) = sample_quantile(column, out.quantiles[p]);
    }
  return out;
}

BandsResult predictive_bands_horizon(const PosteriorSamples& samples, const Dataset& dataset,
                                     int segment_id, double horizon_days, double step_days,
                                     const std::vector<double>& quantiles, std::uint64_t seed,
                                     bool force, double rhat_limit) {
  if (!(horizon_days > 0.0) || !(step_days > 0.0))
    throw std::invalid_argument("predictive_bands: horizon and step must be positive");
  const SegmentSeries& series = dataset.by_id(segment_id);
  const double t_last = series.times[series.n_obs() - 1];
  const int n = std::max(1, static_cast<int>(std::ceil(horizon_days / step_days)));
  Eigen::VectorXd times(n);
  for (int i = 0; i < n; ++i) times[i] = t_last + std::min((i + 1) * step_days, horizon_days);
  return predictive_bands(samples, dataset, segment_id, times, quantiles, seed, force,
                          rhat_limit);
}

CoverageReport validate(const PosteriorSamples& samples, const Dataset& full_dataset,
                        int holdout_count, double band, std::uint64_t seed, bool force,
                        double rhat_limit) {
  if (holdout_count < 1) throw std::invalid_argument("validate: holdout_count must be >= 1");
  if (!(band > 0.0 && band < 1.0)) throw std::invalid_argument("validate: band must lie in (0,1)");
  convergence_gate(samples, force, rhat_limit);

  const int d = full_dataset.segments.empty() ? 0 : full_dataset.segments[0].n_indicators();
  const double lo_p = 0.5 * (1.0 - band);
  const double hi_p = 1.0 - lo_p;

  Eigen::VectorXd covered = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd counted = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd crps_sum = Eigen::VectorXd::Zero(d);

  for (const auto& series : full_dataset.segments) {
    if (series.n_obs() <= holdout_count)
      throw std::invalid_argument("validate: segment " + std::to_string(series.segment_id) +
                                  " has too few observations for the requested holdout");
    const int n_train = series.n_obs() - holdout_count;
    const int last = n_train - 1;
    const double t_last = series.times[last];
    const Eigen::VectorXd z_last = series.observations.row(last).transpose();

    // Identified tamping inside the held-out window is simulated as a
    // midpoint reset to a fresh post-maintenance draw from the hierarchy.
    bool maintained = false;
    for (int k = 0; k < holdout_count; ++k)
      if (series.maint_flags[n_train + k]) maintained = true;

    const auto draws = collect_draws(samples, series.segment_id, maintained);
    const int n_draws = static_cast<int>(draws.size());

    // ensemble[k](draw, q) over the held-out inspection times
    std::vector<Eigen::MatrixXd> ensemble(holdout_count, Eigen::MatrixXd(n_draws, d));
    Eigen::VectorXd z(d), eps(d);
    for (int j = 0; j < n_draws; ++j) {
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(series.segment_id)),
                          static_cast<std::uint64_t>(j)));
      z = z_last;
      double t_prev = t_last;
      for (int k = 0; k < holdout_count; ++k) {
        const double t_k = series.times[n_train + k];
        const double dt = t_k - t_prev;
        for (int q = 0; q < d; ++q) eps[q] = rng.normal();
        if (series.maint_flags[n_train + k]) {
          Eigen::VectorXd zplus(d);
          for (int q = 0; q < d; ++q)
            zplus[q] = lognormal_sample(draws[j].m_z[q], draws[j].s_z[q], rng);
          z = zplus + draws[j].drift * (0.5 * dt) +
              std::sqrt(0.5 * dt) * (draws[j].chol_lower * eps);
        } else {
          z += draws[j].drift * dt + std::sqrt(dt) * (draws[j].chol_lower * eps);
        }
        ensemble[k].row(j) = z.transpose();
        t_prev = t_k;
      }
    }

    std::vector<double> column(n_draws);
    for (int k = 0; k < holdout_count; ++k) {
      for (int q = 0; q < d; ++q) {
        for (int j = 0; j < n_draws; ++j) column[j] = ensemble[k](j, q);
        const double lo = sample_quantile(column, lo_p);
        const double hi = sample_quantile(column, hi_p);
        const double y = series.observations(n_train + k, q);
        counted[q] += 1.0;
        if (y >= lo && y <= hi) covered[q] += 1.0;

        // CRPS from the sorted ensemble: E|X-y| - E|X-X'|/2
        std::sort(column.begin(), column.end());
        double mean_abs_err = 0.0;
        double pair_sum = 0.0;
        for (int j = 0; j < n_draws; ++j) {
          mean_abs_err += std::abs(column[j] - y);
          pair_sum += column[j] * (2.0 * j - n_draws + 1.0);
        }
        mean_abs_err /= n_draws;
        crps_sum[q] += mean_abs_err - pair_sum / (static_cast<double>(n_draws) * n_draws);
      }
    }
  }

  CoverageReport rep;
  rep.holdout_count = holdout_count;
  rep.band = band;
  rep.n_points = static_cast<int>(counted.sum());
  rep.per_indicator_coverage = covered.cwiseQuotient(counted.cwiseMax(1.0));
  rep.overall_coverage = counted.sum() > 0 ? covered.sum() / counted.sum() : 0.0;
  rep.per_indicator_crps = crps_sum.cwiseQuotient(counted.cwiseMax(1.0));
  rep.mean_crps = counted.sum() > 0 ? crps_sum.sum() / counted.sum() : 0.0;
  return rep;
}

std::string CoverageReport::to_text(const std::vector<std::string>& labels) const {
  std::ostringstream os;
  os << "holdout_count: " << holdout_count << "\n";
  os << "band: " << band << "\n";
  os << "points: " << n_points << "\n";
  os << "overall_coverage: " << format_double(overall_coverage) << "\n";
  os << "mean_crps: " << format_double(mean_crps) << "\n";
  for (int q = 0; q < per_indicator_coverage.size(); ++q) {
    const std::string name =
        q < static_cast<int>(labels.size()) ? labels[q] : "indicator" + std::to_string(q);
    os << name << "_coverage: " << format_double(per_indicator_coverage[q]) << "\n";
    os << name << "_crps: " << format_double(per_indicator_crps[q]) << "\n";
  }
  return os.str();
}

HittingTimeResult hitting_time(const PosteriorSamples& samples, const Dataset& dataset,
                               int segment_id, const Thresholds& thresholds,
                               double horizon_days, int n_paths, std::uint64_t seed,
                               double step_days, int threads, bool force, double rhat_limit) {
  thresholds.validate();
  if (n_paths < 1) throw std::invalid_argument("hitting_time: n_paths must be >= 1");
  if (!(horizon_days > 0.0) || !(step_days > 0.0))
    throw std::invalid_argument("hitting_time: horizon and step must be positive");
  convergence_gate(samples, force, rhat_limit);

  const SegmentSeries& series = dataset.by_id(segment_id);
  const int d = series.n_indicators();
  if (thresholds.limits.size() != d)
    throw std::invalid_argument("hitting_time: threshold count does not match indicators");
  const Eigen::VectorXd start = series.observations.row(series.n_obs() - 1).transpose();
  if ((start.array() >= thresholds.limits.array()).any())
    throw std::invalid_argument("hitting_time: current state already at or above a threshold");

  const auto draws = collect_draws(samples, segment_id);
  const int n_draws = static_cast<int>(draws.size());

  std::vector<double> times(n_paths, -1.0);  // -1 marks censored
  std::vector<int> indicators(n_paths, -1);
  std::vector<long> tie_counts(threads > 1 ? threads : 1, 0);

  auto run_range = [&](int worker, int begin, int end) {
    Eigen::VectorXd z(d), z_prev(d), eps(d);
    for (int j = begin; j < end; ++j) {
      const int draw_idx = j % n_draws;
      const std::uint64_t rep = static_cast<std::uint64_t>(j / n_draws);
      Rng rng(derive_seed(derive_seed(seed, static_cast<std::uint64_t>(draw_idx)), rep));
      const auto& dp = draws[draw_idx];
      z = start;
      double t = 0.0;
      while (t < horizon_days) {
        const double dt = std::min(step_days, horizon_days - t);
        z_prev = z;
        for (int q = 0; q < d; ++q) eps[q] = rng.normal();
        z += dp.drift * dt + std::sqrt(dt) * (dp.chol_lower * eps);
        double best_time = -1.0;
        int best_q = -1;
        bool tie = false;
        for (int q = 0; q < d; ++q) {
          if (z[q] < thresholds.limits[q]) continue;
          const double gap = z[q] - z_prev[q];
          const double frac = gap > 0.0 ? (thresholds.limits[q] - z_prev[q]) / gap : 1.0;
          const double t_cross = t + dt * std::clamp(frac, 0.0, 1.0);
          if (best_q < 0 || t_cross < best_time) {
            best_time = t_cross;
            best_q = q;
            tie = false;
          } else if (t_cross == best_time) {
            tie = true;  // lowest index already kept
          }
        }
        if (best_q >= 0) {
          times[j] = best_time;
          indicators[j] = best_q;
          if (tie) ++tie_counts[worker];
          break;
        }
        t += dt;
      }
    }
  };

  if (threads <= 1) {
    run_range(0, 0, n_paths);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (n_paths + threads - 1) / threads;
    for (int w = 0; w < threads; ++w) {
      const int begin = w * chunk;
      const int end = std::min(n_paths, begin + chunk);
      if (begin < end) pool.emplace_back(run_range, w, begin, end);
    }
    for (auto& th : pool) th.join();
  }

  HittingTimeResult out;
  out.segment_id = segment_id;
  out.n_paths = n_paths;
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(d);
  int censored = 0;
  for (int j = 0; j < n_paths; ++j) {
    if (indicators[j] < 0) {
      ++censored;
      continue;
    }
    out.hitting_times.push_back(times[j]);
    out.first_indicator.push_back(indicators[j]);
    counts[indicators[j]] += 1.0;
  }
  for (long t : tie_counts) out.ties += t;
  out.censored_fraction = static_cast<double>(censored) / n_paths;
  out.hit_fraction_all = counts / static_cast<double>(n_paths);
  const double n_hit = counts.sum();
  out.first_hit_probabilities =
      n_hit > 0 ? Eigen::VectorXd(counts / n_hit) : Eigen::VectorXd(Eigen::VectorXd::Zero(d));
  return out;
}

std::vector<double> HittingTimeResult::time_quantiles(const std::vector<double>& probs) const {
  std::vector<double> out;
  for (double p : probs) out.push_back(sample_quantile(hitting_times, p));
  return out;
}

ModelComparison compare_models(const PosteriorSamples& multi_samples,
                               const PosteriorSamples& uni_samples, const Dataset& dataset,
                               int segment_id, const Thresholds& thresholds,
                               double horizon_days, int n_paths, std::uint64_t seed,
                               double step_days, int threads, bool force) {
  if (multi_samples.n_indicators != uni_samples.n_indicators)
    throw std::invalid_argument("compare_models: posteriors disagree on indicator count");
  ModelComparison cmp;
  cmp.multivariate = hitting_time(multi_samples, dataset, segment_id, thresholds, horizon_days,
                                  n_paths, seed, step_days, threads, force);
  cmp.univariate = hitting_time(uni_samples, dataset, segment_id, thresholds, horizon_days,
                                n_paths, seed, step_days, threads, force);
  if (cmp.multivariate.hitting_times.empty() || cmp.univariate.hitting_times.empty())
    throw std::runtime_error("compare_models: all paths censored; raise the horizon");
  cmp.median_multivariate = sample_quantile(cmp.multivariate.hitting_times, 0.5);
  cmp.median_univariate = sample_quantile(cmp.univariate.hitting_times, 0.5);
  cmp.median_diff = cmp.median_multivariate - cmp.median_univariate;
  return cmp;
}

}  // namespace trackdeg
