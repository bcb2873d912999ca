#include "trackdeg/mcmc.hpp"

#include "trackdeg/io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace trackdeg {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

enum Block { kMu = 0, kSigma = 1, kR = 2, kZplus = 3, kHyper = 4 };

}  // namespace

ModelKind parse_model_kind(const std::string& name) {
  if (name == "multivariate") return ModelKind::multivariate;
  if (name == "univariate") return ModelKind::univariate;
  throw std::invalid_argument("unknown model kind '" + name + "'");
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::multivariate ? "multivariate" : "univariate";
}

void FitConfig::validate() const {
  if (n_chains < 2) throw std::invalid_argument("FitConfig: need at least 2 chains for split-Rhat");
  if (n_draws < 1) throw std::invalid_argument("FitConfig: n_draws must be positive");
  if (n_warmup < 0) throw std::invalid_argument("FitConfig: n_warmup must be nonnegative");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw std::invalid_argument("FitConfig: target_accept must lie in (0, 1)");
  if (threads < 1) throw std::invalid_argument("FitConfig: threads must be positive");
}

// ---------------------------------------------------------------------------
// log_posterior

double log_posterior(const ParameterState& state, const Dataset& dataset,
                     const HyperpriorConfig& hyperprior, ModelKind kind) {
  const int d = dataset.segments.empty() ? hyperprior.n_indicators()
                                         : dataset.segments[0].n_indicators();
  if (static_cast<int>(state.segments.size()) != static_cast<int>(dataset.segments.size()))
    throw std::invalid_argument("log_posterior: state/dataset segment count mismatch");

  const Hyperparams& h = state.hyper;
  if ((h.s_mu.array() <= 0.0).any() || (h.s_sigma.array() <= 0.0).any() ||
      (h.m_z.array() <= 0.0).any() || (h.s_z.array() <= 0.0).any())
    return kNegInf;
  const double hyper_lp = hyperparams_logpdf(h, hyperprior);
  if (!std::isfinite(hyper_lp)) return kNegInf;

  double total = hyper_lp;
  for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
    const SegmentSeries& series = dataset.segments[i];
    const SegmentParams& p = state.segments[i];
    if ((p.drift.array() < 0.0).any()) return kNegInf;
    if ((p.marginal_sd.array() <= 0.0).any()) return kNegInf;
    for (int k : series.maintenance_intervals())
      if (!p.zplus.count(k))
        throw std::invalid_argument("log_posterior: segment " +
                                    std::to_string(series.segment_id) + " interval " +
                                    std::to_string(k) + " lacks a post-maintenance state");
    for (const auto& [k, z] : p.zplus)
      if ((z.array() <= 0.0).any()) return kNegInf;

    PostMaintMap pm;
    for (const auto& [k, z] : p.zplus) pm[k] = {series.segment_id, k, z};

    if (kind == ModelKind::multivariate) {
      CovarianceChol chol(p.marginal_sd, p.correlation);
      if (!chol.valid()) return kNegInf;
      total += loglik_multivariate(p.drift, chol, series, pm);
      if (d >= 2) total += lkj_logpdf(p.correlation, h.eta);
    } else {
      for (int q = 0; q < d; ++q)
        total += loglik_univariate(p.drift[q], p.marginal_sd[q] * p.marginal_sd[q],
                                   series, q, pm);
    }
    for (int q = 0; q < d; ++q) {
      total += halfnormal_logpdf(p.drift[q], h.s_mu[q]);
      total += halfnormal_logpdf(p.marginal_sd[q], h.s_sigma[q]);
    }
    for (const auto& [k, z] : p.zplus)
      for (int q = 0; q < d; ++q) total += lognormal_logpdf(z[q], h.m_z[q], h.s_z[q]);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Sampler layout

namespace {

// Immutable per-interval data extracted from a series.
struct IvData {
  double dt;
  Eigen::VectorXd v;  // dz for plain intervals, z_end for tamped ones
  bool maint;
  int k;
};

std::vector<IvData> extract_ivs(const SegmentSeries& s) {
  std::vector<IvData> out;
  for (int i = 1; i < s.n_obs(); ++i) {
    IvData iv;
    iv.dt = s.times[i] - s.times[i - 1];
    iv.maint = s.maint_flags[i] != 0;
    iv.k = i;
    if (iv.maint)
      iv.v = s.observations.row(i).transpose();
    else
      iv.v = (s.observations.row(i) - s.observations.row(i - 1)).transpose();
    out.push_back(std::move(iv));
  }
  return out;
}

double seg_ll_mv(const std::vector<IvData>& ivs, const Eigen::VectorXd& drift,
                 const CovarianceChol& chol, const std::map<int, Eigen::VectorXd>& zplus) {
  double total = 0.0;
  for (const auto& iv : ivs)
    total += interval_loglik(drift, chol, iv.dt, iv.v, iv.maint,
                             iv.maint ? &zplus.at(iv.k) : nullptr);
  return total;
}

double seg_ll_uni(const std::vector<IvData>& ivs, double drift, double variance, int q,
                  const std::map<int, Eigen::VectorXd>& zplus) {
  double total = 0.0;
  for (const auto& iv : ivs)
    total += interval_loglik_1d(drift, variance, iv.dt, iv.v[q], iv.maint,
                                iv.maint ? zplus.at(iv.k)[q] : 0.0);
  return total;
}

}  // namespace

Sampler::Sampler(const Dataset& dataset, HyperpriorConfig hyperprior, ModelKind kind,
                 double target_accept)
    : dataset_(&dataset),
      hyperprior_(std::move(hyperprior)),
      kind_(kind),
      target_accept_(target_accept) {
  if (dataset.segments.empty()) throw std::invalid_argument("Sampler: empty dataset");
  dataset.validate(true);
  n_ind_ = dataset.segments[0].n_indicators();
  if (hyperprior_.n_indicators() == 0) hyperprior_ = HyperpriorConfig::defaults(n_ind_);
  hyperprior_.validate();
  if (hyperprior_.n_indicators() != n_ind_)
    throw std::invalid_argument("Sampler: hyperprior dimension does not match the data");

  const bool multi = kind_ == ModelKind::multivariate && n_ind_ >= 2;
  for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
    const auto& s = dataset.segments[i];
    const auto ivs = extract_ivs(s);
    double sum_dt = 0.0;
    for (const auto& iv : ivs) sum_dt += iv.dt;

    for (int q = 0; q < n_ind_; ++q) {
      Coord c;
      c.kind = Coord::mu;
      c.block = kMu;
      c.seg = static_cast<int>(i);
      c.q = q;
      c.init_scale = 0.05 / std::sqrt(std::max(sum_dt, 1.0));
      coords_.push_back(c);
      names_.push_back("mu[" + std::to_string(s.segment_id) + "][" + std::to_string(q) + "]");
    }
    for (int q = 0; q < n_ind_; ++q) {
      Coord c;
      c.kind = Coord::log_sigma;
      c.block = kSigma;
      c.seg = static_cast<int>(i);
      c.q = q;
      c.init_scale = 1.0 / std::sqrt(2.0 * std::max<std::size_t>(ivs.size(), 2));
      coords_.push_back(c);
      names_.push_back("sigma[" + std::to_string(s.segment_id) + "][" + std::to_string(q) + "]");
    }
    if (multi) {
      int pack = 0;
      for (int q1 = 0; q1 < n_ind_; ++q1) {
        for (int q2 = q1 + 1; q2 < n_ind_; ++q2, ++pack) {
          Coord c;
          c.kind = Coord::cpc;
          c.block = kR;
          c.seg = static_cast<int>(i);
          c.q = pack;
          c.level = cpc_level(n_ind_, pack);
          c.init_scale = 1.5 / std::sqrt(std::max<std::size_t>(ivs.size(), 2));
          coords_.push_back(c);
          names_.push_back("R[" + std::to_string(s.segment_id) + "][" + std::to_string(q1) +
                           "][" + std::to_string(q2) + "]");
        }
      }
    }
    for (int k : s.maintenance_intervals()) {
      for (int q = 0; q < n_ind_; ++q) {
        Coord c;
        c.kind = Coord::log_zplus;
        c.block = kZplus;
        c.seg = static_cast<int>(i);
        c.q = q;
        c.interval = k;
        c.init_scale = 0.2;
        coords_.push_back(c);
        names_.push_back("zplus[" + std::to_string(s.segment_id) + "][" + std::to_string(k) +
                         "][" + std::to_string(q) + "]");
      }
    }
  }
  for (int q = 0; q < n_ind_; ++q) {
    Coord c;
    c.kind = Coord::h_s_mu;
    c.block = kHyper;
    c.q = q;
    c.init_scale = 0.05 * (hyperprior_.s_mu_range[q].b - hyperprior_.s_mu_range[q].a) + 1e-6;
    coords_.push_back(c);
    names_.push_back("hyper.s_mu[" + std::to_string(q) + "]");
  }
  for (int q = 0; q < n_ind_; ++q) {
    Coord c;
    c.kind = Coord::h_s_sigma;
    c.block = kHyper;
    c.q = q;
    c.init_scale = 0.05 * (hyperprior_.s_sigma_range[q].b - hyperprior_.s_sigma_range[q].a) + 1e-6;
    coords_.push_back(c);
    names_.push_back("hyper.s_sigma[" + std::to_string(q) + "]");
  }
  for (int q = 0; q < n_ind_; ++q) {
    Coord c;
    c.kind = Coord::h_log_m_z;
    c.block = kHyper;
    c.q = q;
    c.init_scale = 0.2;
    coords_.push_back(c);
    names_.push_back("hyper.m_z[" + std::to_string(q) + "]");
  }
  for (int q = 0; q < n_ind_; ++q) {
    Coord c;
    c.kind = Coord::h_s_z;
    c.block = kHyper;
    c.q = q;
    c.init_scale = 0.05 * (hyperprior_.s_z_range[q].b - hyperprior_.s_z_range[q].a) + 1e-6;
    coords_.push_back(c);
    names_.push_back("hyper.s_z[" + std::to_string(q) + "]");
  }
}

const std::vector<std::string>& Sampler::block_names() {
  static const std::vector<std::string> kNames = {"mu", "sigma", "R", "zplus", "hyper"};
  return kNames;
}

ParameterState Sampler::initial_state() const {
  ParameterState state;
  const int d = n_ind_;
  for (const auto& s : dataset_->segments) {
    const auto ivs = extract_ivs(s);
    SegmentParams p;
    p.drift = Eigen::VectorXd::Zero(d);
    p.marginal_sd = Eigen::VectorXd::Constant(d, 0.1);
    p.correlation = Eigen::MatrixXd::Identity(d, d);

    Eigen::VectorXd sum_dz = Eigen::VectorXd::Zero(d);
    double sum_dt = 0.0;
    int n_plain = 0;
    for (const auto& iv : ivs) {
      if (iv.maint) continue;
      sum_dz += iv.v;
      sum_dt += iv.dt;
      ++n_plain;
    }
    if (n_plain >= 1) p.drift = (sum_dz / sum_dt).cwiseMax(0.0);
    if (n_plain >= 2) {
      Eigen::VectorXd ss = Eigen::VectorXd::Zero(d);
      for (const auto& iv : ivs) {
        if (iv.maint) continue;
        const Eigen::VectorXd r = iv.v - p.drift * iv.dt;
        ss += r.cwiseProduct(r) / iv.dt;
      }
      p.marginal_sd = (ss / (n_plain - 1)).cwiseSqrt().cwiseMax(1e-3);
    }
    for (int k : s.maintenance_intervals()) {
      const double dt = s.times[k] - s.times[k - 1];
      Eigen::VectorXd z = s.observations.row(k).transpose() - p.drift * (0.5 * dt);
      p.zplus[k] = z.cwiseMax(0.01);
    }
    state.segments.push_back(std::move(p));
  }

  Hyperparams h;
  h.s_mu.resize(d);
  h.s_sigma.resize(d);
  h.m_z.resize(d);
  h.s_z.resize(d);
  for (int q = 0; q < d; ++q) {
    h.s_mu[q] = 0.5 * (hyperprior_.s_mu_range[q].a + hyperprior_.s_mu_range[q].b);
    h.s_sigma[q] = 0.5 * (hyperprior_.s_sigma_range[q].a + hyperprior_.s_sigma_range[q].b);
    h.m_z[q] = std::exp(hyperprior_.m_z_location[q]);  // prior median
    h.s_z[q] = 0.5 * (hyperprior_.s_z_range[q].a + hyperprior_.s_z_range[q].b);
    if (h.s_mu[q] <= 0.0) h.s_mu[q] = 1e-3;
    if (h.s_sigma[q] <= 0.0) h.s_sigma[q] = 1e-3;
    if (h.s_z[q] <= 0.0) h.s_z[q] = 1e-3;
  }
  h.eta = hyperprior_.eta_fixed;
  state.hyper = h;
  return state;
}

void Sampler::jitter(ParameterState& state, Rng& rng) const {
  const int d = n_ind_;
  for (auto& p : state.segments) {
    for (int q = 0; q < d; ++q) {
      p.drift[q] = p.drift[q] * std::exp(0.1 * rng.normal()) + 1e-4 * std::abs(rng.normal());
      p.marginal_sd[q] *= std::exp(0.1 * rng.normal());
    }
    if (kind_ == ModelKind::multivariate && d >= 2) {
      Eigen::VectorXd y(n_pairs(d));
      for (int j = 0; j < y.size(); ++j) y[j] = std::tanh(0.05 * rng.normal());
      p.correlation = corr_from_partials(y, d);
    }
    for (auto& [k, z] : p.zplus)
      for (int q = 0; q < d; ++q) z[q] *= std::exp(0.05 * rng.normal());
  }
  for (int q = 0; q < d; ++q) {
    auto clip = [](double x, const UniformRange& r) {
      const double pad = 0.01 * (r.b - r.a);
      return std::clamp(x, r.a + pad, r.b - pad);
    };
    if (hyperprior_.s_mu_range[q].a < hyperprior_.s_mu_range[q].b)
      state.hyper.s_mu[q] = clip(state.hyper.s_mu[q] * std::exp(0.1 * rng.normal()),
                                 hyperprior_.s_mu_range[q]);
    if (hyperprior_.s_sigma_range[q].a < hyperprior_.s_sigma_range[q].b)
      state.hyper.s_sigma[q] = clip(state.hyper.s_sigma[q] * std::exp(0.1 * rng.normal()),
                                    hyperprior_.s_sigma_range[q]);
    state.hyper.m_z[q] *= std::exp(0.1 * rng.normal());
    if (hyperprior_.s_z_range[q].a < hyperprior_.s_z_range[q].b)
      state.hyper.s_z[q] = clip(state.hyper.s_z[q] * std::exp(0.1 * rng.normal()),
                                hyperprior_.s_z_range[q]);
  }
}

StepTuning Sampler::make_tuning() const {
  StepTuning t;
  t.target_accept = target_accept_;
  t.log_scales.resize(coords_.size());
  for (std::size_t j = 0; j < coords_.size(); ++j)
    t.log_scales[j] = std::log(coords_[j].init_scale);
  t.proposed.assign(block_names().size(), 0);
  t.accepted.assign(block_names().size(), 0);
  return t;
}

void StepTuning::reset_counters() {
  std::fill(proposed.begin(), proposed.end(), 0);
  std::fill(accepted.begin(), accepted.end(), 0);
}

// ---------------------------------------------------------------------------
// The sweep

void Sampler::sweep(ParameterState& state, StepTuning& tuning, bool adapt, Rng& rng) const {
  const int d = n_ind_;
  const int n_seg = static_cast<int>(dataset_->segments.size());
  const bool multi = kind_ == ModelKind::multivariate && d >= 2;
  const Hyperparams& h = state.hyper;

  ++tuning.sweep_index;
  const double adapt_rate = adapt ? std::pow(static_cast<double>(tuning.sweep_index), -0.6) : 0.0;

  // Fresh per-segment caches at sweep entry; updated in place on acceptance.
  struct SegCache {
    CovarianceChol chol;
    double ll = 0.0;            // multivariate
    Eigen::VectorXd ll_uni;     // univariate, per indicator
    Eigen::VectorXd partials;   // cpc p
    Eigen::VectorXd y;          // atanh(p)
  };
  std::vector<std::vector<IvData>> ivs;
  ivs.reserve(n_seg);
  std::vector<SegCache> cache(n_seg);
  for (int i = 0; i < n_seg; ++i) {
    ivs.push_back(extract_ivs(dataset_->segments[i]));
    auto& c = cache[i];
    const auto& p = state.segments[i];
    if (multi || kind_ == ModelKind::multivariate) {
      c.chol = CovarianceChol(p.marginal_sd, p.correlation);
      if (!c.chol.valid())
        throw std::runtime_error("sweep: covariance not positive definite at entry");
      c.ll = seg_ll_mv(ivs[i], p.drift, c.chol, p.zplus);
      if (multi) {
        c.partials = partials_from_corr(p.correlation);
        c.y = c.partials.unaryExpr([](double v) { return std::atanh(v); });
      }
    } else {
      c.ll_uni.resize(d);
      for (int q = 0; q < d; ++q)
        c.ll_uni[q] = seg_ll_uni(ivs[i], p.drift[q], p.marginal_sd[q] * p.marginal_sd[q], q,
                                 p.zplus);
    }
  }

  auto decide = [&](double log_ratio, std::size_t coord_idx, int block) {
    ++tuning.proposed[block];
    const bool acc = std::isfinite(log_ratio) && std::log(rng.uniform_pos()) < log_ratio;
    if (acc) ++tuning.accepted[block];
    if (adapt) {
      const double move = acc ? (1.0 - tuning.target_accept) : -tuning.target_accept;
      tuning.log_scales[coord_idx] =
          std::clamp(tuning.log_scales[coord_idx] + adapt_rate * move, -16.0, 4.0);
    }
    return acc;
  };
  auto reject_out_of_support = [&](std::size_t coord_idx, int block) {
    ++tuning.proposed[block];
    if (adapt)
      tuning.log_scales[coord_idx] = std::clamp(
          tuning.log_scales[coord_idx] - adapt_rate * tuning.target_accept, -16.0, 4.0);
  };

  for (std::size_t j = 0; j < coords_.size(); ++j) {
    const Coord& c = coords_[j];
    const double scale = std::exp(tuning.log_scales[j]);
    switch (c.kind) {
      case Coord::mu: {
        auto& p = state.segments[c.seg];
        auto& sc = cache[c.seg];
        const double cur = p.drift[c.q];
        const double prop = cur + scale * rng.normal();
        if (prop < 0.0) {
          reject_out_of_support(j, c.block);
          break;
        }
        const double prior_cur = halfnormal_logpdf(cur, h.s_mu[c.q]);
        const double prior_prop = halfnormal_logpdf(prop, h.s_mu[c.q]);
        if (kind_ == ModelKind::multivariate) {
          Eigen::VectorXd drift_prop = p.drift;
          drift_prop[c.q] = prop;
          const double ll_prop = seg_ll_mv(ivs[c.seg], drift_prop, sc.chol, p.zplus);
          if (decide(ll_prop + prior_prop - sc.ll - prior_cur, j, c.block)) {
            p.drift[c.q] = prop;
            sc.ll = ll_prop;
          }
        } else {
          const double var = p.marginal_sd[c.q] * p.marginal_sd[c.q];
          const double ll_prop = seg_ll_uni(ivs[c.seg], prop, var, c.q, p.zplus);
          if (decide(ll_prop + prior_prop - sc.ll_uni[c.q] - prior_cur, j, c.block)) {
            p.drift[c.q] = prop;
            sc.ll_uni[c.q] = ll_prop;
          }
        }
        break;
      }
      case Coord::log_sigma: {
        auto& p = state.segments[c.seg];
        auto& sc = cache[c.seg];
        const double cur = p.marginal_sd[c.q];
        const double prop = cur * std::exp(scale * rng.normal());
        const double prior_cur = halfnormal_logpdf(cur, h.s_sigma[c.q]);
        const double prior_prop = halfnormal_logpdf(prop, h.s_sigma[c.q]);
        const double jac = std::log(prop) - std::log(cur);
        if (kind_ == ModelKind::multivariate) {
          Eigen::VectorXd sd_prop = p.marginal_sd;
          sd_prop[c.q] = prop;
          CovarianceChol chol_prop(sd_prop, p.correlation);
          if (!chol_prop.valid()) {
            reject_out_of_support(j, c.block);
            break;
          }
          const double ll_prop = seg_ll_mv(ivs[c.seg], p.drift, chol_prop, p.zplus);
          if (decide(ll_prop + prior_prop + jac - sc.ll - prior_cur, j, c.block)) {
            p.marginal_sd[c.q] = prop;
            sc.chol = std::move(chol_prop);
            sc.ll = ll_prop;
          }
        } else {
          const double ll_prop = seg_ll_uni(ivs[c.seg], p.drift[c.q], prop * prop, c.q, p.zplus);
          if (decide(ll_prop + prior_prop + jac - sc.ll_uni[c.q] - prior_cur, j, c.block)) {
            p.marginal_sd[c.q] = prop;
            sc.ll_uni[c.q] = ll_prop;
          }
        }
        break;
      }
      case Coord::cpc: {
        auto& p = state.segments[c.seg];
        auto& sc = cache[c.seg];
        const double shape = lkj_cpc_shape(d, c.level, h.eta);
        const double y_cur = sc.y[c.q];
        const double p_cur = sc.partials[c.q];
        const double y_prop = y_cur + scale * rng.normal();
        const double p_prop = std::tanh(y_prop);
        // target over y: loglik + scaled-Beta prior + d(tanh)/dy Jacobian
        const double f_cur = scaled_beta_logpdf(p_cur, shape) + std::log1p(-p_cur * p_cur);
        const double f_prop = scaled_beta_logpdf(p_prop, shape) + std::log1p(-p_prop * p_prop);
        if (!std::isfinite(f_prop)) {
          reject_out_of_support(j, c.block);
          break;
        }
        Eigen::VectorXd partials_prop = sc.partials;
        partials_prop[c.q] = p_prop;
        const Eigen::MatrixXd corr_prop = corr_from_partials(partials_prop, d);
        CovarianceChol chol_prop(p.marginal_sd, corr_prop);
        if (!chol_prop.valid()) {
          reject_out_of_support(j, c.block);
          break;
        }
        const double ll_prop = seg_ll_mv(ivs[c.seg], p.drift, chol_prop, p.zplus);
        if (decide(ll_prop + f_prop - sc.ll - f_cur, j, c.block)) {
          sc.partials[c.q] = p_prop;
          sc.y[c.q] = y_prop;
          p.correlation = corr_prop;
          sc.chol = std::move(chol_prop);
          sc.ll = ll_prop;
        }
        break;
      }
      case Coord::log_zplus: {
        auto& p = state.segments[c.seg];
        auto& sc = cache[c.seg];
        Eigen::VectorXd& z = p.zplus.at(c.interval);
        const double cur = z[c.q];
        const double prop = cur * std::exp(scale * rng.normal());
        const double prior_cur = lognormal_logpdf(cur, h.m_z[c.q], h.s_z[c.q]);
        const double prior_prop = lognormal_logpdf(prop, h.m_z[c.q], h.s_z[c.q]);
        const double jac = std::log(prop) - std::log(cur);
        // only the tamped interval's term changes
        const auto& iv = [&]() -> const IvData& {
          for (const auto& candidate : ivs[c.seg])
            if (candidate.k == c.interval) return candidate;
          throw std::logic_error("zplus coordinate without matching interval");
        }();
        if (kind_ == ModelKind::multivariate) {
          const double term_cur = interval_loglik(p.drift, sc.chol, iv.dt, iv.v, true, &z);
          Eigen::VectorXd z_prop = z;
          z_prop[c.q] = prop;
          const double term_prop = interval_loglik(p.drift, sc.chol, iv.dt, iv.v, true, &z_prop);
          if (decide(term_prop + prior_prop + jac - term_cur - prior_cur, j, c.block)) {
            z[c.q] = prop;
            sc.ll += term_prop - term_cur;
          }
        } else {
          const double var = p.marginal_sd[c.q] * p.marginal_sd[c.q];
          const double term_cur =
              interval_loglik_1d(p.drift[c.q], var, iv.dt, iv.v[c.q], true, cur);
          const double term_prop =
              interval_loglik_1d(p.drift[c.q], var, iv.dt, iv.v[c.q], true, prop);
          if (decide(term_prop + prior_prop + jac - term_cur - prior_cur, j, c.block)) {
            z[c.q] = prop;
            sc.ll_uni[c.q] += term_prop - term_cur;
          }
        }
        break;
      }
      case Coord::h_s_mu: {
        const UniformRange& r = hyperprior_.s_mu_range[c.q];
        if (r.a == r.b) break;  // fixed by configuration
        const double cur = h.s_mu[c.q];
        const double prop = cur + scale * rng.normal();
        if (prop <= 0.0 || prop < r.a || prop > r.b) {
          reject_out_of_support(j, c.block);
          break;
        }
        double delta = 0.0;
        for (const auto& p : state.segments)
          delta += halfnormal_logpdf(p.drift[c.q], prop) - halfnormal_logpdf(p.drift[c.q], cur);
        if (decide(delta, j, c.block)) state.hyper.s_mu[c.q] = prop;
        break;
      }
      case Coord::h_s_sigma: {
        const UniformRange& r = hyperprior_.s_sigma_range[c.q];
        if (r.a == r.b) break;
        const double cur = h.s_sigma[c.q];
        const double prop = cur + scale * rng.normal();
        if (prop <= 0.0 || prop < r.a || prop > r.b) {
          reject_out_of_support(j, c.block);
          break;
        }
        double delta = 0.0;
        for (const auto& p : state.segments)
          delta += halfnormal_logpdf(p.marginal_sd[c.q], prop) -
                   halfnormal_logpdf(p.marginal_sd[c.q], cur);
        if (decide(delta, j, c.block)) state.hyper.s_sigma[c.q] = prop;
        break;
      }
      case Coord::h_log_m_z: {
        const double cur = h.m_z[c.q];
        const double prop = cur * std::exp(scale * rng.normal());
        double delta = lognormal_logpdf(prop, hyperprior_.m_z_location[c.q],
                                        hyperprior_.m_z_scale[c.q]) -
                       lognormal_logpdf(cur, hyperprior_.m_z_location[c.q],
                                        hyperprior_.m_z_scale[c.q]) +
                       std::log(prop) - std::log(cur);
        for (const auto& p : state.segments)
          for (const auto& [k, z] : p.zplus)
            delta += lognormal_logpdf(z[c.q], prop, h.s_z[c.q]) -
                     lognormal_logpdf(z[c.q], cur, h.s_z[c.q]);
        if (decide(delta, j, c.block)) state.hyper.m_z[c.q] = prop;
        break;
      }
      case Coord::h_s_z: {
        const UniformRange& r = hyperprior_.s_z_range[c.q];
        if (r.a == r.b) break;
        const double cur = h.s_z[c.q];
        const double prop = cur + scale * rng.normal();
        if (prop <= 0.0 || prop < r.a || prop > r.b) {
          reject_out_of_support(j, c.block);
          break;
        }
        double delta = 0.0;
        for (const auto& p : state.segments)
          for (const auto& [k, z] : p.zplus)
            delta += lognormal_logpdf(z[c.q], h.m_z[c.q], prop) -
                     lognormal_logpdf(z[c.q], h.m_z[c.q], cur);
        if (decide(delta, j, c.block)) state.hyper.s_z[c.q] = prop;
        break;
      }
    }
  }
}

Eigen::VectorXd Sampler::flatten(const ParameterState& state) const {
  Eigen::VectorXd out(names_.size());
  int idx = 0;
  const bool multi = kind_ == ModelKind::multivariate && n_ind_ >= 2;
  for (std::size_t i = 0; i < state.segments.size(); ++i) {
    const auto& p = state.segments[i];
    for (int q = 0; q < n_ind_; ++q) out[idx++] = p.drift[q];
    for (int q = 0; q < n_ind_; ++q) out[idx++] = p.marginal_sd[q];
    if (multi)
      for (int q1 = 0; q1 < n_ind_; ++q1)
        for (int q2 = q1 + 1; q2 < n_ind_; ++q2) out[idx++] = p.correlation(q1, q2);
    for (const auto& [k, z] : p.zplus)
      for (int q = 0; q < n_ind_; ++q) out[idx++] = z[q];
  }
  for (int q = 0; q < n_ind_; ++q) out[idx++] = state.hyper.s_mu[q];
  for (int q = 0; q < n_ind_; ++q) out[idx++] = state.hyper.s_sigma[q];
  for (int q = 0; q < n_ind_; ++q) out[idx++] = state.hyper.m_z[q];
  for (int q = 0; q < n_ind_; ++q) out[idx++] = state.hyper.s_z[q];
  return out;
}

// ---------------------------------------------------------------------------
// fit

PosteriorSamples fit(const Dataset& dataset, const FitConfig& config) {
  config.validate();
  if (dataset.segments.empty()) throw std::invalid_argument("fit: empty dataset");
  Sampler sampler(dataset, config.hyperprior, config.model_kind, config.target_accept);

  const ParameterState init = sampler.initial_state();
  // Surface a broken segment rather than a bare non-finite posterior.
  for (std::size_t i = 0; i < dataset.segments.size(); ++i) {
    const auto& s = dataset.segments[i];
    PostMaintMap pm;
    for (const auto& [k, z] : init.segments[i].zplus) pm[k] = {s.segment_id, k, z};
    double ll = std::numeric_limits<double>::quiet_NaN();
    try {
      if (config.model_kind == ModelKind::multivariate) {
        ll = loglik_multivariate({init.segments[i].drift, init.segments[i].marginal_sd,
                                  init.segments[i].correlation},
                                 s, pm);
      } else {
        ll = 0.0;
        for (int q = 0; q < s.n_indicators(); ++q)
          ll += loglik_univariate(
              init.segments[i].drift[q],
              init.segments[i].marginal_sd[q] * init.segments[i].marginal_sd[q], s, q, pm);
      }
    } catch (const std::exception&) {
      // fall through with NaN
    }
    if (!std::isfinite(ll))
      throw std::runtime_error("fit: non-finite log-likelihood at initialization for segment " +
                               std::to_string(s.segment_id));
  }
  if (!std::isfinite(log_posterior(init, dataset, sampler.hyperprior(), config.model_kind)))
    throw std::runtime_error("fit: non-finite log-posterior at initialization");

  const int n_params = static_cast<int>(sampler.param_names().size());
  std::vector<Eigen::MatrixXd> chains(config.n_chains);
  std::vector<StepTuning> tunings(config.n_chains);

  auto run_chain = [&](int c) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(c)));
    ParameterState state = init;
    sampler.jitter(state, rng);
    StepTuning tuning = sampler.make_tuning();
    for (int w = 0; w < config.n_warmup; ++w) sampler.sweep(state, tuning, true, rng);
    tuning.reset_counters();
    Eigen::MatrixXd draws(config.n_draws, n_params);
    for (int t = 0; t < config.n_draws; ++t) {
      sampler.sweep(state, tuning, false, rng);
      draws.row(t) = sampler.flatten(state).transpose();
    }
    chains[c] = std::move(draws);
    tunings[c] = std::move(tuning);
  };

  const int workers = std::min(config.threads, config.n_chains);
  if (workers <= 1) {
    for (int c = 0; c < config.n_chains; ++c) run_chain(c);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int c = w; c < config.n_chains; c += workers) run_chain(c);
      });
    for (auto& t : pool) t.join();
  }

  PosteriorSamples out;
  out.model_kind = config.model_kind;
  out.n_indicators = dataset.segments[0].n_indicators();
  for (const auto& s : dataset.segments) out.segment_ids.push_back(s.segment_id);
  out.names = sampler.param_names();
  out.chains = std::move(chains);
  const auto& blocks = Sampler::block_names();
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    long proposed = 0, accepted = 0;
    for (const auto& t : tunings) {
      proposed += t.proposed[b];
      accepted += t.accepted[b];
    }
    if (proposed > 0)
      out.block_acceptance[blocks[b]] =
          static_cast<double>(accepted) / static_cast<double>(proposed);
  }
  return out;
}

// ---------------------------------------------------------------------------
// PosteriorSamples access

int PosteriorSamples::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

int PosteriorSamples::require_column(const std::string& name) const {
  const int c = column(name);
  if (c < 0) throw std::invalid_argument("posterior has no parameter '" + name + "'");
  return c;
}

std::vector<double> PosteriorSamples::pooled(int column) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n_chains()) * n_draws());
  for (const auto& m : chains)
    for (int t = 0; t < m.rows(); ++t) out.push_back(m(t, column));
  return out;
}

double PosteriorSamples::posterior_mean(const std::string& name) const {
  const auto v = pooled(require_column(name));
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

WienerParams extract_params(const PosteriorSamples& samples, int segment_id, int chain,
                            int draw) {
  const int d = samples.n_indicators;
  WienerParams p;
  p.drift.resize(d);
  p.marginal_sd.resize(d);
  p.correlation = Eigen::MatrixXd::Identity(d, d);
  const std::string sid = std::to_string(segment_id);
  for (int q = 0; q < d; ++q) {
    p.drift[q] = samples.chains[chain](
        draw, samples.require_column("mu[" + sid + "][" + std::to_string(q) + "]"));
    p.marginal_sd[q] = samples.chains[chain](
        draw, samples.require_column("sigma[" + sid + "][" + std::to_string(q) + "]"));
  }
  if (samples.model_kind == ModelKind::multivariate && d >= 2) {
    for (int q1 = 0; q1 < d; ++q1)
      for (int q2 = q1 + 1; q2 < d; ++q2) {
        const double r = samples.chains[chain](
            draw, samples.require_column("R[" + sid + "][" + std::to_string(q1) + "][" +
                                         std::to_string(q2) + "]"));
        p.correlation(q1, q2) = p.correlation(q2, q1) = r;
      }
  }
  return p;
}

// ---------------------------------------------------------------------------
// diagnostics

namespace {

// Splits chains into halves; drops the middle draw of odd-length chains.
std::vector<Eigen::VectorXd> split_halves(const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  for (const auto& c : chains) {
    const int n = static_cast<int>(c.size());
    const int half = n / 2;
    out.push_back(c.head(half));
    out.push_back(c.tail(half));
  }
  return out;
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  const auto seqs = split_halves(chains);
  const int m = static_cast<int>(seqs.size());
  const int n = static_cast<int>(seqs[0].size());
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();

  Eigen::VectorXd means(m), vars(m);
  for (int j = 0; j < m; ++j) {
    means[j] = seqs[j].mean();
    vars[j] = (seqs[j].array() - means[j]).square().sum() / (n - 1);
  }
  const double grand = means.mean();
  const double b = n * (means.array() - grand).square().sum() / (m - 1);
  const double w = vars.mean();
  if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double effective_sample_size(const std::vector<Eigen::VectorXd>& chains) {
  const auto seqs = split_halves(chains);
  const int m = static_cast<int>(seqs.size());
  const int n = static_cast<int>(seqs[0].size());
  if (n < 4) return std::numeric_limits<double>::quiet_NaN();

  Eigen::VectorXd means(m), vars(m);
  for (int j = 0; j < m; ++j) {
    means[j] = seqs[j].mean();
    vars[j] = (seqs[j].array() - means[j]).square().sum() / (n - 1);
  }
  const double grand = means.mean();
  const double b = n * (means.array() - grand).square().sum() / (m - 1);
  const double w = vars.mean();
  const double var_plus = (n - 1.0) / n * w + b / n;
  if (var_plus <= 0.0 || w == 0.0) return static_cast<double>(m) * n;

  // combined autocorrelation via per-sequence autocovariances
  auto acov = [&](int j, int t) {
    double s = 0.0;
    for (int i = 0; i + t < n; ++i) s += (seqs[j][i] - means[j]) * (seqs[j][i + t] - means[j]);
    return s / n;
  };
  std::vector<double> rho(n, 0.0);
  for (int t = 0; t < n; ++t) {
    double mean_acov = 0.0;
    for (int j = 0; j < m; ++j) mean_acov += acov(j, t);
    mean_acov /= m;
    rho[t] = 1.0 - (w - mean_acov) / var_plus;
  }
  // Geyer initial monotone positive sequence over lag pairs
  double tau = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (int t = 0; t + 1 < n; t += 2) {
    double pair = rho[t] + rho[t + 1];
    if (t > 0 && pair < 0.0) break;
    pair = std::min(pair, prev_pair);
    prev_pair = pair;
    tau += 2.0 * pair;
  }
  tau -= 1.0;
  tau = std::max(tau, 1.0 / (10.0 * m * n));
  const double ess = static_cast<double>(m) * n / tau;
  return std::min(ess, static_cast<double>(m) * n);
}

std::vector<ParamDiagnostics> diagnostics(const PosteriorSamples& samples) {
  if (samples.n_chains() < 2)
    throw std::invalid_argument("diagnostics: need at least 2 chains");
  std::vector<ParamDiagnostics> out;
  out.reserve(samples.n_params());
  for (int p = 0; p < samples.n_params(); ++p) {
    std::vector<Eigen::VectorXd> cols;
    for (const auto& m : samples.chains) cols.push_back(m.col(p));
    ParamDiagnostics d;
    d.name = samples.names[p];
    d.split_rhat = split_rhat(cols);
    d.ess = effective_sample_size(cols);
    out.push_back(std::move(d));
  }
  return out;
}

double max_rhat(const std::vector<ParamDiagnostics>& diags) {
  double worst = 0.0;
  for (const auto& d : diags)
    if (std::isfinite(d.split_rhat)) worst = std::max(worst, d.split_rhat);
  return worst;
}

void check_convergence(const PosteriorSamples& samples, double rhat_limit) {
  const auto diags = diagnostics(samples);
  const ParamDiagnostics* worst = nullptr;
  for (const auto& d : diags)
    if (std::isfinite(d.split_rhat) && d.split_rhat > rhat_limit &&
        (!worst || d.split_rhat > worst->split_rhat))
      worst = &d;
  if (worst) {
    std::ostringstream os;
    os << "chains not converged: split-Rhat of " << worst->name << " is " << worst->split_rhat
       << " (limit " << rhat_limit << ")";
    throw ConvergenceError(os.str());
  }
}

// ---------------------------------------------------------------------------
// serialization

void write_posterior_csv(const std::string& path, const PosteriorSamples& samples) {
  std::ostringstream os;
  os << "chain,draw";
  for (const auto& n : samples.names) os << "," << n;
  os << "\n";
  for (int c = 0; c < samples.n_chains(); ++c)
    for (int t = 0; t < samples.n_draws(); ++t) {
      os << c << "," << t;
      for (int p = 0; p < samples.n_params(); ++p)
        os << "," << format_double(samples.chains[c](t, p));
      os << "\n";
    }
  write_text_file(path, os.str());
}

PosteriorSamples read_posterior_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.empty()) throw DataError(path + ":1: missing header");
  auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "chain" || header[1] != "draw")
    throw DataError(path + ":1: expected chain,draw,<parameters...> header");

  PosteriorSamples out;
  out.names.assign(header.begin() + 2, header.end());
  const int n_params = static_cast<int>(out.names.size());

  std::vector<std::vector<Eigen::VectorXd>> rows;  // [chain][draw]
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split_csv(line);
    if (static_cast<int>(fields.size()) != n_params + 2)
      throw DataError(path + ":" + std::to_string(line_no) + ": wrong field count");
    const int chain = std::stoi(fields[0]);
    if (chain < 0 || chain > 1000) throw DataError(path + ": implausible chain index");
    if (static_cast<int>(rows.size()) <= chain) rows.resize(chain + 1);
    Eigen::VectorXd row(n_params);
    for (int p = 0; p < n_params; ++p) row[p] = std::stod(fields[p + 2]);
    rows[chain].push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no draws");
  const std::size_t n_draws = rows[0].size();
  for (const auto& r : rows)
    if (r.size() != n_draws) throw DataError(path + ": chains have unequal draw counts");
  for (const auto& r : rows) {
    Eigen::MatrixXd m(n_draws, n_params);
    for (std::size_t t = 0; t < n_draws; ++t) m.row(t) = r[t].transpose();
    out.chains.push_back(std::move(m));
  }

  // Model kind and dimensions are recoverable from the column names.
  out.model_kind = ModelKind::univariate;
  int n_ind = 0;
  for (const auto& n : out.names) {
    if (n.rfind("R[", 0) == 0) out.model_kind = ModelKind::multivariate;
    if (n.rfind("hyper.s_mu[", 0) == 0) ++n_ind;
    if (n.rfind("mu[", 0) == 0) {
      const auto close = n.find(']');
      const int sid = std::stoi(n.substr(3, close - 3));
      if (out.segment_ids.empty() || out.segment_ids.back() != sid)
        out.segment_ids.push_back(sid);
    }
  }
  out.n_indicators = n_ind;
  return out;
}

// ---------------------------------------------------------------------------
// generic componentwise kernel

int rw_metropolis_sweep(const std::function<double(const Eigen::VectorXd&)>& log_density,
                        Eigen::VectorXd& x, double& cached_logdens,
                        const Eigen::VectorXd& scales, Rng& rng) {
  int accepted = 0;
  for (int j = 0; j < x.size(); ++j) {
    const double cur = x[j];
    x[j] = cur + scales[j] * rng.normal();
    const double prop_ld = log_density(x);
    if (std::isfinite(prop_ld) && std::log(rng.uniform_pos()) < prop_ld - cached_logdens) {
      cached_logdens = prop_ld;
      ++accepted;
    } else {
      x[j] = cur;
    }
  }
  return accepted;
}

}  // namespace trackdeg
