#include "trackdeg/priors.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace trackdeg {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}  // namespace

void Hyperparams::validate() const {
  const int d = n_indicators();
  if (s_sigma.size() != d || m_z.size() != d || s_z.size() != d)
    throw std::invalid_argument("Hyperparams: dimension mismatch");
  if ((s_mu.array() <= 0.0).any() || (s_sigma.array() <= 0.0).any() ||
      (s_z.array() <= 0.0).any() || eta <= 0.0)
    throw std::invalid_argument("Hyperparams: scale parameters and eta must be positive");
}

HyperpriorConfig HyperpriorConfig::defaults(int n_indicators) {
  HyperpriorConfig c;
  c.s_mu_range.assign(n_indicators, {0.0, 10.0});
  c.s_sigma_range.assign(n_indicators, {0.0, 10.0});
  c.m_z_location = Eigen::VectorXd::Constant(n_indicators, 2.3);
  c.m_z_scale = Eigen::VectorXd::Constant(n_indicators, 1.0);
  c.s_z_range.assign(n_indicators, {0.0, 2.0});
  c.eta_fixed = 1.0;
  return c;
}

void HyperpriorConfig::validate() const {
  const int d = n_indicators();
  if (static_cast<int>(s_sigma_range.size()) != d ||
      static_cast<int>(s_z_range.size()) != d || m_z_location.size() != d ||
      m_z_scale.size() != d)
    throw std::invalid_argument("HyperpriorConfig: dimension mismatch");
  // a == b is allowed and treated as a point mass.
  auto check = [](const UniformRange& r, const char* what) {
    if (!std::isfinite(r.a) || !std::isfinite(r.b) || r.a > r.b)
      throw std::invalid_argument(std::string("HyperpriorConfig: ") + what + " needs finite a <= b");
  };
  for (const auto& r : s_mu_range) check(r, "s_mu range");
  for (const auto& r : s_sigma_range) check(r, "s_sigma range");
  for (const auto& r : s_z_range) check(r, "s_z range");
  if ((m_z_scale.array() <= 0.0).any())
    throw std::invalid_argument("HyperpriorConfig: m_z scale must be positive");
  if (eta_fixed <= 0.0) throw std::invalid_argument("HyperpriorConfig: eta must be positive");
}

double halfnormal_logpdf(double x, double scale) {
  if (scale <= 0.0) throw std::invalid_argument("halfnormal_logpdf: scale must be positive");
  if (x < 0.0) return kNegInf;
  return std::log(2.0) - 0.5 * kLog2Pi - std::log(scale) - 0.5 * x * x / (scale * scale);
}

double halfnormal_sample(double scale, Rng& rng) {
  if (scale <= 0.0) throw std::invalid_argument("halfnormal_sample: scale must be positive");
  return scale * std::abs(rng.normal());
}

double lognormal_logpdf(double x, double m, double s) {
  if (s <= 0.0) throw std::invalid_argument("lognormal_logpdf: s must be positive");
  if (x <= 0.0) return kNegInf;
  const double lx = std::log(x);
  const double z = (lx - m) / s;
  return -lx - std::log(s) - 0.5 * kLog2Pi - 0.5 * z * z;
}

double lognormal_sample(double m, double s, Rng& rng) {
  if (s <= 0.0) throw std::invalid_argument("lognormal_sample: s must be positive");
  return std::exp(m + s * rng.normal());
}

double normal_logpdf(double x, double mean, double sd) {
  const double z = (x - mean) / sd;
  return -0.5 * kLog2Pi - std::log(sd) - 0.5 * z * z;
}

double uniform_logpdf(double x, const UniformRange& range) {
  if (range.a == range.b) return x == range.a ? 0.0 : kNegInf;  // point mass
  if (x < range.a || x > range.b) return kNegInf;
  return -std::log(range.b - range.a);
}

double log_beta_fn(double a, double b) {
  return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

double lkj_cpc_shape(int dim, int level, double eta) {
  return eta + 0.5 * static_cast<double>(dim - 1 - level);
}

int cpc_level(int dim, int pack_index) {
  int idx = pack_index;
  for (int row = 1; row < dim; ++row) {
    const int row_len = dim - row;
    if (idx < row_len) return row;
    idx -= row_len;
  }
  throw std::invalid_argument("cpc_level: pack index out of range");
}

double scaled_beta_logpdf(double p, double shape) {
  if (p <= -1.0 || p >= 1.0) return kNegInf;
  return (shape - 1.0) * std::log1p(-p * p) - log_beta_fn(shape, shape) -
         (2.0 * shape - 1.0) * std::log(2.0);
}

Eigen::MatrixXd corr_from_partials(const Eigen::VectorXd& partials, int dim) {
  if (partials.size() != n_pairs(dim))
    throw std::invalid_argument("corr_from_partials: wrong number of partial correlations");
  if ((partials.array().abs() >= 1.0).any())
    throw std::invalid_argument("corr_from_partials: partials must lie in (-1, 1)");
  // P(l, j): partial correlation of (l, j) given {0..l-1}, 0-based rows.
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(dim, dim);
  int idx = 0;
  for (int l = 0; l < dim - 1; ++l)
    for (int j = l + 1; j < dim; ++j) p(l, j) = partials[idx++];

  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(dim, dim);
  for (int j = 1; j < dim; ++j) r(0, j) = r(j, 0) = p(0, j);
  for (int l = 1; l < dim - 1; ++l) {
    for (int j = l + 1; j < dim; ++j) {
      double rho = p(l, j);
      for (int m = l - 1; m >= 0; --m)
        rho = rho * std::sqrt((1.0 - p(m, l) * p(m, l)) * (1.0 - p(m, j) * p(m, j))) +
              p(m, l) * p(m, j);
      r(l, j) = r(j, l) = rho;
    }
  }
  return r;
}

Eigen::VectorXd partials_from_corr(const Eigen::MatrixXd& correlation) {
  const int dim = static_cast<int>(correlation.rows());
  // p_work(l, j) holds the partial correlation given {0..l-1}; level 0 rows
  // are the raw correlations and each level strips one conditioning variable.
  std::vector<Eigen::MatrixXd> level(dim);
  level[0] = correlation;
  for (int l = 1; l < dim - 1; ++l) {
    level[l] = Eigen::MatrixXd::Zero(dim, dim);
    const Eigen::MatrixXd& prev = level[l - 1];
    const int c = l - 1;  // variable being conditioned out
    for (int i = l; i < dim; ++i) {
      for (int j = i + 1; j < dim; ++j) {
        const double den =
            std::sqrt((1.0 - prev(c, i) * prev(c, i)) * (1.0 - prev(c, j) * prev(c, j)));
        level[l](i, j) = (prev(i, j) - prev(c, i) * prev(c, j)) / den;
      }
    }
  }
  Eigen::VectorXd out(n_pairs(dim));
  int idx = 0;
  for (int l = 0; l < dim - 1; ++l)
    for (int j = l + 1; j < dim; ++j) out[idx++] = level[l](l, j);
  return out;
}

double lkj_log_normalizer(int dim, double eta) {
  if (dim < 2) throw std::invalid_argument("lkj_log_normalizer: dim must be >= 2");
  if (eta <= 0.0) throw std::invalid_argument("lkj_log_normalizer: eta must be positive");
  double log_z = 0.0;
  for (int level = 1; level <= dim - 1; ++level) {
    const double shape = lkj_cpc_shape(dim, level, eta);
    log_z += (dim - level) *
             ((2.0 * shape - 1.0) * std::log(2.0) + log_beta_fn(shape, shape));
  }
  return -log_z;
}

double lkj_logpdf(const Eigen::MatrixXd& correlation, double eta) {
  const int dim = static_cast<int>(correlation.rows());
  if (correlation.cols() != dim || dim < 2)
    throw std::invalid_argument("lkj_logpdf: need a square matrix of dimension >= 2");
  for (int i = 0; i < dim; ++i)
    if (std::abs(correlation(i, i) - 1.0) > 1e-9)
      throw std::invalid_argument("lkj_logpdf: diagonal must be 1");
  if ((correlation - correlation.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("lkj_logpdf: matrix must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(correlation);
  if (llt.info() != Eigen::Success) return kNegInf;
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return lkj_log_normalizer(dim, eta) + (eta - 1.0) * log_det;
}

Eigen::MatrixXd lkj_sample(int dim, double eta, Rng& rng) {
  if (dim < 2) throw std::invalid_argument("lkj_sample: dim must be >= 2");
  if (eta <= 0.0) throw std::invalid_argument("lkj_sample: eta must be positive");
  Eigen::VectorXd partials(n_pairs(dim));
  int idx = 0;
  for (int level = 1; level <= dim - 1; ++level) {
    const double shape = lkj_cpc_shape(dim, level, eta);
    for (int j = level + 1; j <= dim; ++j) partials[idx++] = 2.0 * rng.beta(shape, shape) - 1.0;
  }
  return corr_from_partials(partials, dim);
}

Hyperparams sample_hyperparams(const HyperpriorConfig& config, Rng& rng) {
  config.validate();
  const int d = config.n_indicators();
  Hyperparams h;
  h.s_mu.resize(d);
  h.s_sigma.resize(d);
  h.m_z.resize(d);
  h.s_z.resize(d);
  for (int q = 0; q < d; ++q) {
    h.s_mu[q] = rng.uniform(config.s_mu_range[q].a, config.s_mu_range[q].b);
    h.s_sigma[q] = rng.uniform(config.s_sigma_range[q].a, config.s_sigma_range[q].b);
    h.m_z[q] = lognormal_sample(config.m_z_location[q], config.m_z_scale[q], rng);
    h.s_z[q] = rng.uniform(config.s_z_range[q].a, config.s_z_range[q].b);
  }
  h.eta = config.eta_fixed;
  return h;
}

double hyperparams_logpdf(const Hyperparams& hyper, const HyperpriorConfig& config) {
  const int d = config.n_indicators();
  if (hyper.n_indicators() != d)
    throw std::invalid_argument("hyperparams_logpdf: dimension mismatch");
  double total = 0.0;
  for (int q = 0; q < d; ++q) {
    total += uniform_logpdf(hyper.s_mu[q], config.s_mu_range[q]);
    total += uniform_logpdf(hyper.s_sigma[q], config.s_sigma_range[q]);
    total += lognormal_logpdf(hyper.m_z[q], config.m_z_location[q], config.m_z_scale[q]);
    total += uniform_logpdf(hyper.s_z[q], config.s_z_range[q]);
  }
  return total;
}

}  // namespace trackdeg
