// Prior and hyperprior densities and samplers: half-normal drifts and
// marginal standard deviations, log-normal post-maintenance states, and the
// LKJ distribution over correlation matrices.
//
// The LKJ code works through canonical partial correlations (the C-vine
// parameterization): under LKJ(eta) in dimension d, the partial correlation
// at tree level l (conditioning set {1..l-1}) is an independent symmetric
// Beta on (-1, 1) with shape eta + (d - 1 - l)/2. This gives both an exact
// sampler and the change-of-variables machinery the MCMC proposals need.
#pragma once

#include "trackdeg/rng.hpp"

#include <Eigen/Dense>

#include <vector>

namespace trackdeg {

// Global scale/location parameters of the per-segment priors.
struct Hyperparams {
  Eigen::VectorXd s_mu;     // half-normal scales for drift, > 0
  Eigen::VectorXd s_sigma;  // half-normal scales for marginal sd, > 0
  Eigen::VectorXd m_z;      // log-normal location (log space) for zplus
  Eigen::VectorXd s_z;      // log-normal scale for zplus, > 0
  double eta = 1.0;         // LKJ shape, fixed

  int n_indicators() const { return static_cast<int>(s_mu.size()); }
  void validate() const;
};

struct UniformRange {
  double a = 0.0;
  double b = 1.0;
};

// Hyperprior families, one entry per indicator. Defaults follow the
// weakly-informative choices used for the track models:
//   s_mu, s_sigma ~ U(0, 10); m_z ~ LogNormal(2.3, 1); s_z ~ U(0, 2); eta = 1.
struct HyperpriorConfig {
  std::vector<UniformRange> s_mu_range;
  std::vector<UniformRange> s_sigma_range;
  Eigen::VectorXd m_z_location;  // M_z
  Eigen::VectorXd m_z_scale;     // S_z, > 0
  std::vector<UniformRange> s_z_range;
  double eta_fixed = 1.0;

  static HyperpriorConfig defaults(int n_indicators);
  int n_indicators() const { return static_cast<int>(s_mu_range.size()); }
  void validate() const;
};

// Half-normal with scale parameter: density 2*phi(x/scale)/scale on x >= 0.
double halfnormal_logpdf(double x, double scale);
double halfnormal_sample(double scale, Rng& rng);

// Log-normal located by the mean m and sd s of log(x); median exp(m).
double lognormal_logpdf(double x, double m, double s);
double lognormal_sample(double m, double s, Rng& rng);

double normal_logpdf(double x, double mean, double sd);
double uniform_logpdf(double x, const UniformRange& range);

// log Beta function.
double log_beta_fn(double a, double b);

// Number of strictly-upper-triangular entries of a d x d matrix.
inline int n_pairs(int dim) { return dim * (dim - 1) / 2; }

// Shape of the symmetric Beta on (-1,1) governing the CPC at tree level
// `level` (1-based) for LKJ(eta) in dimension dim.
double lkj_cpc_shape(int dim, int level, double eta);

// Tree level (1-based) of the j-th packed CPC; packing is row-major over the
// strict upper triangle: (1,2),(1,3),...,(1,d),(2,3),...
int cpc_level(int dim, int pack_index);

// Log-density of the symmetric scaled Beta(shape, shape) on (-1, 1).
double scaled_beta_logpdf(double p, double shape);

// Correlation matrix from packed canonical partial correlations, and back.
Eigen::MatrixXd corr_from_partials(const Eigen::VectorXd& partials, int dim);
Eigen::VectorXd partials_from_corr(const Eigen::MatrixXd& correlation);

// log c_d(eta): the LKJ normalizing constant, closed form.
double lkj_log_normalizer(int dim, double eta);

// log p(R) = log c_d + (eta - 1) log|R|; -inf outside the space of valid
// correlation matrices. Throws on non-square or non-unit-diagonal input.
double lkj_logpdf(const Eigen::MatrixXd& correlation, double eta);

// Draws a correlation matrix from LKJ(eta) via the C-vine construction.
Eigen::MatrixXd lkj_sample(int dim, double eta, Rng& rng);

// Draws every hyperparameter from its hyperprior family.
Hyperparams sample_hyperparams(const HyperpriorConfig& config, Rng& rng);

// Log hyperprior density of a hyperparameter assignment; -inf off support.
double hyperparams_logpdf(const Hyperparams& hyper, const HyperpriorConfig& config);

}  // namespace trackdeg
