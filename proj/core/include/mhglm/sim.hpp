#pragma once

#include <cstdint>
#include <initializer_list>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "mhglm/dataset.hpp"
#include "mhglm/ebayes.hpp"
#include "mhglm/family.hpp"
#include "mhglm/moment.hpp"

namespace mhglm::sim {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

using Rng = std::mt19937_64;

/// Independent generator for the stream identified by (seed, path...). The
/// path components are mixed through std::seed_seq, so streams for different
/// replicates or groups do not depend on the order they are created in.
Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path);

struct SimConfig {
  Index M = 1000;
  Index N = 10000;
  Index p = 5;
  Index q = 5;
  Family family = Family::binomial();
  /// Residual standard deviation of the gaussian variant.
  double noise_sd = 1.0;
};

struct SimTruth {
  VectorXd beta;
  MatrixXd Sigma;
  std::vector<std::string> ids;  ///< one per group, including empty groups
  std::vector<VectorXd> u;
  std::vector<Index> n_alloc;
  std::vector<VectorXd> mu;  ///< true means, in dataset row order
};

/// beta_k ~ t(4); Sigma = 0.1 * InvWishart(I, 2q); group sizes are a
/// multinomial allocation of N with probabilities proportional to
/// exponential rates of mean N / M; u_i ~ N(0, Sigma); x and z entries are
/// +-1 with probability 1/2; y ~ Bernoulli(logit^-1(x'beta + z'u)) or, for
/// the gaussian family, N(x'beta + z'u, noise_sd^2). Groups that receive no
/// observations appear only in the truth.
std::pair<GroupedDataset, SimTruth> gen_replicate(const SimConfig& config, std::uint64_t seed);

/// Draws 0.1 * InvWishart(I, dof) via the Bartlett decomposition.
MatrixXd draw_sigma(Rng& rng, Index q, double dof, double scale = 0.1);

/// Zero-padded id so that lexical order equals numeric order.
std::string group_label(Index i, Index M);

struct LossRecord {
  double fixed_loss = 0.0;
  std::optional<double> cov_loss;  ///< absent when Sigma is singular
  double raneff_loss = 0.0;
  double pred_loss = 0.0;
  double seconds = 0.0;
};

/// Per-observation prediction loss against the true means: twice the mean
/// Bernoulli KL divergence for binomial, mean squared linear-predictor error
/// for gaussian.
double prediction_loss(const std::vector<VectorXd>& mu_true, const std::vector<VectorXd>& eta_hat, const Family& family);

/// Linear predictors for the dataset's groups (dataset order).
std::vector<VectorXd> linear_predictors(const GroupedDataset& data, const VectorXd& beta, const PosteriorSet& post);

/// Fixed-effect, covariance, random-effect and prediction losses. Groups
/// without a posterior use u_hat = 0.
LossRecord losses(const GroupedDataset& data, const SimTruth& truth, const MomentFit& fit, const PosteriorSet& post,
                  const Family& family);

/// Pooled Firth GLM on the stacked fixed-effect design.
VectorXd fit_global(const GroupedDataset& data, const Family& family, const GlmOptions& options = {});

struct LocalFit {
  std::string group_id;
  std::optional<VectorXd> coef;  ///< (p + q); absent when the group fit failed
};

/// Independent per-group Firth fits through the group summary machinery.
std::vector<LocalFit> fit_local(const GroupedDataset& data, const Family& family, const SummaryOptions& options = {});

enum class Method { Mhglm, Global, Local };
std::string method_name(Method m);
Method method_from_name(const std::string& name);

struct StudyConfig {
  std::vector<Index> N_grid{100, 1000, 10000};
  Index M = 100;
  Index p = 3;
  Index q = 3;
  int replicates = 10;
  Family family = Family::binomial();
  std::vector<Method> methods{Method::Mhglm, Method::Global, Method::Local};
  std::uint64_t seed = 1;
  unsigned threads = 1;
  MomentConfig moment{};
};

struct ReplicateRecord {
  Method method;
  Index N;
  int replicate;
  std::optional<LossRecord> loss;  ///< absent when the fit failed
  std::string error;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
  double median = 0.0;
  int count = 0;
};

struct StudyRow {
  Method method;
  Index N;
  int ok = 0;
  int failed = 0;
  MetricSummary fixed_loss;
  MetricSummary cov_loss;
  MetricSummary raneff_loss;
  MetricSummary pred_loss;
  MetricSummary seconds;
};

struct StudyResult {
  std::vector<StudyRow> rows;  ///< ordered by N, then method order
  std::vector<ReplicateRecord> records;
};

/// Replicate study. Replicate r at grid position k draws its data from stream
/// (seed, k, r), so results are independent of the thread count. Baselines do
/// not estimate Sigma or u; their fixed-effect loss is reported for the global
/// fit only, the other losses are left empty (count 0).
StudyResult run_study(const StudyConfig& config);

MetricSummary summarize_metric(std::vector<double> values);

struct BinRate {
  std::size_t lo = 0;  ///< inclusive
  std::size_t hi = 0;  ///< exclusive
  std::size_t groups = 0;
  double mean = 0.0;
  double se = 0.0;
};

/// Per-group misclassification rates (predict 1 when mu_hat >= 1/2, response
/// counted as 1 when y >= 1/2), averaged over groups whose size falls in
/// [edges[k], edges[k+1]). Groups with no observations are ignored.
std::vector<BinRate> misclass_by_group_size(const std::vector<double>& mu_hat, const std::vector<double>& y,
                                            const std::vector<std::size_t>& group_of_obs,
                                            const std::vector<std::size_t>& group_sizes,
                                            const std::vector<std::size_t>& edges);

}  // namespace mhglm::sim
