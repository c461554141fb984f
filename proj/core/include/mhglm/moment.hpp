#pragma once

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "mhglm/dataset.hpp"
#include "mhglm/family.hpp"
#include "mhglm/group_fit.hpp"
#include "mhglm/linalg.hpp"

namespace mhglm {

// Weight schemes -------------------------------------------------------------

/// W_i = I
struct Unweighted {};
/// W_i = D_i^2
struct PrecisionWeighted {};
/// W_i = (V2' S0 V2 + D_i^-2)^-1 for a PD q x q matrix S0. An empty matrix
/// stands for the identity.
struct SemiWeighted {
  MatrixXd sigma0;
};
/// W_i = (V2' (Sigma / phi) V2 + D_i^-2)^-1, the risk-minimizing weights for
/// known Sigma and phi > 0.
struct OptimalWeights {
  MatrixXd sigma;
  double phi = 1.0;
};

using WeightSpec = std::variant<Unweighted, PrecisionWeighted, SemiWeighted, OptimalWeights>;

std::string scheme_name(const WeightSpec& spec);

/// Throws InvalidInput when S0 is not symmetric PD (min eigenvalue >= eps_floor),
/// Sigma is not PSD, phi <= 0, or dimensions disagree with q.
void validate(const WeightSpec& spec, Index q, double eps_floor = 1e-8);

/// One r_i x r_i symmetric PD weight matrix per summary, in summary order.
std::vector<MatrixXd> make_weights(const SummarySet& set, const WeightSpec& spec, unsigned threads = 1);

// Moment estimators ----------------------------------------------------------

struct FixedEffects {
  VectorXd beta;
  MatrixXd omega;  ///< sum_i V1 W V1'
};

/// beta = Omega^-1 sum_i V1 W theta_rot. Throws SingularOperator when
/// min eig(Omega) <= eps_sing * max eig(Omega); the near-null direction is in R^p.
FixedEffects fixed_effects(const SummarySet& set, const std::vector<MatrixXd>& weights, double eps_sing = 1e-12);

/// A(b) = sum_i V2 W e e' W V2' with e = theta_rot - V1' b.
MatrixXd ahat(const SummarySet& set, const std::vector<MatrixXd>& weights, const VectorXd& b);

/// Omega2 = sum_i (V2 W V2') (x) (V2 W V2') in reduced symmetric coordinates,
/// factorized, together with the bias matrix B solving
/// Omega2 vec(B) = vec(sum_i V2 W D^-2 W V2').
struct Omega2Bias {
  SymKroneckerSum omega2;
  SymSolver solver;
  MatrixXd bias;
};

/// Throws SingularOperator when Omega2 is singular on symmetric matrices.
Omega2Bias omega2_and_bias(const SummarySet& set, const std::vector<MatrixXd>& weights, double eps_sing = 1e-12);

/// S(b) = Omega2^-1 A(b) on symmetric matrices.
MatrixXd s_hat(const SummarySet& set, const std::vector<MatrixXd>& weights, const Omega2Bias& om, const VectorXd& b);

struct SigmaEstimate {
  MatrixXd raw;        ///< S(beta) - phi B
  MatrixXd projected;  ///< PSD projection of raw
  bool was_projected = false;
};

SigmaEstimate sigma_hat(const SummarySet& set, const std::vector<MatrixXd>& weights, const Omega2Bias& om,
                        const VectorXd& beta, double phi);

// Standardization ------------------------------------------------------------

/// Per-column divisors applied to X and Z. Columns that are constant keep a
/// scale of 1; all-zero columns are also left at 1 and flagged.
struct ScaleRecord {
  VectorXd x_scale;
  VectorXd z_scale;
  std::vector<bool> x_zero;
  std::vector<bool> z_zero;

  static ScaleRecord identity(Index p, Index q);
  bool is_identity() const;

  VectorXd beta_to_original(const VectorXd& beta_std) const;
  VectorXd beta_to_standard(const VectorXd& beta) const;
  VectorXd u_to_original(const VectorXd& u_std) const;
  MatrixXd sigma_to_original(const MatrixXd& sigma_std) const;
  MatrixXd sigma_to_standard(const MatrixXd& sigma) const;
};

/// Divides each non-constant column of the stacked X and Z by its root mean
/// square over all observations (accumulated in ascending group-id order).
std::pair<GroupedDataset, ScaleRecord> standardize(const GroupedDataset& data);

// Full procedure -------------------------------------------------------------

struct MomentConfig {
  /// First-pass weights; the default is semi-weights with S0 = I.
  WeightSpec initial = SemiWeighted{};
  /// Semi-weighted refits using the previous Sigma / phi as S0.
  int refits = 1;
  SummaryOptions summary{};
  double eps_floor = 1e-8;
  double eps_sing = 1e-12;
  double phi_floor = 1e-12;
  bool standardize = true;
  unsigned threads = 1;
};

/// Population estimates. beta, sigma_raw and sigma are in the original
/// predictor units; omega, bias_B, the *_std fields and `summaries` are in the
/// standardized frame.
struct MomentFit {
  VectorXd beta;
  MatrixXd sigma_raw;
  MatrixXd sigma;
  double phi = 0.0;
  MatrixXd omega;
  double omega2_min_eig = 0.0;
  Index rho = 0;
  MatrixXd bias_B;
  bool projected = false;
  int steps = 0;
  std::string scheme;
  ScaleRecord scale_record;

  VectorXd beta_std;
  MatrixXd sigma_std;
  SummarySet summaries;
};

/// Weights, estimates, projection and optional refits on an existing summary
/// set. The result's scale record is the identity.
MomentFit fit_moment(const SummarySet& set, const MomentConfig& config = {});

/// Standardize, summarize, combine, refit, back-transform.
MomentFit fit_moment(const GroupedDataset& data, const Family& family, const MomentConfig& config = {});

// Diagnostics ----------------------------------------------------------------

/// Per-group largest eigenvalue of W^1/2 (V2' Sigma V2 + phi D^-2) W^1/2.
std::vector<double> kappa_check(const std::vector<MatrixXd>& weights, const MatrixXd& sigma, double phi,
                                const SummarySet& set);

/// Bounding constant for the scheme:
///   unweighted      ||Sigma|| + phi max_i ||D_i^-2||
///   weighted        ||Sigma|| max_i ||D_i^2|| + phi
///   semi-weighted   ||S0^-1 Sigma|| + phi
///   optimal         phi
double kappa_bound(const WeightSpec& spec, const MatrixXd& sigma, double phi, const SummarySet& set);

}  // namespace mhglm
