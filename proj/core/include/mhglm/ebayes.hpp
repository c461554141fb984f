#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mhglm/family.hpp"
#include "mhglm/group_fit.hpp"
#include "mhglm/moment.hpp"

namespace mhglm {

struct Posterior {
  std::string group_id;
  VectorXd mean;  ///< q
  MatrixXd cov;   ///< q x q, PSD
};

/// Empirical Bayes posteriors, ascending group_id.
struct PosteriorSet {
  std::vector<Posterior> groups;

  /// nullptr when the id is not present.
  const Posterior* find(const std::string& id) const;
};

/// Gaussian-approximation posterior of u given the group summary, with
///   C    = S^1/2 (phi I + S^1/2 V2 D^2 V2' S^1/2)^-1 S^1/2
///   cov  = phi C
///   mean = C V2 D^2 (theta_rot - V1' beta)
/// which equals S V2 (V2' S V2 + phi D^-2)^-1 (theta_rot - V1' beta) and is
/// well defined for singular S. With phi <= 0 the noiseless limit is used:
/// mean = S V2 (V2' S V2)^+ (theta_rot - V1' beta), cov = 0.
Posterior posterior(const GroupSummary& summary, const VectorXd& beta, const MatrixXd& sigma, double phi);

/// Posteriors for every summarized group of a fit, reported in original units.
PosteriorSet posteriors(const MomentFit& fit, unsigned threads = 1);

/// mu = g^-1(X beta + Z u).
VectorXd predict_mean(const MatrixXd& X_new, const MatrixXd& Z_new, const VectorXd& beta, const VectorXd& u,
                      const Family& family);

struct GroupPrediction {
  VectorXd mu;
  bool unseen = false;  ///< true when the group has no posterior; u = 0 was used
};

/// Group-matched prediction; unknown groups fall back to the population mean
/// (u = 0) and are flagged.
GroupPrediction predict_group(const PosteriorSet& post, const std::string& group_id, const MatrixXd& X_new,
                              const MatrixXd& Z_new, const VectorXd& beta, const Family& family);

}  // namespace mhglm
