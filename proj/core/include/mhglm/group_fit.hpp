#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "mhglm/dataset.hpp"
#include "mhglm/family.hpp"
#include "mhglm/linalg.hpp"

namespace mhglm {

/// Sufficient statistics of one group after reducing [X Z] to its row space.
///
/// The group design factors as F = F0 V^T with V = [V1; V2] orthonormal
/// (p + q) x r and F0 = U D of full column rank. theta_rot is the group
/// coefficient estimate in F0 coordinates, so the full-space estimate is
/// V * theta_rot; precision is the plug-in unscaled precision of theta_rot.
struct GroupSummary {
  std::string group_id;
  Index n = 0;
  Index r = 0;
  MatrixXd V1;         ///< p x r
  MatrixXd V2;         ///< q x r
  VectorXd theta_rot;  ///< r
  MatrixXd precision;  ///< r x r, symmetric PD
  std::optional<double> dispersion;

  VectorXd theta_full() const;
};

struct SkippedGroup {
  std::string group_id;
  std::string reason;
};

struct SummarySet {
  std::vector<GroupSummary> summaries;  ///< ascending group_id
  Index p = 0;
  Index q = 0;
  double pooled_dispersion = 0.0;
  Index rho = 0;  ///< sum of ranks over summarized groups
  Index N = 0;    ///< observations in summarized groups
  std::vector<SkippedGroup> skipped;
};

struct SummaryOptions {
  double rank_tol = kMachineEps;
  GlmOptions glm{};
};

/// Reduces one group's data to a GroupSummary. Binomial groups are fitted with
/// the Firth-penalized likelihood unless options.glm.firth is false.
/// Throws NumericalError when the design has rank 0 or the group fit fails;
/// InvalidInput on malformed data.
GroupSummary summarize_group(const std::string& id, const VectorXd& y, const MatrixXd& X, const MatrixXd& Z,
                             const Family& family, const SummaryOptions& options = {});

/// (n_i - r_i)-weighted average of the group dispersions, or the family's
/// known dispersion. Throws DispersionError if no group contributes.
double pool_dispersion(const std::vector<GroupSummary>& summaries, const Family& family);

/// Summarizes every group (in parallel when threads > 1), sorts by id and
/// attaches pooled dispersion. Groups whose fit fails numerically are listed
/// in `skipped` and excluded from all sums.
SummarySet build_summary_set(const GroupedDataset& data, const Family& family, const SummaryOptions& options = {},
                             unsigned threads = 1);

}  // namespace mhglm
