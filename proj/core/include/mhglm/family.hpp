#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace mhglm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class FamilyKind { Gaussian, Binomial };

/// Response family with its canonical link: gaussian-identity or
/// binomial-logit. Mean-range clamping to [1e-10, 1 - 1e-10] applies to the
/// binomial variance and working weight.
class Family {
 public:
  static Family gaussian() { return Family(FamilyKind::Gaussian); }
  static Family binomial() { return Family(FamilyKind::Binomial); }
  /// Accepts "gaussian" and "logit"/"binomial". Throws InvalidInput otherwise.
  static Family from_name(std::string_view name);

  FamilyKind kind() const noexcept { return kind_; }
  std::string name() const;
  bool dispersion_known() const noexcept { return kind_ == FamilyKind::Binomial; }
  /// Known dispersion value (1 for binomial); meaningful only if dispersion_known().
  double known_dispersion() const noexcept { return 1.0; }

  double link(double mu) const;
  double inverse_link(double eta) const;
  double variance(double mu) const;
  /// (dmu/deta)^2 / V(mu)
  double working_weight(double mu) const;
  bool in_support(double y) const;

  VectorXd inverse_link(const VectorXd& eta) const;

  bool operator==(const Family&) const = default;

 private:
  explicit Family(FamilyKind k) : kind_(k) {}
  FamilyKind kind_;
};

inline constexpr double kMuClamp = 1e-10;

struct GlmOptions {
  bool firth = true;
  double tol = 1e-8;
  int max_iter = 25;
};

struct GlmFit {
  VectorXd coef;
  VectorXd fitted_mean;
  bool converged = false;
  int iterations = 0;
  double deviance = 0.0;
};

/// IRLS fit of y on the full-column-rank design F0 starting from coef = 0.
/// The gaussian family is solved exactly by least squares. For the binomial
/// family with options.firth set, maximizes the Jeffreys-penalized likelihood
/// l(b) + 0.5 log det(F0' W F0) with a step-halving Newton iteration on the
/// modified score F0'(y - mu + h (1/2 - mu)), h the hat values.
///
/// Throws InvalidInput for rank-deficient F0, mismatched sizes, or responses
/// outside the family's support; ConvergenceError after max_iter iterations.
GlmFit fit_glm(const VectorXd& y, const MatrixXd& F0, const Family& family, const GlmOptions& options = {});
GlmFit fit_glm(const VectorXd& y, const MatrixXd& F0, const Family& family, bool firth, double tol,
               int max_iter);

/// Jeffreys-penalized binomial log-likelihood; exposed for diagnostics.
double penalized_loglik(const VectorXd& y, const MatrixXd& F0, const VectorXd& coef);

/// Pearson statistic sum (y - mu)^2 / V(mu) over n - r degrees of freedom.
/// Returns nullopt when n <= r.
std::optional<double> pearson_dispersion(const VectorXd& y, const VectorXd& mu, const Family& family, Index r);

/// F0' diag(lambda(mu)) F0. Throws DegeneratePrecision when the smallest
/// eigenvalue is at or below eps * largest.
MatrixXd unscaled_precision(const MatrixXd& F0, const VectorXd& mu, const Family& family);

}  // namespace mhglm
