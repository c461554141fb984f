#include "mhglm/family.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "mhglm/error.hpp"
#include "mhglm/linalg.hpp"

namespace mhglm {

Family Family::from_name(std::string_view name) {
  if (name == "gaussian") return gaussian();
  if (name == "logit" || name == "binomial") return binomial();
  throw InvalidInput("unknown family '" + std::string(name) + "' (expected gaussian or logit)");
}

std::string Family::name() const { return kind_ == FamilyKind::Gaussian ? "gaussian" : "logit"; }

namespace {

double clamp_mu(double mu) { return std::clamp(mu, kMuClamp, 1.0 - kMuClamp); }

double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  const double e = std::exp(eta);
  return e / (1.0 + e);
}

}  // namespace

double Family::link(double mu) const {
  if (kind_ == FamilyKind::Gaussian) return mu;
  return std::log(mu) - std::log1p(-mu);
}

double Family::inverse_link(double eta) const { return kind_ == FamilyKind::Gaussian ? eta : expit(eta); }

VectorXd Family::inverse_link(const VectorXd& eta) const {
  if (kind_ == FamilyKind::Gaussian) return eta;
  return eta.unaryExpr([](double e) { return expit(e); });
}

double Family::variance(double mu) const {
  if (kind_ == FamilyKind::Gaussian) return 1.0;
  const double m = clamp_mu(mu);
  return m * (1.0 - m);
}

double Family::working_weight(double mu) const {
  // Canonical links: (dmu/deta)^2 / V = V.
  return variance(mu);
}

bool Family::in_support(double y) const {
  if (!std::isfinite(y)) return false;
  return kind_ == FamilyKind::Gaussian || (y >= 0.0 && y <= 1.0);
}

// ---------------------------------------------------------------------------

namespace {

void check_inputs(const VectorXd& y, const MatrixXd& F0, const Family& family) {
  if (F0.rows() < 1 || F0.cols() < 1) throw InvalidInput("fit_glm: design must have n >= 1 and r >= 1");
  if (y.size() != F0.rows()) throw InvalidInput("fit_glm: response length does not match design rows");
  if (!F0.allFinite()) throw InvalidInput("fit_glm: non-finite design entries");
  for (Index j = 0; j < y.size(); ++j)
    if (!family.in_support(y(j))) throw InvalidInput("fit_glm: response outside family support");
  if (F0.cols() > F0.rows()) throw InvalidInput("fit_glm: design is rank deficient (r > n)");
  Eigen::ColPivHouseholderQR<MatrixXd> qr(F0);
  if (qr.rank() < F0.cols()) throw InvalidInput("fit_glm: design is rank deficient; reduce it with compact_svd");
}

double binomial_deviance(const VectorXd& y, const VectorXd& mu) {
  double dev = 0.0;
  for (Index j = 0; j < y.size(); ++j) {
    const double m = clamp_mu(mu(j));
    if (y(j) > 0.0) dev += y(j) * std::log(y(j) / m);
    if (y(j) < 1.0) dev += (1.0 - y(j)) * std::log((1.0 - y(j)) / (1.0 - m));
  }
  return 2.0 * dev;
}

struct LogitState {
  VectorXd mu;
  VectorXd w;
  Eigen::LLT<MatrixXd> info;
  double objective = 0.0;
  bool ok = false;
};

LogitState logit_state(const VectorXd& y, const MatrixXd& F0, const VectorXd& coef, bool firth) {
  LogitState s;
  const VectorXd eta = F0 * coef;
  s.mu = eta.unaryExpr([](double e) { return expit(e); });
  s.w = s.mu.unaryExpr([](double m) {
    const double c = clamp_mu(m);
    return c * (1.0 - c);
  });
  const MatrixXd info = F0.transpose() * s.w.asDiagonal() * F0;
  s.info.compute(info);
  if (s.info.info() != Eigen::Success) return s;
  double ll = 0.0;
  for (Index j = 0; j < y.size(); ++j) {
    // log-likelihood y*eta - log(1 + e^eta), stable form
    const double e = eta(j);
    const double softplus = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(j) * e - softplus;
  }
  if (firth) ll += s.info.matrixLLT().diagonal().array().log().sum();  // 0.5 * log det
  s.objective = ll;
  s.ok = std::isfinite(ll);
  return s;
}

// Newton step on the modified score U = F'(y - mu + h (1/2 - mu)). With
// c = 1/2 - mu, g_j = L^-1 f_j (I = L L') and G = sum_j c_j w_j f_j (g_j (x) g_j)',
// the exact Jacobian is
//   J = -F' diag((1 + h) w) F + F' diag(2 c^2 h) F - 2 G G'.
// Falls back to the pseudo-data step ((1 + h) w weights, h held fixed) when
// -J is not positive definite.
VectorXd firth_newton_step(const MatrixXd& F0, const LogitState& state, const VectorXd& h, const MatrixXd& L_inv_Ft,
                           const VectorXd& score) {
  const Index n = F0.rows();
  const Index r = F0.cols();
  const VectorXd c = (0.5 - state.mu.array()).matrix();
  const VectorXd aug = state.w.cwiseProduct((1.0 + h.array()).matrix());

  MatrixXd G = MatrixXd::Zero(r, r * r);
  VectorXd gg(r * r);
  VectorXd t1(n);
  for (Index j = 0; j < n; ++j) {
    const auto g = L_inv_Ft.col(j);
    for (Index a = 0; a < r; ++a) gg.segment(a * r, r) = g(a) * g;
    G.noalias() += (c(j) * state.w(j)) * F0.row(j).transpose() * gg.transpose();
    t1(j) = aug(j) - 2.0 * c(j) * c(j) * h(j);
  }
  MatrixXd negJ = F0.transpose() * t1.asDiagonal() * F0;
  negJ.noalias() += 2.0 * G * G.transpose();
  negJ = 0.5 * (negJ + negJ.transpose());

  Eigen::LLT<MatrixXd> llt(negJ);
  if (llt.info() == Eigen::Success) {
    VectorXd step = llt.solve(score);
    if (step.allFinite()) return step;
  }
  return (F0.transpose() * aug.asDiagonal() * F0).llt().solve(score);
}

}  // namespace

double penalized_loglik(const VectorXd& y, const MatrixXd& F0, const VectorXd& coef) {
  const LogitState s = logit_state(y, F0, coef, true);
  if (!s.ok) return -std::numeric_limits<double>::infinity();
  return s.objective;
}

GlmFit fit_glm(const VectorXd& y, const MatrixXd& F0, const Family& family, bool firth, double tol,
               int max_iter) {
  return fit_glm(y, F0, family, GlmOptions{firth, tol, max_iter});
}

GlmFit fit_glm(const VectorXd& y, const MatrixXd& F0, const Family& family, const GlmOptions& options) {
  check_inputs(y, F0, family);
  GlmFit fit;

  if (family.kind() == FamilyKind::Gaussian) {
    Eigen::ColPivHouseholderQR<MatrixXd> qr(F0);
    fit.coef = qr.solve(y);
    fit.fitted_mean = F0 * fit.coef;
    fit.converged = true;
    fit.iterations = 1;
    fit.deviance = (y - fit.fitted_mean).squaredNorm();
    return fit;
  }

  constexpr double kMaxStep = 5.0;
  constexpr int kMaxHalvings = 30;
  const Index r = F0.cols();
  VectorXd coef = VectorXd::Zero(r);
  LogitState state = logit_state(y, F0, coef, options.firth);

  for (int iter = 0;; ++iter) {
    if (!state.ok) throw ConvergenceError("fit_glm: information matrix became singular", coef, iter);

    VectorXd resid = y - state.mu;
    VectorXd h = VectorXd::Zero(y.size());
    MatrixXd L_inv_Ft;
    if (options.firth) {
      // h_j = w_j f_j' I^{-1} f_j
      L_inv_Ft = state.info.matrixL().solve(F0.transpose());
      h = L_inv_Ft.colwise().squaredNorm().transpose().cwiseProduct(state.w);
      resid += h.cwiseProduct((0.5 - state.mu.array()).matrix());
    }
    const VectorXd score = F0.transpose() * resid;

    if (score.norm() <= options.tol) {
      fit.coef = coef;
      fit.fitted_mean = state.mu;
      fit.converged = true;
      fit.iterations = iter;
      fit.deviance = binomial_deviance(y, state.mu);
      return fit;
    }
    if (iter >= options.max_iter) {
      throw ConvergenceError("fit_glm: no convergence after " + std::to_string(options.max_iter) + " iterations",
                             coef, iter);
    }

    VectorXd delta;
    if (options.firth) {
      delta = firth_newton_step(F0, state, h, L_inv_Ft, score);
    } else {
      delta = state.info.solve(score);
    }
    const double biggest = delta.cwiseAbs().maxCoeff();
    if (biggest > kMaxStep) delta *= kMaxStep / biggest;

    LogitState next = logit_state(y, F0, coef + delta, options.firth);
    const double slack = 1e-12 * (1.0 + std::abs(state.objective));
    for (int k = 0; k < kMaxHalvings && (!next.ok || next.objective < state.objective - slack); ++k) {
      delta *= 0.5;
      next = logit_state(y, F0, coef + delta, options.firth);
    }
    coef += delta;
    state = std::move(next);
  }
}

std::optional<double> pearson_dispersion(const VectorXd& y, const VectorXd& mu, const Family& family, Index r) {
  const Index n = y.size();
  if (n <= r) return std::nullopt;
  double x2 = 0.0;
  for (Index j = 0; j < n; ++j) {
    const double d = y(j) - mu(j);
    x2 += d * d / family.variance(mu(j));
  }
  return x2 / static_cast<double>(n - r);
}

MatrixXd unscaled_precision(const MatrixXd& F0, const VectorXd& mu, const Family& family) {
  MatrixXd P;
  if (family.kind() == FamilyKind::Gaussian) {
    P = F0.transpose() * F0;
  } else {
    const VectorXd lambda = mu.unaryExpr([&](double m) { return family.working_weight(m); });
    P = F0.transpose() * lambda.asDiagonal() * F0;
  }
  P = 0.5 * (P + P.transpose());
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(P, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues()(0);
  const double hi = es.eigenvalues()(es.eigenvalues().size() - 1);
  if (!(hi > 0.0) || lo <= kMachineEps * hi) throw DegeneratePrecision("unscaled_precision: precision matrix is singular");
  return P;
}

}  // namespace mhglm
