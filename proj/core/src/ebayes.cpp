#include "mhglm/ebayes.hpp"

#include <algorithm>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "mhglm/error.hpp"
#include "mhglm/linalg.hpp"
#include "mhglm/parallel.hpp"

namespace mhglm {

const Posterior* PosteriorSet::find(const std::string& id) const {
  auto it = std::lower_bound(groups.begin(), groups.end(), id,
                             [](const Posterior& p, const std::string& key) { return p.group_id < key; });
  if (it == groups.end() || it->group_id != id) return nullptr;
  return &*it;
}

Posterior posterior(const GroupSummary& s, const VectorXd& beta, const MatrixXd& sigma, double phi) {
  const Index q = s.V2.rows();
  Posterior out;
  out.group_id = s.group_id;
  out.mean = VectorXd::Zero(q);
  out.cov = MatrixXd::Zero(q, q);
  if (q == 0) return out;

  const VectorXd e = s.theta_rot - s.V1.transpose() * beta;
  if (phi <= 0.0) {
    const MatrixXd S = 0.5 * (sigma + sigma.transpose());
    const MatrixXd G = s.V2.transpose() * S * s.V2;
    if (G.norm() == 0.0) return out;
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(G);
    out.mean = S * s.V2 * cod.solve(e);
    return out;
  }

  const MatrixXd root = psd_sqrt(sigma);
  const MatrixXd RV2 = root * s.V2;
  MatrixXd K = RV2 * s.precision * RV2.transpose();
  K = 0.5 * (K + K.transpose());
  K.diagonal().array() += phi;
  Eigen::LLT<MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("posterior: information matrix is not positive definite");
  MatrixXd C = root * llt.solve(root);
  C = 0.5 * (C + C.transpose());
  out.cov = phi * C;
  out.mean = C * (s.V2 * (s.precision * e));
  return out;
}

PosteriorSet posteriors(const MomentFit& fit, unsigned threads) {
  const auto& sums = fit.summaries.summaries;
  PosteriorSet set;
  set.groups.resize(sums.size());
  const ScaleRecord& rec = fit.scale_record;
  const bool identity = rec.is_identity();
  parallel_for(sums.size(), threads, [&](std::size_t i) {
    Posterior p = posterior(sums[i], fit.beta_std, fit.sigma_std, fit.phi);
    if (!identity) {
      p.mean = rec.u_to_original(p.mean);
      p.cov = rec.sigma_to_original(p.cov);
    }
    set.groups[i] = std::move(p);
  });
  return set;
}

VectorXd predict_mean(const MatrixXd& X_new, const MatrixXd& Z_new, const VectorXd& beta, const VectorXd& u,
                      const Family& family) {
  if (X_new.cols() != beta.size() || Z_new.cols() != u.size() || X_new.rows() != Z_new.rows())
    throw InvalidInput("predict_mean: dimensions do not match the fitted effects");
  VectorXd eta = X_new * beta;
  if (u.size() > 0) eta.noalias() += Z_new * u;
  return family.inverse_link(eta);
}

GroupPrediction predict_group(const PosteriorSet& post, const std::string& group_id, const MatrixXd& X_new,
                              const MatrixXd& Z_new, const VectorXd& beta, const Family& family) {
  GroupPrediction out;
  if (const Posterior* p = post.find(group_id)) {
    out.mu = predict_mean(X_new, Z_new, beta, p->mean, family);
  } else {
    out.unseen = true;
    out.mu = predict_mean(X_new, Z_new, beta, VectorXd::Zero(Z_new.cols()), family);
  }
  return out;
}

}  // namespace mhglm
