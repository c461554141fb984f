#include "mhglm/moment.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "mhglm/error.hpp"
#include "mhglm/parallel.hpp"

namespace mhglm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

MatrixXd sym(const MatrixXd& A) { return 0.5 * (A + A.transpose()); }

double spectral_norm(const MatrixXd& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(A);
  return svd.singularValues()(0);
}

MatrixXd semi_weight(const GroupSummary& s, const MatrixXd& sigma0) {
  const MatrixXd inner = s.V2.transpose() * sigma0 * s.V2 + spd_inverse(s.precision);
  try {
    return spd_inverse(inner);
  } catch (const NumericalError&) {
    throw NumericalError("semi-weight for group '" + s.group_id + "' is not positive definite");
  }
}

}  // namespace

std::string scheme_name(const WeightSpec& spec) {
  return std::visit(overloaded{[](const Unweighted&) { return std::string("unweighted"); },
                               [](const PrecisionWeighted&) { return std::string("weighted"); },
                               [](const SemiWeighted&) { return std::string("semiweighted"); },
                               [](const OptimalWeights&) { return std::string("optimal"); }},
                    spec);
}

void validate(const WeightSpec& spec, Index q, double eps_floor) {
  std::visit(overloaded{[](const Unweighted&) {}, [](const PrecisionWeighted&) {},
                        [&](const SemiWeighted& w) {
                          if (w.sigma0.size() == 0) return;
                          if (w.sigma0.rows() != q || w.sigma0.cols() != q)
                            throw InvalidInput("semi-weight matrix must be q x q");
                          if (!w.sigma0.isApprox(w.sigma0.transpose(), 1e-12))
                            throw InvalidInput("semi-weight matrix must be symmetric");
                          if (min_eigenvalue(w.sigma0) < 0.5 * eps_floor)
                            throw InvalidInput("semi-weight matrix must be positive definite");
                        },
                        [&](const OptimalWeights& w) {
                          if (w.sigma.rows() != q || w.sigma.cols() != q)
                            throw InvalidInput("optimal-weight covariance must be q x q");
                          if (!(w.phi > 0.0)) throw InvalidInput("optimal weights need phi > 0");
                          if (min_eigenvalue(w.sigma) < -1e-12) throw InvalidInput("optimal-weight covariance must be PSD");
                        }},
             spec);
}

std::vector<MatrixXd> make_weights(const SummarySet& set, const WeightSpec& spec, unsigned threads) {
  validate(spec, set.q);
  std::vector<MatrixXd> W(set.summaries.size());

  MatrixXd sigma0;
  if (const auto* semi = std::get_if<SemiWeighted>(&spec))
    sigma0 = semi->sigma0.size() == 0 ? MatrixXd::Identity(set.q, set.q) : sym(semi->sigma0);
  else if (const auto* opt = std::get_if<OptimalWeights>(&spec))
    sigma0 = sym(opt->sigma) / opt->phi;

  parallel_for(W.size(), threads, [&](std::size_t i) {
    const GroupSummary& s = set.summaries[i];
    if (std::holds_alternative<Unweighted>(spec))
      W[i] = MatrixXd::Identity(s.r, s.r);
    else if (std::holds_alternative<PrecisionWeighted>(spec))
      W[i] = sym(s.precision);
    else
      W[i] = semi_weight(s, sigma0);
  });
  return W;
}

FixedEffects fixed_effects(const SummarySet& set, const std::vector<MatrixXd>& weights, double eps_sing) {
  const Index p = set.p;
  FixedEffects fe;
  fe.omega = MatrixXd::Zero(p, p);
  VectorXd rhs = VectorXd::Zero(p);
  for (std::size_t i = 0; i < set.summaries.size(); ++i) {
    const GroupSummary& s = set.summaries[i];
    const MatrixXd V1W = s.V1 * weights[i];
    fe.omega.noalias() += V1W * s.V1.transpose();
    rhs.noalias() += V1W * s.theta_rot;
  }
  fe.omega = sym(fe.omega);
  if (p == 0) {
    fe.beta = VectorXd(0);
    return fe;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(fe.omega);
  const VectorXd& ev = es.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(p - 1);
  if (!(hi > 0.0) || lo <= eps_sing * hi) {
    throw SingularOperator("Omega is singular: the fixed effects are not identified from the group designs",
                           es.eigenvectors().col(0), hi > 0.0 ? lo / hi : 0.0);
  }
  fe.beta = es.eigenvectors() * ((es.eigenvectors().transpose() * rhs).array() / ev.array()).matrix();
  return fe;
}

MatrixXd ahat(const SummarySet& set, const std::vector<MatrixXd>& weights, const VectorXd& b) {
  MatrixXd A = MatrixXd::Zero(set.q, set.q);
  for (std::size_t i = 0; i < set.summaries.size(); ++i) {
    const GroupSummary& s = set.summaries[i];
    const VectorXd e = s.theta_rot - s.V1.transpose() * b;
    const VectorXd v = s.V2 * (weights[i] * e);
    A.noalias() += v * v.transpose();
  }
  return sym(A);
}

Omega2Bias omega2_and_bias(const SummarySet& set, const std::vector<MatrixXd>& weights, double eps_sing) {
  SymKroneckerSum op(set.q);
  MatrixXd rhs = MatrixXd::Zero(set.q, set.q);
  for (std::size_t i = 0; i < set.summaries.size(); ++i) {
    const GroupSummary& s = set.summaries[i];
    const MatrixXd V2W = s.V2 * weights[i];
    op.add_term(V2W * s.V2.transpose());
    rhs.noalias() += V2W * spd_inverse(s.precision) * V2W.transpose();
  }
  SymSolver solver = [&] {
    try {
      return SymSolver(op, eps_sing);
    } catch (const SingularOperator& e) {
      throw SingularOperator(
          "Omega2 is singular on symmetric matrices: the random-effect covariance is not identified from the "
          "group designs",
          e.direction(), e.inverse_condition());
    }
  }();
  MatrixXd bias = solver.solve(sym(rhs));
  return Omega2Bias{std::move(op), std::move(solver), std::move(bias)};
}

MatrixXd s_hat(const SummarySet& set, const std::vector<MatrixXd>& weights, const Omega2Bias& om, const VectorXd& b) {
  return om.solver.solve(ahat(set, weights, b));
}

SigmaEstimate sigma_hat(const SummarySet& set, const std::vector<MatrixXd>& weights, const Omega2Bias& om,
                        const VectorXd& beta, double phi) {
  SigmaEstimate est;
  est.raw = sym(s_hat(set, weights, om, beta) - phi * om.bias);
  est.was_projected = set.q > 0 && min_eigenvalue(est.raw) < 0.0;
  est.projected = est.was_projected ? psd_project(est.raw) : est.raw;
  return est;
}

// ---------------------------------------------------------------------------

ScaleRecord ScaleRecord::identity(Index p, Index q) {
  ScaleRecord r;
  r.x_scale = VectorXd::Ones(p);
  r.z_scale = VectorXd::Ones(q);
  r.x_zero.assign(p, false);
  r.z_zero.assign(q, false);
  return r;
}

bool ScaleRecord::is_identity() const { return (x_scale.array() == 1.0).all() && (z_scale.array() == 1.0).all(); }

VectorXd ScaleRecord::beta_to_original(const VectorXd& beta_std) const { return beta_std.cwiseQuotient(x_scale); }
VectorXd ScaleRecord::beta_to_standard(const VectorXd& beta) const { return beta.cwiseProduct(x_scale); }
VectorXd ScaleRecord::u_to_original(const VectorXd& u_std) const { return u_std.cwiseQuotient(z_scale); }

MatrixXd ScaleRecord::sigma_to_original(const MatrixXd& sigma_std) const {
  const VectorXd inv = z_scale.cwiseInverse();
  return inv.asDiagonal() * sigma_std * inv.asDiagonal();
}

MatrixXd ScaleRecord::sigma_to_standard(const MatrixXd& sigma) const {
  return z_scale.asDiagonal() * sigma * z_scale.asDiagonal();
}

namespace {

void column_scales(const GroupedDataset& data, const std::vector<std::size_t>& order, bool use_x, VectorXd& scale,
                   std::vector<bool>& zero) {
  const Index k = use_x ? data.p : data.q;
  scale = VectorXd::Ones(k);
  zero.assign(k, false);
  for (Index c = 0; c < k; ++c) {
    double sumsq = 0.0;
    Index count = 0;
    bool constant = true;
    bool have_first = false;
    double first = 0.0;
    for (std::size_t idx : order) {
      const MatrixXd& M = use_x ? data.groups[idx].X : data.groups[idx].Z;
      for (Index j = 0; j < M.rows(); ++j) {
        const double v = M(j, c);
        if (!have_first) {
          first = v;
          have_first = true;
        } else if (v != first) {
          constant = false;
        }
        sumsq += v * v;
        ++count;
      }
    }
    if (count == 0) continue;
    if (sumsq == 0.0) {
      zero[c] = true;
      continue;
    }
    if (constant) continue;
    scale(c) = std::sqrt(sumsq / static_cast<double>(count));
  }
}

}  // namespace

std::pair<GroupedDataset, ScaleRecord> standardize(const GroupedDataset& data) {
  const auto order = sorted_group_order(data);
  ScaleRecord rec;
  column_scales(data, order, true, rec.x_scale, rec.x_zero);
  column_scales(data, order, false, rec.z_scale, rec.z_zero);

  GroupedDataset out = data;
  const VectorXd xinv = rec.x_scale.cwiseInverse();
  const VectorXd zinv = rec.z_scale.cwiseInverse();
  for (auto& g : out.groups) {
    for (Index c = 0; c < out.p; ++c)
      if (rec.x_scale(c) != 1.0) g.X.col(c) *= xinv(c);
    for (Index c = 0; c < out.q; ++c)
      if (rec.z_scale(c) != 1.0) g.Z.col(c) *= zinv(c);
  }
  return {std::move(out), std::move(rec)};
}

// ---------------------------------------------------------------------------

namespace {

struct Pass {
  FixedEffects fe;
  std::optional<Omega2Bias> om;
  SigmaEstimate sigma;
};

Pass run_pass(const SummarySet& set, const WeightSpec& spec, const MomentConfig& config) {
  const auto W = make_weights(set, spec, config.threads);
  Pass pass;
  pass.fe = fixed_effects(set, W, config.eps_sing);
  if (set.q > 0) {
    pass.om.emplace(omega2_and_bias(set, W, config.eps_sing));
    pass.sigma = sigma_hat(set, W, *pass.om, pass.fe.beta, set.pooled_dispersion);
  } else {
    pass.sigma.raw = pass.sigma.projected = MatrixXd(0, 0);
  }
  return pass;
}

MatrixXd floored_semi_matrix(const MatrixXd& sigma, double phi, const MomentConfig& config) {
  const MatrixXd scaled = sigma / std::max(phi, config.phi_floor);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(scaled));
  const VectorXd ev = es.eigenvalues().cwiseMax(config.eps_floor);
  return sym(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace

MomentFit fit_moment(const SummarySet& set, const MomentConfig& config) {
  if (config.refits < 0) throw InvalidInput("refit count must be non-negative");
  validate(config.initial, set.q, config.eps_floor);

  WeightSpec spec = config.initial;
  Pass pass = run_pass(set, spec, config);
  int steps = 0;
  for (; steps < config.refits && set.q > 0; ++steps) {
    spec = SemiWeighted{floored_semi_matrix(pass.sigma.projected, set.pooled_dispersion, config)};
    pass = run_pass(set, spec, config);
  }

  MomentFit fit;
  fit.beta_std = pass.fe.beta;
  fit.sigma_std = pass.sigma.projected;
  fit.beta = fit.beta_std;
  fit.sigma_raw = pass.sigma.raw;
  fit.sigma = pass.sigma.projected;
  fit.phi = set.pooled_dispersion;
  fit.omega = pass.fe.omega;
  fit.omega2_min_eig = pass.om ? pass.om->solver.min_abs_eigenvalue() : 0.0;
  fit.rho = set.rho;
  fit.bias_B = pass.om ? pass.om->bias : MatrixXd(0, 0);
  fit.projected = pass.sigma.was_projected;
  fit.steps = steps;
  fit.scheme = scheme_name(config.initial);
  if (steps > 0) fit.scheme += "+" + std::to_string(steps) + "x semiweighted";
  fit.scale_record = ScaleRecord::identity(set.p, set.q);
  fit.summaries = set;
  return fit;
}

MomentFit fit_moment(const GroupedDataset& data, const Family& family, const MomentConfig& config) {
  validate(data);
  ScaleRecord rec = ScaleRecord::identity(data.p, data.q);
  SummarySet set;
  if (config.standardize) {
    auto [scaled, r] = standardize(data);
    rec = std::move(r);
    set = build_summary_set(scaled, family, config.summary, config.threads);
  } else {
    set = build_summary_set(data, family, config.summary, config.threads);
  }

  MomentFit fit = fit_moment(set, config);
  fit.scale_record = rec;
  if (!rec.is_identity()) {
    fit.beta = rec.beta_to_original(fit.beta_std);
    fit.sigma_raw = rec.sigma_to_original(fit.sigma_raw);
    fit.sigma = rec.sigma_to_original(fit.sigma_std);
  }
  return fit;
}

// ---------------------------------------------------------------------------

std::vector<double> kappa_check(const std::vector<MatrixXd>& weights, const MatrixXd& sigma, double phi,
                                const SummarySet& set) {
  std::vector<double> out(set.summaries.size());
  for (std::size_t i = 0; i < set.summaries.size(); ++i) {
    const GroupSummary& s = set.summaries[i];
    const MatrixXd Wh = psd_sqrt(weights[i]);
    const MatrixXd inner = s.V2.transpose() * sigma * s.V2 + phi * spd_inverse(s.precision);
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym(Wh * inner * Wh), Eigen::EigenvaluesOnly);
    out[i] = es.eigenvalues()(es.eigenvalues().size() - 1);
  }
  return out;
}

double kappa_bound(const WeightSpec& spec, const MatrixXd& sigma, double phi, const SummarySet& set) {
  const double sig_norm = spectral_norm(sigma);
  return std::visit(
      overloaded{[&](const Unweighted&) {
                   double worst = 0.0;
                   for (const auto& s : set.summaries) worst = std::max(worst, spectral_norm(spd_inverse(s.precision)));
                   return sig_norm + phi * worst;
                 },
                 [&](const PrecisionWeighted&) {
                   double worst = 0.0;
                   for (const auto& s : set.summaries) worst = std::max(worst, spectral_norm(s.precision));
                   return sig_norm * worst + phi;
                 },
                 [&](const SemiWeighted& w) {
                   const MatrixXd s0 = w.sigma0.size() == 0 ? MatrixXd::Identity(set.q, set.q) : w.sigma0;
                   return spectral_norm(spd_inverse(s0) * sigma) + phi;
                 },
                 [&](const OptimalWeights&) { return phi; }},
      spec);
}

}  // namespace mhglm
