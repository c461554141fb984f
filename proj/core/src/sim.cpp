#include "mhglm/sim.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "mhglm/error.hpp"
#include "mhglm/group_fit.hpp"
#include "mhglm/parallel.hpp"

namespace mhglm::sim {

Rng make_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (path.size() + 1) + 1);
  auto push = [&](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffULL));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  words.push_back(static_cast<std::uint32_t>(path.size()));
  for (auto v : path) push(v);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

std::string group_label(Index i, Index M) {
  const int width = static_cast<int>(std::to_string(std::max<Index>(M - 1, 0)).size());
  std::ostringstream os;
  os << 'g' << std::setw(width) << std::setfill('0') << i;
  return os.str();
}

MatrixXd draw_sigma(Rng& rng, Index q, double dof, double scale) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd A = MatrixXd::Zero(q, q);
  for (Index i = 0; i < q; ++i) {
    std::chi_squared_distribution<double> chi2(dof - static_cast<double>(i));
    A(i, i) = std::sqrt(chi2(rng));
    for (Index j = 0; j < i; ++j) A(i, j) = normal(rng);
  }
  // Wishart(I, dof) = A A'; its inverse is InvWishart(I, dof).
  const MatrixXd wishart = A * A.transpose();
  MatrixXd inv = wishart.llt().solve(MatrixXd::Identity(q, q));
  inv = 0.5 * (inv + inv.transpose());
  return scale * inv;
}

std::pair<GroupedDataset, SimTruth> gen_replicate(const SimConfig& config, std::uint64_t seed) {
  const Index M = config.M, N = config.N, p = config.p, q = config.q;
  if (M < 1 || N < 1 || p < 1 || q < 1) throw InvalidInput("gen_replicate: M, N, p, q must be >= 1");

  SimTruth truth;
  Rng pop = make_stream(seed, {0});
  std::student_t_distribution<double> t4(4.0);
  truth.beta.resize(p);
  for (Index k = 0; k < p; ++k) truth.beta(k) = t4(pop);
  truth.Sigma = draw_sigma(pop, q, 2.0 * static_cast<double>(q));

  std::exponential_distribution<double> rate_dist(static_cast<double>(M) / static_cast<double>(N));
  std::vector<double> rates(M);
  for (auto& r : rates) r = rate_dist(pop);
  truth.n_alloc.assign(M, 0);
  double mass = std::accumulate(rates.begin(), rates.end(), 0.0);
  Index remaining = N;
  for (Index i = 0; i < M && remaining > 0; ++i) {
    if (i == M - 1) {
      truth.n_alloc[i] = remaining;
      break;
    }
    const double prob = mass > 0.0 ? std::clamp(rates[i] / mass, 0.0, 1.0) : 1.0;
    std::binomial_distribution<Index> binom(remaining, prob);
    truth.n_alloc[i] = binom(pop);
    remaining -= truth.n_alloc[i];
    mass -= rates[i];
  }

  const Eigen::LLT<MatrixXd> chol(truth.Sigma);
  const MatrixXd L = chol.matrixL();
  truth.ids.resize(M);
  truth.u.resize(M);
  truth.mu.resize(M);

  GroupedDataset data;
  data.p = p;
  data.q = q;
  for (Index k = 0; k < p; ++k) data.x_names.push_back("x" + std::to_string(k + 1));
  for (Index k = 0; k < q; ++k) data.z_names.push_back("z" + std::to_string(k + 1));
  std::vector<Group> groups(M);

  for (Index i = 0; i < M; ++i) {
    Rng rng = make_stream(seed, {1, static_cast<std::uint64_t>(i)});
    std::normal_distribution<double> normal(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);
    const Index n = truth.n_alloc[i];
    truth.ids[i] = group_label(i, M);

    VectorXd z(q);
    for (Index k = 0; k < q; ++k) z(k) = normal(rng);
    truth.u[i] = L * z;

    Group& g = groups[i];
    g.id = truth.ids[i];
    g.X.resize(n, p);
    g.Z.resize(n, q);
    g.y.resize(n);
    for (Index j = 0; j < n; ++j) {
      for (Index k = 0; k < p; ++k) g.X(j, k) = coin(rng) ? 1.0 : -1.0;
      for (Index k = 0; k < q; ++k) g.Z(j, k) = coin(rng) ? 1.0 : -1.0;
    }
    const VectorXd eta = g.X * truth.beta + g.Z * truth.u[i];
    truth.mu[i] = config.family.inverse_link(eta);
    for (Index j = 0; j < n; ++j) {
      if (config.family.kind() == FamilyKind::Binomial) {
        std::bernoulli_distribution draw(truth.mu[i](j));
        g.y(j) = draw(rng) ? 1.0 : 0.0;
      } else {
        g.y(j) = truth.mu[i](j) + config.noise_sd * normal(rng);
      }
    }
  }

  // The dataset carries only non-empty groups; truth.mu is kept aligned with it.
  std::vector<VectorXd> mu_rows;
  for (Index i = 0; i < M; ++i) {
    if (groups[i].n() == 0) continue;
    data.groups.push_back(std::move(groups[i]));
    mu_rows.push_back(truth.mu[i]);
  }
  truth.mu = std::move(mu_rows);
  return {std::move(data), std::move(truth)};
}

// ---------------------------------------------------------------------------

double prediction_loss(const std::vector<VectorXd>& mu_true, const std::vector<VectorXd>& eta_hat,
                       const Family& family) {
  double total = 0.0;
  Index count = 0;
  for (std::size_t i = 0; i < mu_true.size(); ++i) {
    const VectorXd& mu = mu_true[i];
    const VectorXd& eta = eta_hat[i];
    for (Index j = 0; j < mu.size(); ++j) {
      ++count;
      if (family.kind() == FamilyKind::Gaussian) {
        const double d = mu(j) - eta(j);
        total += d * d;
        continue;
      }
      const double m = mu(j);
      const double mh = family.inverse_link(eta(j));
      double kl = 0.0;
      if (m > 0.0) kl += m * std::log(m / mh);
      if (m < 1.0) kl += (1.0 - m) * std::log((1.0 - m) / (1.0 - mh));
      total += 2.0 * kl;
    }
  }
  return count > 0 ? total / static_cast<double>(count) : 0.0;
}

std::vector<VectorXd> linear_predictors(const GroupedDataset& data, const VectorXd& beta, const PosteriorSet& post) {
  std::vector<VectorXd> out;
  out.reserve(data.groups.size());
  for (const auto& g : data.groups) {
    VectorXd eta = g.X * beta;
    if (const Posterior* p = post.find(g.id)) eta += g.Z * p->mean;
    out.push_back(std::move(eta));
  }
  return out;
}

LossRecord losses(const GroupedDataset& data, const SimTruth& truth, const MomentFit& fit, const PosteriorSet& post,
                  const Family& family) {
  LossRecord rec;
  rec.fixed_loss = (truth.beta - fit.beta).squaredNorm();

  const Index q = truth.Sigma.rows();
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(truth.Sigma);
  const VectorXd& ev = es.eigenvalues();
  const bool invertible = q > 0 && ev(0) > 1e-12 * ev(q - 1);
  if (invertible) {
    const MatrixXd sig_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    const MatrixXd D = fit.sigma * sig_inv - MatrixXd::Identity(q, q);
    rec.cov_loss = (D * D).trace();

    double re = 0.0;
    for (std::size_t i = 0; i < truth.u.size(); ++i) {
      const Posterior* p = post.find(truth.ids[i]);
      const VectorXd diff = p ? VectorXd(truth.u[i] - p->mean) : truth.u[i];
      re += diff.dot(sig_inv * diff);
    }
    rec.raneff_loss = re / static_cast<double>(truth.u.size());
  }

  rec.pred_loss = prediction_loss(truth.mu, linear_predictors(data, fit.beta, post), family);
  return rec;
}

VectorXd fit_global(const GroupedDataset& data, const Family& family, const GlmOptions& options) {
  validate(data);
  const auto order = sorted_group_order(data);
  const Index N = data.total_observations();
  MatrixXd X(N, data.p);
  VectorXd y(N);
  Index row = 0;
  for (std::size_t idx : order) {
    const Group& g = data.groups[idx];
    X.middleRows(row, g.n()) = g.X;
    y.segment(row, g.n()) = g.y;
    row += g.n();
  }
  return fit_glm(y, X, family, options).coef;
}

std::vector<LocalFit> fit_local(const GroupedDataset& data, const Family& family, const SummaryOptions& options) {
  std::vector<LocalFit> out;
  out.reserve(data.groups.size());
  for (const auto& g : data.groups) {
    LocalFit lf{g.id, std::nullopt};
    if (g.n() > 0) {
      try {
        lf.coef = summarize_group(g.id, g.y, g.X, g.Z, family, options).theta_full();
      } catch (const NumericalError&) {
      }
    }
    out.push_back(std::move(lf));
  }
  return out;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Mhglm: return "mhglm";
    case Method::Global: return "global";
    case Method::Local: return "local";
  }
  return "unknown";
}

Method method_from_name(const std::string& name) {
  if (name == "mhglm") return Method::Mhglm;
  if (name == "global") return Method::Global;
  if (name == "local") return Method::Local;
  throw InvalidInput("unknown method '" + name + "' (expected mhglm, global or local)");
}

MetricSummary summarize_metric(std::vector<double> values) {
  MetricSummary s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (n - 1.0) / n);
  }
  std::sort(values.begin(), values.end());
  const std::size_t mid = values.size() / 2;
  s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
  return s;
}

namespace {

LossRecord run_method(Method method, const GroupedDataset& data, const SimTruth& truth, const Family& family,
                      const MomentConfig& moment) {
  const auto start = std::chrono::steady_clock::now();
  LossRecord rec;
  switch (method) {
    case Method::Mhglm: {
      const MomentFit fit = fit_moment(data, family, moment);
      const PosteriorSet post = posteriors(fit);
      rec = losses(data, truth, fit, post, family);
      break;
    }
    case Method::Global: {
      const VectorXd beta = fit_global(data, family);
      std::vector<VectorXd> eta;
      for (const auto& g : data.groups) eta.push_back(g.X * beta);
      rec.fixed_loss = (truth.beta - beta).squaredNorm();
      rec.pred_loss = prediction_loss(truth.mu, eta, family);
      break;
    }
    case Method::Local: {
      const auto fits = fit_local(data, family, moment.summary);
      std::vector<VectorXd> eta;
      for (std::size_t i = 0; i < data.groups.size(); ++i) {
        const Group& g = data.groups[i];
        if (fits[i].coef) {
          MatrixXd F(g.n(), data.p + data.q);
          F << g.X, g.Z;
          eta.push_back(F * *fits[i].coef);
        } else {
          eta.push_back(VectorXd::Zero(g.n()));
        }
      }
      rec.pred_loss = prediction_loss(truth.mu, eta, family);
      break;
    }
  }
  rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  if (config.replicates < 1) throw InvalidInput("run_study: replicates must be >= 1");
  if (config.N_grid.empty()) throw InvalidInput("run_study: empty N grid");
  if (config.methods.empty()) throw InvalidInput("run_study: no methods");

  MomentConfig moment = config.moment;
  moment.threads = 1;

  const std::size_t nm = config.methods.size();
  const std::size_t reps = static_cast<std::size_t>(config.replicates);
  const std::size_t jobs = config.N_grid.size() * reps;
  std::vector<ReplicateRecord> records(jobs * nm);

  parallel_for(jobs, config.threads, [&](std::size_t job) {
    const std::size_t k = job / reps;
    const std::size_t r = job % reps;
    SimConfig sc{config.M, config.N_grid[k], config.p, config.q, config.family};
    auto [data, truth] = gen_replicate(sc, make_stream(config.seed, {k, r})());
    for (std::size_t m = 0; m < nm; ++m) {
      ReplicateRecord& rec = records[job * nm + m];
      rec.method = config.methods[m];
      rec.N = config.N_grid[k];
      rec.replicate = static_cast<int>(r);
      try {
        rec.loss = run_method(config.methods[m], data, truth, config.family, moment);
      } catch (const Error& e) {
        rec.error = e.what();
      }
    }
  });

  StudyResult result;
  for (std::size_t k = 0; k < config.N_grid.size(); ++k) {
    for (std::size_t m = 0; m < nm; ++m) {
      StudyRow row;
      row.method = config.methods[m];
      row.N = config.N_grid[k];
      std::vector<double> fixed, cov, raneff, pred, secs;
      for (std::size_t r = 0; r < reps; ++r) {
        const ReplicateRecord& rec = records[(k * reps + r) * nm + m];
        if (!rec.loss) {
          ++row.failed;
          continue;
        }
        ++row.ok;
        const LossRecord& l = *rec.loss;
        if (row.method != Method::Local) fixed.push_back(l.fixed_loss);
        if (row.method == Method::Mhglm) {
          if (l.cov_loss) cov.push_back(*l.cov_loss);
          raneff.push_back(l.raneff_loss);
        }
        pred.push_back(l.pred_loss);
        secs.push_back(l.seconds);
      }
      row.fixed_loss = summarize_metric(fixed);
      row.cov_loss = summarize_metric(cov);
      row.raneff_loss = summarize_metric(raneff);
      row.pred_loss = summarize_metric(pred);
      row.seconds = summarize_metric(secs);
      result.rows.push_back(row);
    }
  }
  result.records = std::move(records);
  return result;
}

std::vector<BinRate> misclass_by_group_size(const std::vector<double>& mu_hat, const std::vector<double>& y,
                                            const std::vector<std::size_t>& group_of_obs,
                                            const std::vector<std::size_t>& group_sizes,
                                            const std::vector<std::size_t>& edges) {
  if (mu_hat.size() != y.size() || y.size() != group_of_obs.size())
    throw InvalidInput("misclass_by_group_size: observation vectors differ in length");
  if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()))
    throw InvalidInput("misclass_by_group_size: need at least two ascending bin edges");

  const std::size_t G = group_sizes.size();
  std::vector<double> errors(G, 0.0);
  std::vector<std::size_t> counts(G, 0);
  for (std::size_t j = 0; j < y.size(); ++j) {
    const std::size_t g = group_of_obs[j];
    if (g >= G) throw InvalidInput("misclass_by_group_size: group index out of range");
    const bool predicted = mu_hat[j] >= 0.5;
    const bool observed = y[j] >= 0.5;
    errors[g] += predicted != observed ? 1.0 : 0.0;
    ++counts[g];
  }

  std::vector<BinRate> bins;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    BinRate bin;
    bin.lo = edges[b];
    bin.hi = edges[b + 1];
    std::vector<double> rates;
    for (std::size_t g = 0; g < G; ++g) {
      if (counts[g] == 0) continue;
      if (group_sizes[g] >= bin.lo && group_sizes[g] < bin.hi) rates.push_back(errors[g] / static_cast<double>(counts[g]));
    }
    const MetricSummary s = summarize_metric(rates);
    bin.groups = rates.size();
    bin.mean = s.mean;
    bin.se = s.se;
    bins.push_back(bin);
  }
  return bins;
}

}  // namespace mhglm::sim
