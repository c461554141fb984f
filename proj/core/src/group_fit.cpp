#include "mhglm/group_fit.hpp"

#include <string>

#include "mhglm/error.hpp"
#include "mhglm/parallel.hpp"

namespace mhglm {

VectorXd GroupSummary::theta_full() const {
  VectorXd out(V1.rows() + V2.rows());
  out << V1 * theta_rot, V2 * theta_rot;
  return out;
}

GroupSummary summarize_group(const std::string& id, const VectorXd& y, const MatrixXd& X, const MatrixXd& Z,
                             const Family& family, const SummaryOptions& options) {
  const Index n = y.size();
  const Index p = X.cols();
  const Index q = Z.cols();
  if (n < 1) throw InvalidInput("group '" + id + "' has no observations");
  if (X.rows() != n || Z.rows() != n) throw InvalidInput("group '" + id + "': row counts of y, X, Z differ");
  if (p + q == 0) throw InvalidInput("group '" + id + "': no effect columns");

  MatrixXd F(n, p + q);
  F << X, Z;
  const CompactSvd svd = compact_svd(F, options.rank_tol);
  if (svd.rank == 0) throw NumericalError("design has rank 0");

  const MatrixXd F0 = svd.U * svd.d.asDiagonal();
  const GlmFit fit = fit_glm(y, F0, family, options.glm);

  GroupSummary s;
  s.group_id = id;
  s.n = n;
  s.r = svd.rank;
  s.V1 = svd.V.topRows(p);
  s.V2 = svd.V.bottomRows(q);
  s.theta_rot = fit.coef;
  s.precision = unscaled_precision(F0, fit.fitted_mean, family);
  if (!family.dispersion_known()) s.dispersion = pearson_dispersion(y, fit.fitted_mean, family, s.r);
  return s;
}

double pool_dispersion(const std::vector<GroupSummary>& summaries, const Family& family) {
  if (family.dispersion_known()) return family.known_dispersion();
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : summaries) {
    if (!s.dispersion) continue;
    const auto df = static_cast<double>(s.n - s.r);
    num += df * *s.dispersion;
    den += df;
  }
  if (den <= 0.0)
    throw DispersionError("cannot estimate dispersion: no group has more observations than its design rank");
  return num / den;
}

SummarySet build_summary_set(const GroupedDataset& data, const Family& family, const SummaryOptions& options,
                             unsigned threads) {
  validate(data);
  const auto order = sorted_group_order(data);
  std::vector<std::optional<GroupSummary>> slots(order.size());
  std::vector<std::string> reasons(order.size());

  parallel_for(order.size(), threads, [&](std::size_t k) {
    const Group& g = data.groups[order[k]];
    if (g.n() == 0) {
      reasons[k] = "no observations";
      return;
    }
    try {
      slots[k] = summarize_group(g.id, g.y, g.X, g.Z, family, options);
    } catch (const NumericalError& e) {
      reasons[k] = e.what();
    }
  });

  SummarySet set;
  set.p = data.p;
  set.q = data.q;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (slots[k]) {
      set.rho += slots[k]->r;
      set.N += slots[k]->n;
      set.summaries.push_back(std::move(*slots[k]));
    } else {
      set.skipped.push_back({data.groups[order[k]].id, reasons[k]});
    }
  }
  if (set.summaries.empty()) throw NumericalError("every group was skipped; nothing to combine");
  set.pooled_dispersion = pool_dispersion(set.summaries, family);
  return set;
}

}  // namespace mhglm
