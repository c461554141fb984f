#include "mhglm_cli/artifact.hpp"

#include <fstream>

#include "mhglm/error.hpp"

namespace mhglm::cli {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "mhglm-fit";
constexpr int kVersion = 1;

json vec_json(const VectorXd& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json mat_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Index k = 0; k < m.cols(); ++k) r[k] = m(i, k);
    rows.push_back(r);
  }
  return rows;
}

VectorXd json_vec(const json& j, Index n, const char* what) {
  const auto v = j.get<std::vector<double>>();
  if (n >= 0 && static_cast<Index>(v.size()) != n) throw InvalidInput(std::string("model: ") + what + " has wrong length");
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
}

MatrixXd json_mat(const json& j, Index n, const char* what) {
  if (!j.is_array() || static_cast<Index>(j.size()) != n) throw InvalidInput(std::string("model: ") + what + " has wrong shape");
  MatrixXd m(n, n);
  for (Index i = 0; i < n; ++i) m.row(i) = json_vec(j[i], n, what).transpose();
  return m;
}

}  // namespace

FitArtifact make_artifact(const MomentFit& fit, const PosteriorSet& post, const ColumnRoles& roles,
                          const std::string& family, const std::string& weights, int refits, double rank_tol) {
  FitArtifact a;
  a.family = family;
  a.weights = weights;
  a.refits = refits;
  a.rank_tol = rank_tol;
  a.scheme = fit.scheme;
  a.roles = roles;
  a.beta = fit.beta;
  a.sigma = fit.sigma;
  a.sigma_raw = fit.sigma_raw;
  a.projected = fit.projected;
  a.phi = fit.phi;
  a.rho = fit.rho;
  a.groups = static_cast<Index>(fit.summaries.summaries.size());
  a.observations = fit.summaries.N;
  a.skipped = fit.summaries.skipped;
  a.posteriors = post;
  return a;
}

json to_json(const FitArtifact& a) {
  json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["family"] = a.family;
  j["weights"] = a.weights;
  j["refits"] = a.refits;
  j["rank_tol"] = a.rank_tol;
  j["scheme"] = a.scheme;
  j["columns"] = {{"group", a.roles.group},
                  {"response", a.roles.response},
                  {"fixed", a.roles.fixed},
                  {"random", a.roles.random},
                  {"intercept", a.roles.intercept}};
  j["fixed_effects"] = {{"names", a.roles.fixed_names()}, {"beta", vec_json(a.beta)}};
  j["random_effects"] = {{"names", a.roles.random_names()},
                         {"sigma", mat_json(a.sigma)},
                         {"sigma_raw", mat_json(a.sigma_raw)},
                         {"projected", a.projected}};
  j["dispersion"] = a.phi;
  j["rho"] = a.rho;
  j["groups"] = a.groups;
  j["observations"] = a.observations;
  json skipped = json::array();
  for (const auto& s : a.skipped) skipped.push_back({{"group", s.group_id}, {"reason", s.reason}});
  j["skipped"] = skipped;
  json post = json::array();
  for (const auto& p : a.posteriors.groups)
    post.push_back({{"group", p.group_id}, {"mean", vec_json(p.mean)}, {"cov", mat_json(p.cov)}});
  j["posteriors"] = post;
  return j;
}

FitArtifact artifact_from_json(const json& j) {
  try {
    if (j.at("format") != kFormat) throw InvalidInput("model: not an mhglm fit artifact");
    if (j.at("version") != kVersion) throw InvalidInput("model: unsupported artifact version");
    FitArtifact a;
    a.family = j.at("family").get<std::string>();
    a.weights = j.at("weights").get<std::string>();
    a.refits = j.at("refits").get<int>();
    a.rank_tol = j.at("rank_tol").get<double>();
    a.scheme = j.at("scheme").get<std::string>();
    const json& c = j.at("columns");
    a.roles.group = c.at("group").get<std::string>();
    a.roles.response = c.at("response").get<std::string>();
    a.roles.fixed = c.at("fixed").get<std::vector<std::string>>();
    a.roles.random = c.at("random").get<std::vector<std::string>>();
    a.roles.intercept = c.at("intercept").get<bool>();
    const Index p = static_cast<Index>(a.roles.fixed_names().size());
    const Index q = static_cast<Index>(a.roles.random_names().size());
    a.beta = json_vec(j.at("fixed_effects").at("beta"), p, "beta");
    const json& re = j.at("random_effects");
    a.sigma = json_mat(re.at("sigma"), q, "sigma");
    a.sigma_raw = json_mat(re.at("sigma_raw"), q, "sigma_raw");
    a.projected = re.at("projected").get<bool>();
    a.phi = j.at("dispersion").get<double>();
    a.rho = j.at("rho").get<double>();
    a.groups = j.at("groups").get<Index>();
    a.observations = j.at("observations").get<Index>();
    for (const auto& s : j.at("skipped")) a.skipped.push_back({s.at("group").get<std::string>(), s.at("reason").get<std::string>()});
    for (const auto& p_ : j.at("posteriors"))
      a.posteriors.groups.push_back(
          {p_.at("group").get<std::string>(), json_vec(p_.at("mean"), q, "posterior mean"), json_mat(p_.at("cov"), q, "posterior cov")});
    for (std::size_t i = 1; i < a.posteriors.groups.size(); ++i)
      if (!(a.posteriors.groups[i - 1].group_id < a.posteriors.groups[i].group_id))
        throw InvalidInput("model: posteriors are not sorted by group id");
    return a;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("model: malformed artifact (") + e.what() + ")");
  }
}

void write_artifact(const FitArtifact& a, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write '" + path + "'");
  out << to_json(a).dump(2) << '\n';
}

FitArtifact read_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open model '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InvalidInput("model '" + path + "': " + e.what());
  }
  return artifact_from_json(j);
}

}  // namespace mhglm::cli
