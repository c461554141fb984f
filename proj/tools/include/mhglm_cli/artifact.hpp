#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mhglm/ebayes.hpp"
#include "mhglm/family.hpp"
#include "mhglm/group_fit.hpp"
#include "mhglm/moment.hpp"
#include "mhglm_cli/table.hpp"

namespace mhglm::cli {

/// Everything predict needs, plus fit metadata. Serialized as JSON with
/// matrices as row-major nested lists; doubles round-trip exactly.
struct FitArtifact {
  std::string family;
  std::string weights;
  int refits = 0;
  double rank_tol = 0.0;
  std::string scheme;
  ColumnRoles roles;

  VectorXd beta;
  MatrixXd sigma;
  MatrixXd sigma_raw;
  bool projected = false;
  double phi = 0.0;
  double rho = 0.0;
  Index groups = 0;
  Index observations = 0;
  std::vector<SkippedGroup> skipped;
  PosteriorSet posteriors;
};

FitArtifact make_artifact(const MomentFit& fit, const PosteriorSet& post, const ColumnRoles& roles,
                          const std::string& family, const std::string& weights, int refits, double rank_tol);

nlohmann::json to_json(const FitArtifact& a);
FitArtifact artifact_from_json(const nlohmann::json& j);

void write_artifact(const FitArtifact& a, const std::string& path);
FitArtifact read_artifact(const std::string& path);

}  // namespace mhglm::cli
