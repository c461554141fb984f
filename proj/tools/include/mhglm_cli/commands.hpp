#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mhglm/linalg.hpp"
#include "mhglm_cli/artifact.hpp"
#include "mhglm_cli/table.hpp"

namespace mhglm::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

struct FitRequest {
  ColumnRoles roles;
  std::string family = "gaussian";
  std::string weights = "semiweighted";
  int refits = 1;
  double rank_tol = kMachineEps;
  unsigned threads = 1;
  bool standardize = true;
};

MomentConfig moment_config(const std::string& weights, int refits, double rank_tol, unsigned threads, bool standardize);

/// Fit plus posteriors, packaged for writing. SingularOperator errors are
/// rethrown with the offending columns named.
FitArtifact fit_table(const Table& table, const FitRequest& request);

struct PredictionRow {
  std::string group;
  double mu = 0.0;
  bool unseen = false;
};

/// One prediction per table row, in table order.
std::vector<PredictionRow> predict_table(const FitArtifact& model, const Table& table);

/// Entry point shared by the executable and the tests. args excludes the
/// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mhglm::cli
