#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mhglm {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Observations of one group: response y (n), fixed-effect design X (n x p),
/// random-effect design Z (n x q).
struct Group {
  std::string id;
  VectorXd y;
  MatrixXd X;
  MatrixXd Z;

  Index n() const noexcept { return y.size(); }
};

struct GroupedDataset {
  Index p = 0;
  Index q = 0;
  std::vector<Group> groups;
  std::vector<std::string> x_names;  ///< optional, size p when present
  std::vector<std::string> z_names;  ///< optional, size q when present

  Index total_observations() const;
};

/// Throws InvalidInput on inconsistent column counts, row counts, duplicate
/// ids, non-finite values, p + q == 0, or an empty dataset.
void validate(const GroupedDataset& data);

/// Indices of data.groups in ascending id order.
std::vector<std::size_t> sorted_group_order(const GroupedDataset& data);

}  // namespace mhglm
