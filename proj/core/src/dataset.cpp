#include "mhglm/dataset.hpp"

#include <algorithm>
#include <numeric>

#include "mhglm/error.hpp"

namespace mhglm {

Index GroupedDataset::total_observations() const {
  Index total = 0;
  for (const auto& g : groups) total += g.n();
  return total;
}

void validate(const GroupedDataset& data) {
  if (data.groups.empty()) throw InvalidInput("dataset has no groups");
  if (data.p < 0 || data.q < 0 || data.p + data.q == 0) throw InvalidInput("dataset needs at least one effect column");
  if (!data.x_names.empty() && static_cast<Index>(data.x_names.size()) != data.p)
    throw InvalidInput("x_names size does not match p");
  if (!data.z_names.empty() && static_cast<Index>(data.z_names.size()) != data.q)
    throw InvalidInput("z_names size does not match q");
  for (const auto& g : data.groups) {
    if (g.X.cols() != data.p || g.Z.cols() != data.q)
      throw InvalidInput("group '" + g.id + "': column counts do not match p, q");
    if (g.X.rows() != g.n() || g.Z.rows() != g.n())
      throw InvalidInput("group '" + g.id + "': row counts of y, X, Z differ");
    if (!g.y.allFinite() || !g.X.allFinite() || !g.Z.allFinite())
      throw InvalidInput("group '" + g.id + "': non-finite values");
  }
  auto order = sorted_group_order(data);
  for (std::size_t k = 1; k < order.size(); ++k)
    if (data.groups[order[k]].id == data.groups[order[k - 1]].id)
      throw InvalidInput("duplicate group id '" + data.groups[order[k]].id + "'");
}

std::vector<std::size_t> sorted_group_order(const GroupedDataset& data) {
  std::vector<std::size_t> order(data.groups.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return data.groups[a].id < data.groups[b].id; });
  return order;
}

}  // namespace mhglm
