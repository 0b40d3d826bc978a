#include "hybasis/clusters.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "hybasis/errors.hpp"

namespace hybasis {

Adjacency parse_adjacency(int n) {
  switch (n) {
    case 6: return Adjacency::Face6;
    case 18: return Adjacency::Edge18;
    case 26: return Adjacency::Vertex26;
    default: throw ConfigError("cluster connectivity must be 6, 18 or 26, got " + std::to_string(n));
  }
}

std::pair<std::size_t, std::size_t> ClusterReport::count_at_least(std::size_t min_size) const {
  std::size_t n = 0, total = 0;
  for (const auto& c : clusters)
    if (c.size >= min_size) {
      ++n;
      total += c.size;
    }
  return {n, total};
}

ClusterReport cluster_flags(const std::vector<bool>& mask, const Dims& dims, std::size_t min_size, Adjacency adjacency,
                            const Eigen::VectorXd* values) {
  if (mask.size() != dims.count()) throw ConfigError("flag mask length does not match grid");
  if (values && static_cast<std::size_t>(values->size()) != dims.count())
    throw ConfigError("value map length does not match grid");

  std::vector<std::array<int, 3>> offsets;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int l1 = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (l1 == 0) continue;
        if (adjacency == Adjacency::Face6 && l1 > 1) continue;
        if (adjacency == Adjacency::Edge18 && l1 > 2) continue;
        offsets.push_back({dx, dy, dz});
      }

  std::vector<std::int32_t> comp(mask.size(), 0);
  std::vector<Cluster> found;
  std::vector<std::size_t> stack;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || comp[seed] != 0) continue;
    Cluster c;
    c.label = static_cast<int>(found.size()) + 1;
    c.bbox_min = dims.coords(seed);
    c.bbox_max = c.bbox_min;
    c.peak_voxel = seed;
    c.peak_value = values ? (*values)[static_cast<Eigen::Index>(seed)] : 0.0;
    comp[seed] = c.label;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      ++c.size;
      const auto p = dims.coords(v);
      for (int a = 0; a < 3; ++a) {
        c.bbox_min[static_cast<std::size_t>(a)] = std::min(c.bbox_min[static_cast<std::size_t>(a)], p[static_cast<std::size_t>(a)]);
        c.bbox_max[static_cast<std::size_t>(a)] = std::max(c.bbox_max[static_cast<std::size_t>(a)], p[static_cast<std::size_t>(a)]);
      }
      if (values) {
        const double val = (*values)[static_cast<Eigen::Index>(v)];
        if (std::abs(val) > std::abs(c.peak_value) || (std::abs(val) == std::abs(c.peak_value) && v < c.peak_voxel)) {
          c.peak_value = val;
          c.peak_voxel = v;
        }
      } else {
        c.peak_voxel = std::min(c.peak_voxel, v);
      }
      for (const auto& o : offsets) {
        const int i = p[0] + o[0], j = p[1] + o[1], k = p[2] + o[2];
        if (!dims.contains(i, j, k)) continue;
        const auto u = dims.index(i, j, k);
        if (mask[u] && comp[u] == 0) {
          comp[u] = c.label;
          stack.push_back(u);
        }
      }
    }
    found.push_back(c);
  }

  // Drop small components, then relabel by descending size (ties: first voxel order).
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < found.size(); ++i)
    if (found[i].size >= min_size) order.push_back(i);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return found[a].size > found[b].size; });
  std::vector<std::int32_t> relabel(found.size() + 1, 0);
  ClusterReport out;
  for (std::size_t r = 0; r < order.size(); ++r) {
    relabel[static_cast<std::size_t>(found[order[r]].label)] = static_cast<std::int32_t>(r + 1);
    Cluster c = found[order[r]];
    c.label = static_cast<int>(r + 1);
    out.clusters.push_back(c);
  }
  out.labels.resize(mask.size());
  for (std::size_t v = 0; v < mask.size(); ++v) out.labels[v] = relabel[static_cast<std::size_t>(comp[v])];
  return out;
}

}  // namespace hybasis
