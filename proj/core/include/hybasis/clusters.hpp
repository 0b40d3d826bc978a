#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "hybasis/volume.hpp"

namespace hybasis {

/// Neighbourhood for connected components: 6 (shared face), 18 (face or
/// edge) or 26 (face, edge or corner).
enum class Adjacency { Face6 = 6, Edge18 = 18, Vertex26 = 26 };

Adjacency parse_adjacency(int n);

struct Cluster {
  int label = 0;  ///< 1-based, clusters sorted by descending size
  std::size_t size = 0;
  std::array<int, 3> bbox_min{};
  std::array<int, 3> bbox_max{};
  std::size_t peak_voxel = 0;  ///< largest |value| (first voxel when no values)
  double peak_value = 0.0;
};

struct ClusterReport {
  std::vector<std::int32_t> labels;  ///< per voxel, 0 = not in a kept cluster
  std::vector<Cluster> clusters;

  /// Clusters with size >= `min_size`, and their total voxel count.
  std::pair<std::size_t, std::size_t> count_at_least(std::size_t min_size) const;
  std::size_t largest() const { return clusters.empty() ? 0 : clusters.front().size; }
};

inline constexpr std::array<std::size_t, 3> kClusterTableSizes{125, 64, 27};

ClusterReport cluster_flags(const std::vector<bool>& mask, const Dims& dims, std::size_t min_size = 1,
                            Adjacency adjacency = Adjacency::Face6, const Eigen::VectorXd* values = nullptr);

}  // namespace hybasis
