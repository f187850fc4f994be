#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/parallel.hpp"

namespace spherefeat {

struct VoxelCoord {
  int x = 0, y = 0, z = 0;
};

/// Multi-channel scalar grid. Layout is channel-major, then z, y, x with x fastest.
struct Volume {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  int channels = 1;
  std::vector<double> data;

  Volume() = default;
  Volume(std::array<int, 3> d, int ch = 1, std::array<double, 3> sp = {1.0, 1.0, 1.0});

  std::size_t voxels() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z, int c = 0) const {
    return ((static_cast<std::size_t>(c) * dims[2] + z) * dims[1] + y) * dims[0] + x;
  }
  double& at(int x, int y, int z, int c = 0) { return data[index(x, y, z, c)]; }
  double at(int x, int y, int z, int c = 0) const { return data[index(x, y, z, c)]; }

  /// Value with reflective extension outside the grid.
  double at_reflect(int x, int y, int z, int c = 0) const;

  /// Trilinear sample at a continuous voxel position, reflective outside.
  double sample(double x, double y, double z, int c = 0) const;

  bool contains(const VoxelCoord& v) const {
    return v.x >= 0 && v.y >= 0 && v.z >= 0 && v.x < dims[0] && v.y < dims[1] && v.z < dims[2];
  }

  /// Copy of one channel as a single-channel volume.
  Volume channel(int c) const;

  /// Throws unless all invariants hold.
  void validate() const;
};

/// Half-sample symmetric reflection of index i into [0, n).
int reflect_index(int i, int n);

Volume load_volume(const std::string& path);
void save_volume(const Volume& v, const std::string& path);

/// Strip a trailing ".json" or ".raw" so both "name" and "name.json" name the pair.
std::string volume_stem(const std::string& path);

Volume gaussian_smooth(const Volume& v, double sigma,
                       const WorkerPool& pool = WorkerPool::serial());

}  // namespace spherefeat
