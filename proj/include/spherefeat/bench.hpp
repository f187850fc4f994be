#pragma once

#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "spherefeat/harmonics.hpp"
#include "spherefeat/parallel.hpp"
#include "spherefeat/wigner.hpp"

namespace spherefeat {

/// Real band-limited expansion with standard normal coefficients.
SphericalExpansion random_real_expansion(int b_max, std::mt19937_64& rng);
/// Euler angles drawn uniformly per angle.
EulerZYZ random_euler(std::mt19937_64& rng);

enum class RotationBenchMode { Harmonic, Spatial };

struct RotationBenchConfig {
  RotationBenchMode mode = RotationBenchMode::Harmonic;
  int b_max = 24;
  int pad = 128;
  int trials = 100;
  std::uint64_t seed = 7;
  double sigma = 0.0;   // spatial mode: Gaussian pre-smoothing in voxels
  double radius = 0.0;  // spatial mode: shell radius, 0 picks the smallest legal one
};

struct RotationTrial {
  int trial = 0;
  EulerZYZ truth, estimate;
  double err_deg = 0.0;       // summed Euler metric
  double geodesic_deg = 0.0;
  double runtime_ms = 0.0;    // estimation only
};

/// Smallest integer radius whose shell satisfies the sampling guard for b_max.
double spatial_bench_radius(int b_max);

/// Harmonic mode rotates a random expansion with the Wigner matrices. Spatial
/// mode rotates a random noise volume by trilinear resampling around its
/// center, optionally smooths both volumes, and expands each at the center.
/// Trial i draws from its own generator seeded by the i-th output of
/// mt19937_64(seed), so results do not depend on the worker count.
std::vector<RotationTrial> bench_rotation(const RotationBenchConfig& cfg,
                                          const WorkerPool& pool = WorkerPool::serial());

void write_rotation_csv(std::ostream& os, const std::vector<RotationTrial>& trials);

}  // namespace spherefeat
