#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spherefeat/features.hpp"
#include "spherefeat/harmonics.hpp"
#include "spherefeat/parallel.hpp"
#include "spherefeat/volume.hpp"
#include "spherefeat/wigner.hpp"

namespace spherefeat {

/// Local expansions of one labeled voxel over a set of concentric radii.
struct Patch {
  VoxelCoord center;
  std::vector<double> radii;
  std::vector<SphericalExpansion> shells;
  int label = 0;

  int b_max() const { return shells.empty() ? 0 : shells.front().b_max; }
  /// Throws unless radii are strictly increasing and all shells share b_max.
  void validate() const;
};

/// Expands `center` of channel `channel` at every radius.
Patch extract_patch(const Volume& v, int channel, const VoxelCoord& center, const std::vector<double>& radii,
                    int b_max, int label, double sigma_radial = 1.0);
/// Batch form sharing the basis templates.
std::vector<Patch> extract_patches(const Volume& v, int channel, const std::vector<VoxelCoord>& centers,
                                   const std::vector<int>& labels, const std::vector<double>& radii, int b_max,
                                   double sigma_radial = 1.0, const WorkerPool& pool = WorkerPool::serial());

struct PatchDistance {
  double distance = 0.0;
  EulerZYZ rot;  // a is close to rot applied to b
};

/// 1 - max of the multi-radius normalized correlation divided by the number of radii.
PatchDistance patch_distance(const Patch& a, const Patch& b, int pad);

/// Symmetric n x n distances, row-major, with the matching rotations
/// (entry (i, j) rotates patch j onto patch i).
struct DistanceMatrix {
  std::size_t n = 0;
  std::vector<double> dist;
  std::vector<EulerZYZ> rot;

  double at(std::size_t i, std::size_t j) const { return dist[i * n + j]; }
  const EulerZYZ& rotation(std::size_t i, std::size_t j) const { return rot[i * n + j]; }
};

DistanceMatrix distance_matrix(const std::vector<Patch>& patches, int pad,
                               const WorkerPool& pool = WorkerPool::serial());

struct ClusterModel {
  int k = 0;
  std::vector<int> assignments;
  std::vector<std::size_t> medoids;  // patch index of each centroid
  std::vector<Patch> centroids;
  std::vector<double> homogeneity;
  std::vector<int> majority_label;
  std::vector<bool> selected;
  int rounds = 0;

  std::vector<std::size_t> members(int cluster) const;
};

constexpr double kHomogeneityThreshold = 0.8;
/// Correlation padding for patch distances and for registration.
constexpr int kDefaultLearnPad = 64;
constexpr int kDefaultRegisterPad = 128;

/// k-medoids in correlation-distance space: seeded first medoid, farthest-point
/// initialization, then alternate assignment and medoid update for at most 50
/// rounds. Ties go to the smallest index.
ClusterModel cluster_patches(const std::vector<Patch>& patches, int k, std::uint64_t seed, int pad,
                             const WorkerPool& pool = WorkerPool::serial());
ClusterModel cluster_patches(const std::vector<Patch>& patches, const DistanceMatrix& d, int k,
                             std::uint64_t seed);

/// Rotates every member by the inverse of its estimated rotation onto the centroid.
std::vector<Patch> register_cluster(const std::vector<Patch>& members, const std::vector<EulerZYZ>& rotations);
std::vector<Patch> register_cluster(const std::vector<Patch>& members, const Patch& centroid, int pad,
                                    const WorkerPool& pool = WorkerPool::serial());

/// Node (p, t) sits at Phi = 2 pi p / n_phi, Theta = pi (t + 0.5) / n_theta.
struct VarianceMap {
  std::vector<double> radii;
  int n_phi = 64, n_theta = 32;
  std::vector<std::vector<double>> variance;  // [radius][t * n_phi + p]
  std::vector<std::vector<double>> mean;      // cluster representative, same layout (may be empty)

  std::size_t nodes() const { return static_cast<std::size_t>(n_phi) * n_theta; }
  double Phi(std::size_t node) const;
  double Theta(std::size_t node) const;
};

/// Real part of every shell synthesized on the node grid.
std::vector<std::vector<double>> synthesize_shells(const Patch& p, int n_phi, int n_theta);

/// Unbiased per-node variance and mean across registered members.
VarianceMap variance_map(const std::vector<Patch>& registered, int n_phi = 64, int n_theta = 32,
                         const WorkerPool& pool = WorkerPool::serial());

struct PlacedPoint {
  int radius_index = 0;
  std::size_t node = 0;
  double radius = 0.0, Phi = 0.0, Theta = 0.0;
};

struct Placement {
  std::vector<PlacedPoint> points;
  std::vector<PlacedPoint> high_variance;  // top decile per radius
};

double great_circle_deg(double phi1, double theta1, double phi2, double theta2);

/// Greedy lowest-variance nodes with pairwise separation >= min_separation_deg
/// among points on the same radius. Ties go to the lowest (radius, node) index.
/// With signal_fraction > 0 and a mean map present, only nodes with
/// |mean| >= signal_fraction * max |mean| of their radius are candidates.
Placement place_kernel_points(const VarianceMap& vm, int n_points, double min_separation_deg = 20.0,
                              double signal_fraction = 0.0);

struct MappingAssignment {
  std::vector<NonLinearity> kappas;  // kappas[i] is applied to point i
  double score = 0.0;
};

/// Samples used by learn_mappings: one positive and one negative row per member.
struct MappingSamples {
  std::vector<std::vector<double>> positives, negatives;
};

/// Positives read the registered members at the kernel points, negatives at a
/// random high-variance node of the same radius for every point.
MappingSamples mapping_samples(const std::vector<Patch>& registered, const Placement& placement,
                               std::uint64_t seed);

/// All permutations of kappa_set onto the points ranked by marginal diversity.
std::vector<MappingAssignment> learn_mappings(const std::vector<Patch>& registered, const Placement& placement,
                                              const std::vector<NonLinearity>& kappa_set, std::uint64_t seed,
                                              int bins = 10);
std::vector<MappingAssignment> rank_mappings(const MappingSamples& samples,
                                             const std::vector<NonLinearity>& kappa_set, int bins = 10);

KernelSpec emit_kernel_spec(const Placement& placement, const MappingAssignment& mapping, int b_max,
                            int channel = 0, NonLinearity kappa1 = NonLinearity::Identity,
                            double sigma_radial = 1.0);

/// Mean over radii and nodes of the per-node standard deviation.
double mean_node_std(const VarianceMap& vm);

/// Spatial standard deviation of a shell over the sphere.
double shell_std(const SphericalExpansion& e);

}  // namespace spherefeat
