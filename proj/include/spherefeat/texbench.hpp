#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "spherefeat/features.hpp"
#include "spherefeat/parallel.hpp"
#include "spherefeat/volume.hpp"
#include "spherefeat/wigner.hpp"

namespace spherefeat {

struct Image2D {
  int nx = 0, ny = 0;
  std::vector<double> data;  // x fastest

  double& at(int x, int y) { return data[static_cast<std::size_t>(y) * nx + x]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y) * nx + x]; }
};

constexpr int kTextureKinds = 6;

/// Periodic procedural texture of the given kind in [0, 1]: oriented
/// sinusoids plus band-limited noise, seeded.
Image2D base_texture(int kind, int n, std::uint64_t seed);

/// V(x, y, z) = img(x, y) for every slice.
Volume extrude_texture(const Image2D& img, int nz);

struct TextureComponent {
  int kind = 0;
  double alpha = 1.0;
  EulerZYZ rot;
};

struct TextureRecipe {
  std::vector<TextureComponent> components;
  void validate() const;
};

/// 1..max_components components of one kind with random weights in [0, 1]
/// and uniformly random rotations.
TextureRecipe random_recipe(int kind, std::uint64_t seed, int max_components = 3);

std::string recipe_to_json_text(const TextureRecipe& r);
TextureRecipe recipe_from_json_text(const std::string& text);

/// sum_i alpha_i R_i V_i with trilinear resampling, shifted to mean 0.5.
/// Component i extrudes base_texture(kind_i, ., seed + i).
Volume synth_volume_texture(const TextureRecipe& recipe, std::array<int, 3> dims, std::uint64_t seed);

struct SplitPlane {
  int axis = 0;
  double position = -1.0;  // negative: volume center
};

struct BenchmarkCase {
  Volume volume;
  Volume labels;  // 0 for texture A (coordinate below the plane), 1 for B
  TextureRecipe a, b;
  double shift_a = 0.0, shift_b = 0.0;
};

/// Half-space composite of two textures. With `rotate` each texture gets an
/// extra random rotation; each gets an additive shift uniform in
/// [-gray_shift, gray_shift]. The random draws do not depend on gray_shift.
BenchmarkCase make_benchmark(const TextureRecipe& a, const TextureRecipe& b, std::array<int, 3> dims,
                             const SplitPlane& plane, double gray_shift, std::uint64_t seed, bool rotate = true);

struct NearestCentroid {
  std::vector<std::vector<double>> centroids;
  int predict(const double* x) const;
};

/// Class means of voxels with labels 0..C-1; throws on an empty class.
NearestCentroid fit_nearest_centroid(const FeatureField& train, const Volume& labels);

struct SegmentResult {
  Volume labels;
  double accuracy = 0.0;
};

SegmentResult nearest_centroid_segment(const FeatureField& train, const Volume& train_labels,
                                       const FeatureField& test, const Volume& truth);

/// Named feature sets over a list of radii:
///   sh_abs, sh_phase (consecutive radius pairs), sh_autocorr (square, raw),
///   sh_autocorr_norm (square, normalized), np_gray (two-point gray np per radius).
FeatureField texture_features(const Volume& v, const std::string& feature, const std::vector<double>& radii,
                              int b_max, const WorkerPool& pool = WorkerPool::serial());
std::vector<std::string> texture_feature_names();

/// One benchmark case: a texture pair with a training composite, a test
/// composite and the same test composite with per-texture gray shifts.
struct TextureCase {
  int kind_a = 0, kind_b = 1;
  TextureRecipe a, b;
  std::uint64_t train_seed = 0, test_seed = 0;
  BenchmarkCase train, test, test_shifted;
};

/// Case i draws two distinct kinds, both recipes and both case seeds from
/// mt19937_64(seed) in sequence.
std::vector<TextureCase> generate_texture_cases(int cases, std::array<int, 3> dims, std::uint64_t seed,
                                                double gray_shift);

struct TextureScore {
  double accuracy = 0.0, accuracy_shifted = 0.0;
  double loss_points() const { return 100.0 * (accuracy - accuracy_shifted); }
};

/// Nearest-centroid segmentation trained on `train` and scored on both test volumes.
TextureScore score_texture_case(const Volume& train, const Volume& train_labels, const Volume& test,
                                const Volume& test_shifted, const Volume& test_labels, const std::string& feature,
                                const std::vector<double>& radii, int b_max,
                                const WorkerPool& pool = WorkerPool::serial());

/// Columns of several fields with equal dims, side by side.
FeatureField concat_features(const std::vector<FeatureField>& parts);

}  // namespace spherefeat
