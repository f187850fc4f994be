#pragma once

#include <array>
#include <string>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/harmonics.hpp"
#include "spherefeat/parallel.hpp"
#include "spherefeat/so3corr.hpp"
#include "spherefeat/volume.hpp"
#include "spherefeat/wigner.hpp"

namespace spherefeat {

/// Per-voxel feature vectors, voxel-major: values[voxel * count() + k].
struct FeatureField {
  std::array<int, 3> dims{0, 0, 0};
  std::vector<std::string> names;
  std::vector<double> values;

  std::size_t voxels() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t count() const { return names.size(); }
  std::size_t voxel_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
  }
  double& at(std::size_t voxel, std::size_t k) { return values[voxel * count() + k]; }
  double at(std::size_t voxel, std::size_t k) const { return values[voxel * count() + k]; }
  /// One feature as a single-channel volume.
  Volume feature(std::size_t k) const;
  void validate() const;
};

/// Written as a volume pair with one channel per feature and the names in the header.
void save_feature_field(const FeatureField& f, const std::string& path);
FeatureField load_feature_field(const std::string& path);

enum class NonLinearity { Square, Cube, Pow4, SqrtAbs, Identity };

double apply(NonLinearity k, double x);
NonLinearity parse_nonlinearity(const std::string& name);
std::string to_string(NonLinearity k);

// ---- features of a single expansion ---------------------------------------

/// sqrt(sum_m |f^l_m|^2) for l = 0..b_max.
std::vector<double> sh_abs(const SphericalExpansion& e);

struct PhaseFeature {
  std::vector<double> values;    // bands 1..b_max
  std::vector<bool> degenerate;  // band norm of either input <= 1e-12; value is 0
};

/// Re <p^l[e1], p^l[e2]> with p^l the unit band vectors.
PhaseFeature sh_phase(const SphericalExpansion& e1, const SphericalExpansion& e2);

/// Haar-weighted sum of kappa over the autocorrelation grid. The normalized
/// variant uses the mean-free, variance-scaled correlation and throws on a
/// constant signal.
double sh_autocorr(const SphericalExpansion& e, NonLinearity kappa, int pad, bool normalized = false);

/// sum_m f^l_m sum_m1 <l m | l1 m1, l2 m-m1> conj(f^l1_m1) conj(f^l2_(m-m1)).
cplx sh_bispectrum(const SphericalExpansion& e, int l1, int l2, int l,
                   ClebschGordanCache& cg = ClebschGordanCache::shared());

// ---- field features ---------------------------------------------------------

struct ShellParams {
  double radius = 4.0;
  int b_max = 4;
  int channel = 0;
  double sigma_radial = 1.0;
};

FeatureField sh_abs_field(const Volume& v, const ShellParams& p,
                          const WorkerPool& pool = WorkerPool::serial());
/// Bands 1..b_max between radii r1 and r2 (both from p except radius), plus a
/// trailing count of degenerate bands per voxel.
FeatureField sh_phase_field(const Volume& v, const ShellParams& p, double r1, double r2,
                            const WorkerPool& pool = WorkerPool::serial());
/// Constant neighborhoods give 0 in normalized mode.
FeatureField sh_autocorr_field(const Volume& v, const ShellParams& p, NonLinearity kappa, int pad,
                               bool normalized, const WorkerPool& pool = WorkerPool::serial());
/// Two features (real, imag) per (l1, l2, l) triple.
FeatureField sh_bispectrum_field(const Volume& v, const ShellParams& p,
                                 const std::vector<std::array<int, 3>>& triples,
                                 const WorkerPool& pool = WorkerPool::serial());

// ---- Haar kernels -----------------------------------------------------------

/// Solid-angle weights of the spherical shell (sum 4 pi); the offsets are those
/// of the basis template of the same radius.
struct SphereTemplate {
  explicit SphereTemplate(double radius, double sigma_radial = 1.0,
                          std::array<double, 3> spacing = {1.0, 1.0, 1.0});
  BasisTemplate shell;
  double mass() const;
};

/// Zonal expansion of a unit-mass ring at chord distance r_c from the north
/// pole of the sphere of radius r: C^l_0 = Y^l_0(alpha), alpha = 2 asin(r_c / 2r).
SphericalExpansion circle_template(double radius, double chord, int b_max);

struct Haar2pSpec {
  NonLinearity kappa1 = NonLinearity::Identity;
  NonLinearity kappa2 = NonLinearity::Identity;
  double radius = 4.0;
  int channel1 = 0, channel2 = 0;
  double sigma_radial = 1.0;
};

FeatureField haar_2p(const Volume& v, const Haar2pSpec& spec,
                     const WorkerPool& pool = WorkerPool::serial());
/// Direct spatial sum at one voxel (reflective borders).
double haar_2p_direct(const Volume& v, const Haar2pSpec& spec, const VoxelCoord& c);

struct Haar3pSpec {
  NonLinearity kappa1 = NonLinearity::Identity;
  NonLinearity kappa2 = NonLinearity::Identity;
  NonLinearity kappa3 = NonLinearity::Identity;
  double radius = 4.0;
  double chord = 2.0;  // r_c, distance between the two shell points
  int b_max = 4;
  int channel1 = 0, channel2 = 0, channel3 = 0;
  double sigma_radial = 1.0;
};

/// kappa1(X) * 2 pi * sum_l P_l(cos alpha) sum_m x2^l_m conj(x3^l_m), which is
/// the integral over SO(3) (volume 8 pi^2) of kappa2(x2) kappa3(x3).
FeatureField haar_3p(const Volume& v, const Haar3pSpec& spec,
                     const WorkerPool& pool = WorkerPool::serial());
double haar_3p_value(double center, const SphericalExpansion& x2, const SphericalExpansion& x3,
                     const Haar3pSpec& spec);

struct KernelPoint {
  NonLinearity kappa = NonLinearity::Identity;
  double radius = 4.0;
  int channel = 0;
  double Phi = 0.0, Theta = 0.0;
};

enum class NpMode { Fast, Separable };

struct KernelSpec {
  NonLinearity kappa1 = NonLinearity::Identity;
  int channel1 = 0;
  std::vector<KernelPoint> points;
  NpMode mode = NpMode::Fast;
  bool gray = false;  // normalized correlations, no center factor
  int b_max = 4;
  double sigma_radial = 1.0;
};

void validate_kernel(const KernelSpec& spec);
KernelSpec kernel_from_json_text(const std::string& text);
std::string kernel_to_json_text(const KernelSpec& spec);

/// Harmonic point template conj(Y^l_m(Phi, Theta)); correlating f against it
/// gives f(R p) at every rotation R.
SphericalExpansion point_template(int b_max, double Phi, double Theta);

/// Haar sum over the padded grid of prod_i C_i at one voxel. `expansions[i]`
/// is the neighborhood expansion used for point i (already kappa-mapped in
/// separable mode). Returns 0 for a degenerate neighborhood in gray mode.
double haar_np_value(double center, const std::vector<SphericalExpansion>& expansions,
                     const KernelSpec& spec, int pad);

FeatureField haar_np(const Volume& v, const KernelSpec& spec, int pad,
                     const WorkerPool& pool = WorkerPool::serial());

}  // namespace spherefeat
