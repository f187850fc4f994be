#pragma once

#include <array>
#include <string>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/parallel.hpp"
#include "spherefeat/volume.hpp"

namespace spherefeat {

/// Band-limited SH coefficients f^l_m, 0 <= l <= b_max, packed band-major.
struct SphericalExpansion {
  int b_max = 0;
  std::vector<cplx> coeffs;

  SphericalExpansion() : coeffs(1) {}
  explicit SphericalExpansion(int b) : b_max(b), coeffs(coeff_count(b)) {
    require(b >= 0, "expansion: b_max must be >= 0");
  }

  cplx& at(int l, int m) { return coeffs[lm_index(l, m)]; }
  const cplx& at(int l, int m) const { return coeffs[lm_index(l, m)]; }

  /// Copy restricted to bands <= b.
  SphericalExpansion truncated(int b) const;

  /// sum_m |f^l_m|^2
  double band_energy(int l) const;
};

/// P^l_m(x) with the Condon-Shortley phase; negative m through the factorial symmetry.
double assoc_legendre(int l, int m, double x);

/// Y^l_m(phi, theta), orthonormal, phi azimuth and theta colatitude.
cplx sh_basis(int l, int m, double phi, double theta);

/// All Y^l_m(phi, theta) for l <= b_max, packed band-major.
void sh_basis_all(int b_max, double phi, double theta, std::vector<cplx>& out);

/// Sampling-theorem guard: smallest equatorial circumference (in voxels) a
/// radius must provide for b_max.
int required_circumference(int b_max);

/// Discrete SH templates on the voxel grid. Only voxels inside the radial
/// window are kept; stencil values are stored for m >= 0 and the m < 0 half
/// follows from conjugate symmetry.
class BasisTemplate {
 public:
  BasisTemplate(double radius, int b_max, double sigma_radial = 1.0,
                std::array<double, 3> spacing = {1.0, 1.0, 1.0});

  double radius() const { return radius_; }
  int b_max() const { return b_max_; }
  double sigma_radial() const { return sigma_; }
  const std::array<double, 3>& spacing() const { return spacing_; }
  /// Half extent per axis in voxels; the stencil side is 2*half+1.
  const std::array<int, 3>& half() const { return half_; }
  std::array<int, 3> side() const { return {2 * half_[0] + 1, 2 * half_[1] + 1, 2 * half_[2] + 1}; }

  /// Sum of the Y^0_0 stencil.
  double mass() const { return mass_; }

  std::size_t support_size() const { return offsets_.size(); }
  const std::array<int, 3>& offset(std::size_t i) const { return offsets_[i]; }
  /// Solid-angle weight of support voxel i (weights sum to 4 pi).
  double weight(std::size_t i) const { return weights_[i]; }

  /// Stencil value of (l, m) at support voxel i.
  cplx value(int l, int m, std::size_t i) const;

  /// Dense stencil of (l, m) over side()[0] x side()[1] x side()[2], x fastest.
  std::vector<cplx> stencil_dense(int l, int m) const;

 private:
  int half_count() const { return (b_max_ + 1) * (b_max_ + 2) / 2; }
  static int half_index(int l, int m) { return l * (l + 1) / 2 + m; }

  double radius_;
  int b_max_;
  double sigma_;
  std::array<double, 3> spacing_;
  std::array<int, 3> half_{};
  double mass_ = 0.0;
  std::vector<std::array<int, 3>> offsets_;
  std::vector<double> weights_;
  std::vector<cplx> table_;  // [half_index][support voxel]
};

/// Expansion of the neighborhood of one voxel (reflective extension at borders).
SphericalExpansion sh_forward_point(const Volume& v, int channel, const VoxelCoord& center,
                                    const BasisTemplate& t);

/// Per-voxel expansions for a whole volume. Grids are stored for m >= 0; the
/// m < 0 coefficients follow from real-input symmetry.
struct ExpansionField {
  std::array<int, 3> dims{0, 0, 0};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  double radius = 0.0;
  double sigma_radial = 1.0;
  int b_max = 0;
  std::vector<std::vector<cplx>> grids;  // indexed by l(l+1)/2 + m, m >= 0

  std::size_t voxels() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t voxel_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims[1] + y) * dims[0] + x;
  }
  /// Number of logical coefficient grids, (b_max+1)^2.
  int grid_count() const { return coeff_count(b_max); }
  cplx at(int l, int m, std::size_t voxel) const;
  SphericalExpansion expansion(std::size_t voxel) const;
  SphericalExpansion expansion(int x, int y, int z) const { return expansion(voxel_index(x, y, z)); }
};

ExpansionField sh_forward_field(const Volume& v, int channel, const BasisTemplate& t,
                                const WorkerPool& pool = WorkerPool::serial());

void save_expansion_field(const ExpansionField& f, const std::string& path);
ExpansionField load_expansion_field(const std::string& path);

/// Real part of sum_l sum_m f^l_m Y^l_m(phi, theta).
double sh_inverse(const SphericalExpansion& e, double phi, double theta);

enum class NormalizeMode { Grayscale, Scale };

/// Grayscale divides by f^0_0; Scale divides by the caller-supplied template mass.
SphericalExpansion normalize_expansion(const SphericalExpansion& e, NormalizeMode mode,
                                       double mass = 0.0);

/// JSON form {"b_max": b, "coeffs": [[re, im], ...]} used by the CLI.
void save_expansion(const SphericalExpansion& e, const std::string& path);
SphericalExpansion load_expansion(const std::string& path);

}  // namespace spherefeat
