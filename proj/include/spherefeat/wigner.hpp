#pragma once

#include <array>
#include <atomic>
#include <memory>
#include <shared_mutex>
#include <unordered_map>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/harmonics.hpp"

namespace spherefeat {

/// zyz Euler angles: R = Rz(phi) * Ry(theta) * Rz(psi), i.e. psi about z is
/// applied first, then theta about y, then phi about z.
struct EulerZYZ {
  double phi = 0.0, theta = 0.0, psi = 0.0;
};

using Mat3 = std::array<std::array<double, 3>, 3>;

Mat3 rotation_matrix(const EulerZYZ& r);
Mat3 mat_mul(const Mat3& a, const Mat3& b);
/// Euler angles of a rotation matrix with theta in [0, pi], phi and psi in [0, 2 pi).
EulerZYZ euler_from_matrix(const Mat3& m);
/// Canonical representative of the same rotation.
EulerZYZ canonical(const EulerZYZ& r);
/// Inverse rotation, (-psi, -theta, -phi).
EulerZYZ inverse(const EulerZYZ& r);
/// Euler angles of a * b.
EulerZYZ compose(const EulerZYZ& a, const EulerZYZ& b);
/// Rotation angle of a^-1 b in radians.
double geodesic_distance(const EulerZYZ& a, const EulerZYZ& b);

/// <l m | l1 m1, l2 m2> by the closed Racah form with log-factorials.
double clebsch_gordan(int l, int m, int l1, int m1, int l2, int m2);

/// Lazily filled CG table. Concurrent fills are idempotent; after freeze()
/// reads skip locking and misses are computed without being stored.
class ClebschGordanCache {
 public:
  double get(int l, int m, int l1, int m1, int l2, int m2);
  void freeze() { frozen_.store(true); }
  bool frozen() const { return frozen_.load(); }
  std::size_t size() const;

  /// Process-wide instance used when callers do not pass one.
  static ClebschGordanCache& shared();

 private:
  std::unordered_map<std::uint64_t, double> table_;
  mutable std::shared_mutex mutex_;
  std::atomic<bool> frozen_{false};
};

/// (2l+1)x(2l+1) rotation matrix of band l, indexed by (m, n) in [-l, l].
struct WignerBlock {
  int l = 0;
  EulerZYZ angles;
  std::vector<cplx> entries;

  cplx& operator()(int m, int n) { return entries[(m + l) * (2 * l + 1) + (n + l)]; }
  const cplx& operator()(int m, int n) const { return entries[(m + l) * (2 * l + 1) + (n + l)]; }
};

/// D^l(phi, theta, psi) via band-wise CG recursion from D^1.
WignerBlock wigner_D(int l, const EulerZYZ& rot, ClebschGordanCache& cg = ClebschGordanCache::shared());

/// D^0 .. D^b_max in one recursion pass.
std::vector<WignerBlock> wigner_D_all(int b_max, const EulerZYZ& rot,
                                      ClebschGordanCache& cg = ClebschGordanCache::shared());

/// Real d^l(theta) = D^l(0, theta, 0), row-major (2l+1)^2.
std::vector<double> wigner_d(int l, double theta);

/// d^l(pi/2) for l = 0..b_max, computed once per b_max and shared read-only.
std::shared_ptr<const std::vector<std::vector<double>>> wigner_d_half_pi(int b_max);

/// f'^l_m = sum_n D^l_mn f^l_n. The result is the expansion of f(R^-1 x).
SphericalExpansion rotate_expansion(const SphericalExpansion& e, const EulerZYZ& rot);

}  // namespace spherefeat
