#include "spherefeat/wigner.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

namespace spherefeat {

namespace {

double wrap_2pi(double a) {
  a = std::fmod(a, 2.0 * kPi);
  if (a < 0) a += 2.0 * kPi;
  if (a >= 2.0 * kPi) a = 0.0;
  return a;
}

double lfact(int n) { return std::lgamma(n + 1.0); }

}  // namespace

Mat3 rotation_matrix(const EulerZYZ& r) {
  double ca = std::cos(r.phi), sa = std::sin(r.phi);
  double cb = std::cos(r.theta), sb = std::sin(r.theta);
  double cg = std::cos(r.psi), sg = std::sin(r.psi);
  Mat3 rz1{{{ca, -sa, 0}, {sa, ca, 0}, {0, 0, 1}}};
  Mat3 ry{{{cb, 0, sb}, {0, 1, 0}, {-sb, 0, cb}}};
  Mat3 rz2{{{cg, -sg, 0}, {sg, cg, 0}, {0, 0, 1}}};
  return mat_mul(rz1, mat_mul(ry, rz2));
}

Mat3 mat_mul(const Mat3& a, const Mat3& b) {
  Mat3 c{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

EulerZYZ euler_from_matrix(const Mat3& m) {
  EulerZYZ r;
  double c = std::clamp(m[2][2], -1.0, 1.0);
  double s = std::hypot(m[0][2], m[1][2]);
  r.theta = std::atan2(s, c);
  if (s > 1e-12) {
    r.phi = std::atan2(m[1][2], m[0][2]);
    r.psi = std::atan2(m[2][1], -m[2][0]);
  } else if (c > 0) {
    r.phi = std::atan2(m[1][0], m[0][0]);
    r.psi = 0.0;
    r.theta = 0.0;
  } else {
    r.phi = std::atan2(-m[1][0], -m[0][0]);
    r.psi = 0.0;
    r.theta = kPi;
  }
  r.phi = wrap_2pi(r.phi);
  r.psi = wrap_2pi(r.psi);
  return r;
}

EulerZYZ canonical(const EulerZYZ& r) { return euler_from_matrix(rotation_matrix(r)); }

EulerZYZ inverse(const EulerZYZ& r) { return {-r.psi, -r.theta, -r.phi}; }

EulerZYZ compose(const EulerZYZ& a, const EulerZYZ& b) {
  return euler_from_matrix(mat_mul(rotation_matrix(a), rotation_matrix(b)));
}

double geodesic_distance(const EulerZYZ& a, const EulerZYZ& b) {
  Mat3 ra = rotation_matrix(a), rb = rotation_matrix(b);
  // relative rotation E = ra^T rb; angle from trace and the antisymmetric part
  Mat3 e{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) e[i][j] += ra[k][i] * rb[k][j];
  double c = (e[0][0] + e[1][1] + e[2][2] - 1.0) / 2.0;
  double s = 0.5 * std::sqrt(std::pow(e[2][1] - e[1][2], 2) + std::pow(e[0][2] - e[2][0], 2) +
                             std::pow(e[1][0] - e[0][1], 2));
  return std::atan2(s, c);
}

double clebsch_gordan(int l, int m, int l1, int m1, int l2, int m2) {
  require(l >= 0 && l1 >= 0 && l2 >= 0 && l <= 64 && l1 <= 64 && l2 <= 64,
          "clebsch_gordan: band out of range");
  require(std::abs(m) <= l && std::abs(m1) <= l1 && std::abs(m2) <= l2,
          "clebsch_gordan: order exceeds band");
  if (m != m1 + m2) return 0.0;
  if (l < std::abs(l1 - l2) || l > l1 + l2) return 0.0;
  double pref = 0.5 * (std::log(2.0 * l + 1.0) + lfact(l + l1 - l2) + lfact(l - l1 + l2) +
                       lfact(l1 + l2 - l) - lfact(l1 + l2 + l + 1) + lfact(l + m) + lfact(l - m) +
                       lfact(l1 - m1) + lfact(l1 + m1) + lfact(l2 - m2) + lfact(l2 + m2));
  int kmin = std::max({0, l2 - l - m1, l1 - l + m2});
  int kmax = std::min({l1 + l2 - l, l1 - m1, l2 + m2});
  double sum = 0.0;
  for (int k = kmin; k <= kmax; ++k) {
    double den = lfact(k) + lfact(l1 + l2 - l - k) + lfact(l1 - m1 - k) + lfact(l2 + m2 - k) +
                 lfact(l - l2 + m1 + k) + lfact(l - l1 - m2 + k);
    double term = std::exp(pref - den);
    sum += (k % 2) ? -term : term;
  }
  return sum;
}

double ClebschGordanCache::get(int l, int m, int l1, int m1, int l2, int m2) {
  auto pack = [](int v) { return static_cast<std::uint64_t>(v + 128) & 0xff; };
  std::uint64_t key = pack(l) | pack(m) << 8 | pack(l1) << 16 | pack(m1) << 24 | pack(l2) << 32 |
                      pack(m2) << 40;
  if (frozen_.load()) {
    auto it = table_.find(key);
    return it != table_.end() ? it->second : clebsch_gordan(l, m, l1, m1, l2, m2);
  }
  {
    std::shared_lock lock(mutex_);
    auto it = table_.find(key);
    if (it != table_.end()) return it->second;
  }
  double v = clebsch_gordan(l, m, l1, m1, l2, m2);
  std::unique_lock lock(mutex_);
  if (!frozen_.load()) table_.emplace(key, v);
  return v;
}

std::size_t ClebschGordanCache::size() const {
  std::shared_lock lock(mutex_);
  return table_.size();
}

ClebschGordanCache& ClebschGordanCache::shared() {
  static ClebschGordanCache cache;
  return cache;
}

std::vector<WignerBlock> wigner_D_all(int b_max, const EulerZYZ& rot, ClebschGordanCache& cg) {
  require(b_max >= 0 && b_max <= 32, "wigner_D: band out of range (l <= 32)");
  std::vector<WignerBlock> out(b_max + 1);
  out[0].l = 0;
  out[0].angles = rot;
  out[0].entries = {cplx(1.0)};
  if (b_max == 0) return out;

  // D^1 in the basis ordered m = 1, 0, -1 reads
  //   e^{-i psi}(1+cos)/2 e^{-i phi}   -sin/sqrt2 e^{-i phi}   e^{i psi}(1-cos)/2 e^{-i phi}
  //   e^{-i psi} sin/sqrt2             cos                    -e^{i psi} sin/sqrt2
  //   e^{-i psi}(1-cos)/2 e^{i phi}    sin/sqrt2 e^{i phi}     e^{i psi}(1+cos)/2 e^{i phi}
  double c = std::cos(rot.theta), s = std::sin(rot.theta), r2 = std::sqrt(2.0);
  double d1[3][3] = {{(1 + c) / 2, s / r2, (1 - c) / 2},     // m = -1; n = -1, 0, 1
                     {-s / r2, c, s / r2},                   // m = 0
                     {(1 - c) / 2, -s / r2, (1 + c) / 2}};   // m = 1
  WignerBlock& D1 = out[1];
  D1.l = 1;
  D1.angles = rot;
  D1.entries.assign(9, cplx(0.0));
  for (int m = -1; m <= 1; ++m)
    for (int n = -1; n <= 1; ++n)
      D1(m, n) = std::polar(1.0, -m * rot.phi) * d1[m + 1][n + 1] * std::polar(1.0, -n * rot.psi);

  for (int l = 2; l <= b_max; ++l) {
    const WignerBlock& prev = out[l - 1];
    WignerBlock& D = out[l];
    D.l = l;
    D.angles = rot;
    int w = 2 * l + 1;
    D.entries.assign(static_cast<std::size_t>(w) * w, cplx(0.0));
    // coupling[m + l][mp + 1] = <l m | 1 mp, l-1 m-mp>
    std::vector<std::array<double, 3>> coupling(w);
    for (int m = -l; m <= l; ++m)
      for (int mp = -1; mp <= 1; ++mp)
        coupling[m + l][mp + 1] = std::abs(m - mp) <= l - 1 ? cg.get(l, m, 1, mp, l - 1, m - mp) : 0.0;
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx acc(0.0);
        for (int mp = -1; mp <= 1; ++mp) {
          double cm = coupling[m + l][mp + 1];
          if (cm == 0.0) continue;
          for (int np = -1; np <= 1; ++np) {
            double cn = coupling[n + l][np + 1];
            if (cn == 0.0) continue;
            acc += cm * cn * D1(mp, np) * prev(m - mp, n - np);
          }
        }
        D(m, n) = acc;
      }
  }
  return out;
}

WignerBlock wigner_D(int l, const EulerZYZ& rot, ClebschGordanCache& cg) {
  auto all = wigner_D_all(l, rot, cg);
  return std::move(all[l]);
}

std::vector<double> wigner_d(int l, double theta) {
  WignerBlock b = wigner_D(l, {0.0, theta, 0.0});
  std::vector<double> out(b.entries.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = b.entries[i].real();
  return out;
}

std::shared_ptr<const std::vector<std::vector<double>>> wigner_d_half_pi(int b_max) {
  static std::mutex mutex;
  static std::map<int, std::shared_ptr<const std::vector<std::vector<double>>>> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(b_max);
  if (it != cache.end()) return it->second;
  auto blocks = wigner_D_all(b_max, {0.0, kPi / 2, 0.0});
  auto tables = std::make_shared<std::vector<std::vector<double>>>(b_max + 1);
  for (int l = 0; l <= b_max; ++l) {
    auto& t = (*tables)[l];
    t.resize(blocks[l].entries.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = blocks[l].entries[i].real();
  }
  cache.emplace(b_max, tables);
  return tables;
}

SphericalExpansion rotate_expansion(const SphericalExpansion& e, const EulerZYZ& rot) {
  auto blocks = wigner_D_all(e.b_max, rot);
  SphericalExpansion out(e.b_max);
  for (int l = 0; l <= e.b_max; ++l)
    for (int m = -l; m <= l; ++m) {
      cplx acc(0.0);
      for (int n = -l; n <= l; ++n) acc += blocks[l](m, n) * e.at(l, n);
      out.at(l, m) = acc;
    }
  return out;
}

}  // namespace spherefeat
