#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "oracles.hpp"
#include "spherefeat/harmonics.hpp"

using namespace spherefeat;

TEST_CASE("associated Legendre closed forms") {
  for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0}) CHECK(assoc_legendre(0, 0, x) == 1.0);
  CHECK(assoc_legendre(1, 0, 0.3) == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(assoc_legendre(1, 1, 0.5) == doctest::Approx(-std::sqrt(0.75)).epsilon(1e-14));
  // P^2_2 = 3(1-x^2), P^3_1 = -3/2 (5x^2 - 1) sqrt(1-x^2)
  CHECK(assoc_legendre(2, 2, 0.4) == doctest::Approx(3 * (1 - 0.16)).epsilon(1e-14));
  CHECK(assoc_legendre(3, 1, 0.4) == doctest::Approx(-1.5 * (5 * 0.16 - 1) * std::sqrt(1 - 0.16)).epsilon(1e-14));
  // negative order through the factorial symmetry: P^1_-1 = -(0!/2!) P^1_1
  CHECK(assoc_legendre(1, -1, 0.5) == doctest::Approx(0.5 * std::sqrt(0.75)).epsilon(1e-14));
  for (int l = 0; l <= 10; ++l) CHECK(assoc_legendre(l, 0, 0.37) == doctest::Approx(oracle::legendre(l, 0.37)).epsilon(1e-12));
}

TEST_CASE("Legendre argument checks") {
  CHECK_THROWS_AS(assoc_legendre(65, 0, 0.1), Error);
  CHECK_THROWS_AS(assoc_legendre(3, 4, 0.1), Error);
  CHECK_THROWS_AS(assoc_legendre(3, 1, 1.5), Error);
}

TEST_CASE("Y00 constant, conjugate symmetry, addition theorem") {
  for (double phi : {0.0, 1.0, 4.0})
    for (double theta : {0.0, 0.8, 3.0}) {
      cplx y = sh_basis(0, 0, phi, theta);
      CHECK(y.real() == doctest::Approx(0.2820948).epsilon(1e-7));
      CHECK(std::abs(y.imag()) < 1e-15);
    }
  cplx a = std::conj(sh_basis(3, 2, 1.1, 0.7)), b = sh_basis(3, -2, 1.1, 0.7);
  CHECK(std::abs(a - b) < 1e-14);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    double phi = 2 * kPi * u(rng), theta = kPi * u(rng);
    double s = 0;
    for (int m = -4; m <= 4; ++m) s += std::norm(sh_basis(4, m, phi, theta));
    CHECK(std::abs(s - 9.0 / (4 * kPi)) < 1e-9);
  }
}

TEST_CASE("batched basis matches single evaluation") {
  std::vector<cplx> all;
  sh_basis_all(12, 2.3, 1.1, all);
  for (int l = 0; l <= 12; ++l)
    for (int m = -l; m <= l; ++m) CHECK(std::abs(all[lm_index(l, m)] - sh_basis(l, m, 2.3, 1.1)) < 1e-12);
}

TEST_CASE("sampling guard") {
  CHECK_NOTHROW(BasisTemplate(10, 7));
  CHECK_THROWS_AS(BasisTemplate(4, 7), Error);
  CHECK_NOTHROW(BasisTemplate(4, 5));
}

TEST_CASE("template geometry and DC stencil") {
  BasisTemplate t(5, 3, 1.0);
  auto sd = t.side();
  CHECK(sd[0] == 2 * 8 + 1);
  CHECK(sd[2] == 17);
  CHECK(t.mass() > 0);
  CHECK(t.mass() == doctest::Approx(std::sqrt(4 * kPi)).epsilon(1e-12));
  for (std::size_t i = 0; i < t.support_size(); ++i) {
    cplx v = t.value(0, 0, i);
    CHECK(v.real() >= 0);
    CHECK(v.imag() == 0.0);
  }
  BasisTemplate an(5, 3, 1.0, {1.0, 1.0, 2.0});
  CHECK(an.half()[2] == 4);
  CHECK(an.half()[0] == 8);
  int maxz = 0, maxx = 0;
  for (std::size_t i = 0; i < an.support_size(); ++i) {
    maxz = std::max(maxz, std::abs(an.offset(i)[2]));
    maxx = std::max(maxx, std::abs(an.offset(i)[0]));
  }
  CHECK(maxz * 2 == maxx);
}

TEST_CASE("stencil conjugate symmetry") {
  BasisTemplate t(6, 4);
  for (int l = 0; l <= 4; ++l)
    for (int m = 1; m <= l; ++m) {
      auto p = t.stencil_dense(l, m), n = t.stencil_dense(l, -m);
      for (std::size_t i = 0; i < p.size(); ++i)
        CHECK(std::abs(n[i] - ((m % 2) ? -1.0 : 1.0) * std::conj(p[i])) < 1e-9);
    }
}

TEST_CASE("constant volume feeds only the DC coefficient") {
  Volume v({24, 24, 24});
  std::fill(v.data.begin(), v.data.end(), 3.0);
  BasisTemplate t(6, 5);
  auto e = sh_forward_point(v, 0, {12, 12, 12}, t);
  CHECK(e.at(0, 0).real() == doctest::Approx(3.0 * t.mass()).epsilon(1e-12));
  for (int l = 1; l <= 5; ++l)
    for (int m = -l; m <= l; ++m) CHECK(std::abs(e.at(l, m)) < 1e-6 * std::abs(e.at(0, 0)));
}

TEST_CASE("painted Re Y32 concentrates on (3, +-2)") {
  int n = 29, c = 14;
  double r = 10;
  Volume v({n, n, n});
  for (int z = 0; z < n; ++z)
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double dx = x - c, dy = y - c, dz = z - c, rho = std::sqrt(dx * dx + dy * dy + dz * dz);
        if (rho < 1e-9) continue;
        double phi = std::atan2(dy, dx), theta = std::acos(dz / rho);
        v.at(x, y, z) = sh_basis(3, 2, phi, theta).real();
      }
  BasisTemplate t(r, 7);
  auto e = sh_forward_point(v, 0, {c, c, c}, t);
  double peak = std::abs(e.at(3, 2));
  CHECK(std::abs(e.at(3, -2)) == doctest::Approx(peak).epsilon(1e-9));
  for (int l = 0; l <= 7; ++l)
    for (int m = -l; m <= l; ++m) {
      if (l == 3 && std::abs(m) == 2) continue;
      CHECK(std::abs(e.at(l, m)) < 0.05 * peak);
    }
}

TEST_CASE("forward transform is linear and real-symmetric") {
  std::mt19937_64 rng(4);
  Volume a = oracle::random_volume({20, 20, 20}, rng), b = oracle::random_volume({20, 20, 20}, rng);
  Volume mix = a;
  for (std::size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = 2.0 * a.data[i] - 0.7 * b.data[i];
  BasisTemplate t(5, 4);
  for (VoxelCoord p : {VoxelCoord{10, 10, 10}, VoxelCoord{2, 17, 5}}) {
    auto ea = sh_forward_point(a, 0, p, t), eb = sh_forward_point(b, 0, p, t), em = sh_forward_point(mix, 0, p, t);
    for (std::size_t i = 0; i < em.coeffs.size(); ++i) CHECK(std::abs(em.coeffs[i] - (2.0 * ea.coeffs[i] - 0.7 * eb.coeffs[i])) < 1e-9);
    for (int l = 0; l <= 4; ++l)
      for (int m = 1; m <= l; ++m)
        CHECK(std::abs(ea.at(l, -m) - ((m % 2) ? -1.0 : 1.0) * std::conj(ea.at(l, m))) < 1e-9);
  }
}

TEST_CASE("discrete Gram matrix is diagonal dominant") {
  BasisTemplate t(10, 5);
  int nc = coeff_count(5);
  std::vector<std::vector<cplx>> s(nc);
  for (int l = 0; l <= 5; ++l)
    for (int m = -l; m <= l; ++m) {
      auto& row = s[lm_index(l, m)];
      for (std::size_t i = 0; i < t.support_size(); ++i) row.push_back(t.value(l, m, i));
    }
  for (int a = 0; a < nc; ++a) {
    double diag = 0;
    for (auto v : s[a]) diag += std::norm(v);
    for (int b = 0; b < nc; ++b) {
      if (a == b) continue;
      cplx g(0.0);
      for (std::size_t i = 0; i < s[a].size(); ++i) g += s[a][i] * std::conj(s[b][i]);
      CHECK(std::abs(g) < 0.05 * diag);
    }
  }
}

TEST_CASE("field transform equals point transform") {
  std::mt19937_64 rng(8);
  Volume v = oracle::random_volume({16, 16, 16}, rng);
  BasisTemplate t(4, 2);
  auto f = sh_forward_field(v, 0, t);
  CHECK(f.grid_count() == 9);
  auto check_voxel = [&](VoxelCoord p) {
    auto ep = sh_forward_point(v, 0, p, t);
    auto ef = f.expansion(p.x, p.y, p.z);
    CHECK(oracle::max_abs_diff(ep, ef) <= 1e-5 * oracle::max_abs(ep));
  };
  check_voxel({8, 8, 8});
  std::uniform_int_distribution<int> u(0, 15);
  for (int i = 0; i < 20; ++i) check_voxel({u(rng), u(rng), u(rng)});
  // a second volume with anisotropic spacing and a different size
  Volume w = oracle::random_volume({21, 18, 14}, rng);
  w.spacing = {1.0, 1.0, 1.5};
  BasisTemplate ta(4.5, 2, 1.0, w.spacing);
  auto fw = sh_forward_field(w, 0, ta, WorkerPool(3));
  for (int i = 0; i < 20; ++i) {
    VoxelCoord p{u(rng) % 21, u(rng) % 18, u(rng) % 14};
    auto ep = sh_forward_point(w, 0, p, ta);
    CHECK(oracle::max_abs_diff(ep, fw.expansion(p.x, p.y, p.z)) <= 1e-5 * oracle::max_abs(ep));
  }
}

TEST_CASE("field transform of a constant volume") {
  Volume v({16, 16, 16});
  std::fill(v.data.begin(), v.data.end(), 1.5);
  BasisTemplate t(4, 2);
  auto f = sh_forward_field(v, 0, t);
  auto ref = sh_forward_point(v, 0, {0, 0, 0}, t);
  for (std::size_t i = 0; i < f.voxels(); ++i)
    CHECK(oracle::max_abs_diff(f.expansion(i), ref) < 1e-9);
}

TEST_CASE("field transform rejects volumes smaller than the support") {
  Volume v({8, 8, 8});
  CHECK_THROWS_AS(sh_forward_field(v, 0, BasisTemplate(4, 2)), Error);
}

TEST_CASE("band limitation never alters retained bands") {
  std::mt19937_64 rng(12);
  Volume v = oracle::random_volume({30, 30, 30}, rng);
  BasisTemplate t8(10, 8), t5(10, 5);
  auto e8 = sh_forward_point(v, 0, {15, 15, 15}, t8), e5 = sh_forward_point(v, 0, {15, 15, 15}, t5);
  CHECK(e8.truncated(5).coeffs == e5.coeffs);
}

TEST_CASE("inverse transform") {
  SphericalExpansion dc(3);
  dc.at(0, 0) = std::sqrt(4 * kPi);
  CHECK(sh_inverse(dc, 0.3, 2.0) == doctest::Approx(1.0).epsilon(1e-12));
  SphericalExpansion zero(3);
  CHECK(sh_inverse(zero, 1.0, 1.0) == 0.0);
  // synthesis -> analysis round trip by Gauss-Legendre quadrature
  std::mt19937_64 rng(2);
  auto e = oracle::random_expansion(4, rng);
  int nt = 16, np = 32;
  std::vector<double> nodes(nt), weights(nt);
  for (int i = 0; i < nt; ++i) {  // Newton on P_nt
    double x = std::cos(kPi * (i + 0.75) / (nt + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p = oracle::legendre(nt, x), p1 = oracle::legendre(nt - 1, x);
      double dp = nt * (x * p - p1) / (x * x - 1);
      x -= p / dp;
    }
    double p1 = oracle::legendre(nt - 1, x);
    nodes[i] = x;
    weights[i] = 2 * (1 - x * x) / (nt * nt * p1 * p1);
  }
  SphericalExpansion back(4);
  for (int i = 0; i < nt; ++i)
    for (int j = 0; j < np; ++j) {
      double theta = std::acos(nodes[i]), phi = 2 * kPi * j / np;
      double val = sh_inverse(e, phi, theta);
      for (int l = 0; l <= 4; ++l)
        for (int m = -l; m <= l; ++m)
          back.at(l, m) += val * std::conj(sh_basis(l, m, phi, theta)) * weights[i] * (2 * kPi / np);
    }
  CHECK(oracle::max_abs_diff(back, e) < 1e-3);
}

TEST_CASE("normalization") {
  std::mt19937_64 rng(6);
  Volume v = oracle::random_volume({20, 20, 20}, rng);
  Volume v3 = v;
  for (double& x : v3.data) x *= 3.0;
  BasisTemplate t(6, 4);
  auto a = normalize_expansion(sh_forward_point(v, 0, {10, 10, 10}, t), NormalizeMode::Grayscale);
  auto b = normalize_expansion(sh_forward_point(v3, 0, {10, 10, 10}, t), NormalizeMode::Grayscale);
  CHECK(oracle::max_abs_diff(a, b) < 1e-9);
  auto aa = normalize_expansion(a, NormalizeMode::Grayscale);
  CHECK(oracle::max_abs_diff(a, aa) < 1e-15);
  SphericalExpansion z(2);
  CHECK_THROWS_AS(normalize_expansion(z, NormalizeMode::Grayscale), Error);
  auto s = normalize_expansion(sh_forward_point(v, 0, {10, 10, 10}, t), NormalizeMode::Scale, t.mass());
  CHECK(s.at(0, 0).real() * t.mass() == doctest::Approx(sh_forward_point(v, 0, {10, 10, 10}, t).at(0, 0).real()));
}

TEST_CASE("expansion and field serialization") {
  auto dir = std::filesystem::temp_directory_path() / "spherefeat_test_harmonics";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(7);
  auto e = oracle::random_expansion(5, rng);
  save_expansion(e, (dir / "e.json").string());
  auto r = load_expansion((dir / "e.json").string());
  CHECK(oracle::max_abs_diff(e, r) == 0.0);
  Volume v = oracle::random_volume({16, 16, 16}, rng);
  auto f = sh_forward_field(v, 0, BasisTemplate(4, 2));
  save_expansion_field(f, (dir / "field").string());
  auto g = load_expansion_field((dir / "field.json").string());
  CHECK(g.b_max == 2);
  CHECK(g.dims == f.dims);
  for (std::size_t i = 0; i < f.voxels(); i += 97)
    CHECK(oracle::max_abs_diff(f.expansion(i), g.expansion(i)) < 1e-5 * (1 + oracle::max_abs(f.expansion(i))));
}
