#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"
#include "spherefeat/wigner.hpp"

using namespace spherefeat;

TEST_CASE("Clebsch-Gordan special values and selection rules") {
  CHECK(clebsch_gordan(0, 0, 1, 1, 1, -1) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
  CHECK(clebsch_gordan(2, 2, 1, 1, 1, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clebsch_gordan(0, 0, 0, 0, 0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(clebsch_gordan(2, 1, 1, 1, 1, 1) == 0.0);
  CHECK(clebsch_gordan(5, 0, 1, 0, 1, 0) == 0.0);
  CHECK_THROWS_AS(clebsch_gordan(1, 2, 1, 1, 1, 1), Error);
  // <00 | l1 m1, l2 m2> = delta (-1)^(l1-m1) / sqrt(2 l2 + 1)
  for (int l1 = 0; l1 <= 4; ++l1)
    for (int m1 = -l1; m1 <= l1; ++m1)
      CHECK(clebsch_gordan(0, 0, l1, m1, l1, -m1) ==
            doctest::Approx(((l1 - m1) % 2 ? -1.0 : 1.0) / std::sqrt(2.0 * l1 + 1)).epsilon(1e-12));
  // stretched state at l = 16 stays finite
  CHECK(clebsch_gordan(32, 32, 16, 16, 16, 16) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("Clebsch-Gordan orthogonality for bands up to 6") {
  double worst = 0.0;
  for (int l1 = 0; l1 <= 6; ++l1)
    for (int l2 = 0; l2 <= 6; ++l2) {
      // sum over m1 m2 of <lm|..><l'm'|..> = delta
      for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l)
        for (int lp = std::abs(l1 - l2); lp <= l1 + l2; ++lp)
          for (int m = -std::min(l, lp); m <= std::min(l, lp); ++m) {
            double s = 0;
            for (int m1 = -l1; m1 <= l1; ++m1) {
              int m2 = m - m1;
              if (std::abs(m2) > l2) continue;
              s += clebsch_gordan(l, m, l1, m1, l2, m2) * clebsch_gordan(lp, m, l1, m1, l2, m2);
            }
            worst = std::max(worst, std::abs(s - (l == lp ? 1.0 : 0.0)));
          }
      // sum over l m of <lm|l1 m1 l2 m2><lm|l1 m1' l2 m2'> = delta
      for (int m1 = -l1; m1 <= l1; ++m1)
        for (int m2 = -l2; m2 <= l2; ++m2)
          for (int m1p = -l1; m1p <= l1; ++m1p) {
            int m2p = m1 + m2 - m1p;
            if (std::abs(m2p) > l2) continue;
            double s = 0;
            for (int l = std::abs(l1 - l2); l <= l1 + l2; ++l) {
              int m = m1 + m2;
              if (std::abs(m) > l) continue;
              s += clebsch_gordan(l, m, l1, m1, l2, m2) * clebsch_gordan(l, m, l1, m1p, l2, m2p);
            }
            worst = std::max(worst, std::abs(s - (m1 == m1p ? 1.0 : 0.0)));
          }
    }
  CHECK(worst < 1e-9);
}

TEST_CASE("CG cache matches direct evaluation and freezes") {
  ClebschGordanCache cache;
  CHECK(cache.get(3, 1, 2, 0, 1, 1) == clebsch_gordan(3, 1, 2, 0, 1, 1));
  CHECK(cache.size() == 1);
  cache.freeze();
  CHECK(cache.get(4, 1, 2, 0, 2, 1) == clebsch_gordan(4, 1, 2, 0, 2, 1));
  CHECK(cache.size() == 1);
}

TEST_CASE("D0, D1 and null rotation") {
  auto d0 = wigner_D(0, {0.4, 1.2, 2.2});
  CHECK(d0.entries.size() == 1);
  CHECK(std::abs(d0.entries[0] - cplx(1.0)) < 1e-15);
  auto d1 = wigner_D(1, {0.0, kPi / 3, 0.0});
  CHECK(d1(0, 0).real() == doctest::Approx(0.5).epsilon(1e-12));
  auto id = wigner_D(3, {0, 0, 0});
  for (int m = -3; m <= 3; ++m)
    for (int n = -3; n <= 3; ++n) CHECK(std::abs(id(m, n) - cplx(m == n ? 1.0 : 0.0)) < 1e-12);
  CHECK_THROWS_AS(wigner_D(33, {0, 0, 0}), Error);
}

TEST_CASE("D1 matches the explicit matrix with the m = 1, 0, -1 ordering") {
  double phi = 0.7, theta = 1.1, psi = 2.3;
  auto D = wigner_D(1, {phi, theta, psi});
  double c = std::cos(theta), s = std::sin(theta), r2 = std::sqrt(2.0);
  auto e = [](double a) { return std::polar(1.0, a); };
  CHECK(std::abs(D(1, 1) - e(-psi) * (1 + c) / 2.0 * e(-phi)) < 1e-14);
  CHECK(std::abs(D(1, 0) - (-s / r2) * e(-phi)) < 1e-14);
  CHECK(std::abs(D(1, -1) - e(psi) * (1 - c) / 2.0 * e(-phi)) < 1e-14);
  CHECK(std::abs(D(0, 1) - e(-psi) * s / r2) < 1e-14);
  CHECK(std::abs(D(0, -1) - (-e(psi) * s / r2)) < 1e-14);
  CHECK(std::abs(D(-1, 0) - s / r2 * e(phi)) < 1e-14);
  CHECK(std::abs(D(-1, -1) - e(psi) * (1 + c) / 2.0 * e(phi)) < 1e-14);
}

TEST_CASE("d_00 is the Legendre polynomial on a 50 point grid") {
  double worst = 0;
  for (int l = 0; l <= 10; ++l)
    for (int i = 0; i < 50; ++i) {
      double theta = kPi * i / 49.0;
      auto d = wigner_d(l, theta);
      worst = std::max(worst, std::abs(d[l * (2 * l + 1) + l] - assoc_legendre(l, 0, std::cos(theta))));
    }
  CHECK(worst < 1e-9);
  auto d4 = wigner_d(4, 0.9);
  CHECK(d4[4 * 9 + 4] == doctest::Approx(assoc_legendre(4, 0, std::cos(0.9))).epsilon(1e-9));
}

TEST_CASE("wigner_d has no imaginary residue, identity at zero, orthonormal at pi/2") {
  auto b = wigner_D(5, {0, 0.8, 0});
  for (auto v : b.entries) CHECK(std::abs(v.imag()) < 1e-9);
  auto d0 = wigner_d(5, 0.0);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) CHECK(std::abs(d0[i * 11 + j] - (i == j ? 1.0 : 0.0)) < 1e-12);
  auto d = wigner_d(5, kPi / 2);
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j) {
      double s = 0;
      for (int k = 0; k < 11; ++k) s += d[i * 11 + k] * d[j * 11 + k];
      CHECK(std::abs(s - (i == j ? 1.0 : 0.0)) < 1e-9);
    }
}

TEST_CASE("recursion equals the direct d formula for l <= 6") {
  double worst = 0;
  for (double theta : {0.0, 0.3, 1.0, kPi / 2, 2.2, 3.0, kPi})
    for (int l = 0; l <= 6; ++l) {
      auto d = wigner_d(l, theta);
      for (int m = -l; m <= l; ++m)
        for (int n = -l; n <= l; ++n)
          worst = std::max(worst, std::abs(d[(m + l) * (2 * l + 1) + n + l] - oracle::wigner_d_direct(l, m, n, theta)));
    }
  CHECK(worst < 1e-9);
  // full D against e^{-i m phi} d e^{-i n psi}
  EulerZYZ r{1.3, 0.9, 4.1};
  for (int l = 0; l <= 6; ++l) {
    auto D = wigner_D(l, r);
    for (int m = -l; m <= l; ++m)
      for (int n = -l; n <= l; ++n) {
        cplx ref = std::polar(1.0, -m * r.phi) * oracle::wigner_d_direct(l, m, n, r.theta) * std::polar(1.0, -n * r.psi);
        CHECK(std::abs(D(m, n) - ref) < 1e-9);
      }
  }
}

TEST_CASE("unitarity and symmetry for l <= 10 over random angles") {
  std::mt19937_64 rng(17);
  double worst_u = 0, worst_s = 0;
  for (int trial = 0; trial < 100; ++trial) {
    auto blocks = wigner_D_all(10, oracle::random_rotation(rng));
    for (const auto& D : blocks) {
      int l = D.l;
      for (int a = -l; a <= l; ++a)
        for (int b = -l; b <= l; ++b) {
          cplx s(0);
          for (int k = -l; k <= l; ++k) s += std::conj(D(k, a)) * D(k, b);
          worst_u = std::max(worst_u, std::abs(s - cplx(a == b ? 1.0 : 0.0)));
          cplx sym = ((a - b) % 2 ? -1.0 : 1.0) * std::conj(D(-a, -b));
          worst_s = std::max(worst_s, std::abs(D(a, b) - sym));
        }
    }
  }
  CHECK(worst_u < 1e-9);
  CHECK(worst_s < 1e-9);
}

TEST_CASE("conj(D_m0) is proportional to Y") {
  EulerZYZ r{0.8, 1.9, 0.4};
  for (int l = 0; l <= 6; ++l) {
    auto D = wigner_D(l, r);
    for (int m = -l; m <= l; ++m)
      CHECK(std::abs(std::conj(D(m, 0)) - std::sqrt(4 * kPi / (2 * l + 1)) * sh_basis(l, m, r.phi, r.theta)) < 1e-9);
  }
}

TEST_CASE("rotation matrices and Euler conversion") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 50; ++i) {
    EulerZYZ r = oracle::random_rotation(rng);
    EulerZYZ back = euler_from_matrix(rotation_matrix(r));
    CHECK(geodesic_distance(r, back) < 1e-9);
    CHECK(back.phi == doctest::Approx(r.phi).epsilon(1e-9));
    EulerZYZ inv = inverse(r);
    CHECK(geodesic_distance(compose(r, inv), {0, 0, 0}) < 1e-9);
  }
  // psi about z first, then theta about y, then phi about z
  Mat3 m = rotation_matrix({kPi / 2, 0, 0});
  CHECK(m[1][0] == doctest::Approx(1.0));
  EulerZYZ t0 = euler_from_matrix(rotation_matrix({1.0, 0.0, 0.5}));
  CHECK(t0.theta == 0.0);
  CHECK(t0.phi + t0.psi == doctest::Approx(1.5));
}

TEST_CASE("rotating expansions matches rotating the sampled function") {
  std::mt19937_64 rng(31);
  auto e = oracle::random_expansion(5, rng);
  EulerZYZ r{0.9, 1.3, 2.6};
  auto er = rotate_expansion(e, r);
  Mat3 R = rotation_matrix(r);
  std::uniform_real_distribution<double> u(0, 1);
  for (int i = 0; i < 20; ++i) {
    double phi = 2 * kPi * u(rng), theta = kPi * u(rng);
    double v[3] = {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
    double w[3] = {0, 0, 0};  // R^-1 v = R^T v
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) w[a] += R[b][a] * v[b];
    double pw = std::atan2(w[1], w[0]), tw = std::acos(std::clamp(w[2], -1.0, 1.0));
    CHECK(sh_inverse(er, phi, theta) == doctest::Approx(sh_inverse(e, pw, tw)).epsilon(1e-9));
  }
}

TEST_CASE("rotation round trip, energy, identity, homomorphism") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    auto e = oracle::random_expansion(8, rng);
    EulerZYZ r1 = oracle::random_rotation(rng), r2 = oracle::random_rotation(rng);
    CHECK(oracle::max_abs_diff(rotate_expansion(e, {0, 0, 0}), e) < 1e-12);
    auto back = rotate_expansion(rotate_expansion(e, r1), inverse(r1));
    CHECK(oracle::max_abs_diff(back, e) < 1e-9);
    auto er = rotate_expansion(e, r1);
    for (int l = 0; l <= 8; ++l) CHECK(std::abs(er.band_energy(l) - e.band_energy(l)) < 1e-9 * (1 + e.band_energy(l)));
    auto two = rotate_expansion(rotate_expansion(e, r2), r1);
    auto one = rotate_expansion(e, compose(r1, r2));
    CHECK(oracle::max_abs_diff(two, one) < 1e-8);
    auto D1 = wigner_D(4, r1), D2 = wigner_D(4, r2), D12 = wigner_D(4, compose(r1, r2));
    for (int m = -4; m <= 4; ++m)
      for (int n = -4; n <= 4; ++n) {
        cplx s(0);
        for (int k = -4; k <= 4; ++k) s += D1(m, k) * D2(k, n);
        CHECK(std::abs(s - D12(m, n)) < 1e-8);
      }
  }
}

TEST_CASE("d at pi/2 table is cached and consistent") {
  auto a = wigner_d_half_pi(6), b = wigner_d_half_pi(6);
  CHECK(a.get() == b.get());
  auto d3 = wigner_d(3, kPi / 2);
  for (std::size_t i = 0; i < d3.size(); ++i) CHECK((*a)[3][i] == doctest::Approx(d3[i]).epsilon(1e-12));
}
