#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "oracles.hpp"
#include "spherefeat/kernellearn.hpp"
#include "spherefeat/so3corr.hpp"

using namespace spherefeat;

namespace {

Patch make_patch(std::vector<double> radii, std::vector<SphericalExpansion> shells, int label = 1) {
  Patch p;
  p.radii = std::move(radii);
  p.shells = std::move(shells);
  p.label = label;
  return p;
}

Patch random_patch(int b, std::mt19937_64& rng, int label = 1) {
  return make_patch({3.0, 5.0}, {oracle::smooth_expansion(b, rng, 1.0), oracle::smooth_expansion(b, rng, 1.0)},
                    label);
}

Patch rotated(const Patch& p, const EulerZYZ& r) {
  Patch q = p;
  for (auto& s : q.shells) s = rotate_expansion(s, r);
  return q;
}

// Smooth bump of angular width `width` around direction (phi0, theta0).
double bump(double phi, double theta, double phi0, double theta0, double width) {
  double a = rad(great_circle_deg(phi, theta, phi0, theta0));
  return std::exp(-a * a / (2 * width * width));
}

bool in_sector(double phi, double theta) { return great_circle_deg(phi, theta, 0.0, kPi / 2) < 60.0; }

// Members share a base pattern and differ by a random bump amplitude at (0, pi/2).
std::vector<Patch> sector_members(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> amp(0.0, 1.0);
  std::vector<Patch> out;
  for (int i = 0; i < n; ++i) {
    double a = amp(rng);
    auto f = [a](double phi, double theta) {
      return 2.0 + 0.3 * std::cos(theta) + a * bump(phi, theta, 0.0, kPi / 2, 0.3);
    };
    out.push_back(make_patch({4.0}, {oracle::project(f, 8)}));
  }
  return out;
}

}  // namespace

TEST_CASE("patch distance") {
  std::mt19937_64 rng(1);
  const int pad = kDefaultLearnPad;
  for (int trial = 0; trial < 10; ++trial) {
    auto a = random_patch(6, rng);
    CHECK(patch_distance(a, a, pad).distance <= 0.02);
    CHECK(patch_distance(a, a, pad).distance >= -1e-9);
    auto R = oracle::random_rotation(rng);
    auto d = patch_distance(rotated(a, R), a, pad);
    CHECK(d.distance <= 0.02);
    // geodesic: the summed Euler metric is ill-conditioned next to theta = pi
    CHECK(deg(geodesic_distance(R, d.rot)) <= error_bound_deg(6, pad));
    auto c = random_patch(6, rng);
    double x = patch_distance(a, c, pad).distance;
    CHECK(x >= 0.0);
    CHECK(x <= 2.0);
  }
  auto a = random_patch(4, rng);
  auto flat = make_patch({3.0, 5.0}, {SphericalExpansion(4), SphericalExpansion(4)});
  flat.shells[0].at(0, 0) = flat.shells[1].at(0, 0) = 2.0;
  CHECK_THROWS_AS(patch_distance(a, flat, 8), Error);
  auto other = make_patch({3.0, 6.0}, a.shells);
  CHECK_THROWS_AS(patch_distance(a, other, 8), Error);
  auto bad = make_patch({5.0, 3.0}, a.shells);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("clustering rotated copies of two prototypes") {
  std::mt19937_64 rng(2);
  auto p1 = random_patch(5, rng, 1), p2 = random_patch(5, rng, 2);
  std::vector<Patch> patches;
  for (int i = 0; i < 8; ++i) {
    patches.push_back(rotated(p1, oracle::random_rotation(rng)));
    patches.push_back(rotated(p2, oracle::random_rotation(rng)));
  }
  auto m = cluster_patches(patches, 2, 7, 32);
  REQUIRE(m.k == 2);
  for (std::size_t i = 0; i < patches.size(); ++i)
    CHECK(m.assignments[i] == m.assignments[i % 2]);
  CHECK(m.assignments[0] != m.assignments[1]);
  CHECK(m.homogeneity == std::vector<double>{1.0, 1.0});
  CHECK(m.selected == std::vector<bool>{true, true});
  for (int j = 0; j < 2; ++j) CHECK(patches[m.medoids[j]].label == m.majority_label[j]);

  auto again = cluster_patches(patches, 2, 7, 32);
  CHECK(again.assignments == m.assignments);
  CHECK(again.medoids == m.medoids);
  auto par = cluster_patches(patches, 2, 7, 32, WorkerPool(3));
  CHECK(par.assignments == m.assignments);

  // a common rotation of every patch changes nothing
  auto G = oracle::random_rotation(rng);
  std::vector<Patch> turned;
  for (const auto& p : patches) turned.push_back(rotated(p, G));
  CHECK(cluster_patches(turned, 2, 7, 32).assignments == m.assignments);

  auto single = cluster_patches(patches, static_cast<int>(patches.size()), 3, 16);
  std::vector<int> sorted = single.assignments;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size(); ++i) CHECK(sorted[i] == static_cast<int>(i));
  for (double h : single.homogeneity) CHECK(h == 1.0);

  CHECK_THROWS_AS(cluster_patches({}, 1, 1, 8), Error);
  CHECK_THROWS_AS(cluster_patches(patches, 17, 1, 8), Error);
  CHECK_THROWS_AS(cluster_patches(patches, 0, 1, 8), Error);
}

TEST_CASE("registration") {
  std::mt19937_64 rng(3);
  const int pad = kDefaultRegisterPad;
  auto c = random_patch(6, rng);
  std::vector<Patch> members{c};
  for (int i = 0; i < 8; ++i) members.push_back(rotated(c, oracle::random_rotation(rng)));
  auto reg = register_cluster(members, c, pad);
  for (std::size_t s = 0; s < c.shells.size(); ++s)
    CHECK(oracle::max_abs_diff(reg[0].shells[s], c.shells[s]) < 1e-12);
  for (const auto& r : reg) {
    for (std::size_t s = 0; s < c.shells.size(); ++s)
      for (int l = 1; l <= 6; ++l) {
        SphericalExpansion diff = r.shells[s];
        for (std::size_t i = 0; i < diff.coeffs.size(); ++i) diff.coeffs[i] -= c.shells[s].coeffs[i];
        CHECK(diff.band_energy(l) <= 0.02 * c.shells[s].band_energy(l));
      }
    // re-correlation peaks at the null rotation up to one grid cell
    auto e = patch_distance(r, c, pad);
    CHECK(geodesic_distance(e.rot, EulerZYZ{}) <= std::sqrt(3.0) * 2 * kPi / correlation_side(6, pad));
  }
  CHECK_THROWS_AS(register_cluster(members, std::vector<EulerZYZ>(2)), Error);
}

TEST_CASE("variance map") {
  std::mt19937_64 rng(4);
  auto c = random_patch(4, rng);
  auto vm = variance_map({c, c, c});
  CHECK(vm.variance.size() == 2);
  CHECK(vm.variance[0].size() == 64u * 32u);
  for (const auto& r : vm.variance)
    for (double v : r) CHECK(std::abs(v) < 1e-24);
  CHECK_THROWS_AS(variance_map({c}), Error);

  auto members = sector_members(12, rng);
  auto sm = variance_map(members);
  std::vector<std::size_t> idx(sm.nodes());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return sm.variance[0][a] > sm.variance[0][b]; });
  std::size_t top = idx.size() / 10, inside = 0;
  for (std::size_t i = 0; i < top; ++i) inside += in_sector(sm.Phi(idx[i]), sm.Theta(idx[i]));
  CHECK(static_cast<double>(inside) >= 0.9 * top);
  for (double v : sm.variance[0]) CHECK(v >= 0.0);

  // synthesis agrees with pointwise evaluation
  auto grid = synthesize_shells(c, 8, 4);
  CHECK(grid[1][13] == doctest::Approx(sh_inverse(c.shells[1], 2 * kPi * 5 / 8, kPi * 1.5 / 4)).epsilon(1e-12));
}

TEST_CASE("kernel point placement") {
  VarianceMap flat;
  flat.radii = {4.0};
  flat.n_phi = 16;
  flat.n_theta = 8;
  flat.variance.assign(1, std::vector<double>(flat.nodes(), 1.0));
  auto p = place_kernel_points(flat, 4, 20.0);
  REQUIRE(p.points.size() == 4);
  CHECK(p.points[0].node == 0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < i; ++j) {
      CHECK(p.points[j].node < p.points[i].node);
      CHECK(great_circle_deg(p.points[i].Phi, p.points[i].Theta, p.points[j].Phi, p.points[j].Theta) >= 20.0);
    }
  CHECK(p.high_variance.size() == (flat.nodes() + 9) / 10);
  CHECK_THROWS_AS(place_kernel_points(flat, 0), Error);
  CHECK_THROWS_AS(place_kernel_points(flat, 40, 60.0), Error);

  // separation is per radius
  VarianceMap two = flat;
  two.radii = {3.0, 5.0};
  two.variance.push_back(two.variance[0]);
  two.variance[1][0] = 0.5;
  auto q = place_kernel_points(two, 2, 90.0);
  CHECK(q.points[0].radius_index == 1);
  CHECK(q.points[1].radius_index == 0);
  CHECK(q.points[1].node == 0);

  std::mt19937_64 rng(5);
  auto sm = variance_map(sector_members(12, rng));
  auto s = place_kernel_points(sm, 4, 20.0);
  for (const auto& pt : s.points) CHECK_FALSE(in_sector(pt.Phi, pt.Theta));
  auto filtered = place_kernel_points(sm, 4, 20.0, 0.8);
  for (const auto& pt : filtered.points) {
    CHECK_FALSE(in_sector(pt.Phi, pt.Theta));
    double peak = 0.0;
    for (double m : sm.mean[0]) peak = std::max(peak, std::abs(m));
    CHECK(std::abs(sm.mean[0][pt.node]) >= 0.8 * peak);
  }
  std::size_t inside = 0;
  for (const auto& h : s.high_variance) inside += in_sector(h.Phi, h.Theta);
  CHECK(static_cast<double>(inside) >= 0.9 * s.high_variance.size());
}

TEST_CASE("mapping selection") {
  std::vector<NonLinearity> kset{NonLinearity::Square, NonLinearity::Cube};
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> jitter(-0.05, 0.05);
  MappingSamples s;
  for (int i = 0; i < 20; ++i) {
    s.positives.push_back({2.0 + jitter(rng), 3.0 + jitter(rng)});
    s.negatives.push_back(i % 2 ? std::vector<double>{0.0, 3.0 + jitter(rng)} : std::vector<double>{2.0, 0.0});
  }
  auto ranked = rank_mappings(s, kset);
  REQUIRE(ranked.size() == 2);
  for (const auto& r : ranked) CHECK(r.score == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(ranked[0].kappas == kset);

  // identical classes
  MappingSamples same;
  for (int i = 0; i < 10; ++i) {
    same.positives.push_back({1.5, 1.5});
    same.negatives.push_back({1.5, 1.5});
  }
  for (const auto& r : rank_mappings(same, kset)) CHECK(r.score == 0.0);

  CHECK_THROWS_AS(rank_mappings(s, {NonLinearity::Square}), Error);
  CHECK_THROWS_AS(rank_mappings(s, std::vector<NonLinearity>(7, NonLinearity::Square)), Error);

  // constant identical members carry no separation
  SphericalExpansion flat(4);
  flat.at(0, 0) = 3.0;
  std::vector<Patch> members(5, make_patch({4.0}, {flat}));
  auto vm = variance_map(members);
  auto pl = place_kernel_points(vm, 3, 20.0);
  auto m = learn_mappings(members, pl, {NonLinearity::Square, NonLinearity::Cube, NonLinearity::Pow4}, 1);
  CHECK(m.size() == 6);
  for (const auto& r : m) CHECK(r.score == 0.0);

  // seeded negatives
  auto sm = sector_members(10, rng);
  auto reg_pl = place_kernel_points(variance_map(sm), 2, 20.0);
  auto a = mapping_samples(sm, reg_pl, 9), b = mapping_samples(sm, reg_pl, 9);
  CHECK(a.negatives == b.negatives);
  CHECK(a.positives == b.positives);
  CHECK(a.positives.size() == 10);
  Placement nohigh = reg_pl;
  nohigh.high_variance.clear();
  CHECK_THROWS_AS(mapping_samples(sm, nohigh, 1), Error);
  CHECK_THROWS_AS(learn_mappings(sm, reg_pl, {NonLinearity::Square}, 1), Error);
}

TEST_CASE("kernel spec emission") {
  VarianceMap flat;
  flat.radii = {3.0, 4.0};
  flat.n_phi = 16;
  flat.n_theta = 8;
  flat.variance.assign(2, std::vector<double>(flat.nodes(), 1.0));
  auto pl = place_kernel_points(flat, 3, 30.0);
  MappingAssignment m{{NonLinearity::Square, NonLinearity::Identity, NonLinearity::SqrtAbs}, 0.5};
  auto spec = emit_kernel_spec(pl, m, 3, 0, NonLinearity::Identity, 1.0);
  REQUIRE(spec.points.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(spec.points[i].kappa == m.kappas[i]);
    CHECK(spec.points[i].radius == pl.points[i].radius);
    CHECK(spec.points[i].Phi == pl.points[i].Phi);
  }
  auto back = kernel_from_json_text(kernel_to_json_text(spec));
  CHECK(kernel_to_json_text(back) == kernel_to_json_text(spec));
  std::mt19937_64 rng(7);
  auto v = oracle::smooth_volume({20, 20, 20}, rng);
  auto f = haar_np(v, spec, 0);
  for (double x : f.values) CHECK(std::isfinite(x));
  CHECK_THROWS_AS(emit_kernel_spec(pl, MappingAssignment{{NonLinearity::Square}, 0.0}, 3), Error);
}

TEST_CASE("registration quality gate") {
  std::mt19937_64 rng(8);
  auto proto = random_patch(6, rng);
  std::vector<Patch> copies;
  for (int i = 0; i < 12; ++i) copies.push_back(rotated(proto, oracle::random_rotation(rng)));
  auto vm = variance_map(register_cluster(copies, copies[0], kDefaultRegisterPad));
  double sd = 0.0;
  for (const auto& s : proto.shells) sd += shell_std(s) / proto.shells.size();
  CHECK(mean_node_std(vm) < 0.1 * sd);
}

TEST_CASE("learned kernel detects the target structure") {
  auto scene = oracle::lobe_scene(11);
  const int b = 6;
  auto patches = extract_patches(scene.volume, 0, scene.centers, scene.labels, {5.0}, b);
  auto cm = cluster_patches(patches, 4, 7, 16);
  int target = -1;
  for (int j = 0; j < cm.k; ++j)
    if (cm.selected[j] && cm.majority_label[j] == 1) target = j;
  REQUIRE(target >= 0);
  std::vector<Patch> members;
  for (auto i : cm.members(target)) members.push_back(patches[i]);
  CHECK(members.size() >= 20);
  auto reg = register_cluster(members, cm.centroids[target], kDefaultRegisterPad);
  auto vm = variance_map(reg);
  auto pl = place_kernel_points(vm, 3, 30.0, 0.8);
  auto maps = learn_mappings(reg, pl, {NonLinearity::Square, NonLinearity::Cube, NonLinearity::Pow4}, 7);
  auto spec = emit_kernel_spec(pl, maps.front(), b);

  std::vector<double> hits, other;
  for (std::size_t i = 0; i < scene.centers.size(); ++i) {
    std::vector<SphericalExpansion> ex;
    for (const auto& p : spec.points)
      ex.push_back(sh_forward_point(scene.volume, 0, scene.centers[i], BasisTemplate(p.radius, b)));
    const auto& c = scene.centers[i];
    (scene.labels[i] == 1 ? hits : other).push_back(haar_np_value(scene.volume.at(c.x, c.y, c.z), ex, spec, 16));
  }
  std::sort(other.begin(), other.end());
  double q90 = other[static_cast<std::size_t>(0.9 * (other.size() - 1))];
  for (double h : hits) CHECK(h > q90);
}
