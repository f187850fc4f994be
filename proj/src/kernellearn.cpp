#include "spherefeat/kernellearn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "spherefeat/selection.hpp"
#include "spherefeat/so3corr.hpp"

namespace spherefeat {

namespace {

// Y^l_m at every node, node-major.
std::vector<cplx> node_basis(int b_max, int n_phi, int n_theta) {
  const std::size_t nc = coeff_count(b_max);
  std::vector<cplx> table(nc * n_phi * n_theta), y;
  for (int t = 0; t < n_theta; ++t)
    for (int p = 0; p < n_phi; ++p) {
      sh_basis_all(b_max, 2.0 * kPi * p / n_phi, kPi * (t + 0.5) / n_theta, y);
      std::copy(y.begin(), y.end(), table.begin() + (static_cast<std::size_t>(t) * n_phi + p) * nc);
    }
  return table;
}

std::vector<double> synthesize(const SphericalExpansion& e, const std::vector<cplx>& basis, std::size_t nodes) {
  const std::size_t nc = e.coeffs.size();
  std::vector<double> out(nodes);
  for (std::size_t n = 0; n < nodes; ++n) {
    const cplx* y = &basis[n * nc];
    double s = 0.0;
    for (std::size_t i = 0; i < nc; ++i) s += (e.coeffs[i] * y[i]).real();
    out[n] = s;
  }
  return out;
}

void check_compatible(const Patch& a, const Patch& b) {
  require(a.radii == b.radii, "patch: radii mismatch");
  require(a.b_max() == b.b_max(), "patch: b_max mismatch");
}

}  // namespace

void Patch::validate() const {
  require(!radii.empty(), "patch: no radii");
  require(radii.size() == shells.size(), "patch: one shell per radius required");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    require(radii[i] > 0, "patch: radii must be positive");
    if (i > 0) require(radii[i] > radii[i - 1], "patch: radii must be strictly increasing");
    require(shells[i].b_max == shells[0].b_max, "patch: shells must share b_max");
  }
}

Patch extract_patch(const Volume& v, int channel, const VoxelCoord& center, const std::vector<double>& radii,
                    int b_max, int label, double sigma_radial) {
  return extract_patches(v, channel, {center}, {label}, radii, b_max, sigma_radial).front();
}

std::vector<Patch> extract_patches(const Volume& v, int channel, const std::vector<VoxelCoord>& centers,
                                   const std::vector<int>& labels, const std::vector<double>& radii, int b_max,
                                   double sigma_radial, const WorkerPool& pool) {
  require(centers.size() == labels.size(), "patch: one label per center required");
  require(channel >= 0 && channel < v.channels, "patch: channel out of range");
  std::vector<BasisTemplate> templates;
  for (double r : radii) templates.emplace_back(r, b_max, sigma_radial, v.spacing);
  std::vector<Patch> out(centers.size());
  pool.parallel_for(centers.size(), [&](std::size_t i) {
    const auto& c = centers[i];
    require(c.x >= 0 && c.y >= 0 && c.z >= 0 && c.x < v.dims[0] && c.y < v.dims[1] && c.z < v.dims[2],
            "patch: center outside the volume");
    Patch p;
    p.center = c;
    p.radii = radii;
    p.label = labels[i];
    for (const auto& t : templates) p.shells.push_back(sh_forward_point(v, channel, c, t));
    out[i] = std::move(p);
  });
  if (!out.empty()) out.front().validate();
  return out;
}

PatchDistance patch_distance(const Patch& a, const Patch& b, int pad) {
  a.validate();
  b.validate();
  check_compatible(a, b);
  std::vector<CorrelationSpectrum> spectra;
  for (std::size_t r = 0; r < a.radii.size(); ++r)
    spectra.push_back(correlation_spectrum_normalized(a.shells[r], b.shells[r], pad));
  auto peak = find_peak(combine_multiradius(spectra));
  return {1.0 - peak.peak / static_cast<double>(a.radii.size()), peak.rot};
}

DistanceMatrix distance_matrix(const std::vector<Patch>& patches, int pad, const WorkerPool& pool) {
  DistanceMatrix d;
  d.n = patches.size();
  d.dist.assign(d.n * d.n, 0.0);
  d.rot.assign(d.n * d.n, EulerZYZ{});
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < d.n; ++i)
    for (std::size_t j = i + 1; j < d.n; ++j) pairs.emplace_back(i, j);
  pool.parallel_for(pairs.size(), [&](std::size_t k) {
    auto [i, j] = pairs[k];
    auto pd = patch_distance(patches[i], patches[j], pad);
    d.dist[i * d.n + j] = d.dist[j * d.n + i] = pd.distance;
    d.rot[i * d.n + j] = pd.rot;
    d.rot[j * d.n + i] = inverse(pd.rot);
  });
  return d;
}

std::vector<std::size_t> ClusterModel::members(int cluster) const {
  std::vector<std::size_t> m;
  for (std::size_t i = 0; i < assignments.size(); ++i)
    if (assignments[i] == cluster) m.push_back(i);
  return m;
}

ClusterModel cluster_patches(const std::vector<Patch>& patches, int k, std::uint64_t seed, int pad,
                             const WorkerPool& pool) {
  require(!patches.empty(), "cluster: no patches");
  require(k >= 1 && static_cast<std::size_t>(k) <= patches.size(), "cluster: k must be in 1..n_patches");
  return cluster_patches(patches, distance_matrix(patches, pad, pool), k, seed);
}

ClusterModel cluster_patches(const std::vector<Patch>& patches, const DistanceMatrix& d, int k,
                             std::uint64_t seed) {
  require(!patches.empty(), "cluster: no patches");
  require(d.n == patches.size(), "cluster: distance matrix size mismatch");
  require(k >= 1 && static_cast<std::size_t>(k) <= patches.size(), "cluster: k must be in 1..n_patches");
  const std::size_t n = patches.size();
  ClusterModel m;
  m.k = k;

  std::mt19937_64 rng(seed);
  m.medoids.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = d.at(i, m.medoids[0]);
  std::vector<bool> is_medoid(n, false);
  is_medoid[m.medoids[0]] = true;
  while (m.medoids.size() < static_cast<std::size_t>(k)) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i)
      if (!is_medoid[i] && (best == n || nearest[i] > nearest[best])) best = i;
    m.medoids.push_back(best);
    is_medoid[best] = true;
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], d.at(i, best));
  }

  m.assignments.assign(n, -1);
  for (m.rounds = 1; m.rounds <= 50; ++m.rounds) {
    std::vector<int> next(n);
    for (std::size_t i = 0; i < n; ++i) {
      int c = 0;
      for (int j = 1; j < k; ++j)
        if (d.at(i, m.medoids[j]) < d.at(i, m.medoids[c])) c = j;
      next[i] = c;
    }
    for (int j = 0; j < k; ++j) next[m.medoids[j]] = j;
    if (next == m.assignments) break;
    m.assignments = std::move(next);
    for (int j = 0; j < k; ++j) {
      auto mem = m.members(j);
      std::size_t best = m.medoids[j];
      double best_sum = 0.0;
      for (auto b : mem) best_sum += d.at(best, b);
      for (auto a : mem) {
        double s = 0.0;
        for (auto b : mem) s += d.at(a, b);
        if (s < best_sum || (s == best_sum && a < best)) {
          best = a;
          best_sum = s;
        }
      }
      m.medoids[j] = best;
    }
  }
  m.rounds = std::min(m.rounds, 50);

  for (int j = 0; j < k; ++j) {
    m.centroids.push_back(patches[m.medoids[j]]);
    std::map<int, int> count;
    auto mem = m.members(j);
    for (auto i : mem) ++count[patches[i].label];
    int label = 0, top = -1;
    for (auto [l, c] : count)
      if (c > top) {
        label = l;
        top = c;
      }
    double h = mem.empty() ? 0.0 : static_cast<double>(top) / mem.size();
    m.majority_label.push_back(label);
    m.homogeneity.push_back(h);
    m.selected.push_back(h >= kHomogeneityThreshold);
  }
  return m;
}

std::vector<Patch> register_cluster(const std::vector<Patch>& members, const std::vector<EulerZYZ>& rotations) {
  require(rotations.size() == members.size(), "register: one rotation estimate per member required");
  std::vector<Patch> out = members;
  for (std::size_t i = 0; i < out.size(); ++i) {
    auto back = inverse(rotations[i]);
    for (auto& s : out[i].shells) s = rotate_expansion(s, back);
  }
  return out;
}

std::vector<Patch> register_cluster(const std::vector<Patch>& members, const Patch& centroid, int pad,
                                    const WorkerPool& pool) {
  std::vector<EulerZYZ> rot(members.size());
  pool.parallel_for(members.size(), [&](std::size_t i) { rot[i] = patch_distance(members[i], centroid, pad).rot; });
  return register_cluster(members, rot);
}

double VarianceMap::Phi(std::size_t node) const { return 2.0 * kPi * static_cast<double>(node % n_phi) / n_phi; }

double VarianceMap::Theta(std::size_t node) const {
  return kPi * (static_cast<double>(node / n_phi) + 0.5) / n_theta;
}

std::vector<std::vector<double>> synthesize_shells(const Patch& p, int n_phi, int n_theta) {
  require(n_phi >= 1 && n_theta >= 1, "synthesis: empty angular grid");
  auto basis = node_basis(p.b_max(), n_phi, n_theta);
  std::vector<std::vector<double>> out;
  for (const auto& s : p.shells) out.push_back(synthesize(s, basis, static_cast<std::size_t>(n_phi) * n_theta));
  return out;
}

VarianceMap variance_map(const std::vector<Patch>& registered, int n_phi, int n_theta, const WorkerPool& pool) {
  require(registered.size() >= 2, "variance map: need at least two members");
  require(n_phi >= 1 && n_theta >= 1, "variance map: empty angular grid");
  for (const auto& p : registered) {
    p.validate();
    check_compatible(p, registered.front());
  }
  VarianceMap vm;
  vm.radii = registered.front().radii;
  vm.n_phi = n_phi;
  vm.n_theta = n_theta;
  const std::size_t nodes = vm.nodes(), nr = vm.radii.size(), n = registered.size();
  auto basis = node_basis(registered.front().b_max(), n_phi, n_theta);
  // values[member][radius][node]
  std::vector<std::vector<std::vector<double>>> values(n);
  pool.parallel_for(n, [&](std::size_t i) {
    for (const auto& s : registered[i].shells) values[i].push_back(synthesize(s, basis, nodes));
  });
  vm.variance.assign(nr, std::vector<double>(nodes, 0.0));
  vm.mean.assign(nr, std::vector<double>(nodes, 0.0));
  for (std::size_t r = 0; r < nr; ++r)
    for (std::size_t node = 0; node < nodes; ++node) {
      double mean = 0.0;
      for (std::size_t i = 0; i < n; ++i) mean += values[i][r][node];
      mean /= static_cast<double>(n);
      vm.mean[r][node] = mean;
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) ss += (values[i][r][node] - mean) * (values[i][r][node] - mean);
      vm.variance[r][node] = ss / static_cast<double>(n - 1);
    }
  return vm;
}

double great_circle_deg(double phi1, double theta1, double phi2, double theta2) {
  double a[3] = {std::sin(theta1) * std::cos(phi1), std::sin(theta1) * std::sin(phi1), std::cos(theta1)};
  double b[3] = {std::sin(theta2) * std::cos(phi2), std::sin(theta2) * std::sin(phi2), std::cos(theta2)};
  double c[3] = {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  double dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
  return deg(std::atan2(std::sqrt(c[0] * c[0] + c[1] * c[1] + c[2] * c[2]), dot));
}

Placement place_kernel_points(const VarianceMap& vm, int n_points, double min_separation_deg,
                              double signal_fraction) {
  require(n_points >= 1, "placement: need at least one kernel point");
  require(!vm.radii.empty() && vm.variance.size() == vm.radii.size(), "placement: empty variance map");
  require(signal_fraction >= 0.0 && signal_fraction <= 1.0, "placement: signal fraction must be in [0, 1]");
  const std::size_t nodes = vm.nodes();
  const bool filter = signal_fraction > 0.0 && vm.mean.size() == vm.radii.size();
  std::vector<double> floor(vm.radii.size(), 0.0);
  if (filter)
    for (std::size_t r = 0; r < vm.radii.size(); ++r) {
      for (double m : vm.mean[r]) floor[r] = std::max(floor[r], std::abs(m));
      floor[r] *= signal_fraction;
    }
  auto make = [&](std::size_t r, std::size_t node) {
    return PlacedPoint{static_cast<int>(r), node, vm.radii[r], vm.Phi(node), vm.Theta(node)};
  };

  Placement out;
  std::vector<std::size_t> order(vm.radii.size() * nodes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return vm.variance[a / nodes][a % nodes] < vm.variance[b / nodes][b % nodes];
  });
  for (std::size_t idx : order) {
    if (out.points.size() == static_cast<std::size_t>(n_points)) break;
    if (filter && std::abs(vm.mean[idx / nodes][idx % nodes]) < floor[idx / nodes]) continue;
    auto cand = make(idx / nodes, idx % nodes);
    bool ok = true;
    for (const auto& p : out.points)
      if (p.radius_index == cand.radius_index &&
          great_circle_deg(p.Phi, p.Theta, cand.Phi, cand.Theta) < min_separation_deg)
        ok = false;
    if (ok) out.points.push_back(cand);
  }
  require(out.points.size() == static_cast<std::size_t>(n_points),
          "placement: cannot place " + std::to_string(n_points) + " points with " +
              std::to_string(min_separation_deg) + " degree separation");

  const std::size_t top = (nodes + 9) / 10;
  for (std::size_t r = 0; r < vm.radii.size(); ++r) {
    std::vector<std::size_t> idx(nodes);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return vm.variance[r][a] > vm.variance[r][b]; });
    for (std::size_t i = 0; i < top; ++i) out.high_variance.push_back(make(r, idx[i]));
  }
  return out;
}

MappingSamples mapping_samples(const std::vector<Patch>& registered, const Placement& placement,
                               std::uint64_t seed) {
  require(!registered.empty(), "mappings: no registered members");
  require(!placement.points.empty(), "mappings: no kernel points");
  const std::size_t nr = registered.front().radii.size();
  std::vector<std::vector<PlacedPoint>> high(nr);
  for (const auto& h : placement.high_variance) {
    require(h.radius_index >= 0 && static_cast<std::size_t>(h.radius_index) < nr, "mappings: radius index out of range");
    high[h.radius_index].push_back(h);
  }
  for (const auto& p : placement.points) {
    require(p.radius_index >= 0 && static_cast<std::size_t>(p.radius_index) < nr, "mappings: radius index out of range");
    require(!high[p.radius_index].empty(), "mappings: no high-variance region on radius " + std::to_string(p.radius));
  }
  MappingSamples s;
  std::mt19937_64 rng(seed);
  for (const auto& m : registered) {
    check_compatible(m, registered.front());
    std::vector<double> pos, neg;
    for (const auto& p : placement.points) {
      const auto& shell = m.shells[p.radius_index];
      pos.push_back(sh_inverse(shell, p.Phi, p.Theta));
      const auto& cands = high[p.radius_index];
      const auto& h = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng)];
      neg.push_back(sh_inverse(shell, h.Phi, h.Theta));
    }
    s.positives.push_back(std::move(pos));
    s.negatives.push_back(std::move(neg));
  }
  return s;
}

std::vector<MappingAssignment> rank_mappings(const MappingSamples& samples,
                                             const std::vector<NonLinearity>& kappa_set, int bins) {
  const std::size_t n = kappa_set.size();
  require(n >= 1 && n <= 6, "mappings: between 1 and 6 kernel points supported");
  require(!samples.positives.empty() && samples.positives.size() == samples.negatives.size(),
          "mappings: need matching positive and negative samples");
  std::vector<std::vector<std::size_t>> perms;
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  do perms.push_back(perm);
  while (std::next_permutation(perm.begin(), perm.end()));

  LabeledFeatureMatrix K;
  K.n_features = perms.size();
  for (std::size_t j = 0; j < perms.size(); ++j) K.names.push_back("perm" + std::to_string(j));
  auto add = [&](const std::vector<double>& x, int label) {
    require(x.size() == n, "mappings: kappa set size must equal the number of kernel points");
    for (const auto& p : perms) {
      double prod = 1.0;
      for (std::size_t i = 0; i < n; ++i) prod *= apply(kappa_set[p[i]], x[i]);
      K.values.push_back(prod);
    }
    K.labels.push_back(label);
  };
  for (const auto& x : samples.positives) add(x, 1);
  for (const auto& x : samples.negatives) add(x, 2);
  K.n_samples = K.labels.size();

  std::vector<MappingAssignment> out;
  for (const auto& r : mmd_rank(K, bins, perms.size())) {
    MappingAssignment a;
    for (std::size_t i = 0; i < n; ++i) a.kappas.push_back(kappa_set[perms[r.index][i]]);
    a.score = r.score;
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<MappingAssignment> learn_mappings(const std::vector<Patch>& registered, const Placement& placement,
                                              const std::vector<NonLinearity>& kappa_set, std::uint64_t seed,
                                              int bins) {
  require(kappa_set.size() == placement.points.size(),
          "mappings: kappa set size must equal the number of kernel points");
  return rank_mappings(mapping_samples(registered, placement, seed), kappa_set, bins);
}

KernelSpec emit_kernel_spec(const Placement& placement, const MappingAssignment& mapping, int b_max, int channel,
                            NonLinearity kappa1, double sigma_radial) {
  require(mapping.kappas.size() == placement.points.size(), "kernel spec: one mapping per point required");
  KernelSpec s;
  s.kappa1 = kappa1;
  s.channel1 = channel;
  s.b_max = b_max;
  s.sigma_radial = sigma_radial;
  for (std::size_t i = 0; i < placement.points.size(); ++i) {
    const auto& p = placement.points[i];
    s.points.push_back({mapping.kappas[i], p.radius, channel, p.Phi, p.Theta});
  }
  validate_kernel(s);
  return s;
}

double mean_node_std(const VarianceMap& vm) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : vm.variance)
    for (double v : r) {
      s += std::sqrt(std::max(0.0, v));
      ++n;
    }
  return n ? s / static_cast<double>(n) : 0.0;
}

double shell_std(const SphericalExpansion& e) {
  double s = 0.0;
  for (int l = 1; l <= e.b_max; ++l) s += e.band_energy(l);
  return std::sqrt(s / (4.0 * kPi));
}

}  // namespace spherefeat
