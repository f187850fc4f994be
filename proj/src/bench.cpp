#include "spherefeat/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>

#include "spherefeat/so3corr.hpp"
#include "spherefeat/volume.hpp"

namespace spherefeat {

SphericalExpansion random_real_expansion(int b_max, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  SphericalExpansion e(b_max);
  for (int l = 0; l <= b_max; ++l) {
    e.at(l, 0) = n(rng);
    for (int m = 1; m <= l; ++m) {
      double re = n(rng), im = n(rng);
      cplx c = cplx(re, im) / std::sqrt(2.0);
      e.at(l, m) = c;
      e.at(l, -m) = ((m % 2) ? -1.0 : 1.0) * std::conj(c);
    }
  }
  return e;
}

EulerZYZ random_euler(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  EulerZYZ r;
  r.phi = 2 * kPi * u(rng);
  r.theta = kPi * u(rng);
  r.psi = 2 * kPi * u(rng);
  return r;
}

double spatial_bench_radius(int b_max) {
  return std::ceil(required_circumference(b_max) / (2.0 * kPi));
}

namespace {

using Clock = std::chrono::steady_clock;

constexpr int kSpikes = 40;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// W(x) = V(R^-1 (x - c) + c)
Volume rotate_volume(const Volume& v, const EulerZYZ& r) {
  Mat3 m = rotation_matrix(r);
  Volume out(v.dims, v.channels, v.spacing);
  double c[3] = {(v.dims[0] - 1) / 2.0, (v.dims[1] - 1) / 2.0, (v.dims[2] - 1) / 2.0};
  for (int z = 0; z < v.dims[2]; ++z)
    for (int y = 0; y < v.dims[1]; ++y)
      for (int x = 0; x < v.dims[0]; ++x) {
        double d[3] = {x - c[0], y - c[1], z - c[2]};
        double s[3];
        for (int i = 0; i < 3; ++i) s[i] = m[0][i] * d[0] + m[1][i] * d[1] + m[2][i] * d[2] + c[i];
        out.at(x, y, z) = v.sample(s[0], s[1], s[2]);
      }
  return out;
}

// Unit spikes on single voxels near the shell, content far above any band.
Volume spike_object(int side, double radius, std::mt19937_64& rng) {
  Volume v({side, side, side});
  std::uniform_int_distribution<int> pick(0, side - 1);
  const double c = (side - 1) / 2.0;
  int placed = 0;
  while (placed < kSpikes) {
    int x = pick(rng), y = pick(rng), z = pick(rng);
    double r = std::sqrt((x - c) * (x - c) + (y - c) * (y - c) + (z - c) * (z - c));
    if (std::abs(r - radius) > 1.5 || v.at(x, y, z) != 0.0) continue;
    v.at(x, y, z) = 1.0;
    ++placed;
  }
  return v;
}

}  // namespace

std::vector<RotationTrial> bench_rotation(const RotationBenchConfig& cfg, const WorkerPool& pool) {
  require(cfg.b_max >= 0, "bench_rotation: b_max must be >= 0");
  require(cfg.pad >= 0, "bench_rotation: pad must be >= 0");
  require(cfg.trials >= 1, "bench_rotation: trials must be >= 1");
  require(cfg.sigma >= 0 && std::isfinite(cfg.sigma), "bench_rotation: sigma must be >= 0");

  std::mt19937_64 master(cfg.seed);
  std::vector<std::uint64_t> seeds(cfg.trials);
  for (auto& s : seeds) s = master();

  std::vector<RotationTrial> out(cfg.trials);
  if (cfg.mode == RotationBenchMode::Harmonic) {
    for (int i = 0; i < cfg.trials; ++i) {
      std::mt19937_64 rng(seeds[i]);
      auto g = random_real_expansion(cfg.b_max, rng);
      auto r = random_euler(rng);
      auto f = rotate_expansion(g, r);
      auto t0 = Clock::now();
      auto est = estimate_rotation(f, g, cfg.pad);
      out[i].runtime_ms = ms_since(t0);
      out[i].truth = r;
      out[i].estimate = est.rot;
    }
  } else {
    double radius = cfg.radius > 0 ? cfg.radius : spatial_bench_radius(cfg.b_max);
    BasisTemplate t(radius, cfg.b_max);
    int half = std::max({t.half()[0], t.half()[1], t.half()[2]});
    // room for the stencil plus the rotated corners staying inside the data
    int side = 2 * half + 9;
    VoxelCoord c{side / 2, side / 2, side / 2};
    for (int i = 0; i < cfg.trials; ++i) {
      std::mt19937_64 rng(seeds[i]);
      Volume v = spike_object(side, radius, rng);
      auto r = random_euler(rng);
      Volume w = rotate_volume(v, r);
      auto t0 = Clock::now();
      if (cfg.sigma > 0) {
        v = gaussian_smooth(v, cfg.sigma, pool);
        w = gaussian_smooth(w, cfg.sigma, pool);
      }
      auto f = sh_forward_point(w, 0, c, t), g = sh_forward_point(v, 0, c, t);
      auto est = estimate_rotation(f, g, cfg.pad);
      out[i].runtime_ms = ms_since(t0);
      out[i].truth = r;
      out[i].estimate = est.rot;
    }
  }
  for (int i = 0; i < cfg.trials; ++i) {
    out[i].trial = i;
    out[i].err_deg = summed_angular_error_deg(out[i].truth, out[i].estimate);
    out[i].geodesic_deg = deg(geodesic_distance(out[i].truth, out[i].estimate));
  }
  return out;
}

void write_rotation_csv(std::ostream& os, const std::vector<RotationTrial>& trials) {
  os << "trial,err_deg,geodesic_deg,runtime_ms\n";
  char buf[128];
  for (const auto& t : trials) {
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g,%.3f\n", t.trial, t.err_deg, t.geodesic_deg, t.runtime_ms);
    os << buf;
  }
}

}  // namespace spherefeat
