#include "spherefeat/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "spherefeat/fft.hpp"

namespace spherefeat {

using nlohmann::json;

SphericalExpansion SphericalExpansion::truncated(int b) const {
  require(b >= 0 && b <= b_max, "expansion: truncation band out of range");
  SphericalExpansion out(b);
  std::copy(coeffs.begin(), coeffs.begin() + coeff_count(b), out.coeffs.begin());
  return out;
}

double SphericalExpansion::band_energy(int l) const {
  double s = 0.0;
  for (int m = -l; m <= l; ++m) s += std::norm(at(l, m));
  return s;
}

double assoc_legendre(int l, int m, double x) {
  require(l >= 0 && l <= 64, "assoc_legendre: l out of range");
  require(std::abs(m) <= l, "assoc_legendre: |m| > l");
  require(std::abs(x) <= 1.0, "assoc_legendre: |x| > 1");
  if (m < 0) {
    int am = -m;
    double ratio = std::exp(std::lgamma(l - am + 1.0) - std::lgamma(l + am + 1.0));
    return ((am % 2) ? -1.0 : 1.0) * ratio * assoc_legendre(l, am, x);
  }
  double s = std::sqrt(std::max(0.0, (1.0 - x) * (1.0 + x)));
  double pmm = 1.0;
  for (int i = 1; i <= m; ++i) pmm *= -(2.0 * i - 1.0) * s;
  if (l == m) return pmm;
  double pm1 = x * (2.0 * m + 1.0) * pmm;
  if (l == m + 1) return pm1;
  double p2 = pmm, p1 = pm1, p = 0.0;
  for (int ll = m + 2; ll <= l; ++ll) {
    p = ((2.0 * ll - 1.0) * x * p1 - (ll + m - 1.0) * p2) / (ll - m);
    p2 = p1;
    p1 = p;
  }
  return p;
}

cplx sh_basis(int l, int m, double phi, double theta) {
  require(l >= 0 && std::abs(m) <= l, "sh_basis: invalid (l, m)");
  double lognorm = 0.5 * (std::log((2.0 * l + 1.0) / (4.0 * kPi)) + std::lgamma(l - m + 1.0) -
                          std::lgamma(l + m + 1.0));
  double p = assoc_legendre(l, m, std::cos(theta));
  return std::exp(lognorm) * p * std::polar(1.0, m * phi);
}

void sh_basis_all(int b_max, double phi, double theta, std::vector<cplx>& out) {
  out.assign(coeff_count(b_max), cplx(0.0));
  double ct = std::cos(theta), st = std::sin(theta);
  // orthonormalized Legendre recurrences, m >= 0
  std::vector<double> pbar(coeff_count(b_max), 0.0);
  double pmm = 1.0 / std::sqrt(4.0 * kPi);
  for (int m = 0; m <= b_max; ++m) {
    if (m > 0) pmm *= -std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * st;
    pbar[lm_index(m, m)] = pmm;
    if (m + 1 <= b_max) pbar[lm_index(m + 1, m)] = std::sqrt(2.0 * m + 3.0) * ct * pmm;
    for (int l = m + 2; l <= b_max; ++l) {
      double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
      double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
      pbar[lm_index(l, m)] = a * (ct * pbar[lm_index(l - 1, m)] - b * pbar[lm_index(l - 2, m)]);
    }
  }
  for (int m = 0; m <= b_max; ++m) {
    cplx e = std::polar(1.0, m * phi);
    double sign = (m % 2) ? -1.0 : 1.0;
    for (int l = m; l <= b_max; ++l) {
      cplx y = pbar[lm_index(l, m)] * e;
      out[lm_index(l, m)] = y;
      if (m > 0) out[lm_index(l, -m)] = sign * std::conj(y);
    }
  }
}

int required_circumference(int b_max) { return 2 * (2 * b_max + 1); }

BasisTemplate::BasisTemplate(double radius, int b_max, double sigma_radial,
                             std::array<double, 3> spacing)
    : radius_(radius), b_max_(b_max), sigma_(sigma_radial), spacing_(spacing) {
  require(radius > 0 && std::isfinite(radius), "template: radius must be positive");
  require(sigma_radial > 0, "template: sigma_radial must be positive");
  require(b_max >= 0 && b_max <= 32, "template: b_max out of range");
  for (double s : spacing) require(s > 0, "template: spacing must be positive");
  double coarsest = std::max({spacing[0], spacing[1], spacing[2]});
  int circumference = static_cast<int>(std::floor(2.0 * kPi * radius / coarsest));
  if (required_circumference(b_max) > circumference)
    throw Error("template: b_max " + std::to_string(b_max) + " too high for radius " +
                std::to_string(radius) + " (needs " + std::to_string(required_circumference(b_max)) +
                " voxels on the equator, has " + std::to_string(circumference) + ")");

  double outer = radius + 3.0 * sigma_radial, inner = radius - 3.0 * sigma_radial;
  for (int a = 0; a < 3; ++a) half_[a] = static_cast<int>(std::ceil(outer / spacing[a]));
  double dv = spacing[0] * spacing[1] * spacing[2];
  std::vector<std::array<double, 2>> dirs;
  for (int z = -half_[2]; z <= half_[2]; ++z)
    for (int y = -half_[1]; y <= half_[1]; ++y)
      for (int x = -half_[0]; x <= half_[0]; ++x) {
        double px = x * spacing[0], py = y * spacing[1], pz = z * spacing[2];
        double rho = std::sqrt(px * px + py * py + pz * pz);
        if (rho < 1e-12 || rho > outer || rho < inner) continue;
        double g = std::exp(-(rho - radius) * (rho - radius) / (2.0 * sigma_radial * sigma_radial));
        offsets_.push_back({x, y, z});
        weights_.push_back(g * dv / (rho * rho));
        double phi = std::atan2(py, px);
        if (phi < 0) phi += 2.0 * kPi;
        dirs.push_back({phi, std::acos(std::clamp(pz / rho, -1.0, 1.0))});
      }
  double wsum = 0.0;
  for (double w : weights_) wsum += w;
  for (double& w : weights_) w *= 4.0 * kPi / wsum;

  std::size_t n = offsets_.size();
  table_.assign(static_cast<std::size_t>(half_count()) * n, cplx(0.0));
  std::vector<cplx> y;
  for (std::size_t i = 0; i < n; ++i) {
    sh_basis_all(b_max, dirs[i][0], dirs[i][1], y);
    for (int l = 0; l <= b_max; ++l)
      for (int m = 0; m <= l; ++m)
        table_[half_index(l, m) * n + i] = weights_[i] * std::conj(y[lm_index(l, m)]);
  }
  // Remove the lattice's residual DC response from every l > 0 stencil so a
  // constant neighborhood only feeds f^0_0.
  double s00 = 0.0;
  for (std::size_t i = 0; i < n; ++i) s00 += table_[i].real();
  mass_ = s00;
  for (int l = 1; l <= b_max; ++l)
    for (int m = 0; m <= l; ++m) {
      cplx* row = &table_[half_index(l, m) * n];
      cplx s(0.0);
      for (std::size_t i = 0; i < n; ++i) s += row[i];
      cplx c = s / s00;
      for (std::size_t i = 0; i < n; ++i) row[i] -= c * table_[i].real();
    }
}

cplx BasisTemplate::value(int l, int m, std::size_t i) const {
  std::size_t n = offsets_.size();
  if (m >= 0) return table_[half_index(l, m) * n + i];
  cplx v = std::conj(table_[half_index(l, -m) * n + i]);
  return (m % 2) ? -v : v;
}

std::vector<cplx> BasisTemplate::stencil_dense(int l, int m) const {
  require(l >= 0 && l <= b_max_ && std::abs(m) <= l, "template: (l, m) out of range");
  auto sd = side();
  std::vector<cplx> out(static_cast<std::size_t>(sd[0]) * sd[1] * sd[2], cplx(0.0));
  for (std::size_t i = 0; i < offsets_.size(); ++i) {
    const auto& o = offsets_[i];
    std::size_t idx = (static_cast<std::size_t>(o[2] + half_[2]) * sd[1] + (o[1] + half_[1])) * sd[0] +
                      (o[0] + half_[0]);
    out[idx] = value(l, m, i);
  }
  return out;
}

SphericalExpansion sh_forward_point(const Volume& v, int channel, const VoxelCoord& center,
                                    const BasisTemplate& t) {
  require(channel >= 0 && channel < v.channels, "sh_forward_point: channel out of range");
  require(v.contains(center), "sh_forward_point: center outside volume");
  std::size_t n = t.support_size();
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = t.offset(i);
    samples[i] = v.at_reflect(center.x + o[0], center.y + o[1], center.z + o[2], channel);
  }
  SphericalExpansion e(t.b_max());
  for (int l = 0; l <= t.b_max(); ++l)
    for (int m = 0; m <= l; ++m) {
      cplx acc(0.0);
      for (std::size_t i = 0; i < n; ++i) acc += samples[i] * t.value(l, m, i);
      e.at(l, m) = acc;
      if (m > 0) e.at(l, -m) = ((m % 2) ? -1.0 : 1.0) * std::conj(acc);
    }
  return e;
}

cplx ExpansionField::at(int l, int m, std::size_t voxel) const {
  if (m >= 0) return grids[l * (l + 1) / 2 + m][voxel];
  cplx v = std::conj(grids[l * (l + 1) / 2 - m][voxel]);
  return (m % 2) ? -v : v;
}

SphericalExpansion ExpansionField::expansion(std::size_t voxel) const {
  SphericalExpansion e(b_max);
  for (int l = 0; l <= b_max; ++l)
    for (int m = -l; m <= l; ++m) e.at(l, m) = at(l, m, voxel);
  return e;
}

ExpansionField sh_forward_field(const Volume& v, int channel, const BasisTemplate& t,
                                const WorkerPool& pool) {
  require(channel >= 0 && channel < v.channels, "sh_forward_field: channel out of range");
  auto sd = t.side();
  for (int a = 0; a < 3; ++a)
    require(v.dims[a] >= sd[a], "sh_forward_field: volume smaller than template support");
  const auto& h = t.half();
  std::array<int, 3> P;
  for (int a = 0; a < 3; ++a) P[a] = next_fast_size(v.dims[a] + 2 * h[a]);
  const std::size_t total = static_cast<std::size_t>(P[0]) * P[1] * P[2];
  auto pidx = [&](int x, int y, int z) {
    return (static_cast<std::size_t>(z) * P[1] + y) * P[0] + x;
  };

  std::vector<cplx> vf(total);
  for (int z = 0; z < P[2]; ++z)
    for (int y = 0; y < P[1]; ++y)
      for (int x = 0; x < P[0]; ++x)
        vf[pidx(x, y, z)] = v.at_reflect(x - h[0], y - h[1], z - h[2], channel);
  fft3d(vf, P[2], P[1], P[0], FftSign::Forward);

  ExpansionField f;
  f.dims = v.dims;
  f.spacing = v.spacing;
  f.radius = t.radius();
  f.sigma_radial = t.sigma_radial();
  f.b_max = t.b_max();
  int nh = (t.b_max() + 1) * (t.b_max() + 2) / 2;
  f.grids.assign(nh, {});
  const double inv_total = 1.0 / static_cast<double>(total);

  pool.parallel_for(static_cast<std::size_t>(nh), [&](std::size_t task) {
    int l = 0;
    while ((l + 1) * (l + 2) / 2 <= static_cast<int>(task)) ++l;
    int m = static_cast<int>(task) - l * (l + 1) / 2;
    std::vector<cplx> k(total, cplx(0.0));
    for (std::size_t i = 0; i < t.support_size(); ++i) {
      const auto& o = t.offset(i);
      int jx = ((-o[0]) % P[0] + P[0]) % P[0], jy = ((-o[1]) % P[1] + P[1]) % P[1],
          jz = ((-o[2]) % P[2] + P[2]) % P[2];
      k[pidx(jx, jy, jz)] += t.value(l, m, i);
    }
    fft3d(k, P[2], P[1], P[0], FftSign::Forward);
    for (std::size_t j = 0; j < total; ++j) k[j] *= vf[j];
    fft3d(k, P[2], P[1], P[0], FftSign::Backward);
    std::vector<cplx> grid(v.voxels());
    std::size_t out = 0;
    for (int z = 0; z < v.dims[2]; ++z)
      for (int y = 0; y < v.dims[1]; ++y)
        for (int x = 0; x < v.dims[0]; ++x) grid[out++] = k[pidx(x + h[0], y + h[1], z + h[2])] * inv_total;
    f.grids[task] = std::move(grid);
  });
  return f;
}

void save_expansion_field(const ExpansionField& f, const std::string& path) {
  std::string stem = volume_stem(path);
  json h = {{"dims", f.dims},           {"spacing", f.spacing}, {"channels", 1},
            {"dtype", "c64-interleaved"}, {"order", "kzyx"},     {"b_max", f.b_max},
            {"radius", f.radius},       {"sigma_radial", f.sigma_radial}};
  std::ofstream hs(stem + ".json");
  if (!hs) throw Error("save_expansion_field: cannot write " + stem + ".json");
  hs << h.dump(2) << "\n";
  std::ofstream rs(stem + ".raw", std::ios::binary);
  if (!rs) throw Error("save_expansion_field: cannot write " + stem + ".raw");
  std::vector<float> buf(2 * f.voxels());
  for (int l = 0; l <= f.b_max; ++l)
    for (int m = -l; m <= l; ++m) {
      for (std::size_t i = 0; i < f.voxels(); ++i) {
        cplx c = f.at(l, m, i);
        buf[2 * i] = static_cast<float>(c.real());
        buf[2 * i + 1] = static_cast<float>(c.imag());
      }
      rs.write(reinterpret_cast<const char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)));
    }
  if (!rs) throw Error("save_expansion_field: write failed");
}

ExpansionField load_expansion_field(const std::string& path) {
  std::string stem = volume_stem(path);
  std::ifstream hs(stem + ".json");
  if (!hs) throw Error("load_expansion_field: missing header " + stem + ".json");
  json h;
  hs >> h;
  require(h.value("dtype", "") == "c64-interleaved", "load_expansion_field: wrong dtype");
  ExpansionField f;
  f.dims = h.at("dims").get<std::array<int, 3>>();
  if (h.contains("spacing")) f.spacing = h.at("spacing").get<std::array<double, 3>>();
  f.b_max = h.at("b_max").get<int>();
  f.radius = h.at("radius").get<double>();
  f.sigma_radial = h.value("sigma_radial", 1.0);
  std::ifstream rs(stem + ".raw", std::ios::binary | std::ios::ate);
  if (!rs) throw Error("load_expansion_field: missing payload " + stem + ".raw");
  std::size_t expected = f.voxels() * 2 * sizeof(float) * coeff_count(f.b_max);
  if (static_cast<std::size_t>(rs.tellg()) != expected)
    throw Error("load_expansion_field: size mismatch");
  rs.seekg(0);
  f.grids.assign((f.b_max + 1) * (f.b_max + 2) / 2, {});
  std::vector<float> buf(2 * f.voxels());
  for (int l = 0; l <= f.b_max; ++l)
    for (int m = -l; m <= l; ++m) {
      rs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
      if (m < 0) continue;
      std::vector<cplx> g(f.voxels());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = cplx(buf[2 * i], buf[2 * i + 1]);
      f.grids[l * (l + 1) / 2 + m] = std::move(g);
    }
  return f;
}

double sh_inverse(const SphericalExpansion& e, double phi, double theta) {
  std::vector<cplx> y;
  sh_basis_all(e.b_max, phi, theta, y);
  double acc = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) acc += (e.coeffs[i] * y[i]).real();
  return acc;
}

SphericalExpansion normalize_expansion(const SphericalExpansion& e, NormalizeMode mode, double mass) {
  cplx div;
  if (mode == NormalizeMode::Grayscale) {
    require(std::abs(e.at(0, 0)) > 1e-12, "normalize_expansion: DC component too small");
    div = e.at(0, 0);
  } else {
    require(mass > 0, "normalize_expansion: template mass must be positive");
    div = mass;
  }
  SphericalExpansion out = e;
  for (auto& c : out.coeffs) c /= div;
  return out;
}

void save_expansion(const SphericalExpansion& e, const std::string& path) {
  json coeffs = json::array();
  for (const auto& c : e.coeffs) coeffs.push_back({c.real(), c.imag()});
  std::ofstream os(path);
  if (!os) throw Error("save_expansion: cannot write " + path);
  os << json{{"b_max", e.b_max}, {"coeffs", coeffs}}.dump() << "\n";
}

SphericalExpansion load_expansion(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("load_expansion: missing file " + path);
  json j;
  is >> j;
  SphericalExpansion e(j.at("b_max").get<int>());
  const auto& c = j.at("coeffs");
  require(c.size() == e.coeffs.size(), "load_expansion: coefficient count mismatch");
  for (std::size_t i = 0; i < c.size(); ++i) e.coeffs[i] = cplx(c[i][0].get<double>(), c[i][1].get<double>());
  return e;
}

}  // namespace spherefeat
