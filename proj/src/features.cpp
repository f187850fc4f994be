#include "spherefeat/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"
#include "spherefeat/fft.hpp"

namespace spherefeat {

using json = nlohmann::json;

namespace {

// Volume holding kappa(v[channel]) as its only channel.
Volume mapped_channel(const Volume& v, int channel, NonLinearity k) {
  require(channel >= 0 && channel < v.channels, "feature: channel out of range");
  Volume out(v.dims, 1, v.spacing);
  const std::size_t n = v.voxels(), base = static_cast<std::size_t>(channel) * n;
  for (std::size_t i = 0; i < n; ++i) out.data[i] = apply(k, v.data[base + i]);
  return out;
}

// out(x) = sum_i w_i * a(x + o_i) with reflective borders, via FFT.
std::vector<double> stencil_correlate(const Volume& a, const BasisTemplate& t,
                                      const std::vector<double>& w) {
  const auto& h = t.half();
  for (int k = 0; k < 3; ++k)
    require(a.dims[k] >= 2 * h[k] + 1, "feature: volume smaller than template support");
  std::array<int, 3> P;
  for (int k = 0; k < 3; ++k) P[k] = next_fast_size(a.dims[k] + 2 * h[k]);
  const std::size_t total = static_cast<std::size_t>(P[0]) * P[1] * P[2];
  auto pidx = [&](int x, int y, int z) { return (static_cast<std::size_t>(z) * P[1] + y) * P[0] + x; };
  std::vector<cplx> vf(total), kf(total, cplx(0.0));
  for (int z = 0; z < P[2]; ++z)
    for (int y = 0; y < P[1]; ++y)
      for (int x = 0; x < P[0]; ++x) vf[pidx(x, y, z)] = a.at_reflect(x - h[0], y - h[1], z - h[2]);
  for (std::size_t i = 0; i < t.support_size(); ++i) {
    const auto& o = t.offset(i);
    kf[pidx((P[0] - o[0]) % P[0], (P[1] - o[1]) % P[1], (P[2] - o[2]) % P[2])] += w[i];
  }
  fft3d(vf, P[2], P[1], P[0], FftSign::Forward);
  fft3d(kf, P[2], P[1], P[0], FftSign::Forward);
  for (std::size_t j = 0; j < total; ++j) vf[j] *= kf[j];
  fft3d(vf, P[2], P[1], P[0], FftSign::Backward);
  std::vector<double> out(a.voxels());
  const double inv = 1.0 / static_cast<double>(total);
  std::size_t o = 0;
  for (int z = 0; z < a.dims[2]; ++z)
    for (int y = 0; y < a.dims[1]; ++y)
      for (int x = 0; x < a.dims[0]; ++x) out[o++] = vf[pidx(x + h[0], y + h[1], z + h[2])].real() * inv;
  return out;
}

FeatureField make_field(const Volume& v, std::vector<std::string> names) {
  FeatureField f;
  f.dims = v.dims;
  f.names = std::move(names);
  f.values.assign(v.voxels() * f.names.size(), 0.0);
  return f;
}

ExpansionField shell_field(const Volume& v, const ShellParams& p, double radius, const WorkerPool& pool) {
  BasisTemplate t(radius, p.b_max, p.sigma_radial, v.spacing);
  return sh_forward_field(v, p.channel, t, pool);
}

double legendre(int l, double x) {
  double p0 = 1.0, p1 = x;
  if (l == 0) return p0;
  for (int k = 2; k <= l; ++k) {
    double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace

Volume FeatureField::feature(std::size_t k) const {
  require(k < count(), "feature field: index out of range");
  Volume v(dims, 1);
  for (std::size_t i = 0; i < voxels(); ++i) v.data[i] = at(i, k);
  return v;
}

void FeatureField::validate() const {
  require(values.size() == voxels() * count(), "feature field: size mismatch");
  for (double x : values) require(std::isfinite(x), "feature field: non-finite value");
}

void save_feature_field(const FeatureField& f, const std::string& path) {
  f.validate();
  Volume v(f.dims, static_cast<int>(f.count()));
  for (std::size_t k = 0; k < f.count(); ++k)
    for (std::size_t i = 0; i < f.voxels(); ++i) v.data[k * f.voxels() + i] = f.at(i, k);
  save_volume(v, path);
  std::string stem = volume_stem(path);
  json h;
  {
    std::ifstream hs(stem + ".json");
    hs >> h;
  }
  h["features"] = f.names;
  std::ofstream hs(stem + ".json");
  if (!hs) throw Error("save_feature_field: cannot write " + stem + ".json");
  hs << h.dump(2) << "\n";
}

FeatureField load_feature_field(const std::string& path) {
  Volume v = load_volume(path);
  std::string stem = volume_stem(path);
  json h;
  {
    std::ifstream hs(stem + ".json");
    hs >> h;
  }
  FeatureField f;
  f.dims = v.dims;
  if (h.contains("features")) f.names = h["features"].get<std::vector<std::string>>();
  else
    for (int c = 0; c < v.channels; ++c) f.names.push_back("f" + std::to_string(c));
  require(static_cast<int>(f.names.size()) == v.channels, "load_feature_field: name count mismatch");
  f.values.assign(v.voxels() * f.count(), 0.0);
  for (std::size_t k = 0; k < f.count(); ++k)
    for (std::size_t i = 0; i < f.voxels(); ++i) f.at(i, k) = v.data[k * f.voxels() + i];
  return f;
}

double apply(NonLinearity k, double x) {
  switch (k) {
    case NonLinearity::Square: return x * x;
    case NonLinearity::Cube: return x * x * x;
    case NonLinearity::Pow4: return (x * x) * (x * x);
    case NonLinearity::SqrtAbs: return std::sqrt(std::abs(x));
    case NonLinearity::Identity: return x;
  }
  return x;
}

NonLinearity parse_nonlinearity(const std::string& name) {
  if (name == "square") return NonLinearity::Square;
  if (name == "cube") return NonLinearity::Cube;
  if (name == "pow4") return NonLinearity::Pow4;
  if (name == "sqrt_abs" || name == "sqrt") return NonLinearity::SqrtAbs;
  if (name == "identity" || name == "id") return NonLinearity::Identity;
  throw Error("unknown non-linearity '" + name + "'");
}

std::string to_string(NonLinearity k) {
  switch (k) {
    case NonLinearity::Square: return "square";
    case NonLinearity::Cube: return "cube";
    case NonLinearity::Pow4: return "pow4";
    case NonLinearity::SqrtAbs: return "sqrt_abs";
    case NonLinearity::Identity: return "identity";
  }
  return "identity";
}

std::vector<double> sh_abs(const SphericalExpansion& e) {
  std::vector<double> out(e.b_max + 1);
  for (int l = 0; l <= e.b_max; ++l) out[l] = std::sqrt(e.band_energy(l));
  return out;
}

PhaseFeature sh_phase(const SphericalExpansion& e1, const SphericalExpansion& e2) {
  require(e1.b_max == e2.b_max, "sh_phase: mismatched b_max");
  PhaseFeature p;
  for (int l = 1; l <= e1.b_max; ++l) {
    double n1 = std::sqrt(e1.band_energy(l)), n2 = std::sqrt(e2.band_energy(l));
    if (n1 <= 1e-12 || n2 <= 1e-12) {
      p.values.push_back(0.0);
      p.degenerate.push_back(true);
      continue;
    }
    cplx dot(0.0);
    for (int m = -l; m <= l; ++m) dot += std::conj(e1.at(l, m)) * e2.at(l, m);
    p.values.push_back(dot.real() / (n1 * n2));
    p.degenerate.push_back(false);
  }
  return p;
}

double sh_autocorr(const SphericalExpansion& e, NonLinearity kappa, int pad, bool normalized) {
  CorrelationGrid g = normalized ? correlate_normalized(e, e, pad) : correlate(e, e, pad);
  for (double& v : g.values) v = apply(kappa, v);
  return haar_grid_sum(g);
}

cplx sh_bispectrum(const SphericalExpansion& e, int l1, int l2, int l, ClebschGordanCache& cg) {
  require(l1 >= 0 && l2 >= 0 && l >= std::abs(l1 - l2) && l <= l1 + l2,
          "sh_bispectrum: (l1, l2, l) violates the triangle inequality");
  require(l1 <= e.b_max && l2 <= e.b_max && l <= e.b_max, "sh_bispectrum: band exceeds b_max");
  cplx total(0.0);
  for (int m = -l; m <= l; ++m) {
    cplx inner(0.0);
    for (int m1 = std::max(-l1, m - l2); m1 <= std::min(l1, m + l2); ++m1)
      inner += cg.get(l, m, l1, m1, l2, m - m1) * std::conj(e.at(l1, m1)) * std::conj(e.at(l2, m - m1));
    total += e.at(l, m) * inner;
  }
  return total;
}

FeatureField sh_abs_field(const Volume& v, const ShellParams& p, const WorkerPool& pool) {
  auto ef = shell_field(v, p, p.radius, pool);
  std::vector<std::string> names;
  for (int l = 0; l <= p.b_max; ++l) names.push_back("shabs_r" + std::to_string(p.radius) + "_l" + std::to_string(l));
  FeatureField f = make_field(v, names);
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    auto a = sh_abs(ef.expansion(i));
    for (int l = 0; l <= p.b_max; ++l) f.at(i, l) = a[l];
  });
  return f;
}

FeatureField sh_phase_field(const Volume& v, const ShellParams& p, double r1, double r2,
                            const WorkerPool& pool) {
  auto f1 = shell_field(v, p, r1, pool), f2 = shell_field(v, p, r2, pool);
  std::vector<std::string> names;
  for (int l = 1; l <= p.b_max; ++l) names.push_back("shphase_l" + std::to_string(l));
  names.push_back("shphase_degenerate");
  FeatureField f = make_field(v, names);
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    auto ph = sh_phase(f1.expansion(i), f2.expansion(i));
    int bad = 0;
    for (std::size_t k = 0; k < ph.values.size(); ++k) {
      f.at(i, k) = ph.values[k];
      bad += ph.degenerate[k];
    }
    f.at(i, ph.values.size()) = bad;
  });
  return f;
}

FeatureField sh_autocorr_field(const Volume& v, const ShellParams& p, NonLinearity kappa, int pad,
                               bool normalized, const WorkerPool& pool) {
  auto ef = shell_field(v, p, p.radius, pool);
  FeatureField f = make_field(v, {std::string("shautocorr_") + to_string(kappa) + (normalized ? "_norm" : "")});
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    try {
      f.at(i, 0) = sh_autocorr(ef.expansion(i), kappa, pad, normalized);
    } catch (const Error&) {
      if (!normalized) throw;
      f.at(i, 0) = 0.0;  // flat neighborhood has no normalized correlation
    }
  });
  return f;
}

FeatureField sh_bispectrum_field(const Volume& v, const ShellParams& p,
                                 const std::vector<std::array<int, 3>>& triples, const WorkerPool& pool) {
  require(!triples.empty(), "sh_bispectrum_field: no (l1, l2, l) triples");
  auto& cg = ClebschGordanCache::shared();
  std::vector<std::string> names;
  SphericalExpansion probe(p.b_max);
  for (const auto& t : triples) {
    sh_bispectrum(probe, t[0], t[1], t[2], cg);  // validates and warms the cache
    std::string tag = std::to_string(t[0]) + "_" + std::to_string(t[1]) + "_" + std::to_string(t[2]);
    names.push_back("bispec_re_" + tag);
    names.push_back("bispec_im_" + tag);
  }
  auto ef = shell_field(v, p, p.radius, pool);
  FeatureField f = make_field(v, names);
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    auto e = ef.expansion(i);
    for (std::size_t k = 0; k < triples.size(); ++k) {
      cplx b = sh_bispectrum(e, triples[k][0], triples[k][1], triples[k][2], cg);
      f.at(i, 2 * k) = b.real();
      f.at(i, 2 * k + 1) = b.imag();
    }
  });
  return f;
}

SphereTemplate::SphereTemplate(double radius, double sigma_radial, std::array<double, 3> spacing)
    : shell(radius, 0, sigma_radial, spacing) {}

double SphereTemplate::mass() const {
  double s = 0.0;
  for (std::size_t i = 0; i < shell.support_size(); ++i) s += shell.weight(i);
  return s;
}

SphericalExpansion circle_template(double radius, double chord, int b_max) {
  require(radius > 0 && chord >= 0 && chord <= 2.0 * radius,
          "circle_template: chord must lie in [0, 2 r]");
  double alpha = 2.0 * std::asin(chord / (2.0 * radius));
  SphericalExpansion c(b_max);
  for (int l = 0; l <= b_max; ++l) c.at(l, 0) = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi)) * legendre(l, std::cos(alpha));
  return c;
}

FeatureField haar_2p(const Volume& v, const Haar2pSpec& spec, const WorkerPool& pool) {
  (void)pool;
  Volume a = mapped_channel(v, spec.channel2, spec.kappa2);
  SphereTemplate s(spec.radius, spec.sigma_radial, v.spacing);
  std::vector<double> w(s.shell.support_size());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = s.shell.weight(i);
  auto conv = stencil_correlate(a, s.shell, w);
  FeatureField f = make_field(v, {"2p_r" + std::to_string(spec.radius)});
  Volume c = mapped_channel(v, spec.channel1, spec.kappa1);
  for (std::size_t i = 0; i < v.voxels(); ++i) f.at(i, 0) = c.data[i] * conv[i];
  return f;
}

double haar_2p_direct(const Volume& v, const Haar2pSpec& spec, const VoxelCoord& c) {
  require(spec.channel1 >= 0 && spec.channel1 < v.channels && spec.channel2 >= 0 &&
              spec.channel2 < v.channels, "haar_2p: channel out of range");
  SphereTemplate s(spec.radius, spec.sigma_radial, v.spacing);
  double acc = 0.0;
  for (std::size_t i = 0; i < s.shell.support_size(); ++i) {
    const auto& o = s.shell.offset(i);
    acc += s.shell.weight(i) * apply(spec.kappa2, v.at_reflect(c.x + o[0], c.y + o[1], c.z + o[2], spec.channel2));
  }
  return apply(spec.kappa1, v.at(c.x, c.y, c.z, spec.channel1)) * acc;
}

double haar_3p_value(double center, const SphericalExpansion& x2, const SphericalExpansion& x3,
                     const Haar3pSpec& spec) {
  require(x2.b_max == x3.b_max, "haar_3p: mismatched b_max");
  auto ct = circle_template(spec.radius, spec.chord, x2.b_max);
  // the left convolution with the ring folds into one scalar per band
  auto conv = convolve_left(x3, ct);
  cplx acc(0.0);
  for (int l = 0; l <= x2.b_max; ++l)
    for (int m = -l; m <= l; ++m) acc += x2.at(l, m) * std::conj(conv.at(l, m));
  return apply(spec.kappa1, center) * acc.real();
}

FeatureField haar_3p(const Volume& v, const Haar3pSpec& spec, const WorkerPool& pool) {
  require(spec.chord >= 0 && spec.chord <= 2.0 * spec.radius, "haar_3p: chord must lie in [0, 2 r]");
  BasisTemplate t(spec.radius, spec.b_max, spec.sigma_radial, v.spacing);
  auto f2 = sh_forward_field(mapped_channel(v, spec.channel2, spec.kappa2), 0, t, pool);
  auto f3 = sh_forward_field(mapped_channel(v, spec.channel3, spec.kappa3), 0, t, pool);
  Volume c = v.channel(spec.channel1);
  FeatureField f = make_field(v, {"3p_r" + std::to_string(spec.radius) + "_c" + std::to_string(spec.chord)});
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    f.at(i, 0) = haar_3p_value(c.data[i], f2.expansion(i), f3.expansion(i), spec);
  });
  return f;
}

void validate_kernel(const KernelSpec& spec) {
  require(!spec.points.empty(), "np kernel: empty point list");
  require(spec.b_max >= 0, "np kernel: b_max must be >= 0");
  for (const auto& p : spec.points) {
    require(p.radius > 0, "np kernel: radius must be positive");
    require(p.Phi >= 0 && p.Phi <= 2.0 * kPi && p.Theta >= 0 && p.Theta <= kPi,
            "np kernel: point angles out of range");
    require(p.channel >= 0, "np kernel: negative channel");
  }
}

KernelSpec kernel_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw Error(std::string("np kernel: malformed JSON: ") + e.what());
  }
  KernelSpec s;
  s.kappa1 = parse_nonlinearity(j.value("kappa1", "identity"));
  s.channel1 = j.value("channel1", 0);
  s.b_max = j.value("b_max", 4);
  s.sigma_radial = j.value("sigma_radial", 1.0);
  s.gray = j.value("gray", false);
  std::string mode = j.value("mode", "fast");
  require(mode == "fast" || mode == "separable", "np kernel: mode must be fast or separable");
  s.mode = mode == "fast" ? NpMode::Fast : NpMode::Separable;
  for (const auto& p : j.value("points", json::array())) {
    KernelPoint k;
    k.kappa = parse_nonlinearity(p.value("kappa", "identity"));
    k.radius = p.at("radius").get<double>();
    k.channel = p.value("channel", 0);
    k.Phi = p.at("Phi").get<double>();
    k.Theta = p.at("Theta").get<double>();
    s.points.push_back(k);
  }
  validate_kernel(s);
  return s;
}

std::string kernel_to_json_text(const KernelSpec& s) {
  json j = {{"kappa1", to_string(s.kappa1)}, {"channel1", s.channel1},
            {"b_max", s.b_max},              {"sigma_radial", s.sigma_radial},
            {"gray", s.gray},                {"mode", s.mode == NpMode::Fast ? "fast" : "separable"}};
  j["points"] = json::array();
  for (const auto& p : s.points)
    j["points"].push_back({{"kappa", to_string(p.kappa)}, {"radius", p.radius}, {"channel", p.channel},
                           {"Phi", p.Phi}, {"Theta", p.Theta}});
  return j.dump(2);
}

SphericalExpansion point_template(int b_max, double Phi, double Theta) {
  SphericalExpansion t(b_max);
  std::vector<cplx> y;
  sh_basis_all(b_max, Phi, Theta, y);
  for (std::size_t i = 0; i < y.size(); ++i) t.coeffs[i] = std::conj(y[i]);
  return t;
}

double haar_np_value(double center, const std::vector<SphericalExpansion>& expansions,
                     const KernelSpec& spec, int pad) {
  validate_kernel(spec);
  require(expansions.size() == spec.points.size(), "np: one expansion per kernel point required");
  CorrelationGrid prod;
  for (std::size_t i = 0; i < spec.points.size(); ++i) {
    const auto& p = spec.points[i];
    auto t = point_template(expansions[i].b_max, p.Phi, p.Theta);
    CorrelationGrid g;
    if (spec.gray) {
      try {
        g = correlate_normalized(expansions[i], t, pad);
      } catch (const Error&) {
        return 0.0;
      }
    } else {
      g = correlate(expansions[i], t, pad);
    }
    if (spec.mode == NpMode::Fast)
      for (double& x : g.values) x = apply(p.kappa, x);
    if (i == 0) {
      prod = std::move(g);
    } else {
      for (std::size_t k = 0; k < prod.values.size(); ++k) prod.values[k] *= g.values[k];
    }
  }
  double sum = haar_grid_sum(prod);
  return spec.gray ? sum : apply(spec.kappa1, center) * sum;
}

FeatureField haar_np(const Volume& v, const KernelSpec& spec, int pad, const WorkerPool& pool) {
  validate_kernel(spec);
  require(spec.channel1 < v.channels, "np: channel out of range");
  correlation_side(spec.b_max, pad);  // rejects oversize grids before any work
  // one expansion field per distinct (radius, channel, kappa) input
  struct Key {
    double radius;
    int channel;
    NonLinearity kappa;
  };
  std::vector<Key> keys;
  std::vector<std::size_t> which(spec.points.size());
  for (std::size_t i = 0; i < spec.points.size(); ++i) {
    const auto& p = spec.points[i];
    require(p.channel < v.channels, "np: channel out of range");
    NonLinearity k = spec.mode == NpMode::Separable ? p.kappa : NonLinearity::Identity;
    std::size_t j = 0;
    while (j < keys.size() && !(keys[j].radius == p.radius && keys[j].channel == p.channel && keys[j].kappa == k)) ++j;
    if (j == keys.size()) keys.push_back({p.radius, p.channel, k});
    which[i] = j;
  }
  std::vector<ExpansionField> fields;
  for (const auto& k : keys) {
    BasisTemplate t(k.radius, spec.b_max, spec.sigma_radial, v.spacing);
    fields.push_back(sh_forward_field(mapped_channel(v, k.channel, k.kappa), 0, t, pool));
  }
  Volume c = v.channel(spec.channel1);
  FeatureField f = make_field(v, {spec.gray ? "np_gray" : "np"});
  pool.parallel_for(v.voxels(), [&](std::size_t i) {
    std::vector<SphericalExpansion> ex;
    ex.reserve(spec.points.size());
    for (std::size_t p = 0; p < spec.points.size(); ++p) ex.push_back(fields[which[p]].expansion(i));
    f.at(i, 0) = haar_np_value(c.data[i], ex, spec, pad);
  });
  return f;
}

}  // namespace spherefeat
