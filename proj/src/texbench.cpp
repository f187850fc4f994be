#include "spherefeat/texbench.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json.hpp"

namespace spherefeat {

using json = nlohmann::json;

namespace {

struct KindParams {
  double stripe_period;  // pixels, 0 for none
  bool crossed;          // second stripe set at 90 degrees
  double noise_lo, noise_hi;  // noise periods in pixels
  double noise_weight;
};

// Six visually distinct kinds: fine stripes, coarse blobs, checker, fine
// grain, coarse stripes, mixed medium scale.
const KindParams kKinds[kTextureKinds] = {
    {4.0, false, 3.0, 5.0, 0.3},  {0.0, false, 10.0, 16.0, 1.0}, {8.0, true, 3.0, 5.0, 0.2},
    {0.0, false, 2.5, 4.0, 1.0},  {12.0, false, 8.0, 12.0, 0.3}, {6.0, false, 6.0, 9.0, 0.8},
};

EulerZYZ uniform_rotation(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double phi = 2 * kPi * u(rng), c = 1.0 - 2.0 * u(rng), psi = 2 * kPi * u(rng);
  return {phi, std::acos(std::clamp(c, -1.0, 1.0)), psi};
}

}  // namespace

Image2D base_texture(int kind, int n, std::uint64_t seed) {
  require(kind >= 0 && kind < kTextureKinds, "texture: unknown kind " + std::to_string(kind));
  require(n >= 8, "texture: image size must be >= 8");
  const auto& k = kKinds[kind];
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  struct Wave {
    double kx, ky, phase, amp;
  };
  std::vector<Wave> waves;
  // integer frequencies keep the image periodic
  if (k.stripe_period > 0) {
    double angle = kPi * u(rng), f = n / k.stripe_period;
    for (int s = 0; s < (k.crossed ? 2 : 1); ++s) {
      double a = angle + s * kPi / 2;
      waves.push_back({std::round(f * std::cos(a)), std::round(f * std::sin(a)), 2 * kPi * u(rng), 1.0});
    }
  }
  const double f_lo = n / k.noise_hi, f_hi = n / k.noise_lo;
  for (int i = 0; i < 48; ++i) {
    double f = f_lo + (f_hi - f_lo) * u(rng), a = 2 * kPi * u(rng);
    waves.push_back({std::round(f * std::cos(a)), std::round(f * std::sin(a)), 2 * kPi * u(rng),
                     k.noise_weight / std::sqrt(12.0)});
  }
  Image2D img;
  img.nx = img.ny = n;
  img.data.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      double s = 0.0;
      for (const auto& w : waves) s += w.amp * std::cos(2 * kPi * (w.kx * x + w.ky * y) / n + w.phase);
      img.at(x, y) = s;
    }
  auto [lo, hi] = std::minmax_element(img.data.begin(), img.data.end());
  double a = *lo, span = *hi - *lo;
  for (double& v : img.data) v = span > 0 ? (v - a) / span : 0.5;
  return img;
}

Volume extrude_texture(const Image2D& img, int nz) {
  require(nz >= 1, "extrude: nz must be >= 1");
  require(img.nx >= 1 && img.ny >= 1 && img.data.size() == static_cast<std::size_t>(img.nx) * img.ny,
          "extrude: malformed image");
  Volume v({img.nx, img.ny, nz});
  for (int z = 0; z < nz; ++z) std::copy(img.data.begin(), img.data.end(), v.data.begin() + v.index(0, 0, z));
  return v;
}

void TextureRecipe::validate() const {
  require(!components.empty(), "recipe: no components");
  for (const auto& c : components) {
    require(c.kind >= 0 && c.kind < kTextureKinds, "recipe: unknown texture kind");
    require(std::isfinite(c.alpha), "recipe: non-finite weight");
    require(std::isfinite(c.rot.phi) && std::isfinite(c.rot.theta) && std::isfinite(c.rot.psi),
            "recipe: non-finite rotation");
  }
}

TextureRecipe random_recipe(int kind, std::uint64_t seed, int max_components) {
  require(max_components >= 1, "recipe: max_components must be >= 1");
  std::mt19937_64 rng(seed);
  TextureRecipe r;
  int n = std::uniform_int_distribution<int>(1, max_components)(rng);
  std::uniform_real_distribution<double> alpha(0.0, 1.0);
  for (int i = 0; i < n; ++i) {
    double a = alpha(rng);
    r.components.push_back({kind, a, uniform_rotation(rng)});
  }
  r.validate();
  return r;
}

std::string recipe_to_json_text(const TextureRecipe& r) {
  json j;
  j["components"] = json::array();
  for (const auto& c : r.components)
    j["components"].push_back({{"kind", c.kind}, {"alpha", c.alpha}, {"rot", {c.rot.phi, c.rot.theta, c.rot.psi}}});
  return j.dump();
}

TextureRecipe recipe_from_json_text(const std::string& text) {
  TextureRecipe r;
  try {
    auto j = json::parse(text);
    for (const auto& c : j.at("components")) {
      auto rot = c.at("rot");
      r.components.push_back(
          {c.at("kind").get<int>(), c.at("alpha").get<double>(), {rot.at(0).get<double>(), rot.at(1).get<double>(), rot.at(2).get<double>()}});
    }
  } catch (const json::exception& e) {
    throw Error(std::string("recipe: malformed JSON: ") + e.what());
  }
  r.validate();
  return r;
}

Volume synth_volume_texture(const TextureRecipe& recipe, std::array<int, 3> dims, std::uint64_t seed) {
  recipe.validate();
  require(dims[0] >= 1 && dims[1] >= 1 && dims[2] >= 1, "texture: empty dims");
  const int big = *std::max_element(dims.begin(), dims.end());
  // the rotated target cube must stay inside the extrusion
  const int n = static_cast<int>(std::ceil(big * std::sqrt(3.0))) + 4;
  Volume out(dims);
  const double cd[3] = {(dims[0] - 1) / 2.0, (dims[1] - 1) / 2.0, (dims[2] - 1) / 2.0};
  const double cs = (n - 1) / 2.0;
  for (std::size_t i = 0; i < recipe.components.size(); ++i) {
    const auto& c = recipe.components[i];
    auto src = extrude_texture(base_texture(c.kind, n, seed + i), n);
    auto R = rotation_matrix(c.rot);
    for (int z = 0; z < dims[2]; ++z)
      for (int y = 0; y < dims[1]; ++y)
        for (int x = 0; x < dims[0]; ++x) {
          double d[3] = {x - cd[0], y - cd[1], z - cd[2]};
          double s[3];
          for (int a = 0; a < 3; ++a) s[a] = cs + R[0][a] * d[0] + R[1][a] * d[1] + R[2][a] * d[2];
          out.at(x, y, z) += c.alpha * src.sample(s[0], s[1], s[2]);
        }
  }
  double mean = 0.0;
  for (double v : out.data) mean += v;
  mean /= static_cast<double>(out.data.size());
  for (double& v : out.data) v += 0.5 - mean;
  return out;
}

BenchmarkCase make_benchmark(const TextureRecipe& a, const TextureRecipe& b, std::array<int, 3> dims,
                             const SplitPlane& plane, double gray_shift, std::uint64_t seed, bool rotate) {
  require(plane.axis >= 0 && plane.axis < 3, "benchmark: split axis must be 0, 1 or 2");
  require(gray_shift >= 0.0 && std::isfinite(gray_shift), "benchmark: gray shift must be >= 0");
  std::mt19937_64 rng(seed);
  std::uint64_t seed_a = rng(), seed_b = rng();
  EulerZYZ ra = uniform_rotation(rng), rb = uniform_rotation(rng);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double sa = u(rng), sb = u(rng);

  BenchmarkCase bc;
  bc.a = a;
  bc.b = b;
  if (rotate) {
    for (auto& c : bc.a.components) c.rot = compose(ra, c.rot);
    for (auto& c : bc.b.components) c.rot = compose(rb, c.rot);
  }
  bc.shift_a = gray_shift * sa;
  bc.shift_b = gray_shift * sb;
  auto va = synth_volume_texture(bc.a, dims, seed_a), vb = synth_volume_texture(bc.b, dims, seed_b);
  const double pos = plane.position < 0 ? dims[plane.axis] / 2.0 : plane.position;
  bc.volume = Volume(dims);
  bc.labels = Volume(dims);
  for (int z = 0; z < dims[2]; ++z)
    for (int y = 0; y < dims[1]; ++y)
      for (int x = 0; x < dims[0]; ++x) {
        int coord[3] = {x, y, z};
        bool in_b = coord[plane.axis] >= pos;
        bc.labels.at(x, y, z) = in_b ? 1.0 : 0.0;
        bc.volume.at(x, y, z) = in_b ? vb.at(x, y, z) + bc.shift_b : va.at(x, y, z) + bc.shift_a;
      }
  return bc;
}

int NearestCentroid::predict(const double* x) const {
  int best = 0;
  double best_d = 0.0;
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    double d = 0.0;
    for (std::size_t k = 0; k < centroids[c].size(); ++k) d += (x[k] - centroids[c][k]) * (x[k] - centroids[c][k]);
    if (c == 0 || d < best_d) {
      best = static_cast<int>(c);
      best_d = d;
    }
  }
  return best;
}

NearestCentroid fit_nearest_centroid(const FeatureField& train, const Volume& labels) {
  train.validate();
  require(labels.dims == train.dims, "nearest centroid: label dims differ from the feature dims");
  int classes = 0;
  for (double l : labels.data) {
    require(l >= 0 && l == std::floor(l), "nearest centroid: labels must be non-negative integers");
    classes = std::max(classes, static_cast<int>(l) + 1);
  }
  NearestCentroid nc;
  nc.centroids.assign(classes, std::vector<double>(train.count(), 0.0));
  std::vector<std::size_t> count(classes, 0);
  for (std::size_t i = 0; i < train.voxels(); ++i) {
    int c = static_cast<int>(labels.data[i]);
    ++count[c];
    for (std::size_t k = 0; k < train.count(); ++k) nc.centroids[c][k] += train.at(i, k);
  }
  for (int c = 0; c < classes; ++c) {
    require(count[c] > 0, "nearest centroid: class " + std::to_string(c) + " has no training voxels");
    for (double& v : nc.centroids[c]) v /= static_cast<double>(count[c]);
  }
  return nc;
}

SegmentResult nearest_centroid_segment(const FeatureField& train, const Volume& train_labels,
                                       const FeatureField& test, const Volume& truth) {
  auto nc = fit_nearest_centroid(train, train_labels);
  test.validate();
  require(test.count() == train.count(), "nearest centroid: feature vector length differs");
  require(truth.dims == test.dims, "nearest centroid: truth dims differ from the test dims");
  SegmentResult r;
  r.labels = Volume(test.dims);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.voxels(); ++i) {
    int p = nc.predict(&test.values[i * test.count()]);
    r.labels.data[i] = p;
    correct += p == static_cast<int>(truth.data[i]);
  }
  r.accuracy = static_cast<double>(correct) / static_cast<double>(test.voxels());
  return r;
}

std::vector<TextureCase> generate_texture_cases(int cases, std::array<int, 3> dims, std::uint64_t seed,
                                                double gray_shift) {
  require(cases >= 1, "texture cases: count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> kind(0, kTextureKinds - 1), other(1, kTextureKinds - 1);
  std::vector<TextureCase> out(cases);
  for (auto& c : out) {
    c.kind_a = kind(rng);
    c.kind_b = (c.kind_a + other(rng)) % kTextureKinds;
    std::uint64_t ra = rng(), rb = rng();
    c.train_seed = rng();
    c.test_seed = rng();
    c.a = random_recipe(c.kind_a, ra);
    c.b = random_recipe(c.kind_b, rb);
    c.train = make_benchmark(c.a, c.b, dims, {}, 0.0, c.train_seed);
    c.test = make_benchmark(c.a, c.b, dims, {}, 0.0, c.test_seed);
    c.test_shifted = make_benchmark(c.a, c.b, dims, {}, gray_shift, c.test_seed);
  }
  return out;
}

TextureScore score_texture_case(const Volume& train, const Volume& train_labels, const Volume& test,
                                const Volume& test_shifted, const Volume& test_labels, const std::string& feature,
                                const std::vector<double>& radii, int b_max, const WorkerPool& pool) {
  auto ftr = texture_features(train, feature, radii, b_max, pool);
  auto score = [&](const Volume& v) {
    return nearest_centroid_segment(ftr, train_labels, texture_features(v, feature, radii, b_max, pool), test_labels)
        .accuracy;
  };
  TextureScore s;
  s.accuracy = score(test);
  s.accuracy_shifted = score(test_shifted);
  return s;
}

FeatureField concat_features(const std::vector<FeatureField>& parts) {
  require(!parts.empty(), "features: nothing to concatenate");
  FeatureField out;
  out.dims = parts.front().dims;
  for (const auto& p : parts) {
    require(p.dims == out.dims, "features: dims differ");
    out.names.insert(out.names.end(), p.names.begin(), p.names.end());
  }
  const std::size_t n = out.voxels(), total = out.count();
  out.values.resize(n * total);
  std::size_t off = 0;
  for (const auto& p : parts) {
    for (std::size_t i = 0; i < n; ++i)
      std::copy(p.values.begin() + i * p.count(), p.values.begin() + (i + 1) * p.count(),
                out.values.begin() + i * total + off);
    off += p.count();
  }
  return out;
}

std::vector<std::string> texture_feature_names() {
  return {"sh_abs", "sh_phase", "sh_autocorr", "sh_autocorr_norm", "np_gray"};
}

FeatureField texture_features(const Volume& v, const std::string& feature, const std::vector<double>& radii,
                              int b_max, const WorkerPool& pool) {
  require(!radii.empty(), "texture features: no radii");
  std::vector<FeatureField> parts;
  auto tag = [](FeatureField f, const std::string& prefix) {
    for (auto& n : f.names) n = prefix + n;
    return f;
  };
  auto rname = [](double r) {
    std::ostringstream s;
    s << "r" << r << "_";
    return s.str();
  };
  if (feature == "sh_phase") {
    require(radii.size() >= 2, "texture features: sh_phase needs at least two radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i) {
      ShellParams p{radii[i], b_max, 0, 1.0};
      parts.push_back(tag(sh_phase_field(v, p, radii[i], radii[i + 1], pool), rname(radii[i])));
    }
    return concat_features(parts);
  }
  for (double r : radii) {
    ShellParams p{r, b_max, 0, 1.0};
    if (feature == "sh_abs") {
      parts.push_back(sh_abs_field(v, p, pool));  // names carry the radius
    } else if (feature == "sh_autocorr" || feature == "sh_autocorr_norm") {
      parts.push_back(
          tag(sh_autocorr_field(v, p, NonLinearity::Square, 0, feature == "sh_autocorr_norm", pool), rname(r)));
    } else if (feature == "np_gray") {
      KernelSpec k;
      k.gray = true;
      k.b_max = b_max;
      k.points = {{NonLinearity::Identity, r, 0, 0.0, 0.0}, {NonLinearity::Identity, r, 0, 0.0, kPi / 2}};
      parts.push_back(tag(haar_np(v, k, 0, pool), rname(r)));
    } else {
      throw Error("texture features: unknown feature '" + feature + "'");
    }
  }
  return concat_features(parts);
}

}  // namespace spherefeat
