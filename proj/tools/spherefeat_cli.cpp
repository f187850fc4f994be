#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "spherefeat/bench.hpp"
#include "spherefeat/features.hpp"
#include "spherefeat/harmonics.hpp"
#include "spherefeat/kernellearn.hpp"
#include "spherefeat/selection.hpp"
#include "spherefeat/so3corr.hpp"
#include "spherefeat/texbench.hpp"
#include "spherefeat/volume.hpp"

using namespace spherefeat;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "spherefeat 0.1.0";

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  try {
    return json::parse(f);
  } catch (const json::exception& e) {
    throw Error(path + ": malformed JSON: " + e.what());
  }
}

// Reports go to a file, or to stdout for "" and "-".
class Report {
 public:
  explicit Report(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path);
      if (!file_) throw Error("cannot write " + path);
    }
  }
  std::ostream& out() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error("not a number: '" + item + "'");
    }
  }
  require(!out.empty(), "empty number list");
  return out;
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Globals {
  int workers = 0;
  WorkerPool pool() const { return WorkerPool(workers > 0 ? workers : WorkerPool::default_workers()); }
};

// ---- transform ---------------------------------------------------------------

struct TransformArgs {
  std::string volume, out, point;
  double radius = 4.0, sigma_radial = 1.0;
  int b_max = 4, channel = 0;
};

void run_transform(const TransformArgs& a, const Globals& g) {
  Volume v = load_volume(a.volume);
  BasisTemplate t(a.radius, a.b_max, a.sigma_radial, v.spacing);
  if (!a.point.empty()) {
    auto p = parse_doubles(a.point);
    require(p.size() == 3, "--point needs x,y,z");
    VoxelCoord c{static_cast<int>(p[0]), static_cast<int>(p[1]), static_cast<int>(p[2])};
    save_expansion(sh_forward_point(v, a.channel, c, t), a.out);
    return;
  }
  save_expansion_field(sh_forward_field(v, a.channel, t, g.pool()), a.out);
}

// ---- estimate-rotation ---------------------------------------------------------

struct EstimateArgs {
  std::string a, b;
  int b_max = -1, pad = 128;
};

void run_estimate(const EstimateArgs& a) {
  auto f = load_expansion(a.a), h = load_expansion(a.b);
  int b = a.b_max >= 0 ? a.b_max : std::min(f.b_max, h.b_max);
  require(b <= f.b_max && b <= h.b_max, "--bmax exceeds the band limit of an input");
  auto est = estimate_rotation(f.truncated(b), h.truncated(b), a.pad);
  std::cout << num(est.rot.phi) << ' ' << num(est.rot.theta) << ' ' << num(est.rot.psi) << ' ' << num(est.peak)
            << '\n';
}

// ---- bench-rotation ------------------------------------------------------------

struct BenchRotationArgs {
  RotationBenchConfig cfg;
  std::string mode = "harmonic", out;
  bool no_timing = false;
};

void run_bench_rotation(BenchRotationArgs a, const Globals& g) {
  if (a.mode == "harmonic" || a.mode == "A")
    a.cfg.mode = RotationBenchMode::Harmonic;
  else if (a.mode == "spatial" || a.mode == "B")
    a.cfg.mode = RotationBenchMode::Spatial;
  else
    throw Error("--mode must be harmonic or spatial");
  auto trials = bench_rotation(a.cfg, g.pool());
  if (a.no_timing)
    for (auto& t : trials) t.runtime_ms = 0.0;
  Report r(a.out);
  write_rotation_csv(r.out(), trials);
}

// ---- extract -------------------------------------------------------------------

struct ExtractArgs {
  std::string volume, feature, params, out;
};

ShellParams shell_params(const json& p) {
  ShellParams s;
  s.radius = p.value("radius", s.radius);
  s.b_max = p.value("b_max", s.b_max);
  s.channel = p.value("channel", s.channel);
  s.sigma_radial = p.value("sigma_radial", s.sigma_radial);
  return s;
}

std::vector<std::array<int, 3>> all_triples(int b) {
  std::vector<std::array<int, 3>> out;
  for (int l1 = 0; l1 <= b; ++l1)
    for (int l2 = l1; l2 <= b; ++l2)
      for (int l = l2 - l1; l <= std::min(l1 + l2, b); ++l) out.push_back({l1, l2, l});
  return out;
}

void run_extract(const ExtractArgs& a, const Globals& g) {
  Volume v = load_volume(a.volume);
  json p = a.params.empty() ? json::object() : read_json(a.params);
  auto pool = g.pool();
  auto kappa = [&](const char* key) { return parse_nonlinearity(p.value(key, std::string("identity"))); };
  FeatureField out;
  const std::string& f = a.feature;
  if (f == "shabs") {
    out = sh_abs_field(v, shell_params(p), pool);
  } else if (f == "shphase") {
    out = sh_phase_field(v, shell_params(p), p.at("r1").get<double>(), p.at("r2").get<double>(), pool);
  } else if (f == "shautocorr") {
    out = sh_autocorr_field(v, shell_params(p), parse_nonlinearity(p.value("kappa", std::string("square"))),
                            p.value("pad", 0), p.value("normalized", false), pool);
  } else if (f == "shbispectrum") {
    auto sp = shell_params(p);
    std::vector<std::array<int, 3>> triples;
    if (p.contains("triples"))
      triples = p.at("triples").get<std::vector<std::array<int, 3>>>();
    else
      triples = all_triples(sp.b_max);
    out = sh_bispectrum_field(v, sp, triples, pool);
  } else if (f == "2p") {
    Haar2pSpec s;
    s.kappa1 = kappa("kappa1");
    s.kappa2 = kappa("kappa2");
    s.radius = p.value("radius", s.radius);
    s.channel1 = p.value("channel1", 0);
    s.channel2 = p.value("channel2", 0);
    s.sigma_radial = p.value("sigma_radial", 1.0);
    out = haar_2p(v, s, pool);
  } else if (f == "3p") {
    Haar3pSpec s;
    s.kappa1 = kappa("kappa1");
    s.kappa2 = kappa("kappa2");
    s.kappa3 = kappa("kappa3");
    s.radius = p.value("radius", s.radius);
    s.chord = p.value("chord", s.chord);
    s.b_max = p.value("b_max", s.b_max);
    s.channel1 = p.value("channel1", 0);
    s.channel2 = p.value("channel2", 0);
    s.channel3 = p.value("channel3", 0);
    s.sigma_radial = p.value("sigma_radial", 1.0);
    out = haar_3p(v, s, pool);
  } else if (f == "np") {
    require(!a.params.empty(), "np needs --params with a kernel spec");
    out = haar_np(v, kernel_from_json_text(p.dump()), p.value("pad", 0), pool);
  } else {
    throw Error("unknown feature '" + f + "'");
  }
  save_feature_field(out, a.out);
}

// ---- select --------------------------------------------------------------------

struct SelectArgs {
  std::string csv, out, binning = "quantile";
  int bins = 32, iters = 100;
  std::size_t top = 10;
  std::uint64_t seed = 7;
};

void write_ranking(const std::string& path, const LabeledFeatureMatrix& data, const std::vector<RankedFeature>& r) {
  Report rep(path);
  rep.out() << "feature,score\n";
  for (const auto& f : r) rep.out() << data.names[f.index] << ',' << num(f.score) << '\n';
}

void run_select_mmd(const SelectArgs& a, const Globals& g) {
  auto data = read_labeled_csv(a.csv);
  Binning b;
  if (a.binning == "quantile")
    b = Binning::Quantile;
  else if (a.binning == "width")
    b = Binning::EqualWidth;
  else
    throw Error("--binning must be quantile or width");
  write_ranking(a.out, data, mmd_rank(data, a.bins, a.top, b, g.pool()));
}

void run_select_simba(const SelectArgs& a) {
  auto data = read_labeled_csv(a.csv);
  write_ranking(a.out, data, rank_by_weight(simba_train(data, a.iters, a.seed)));
}

// ---- learn-kernel --------------------------------------------------------------

struct LearnArgs {
  std::string patches, out, kappas = "square,cube,pow4,sqrt", report;
  int k = 30, points = 4, label = 1, pad = kDefaultLearnPad, register_pad = kDefaultRegisterPad;
  double separation = 20.0, signal_fraction = 0.8;
  std::uint64_t seed = 7;
};

// Entries are {volume, center, label, radii, b_max, channel}; in the object
// form missing entry fields fall back to the top level.
std::vector<Patch> load_patches(const std::string& path, const WorkerPool& pool, int& b_max, int& channel) {
  json doc = read_json(path);
  json defaults = json::object(), entries;
  if (doc.is_array()) {
    entries = doc;
  } else {
    require(doc.is_object() && doc.contains("patches"), "patches file: expected an array or {\"patches\": [...]}");
    entries = doc.at("patches");
    defaults = doc;
  }
  require(entries.is_array() && !entries.empty(), "patches file: no patches");
  auto field = [&](const json& e, const char* key) -> const json& {
    if (e.contains(key)) return e.at(key);
    if (defaults.contains(key)) return defaults.at(key);
    throw Error(std::string("patches file: missing '") + key + "'");
  };
  const fs::path base = fs::path(path).parent_path();
  std::map<std::string, Volume> volumes;
  std::vector<Patch> out(entries.size());
  std::vector<double> radii;
  b_max = -1;
  channel = -1;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    std::string vp = field(e, "volume").get<std::string>();
    if (fs::path(vp).is_relative()) vp = (base / vp).string();
    auto r = field(e, "radii").get<std::vector<double>>();
    int b = field(e, "b_max").get<int>();
    int ch = e.contains("channel") ? e.at("channel").get<int>() : defaults.value("channel", 0);
    if (i == 0) {
      radii = r;
      b_max = b;
      channel = ch;
    }
    require(r == radii && b == b_max && ch == channel, "patches file: radii, b_max and channel must agree");
    auto c = field(e, "center").get<std::array<int, 3>>();
    if (!volumes.count(vp)) volumes.emplace(vp, load_volume(vp));
    out[i].center = {c[0], c[1], c[2]};
    out[i].label = field(e, "label").get<int>();
  }
  // extract per volume so each is expanded with the worker pool
  for (const auto& [vp, vol] : volumes) {
    std::vector<std::size_t> idx;
    std::vector<VoxelCoord> centers;
    std::vector<int> labels;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::string p = field(entries[i], "volume").get<std::string>();
      if (fs::path(p).is_relative()) p = (base / p).string();
      if (p != vp) continue;
      idx.push_back(i);
      centers.push_back(out[i].center);
      labels.push_back(out[i].label);
    }
    auto ps = extract_patches(vol, channel, centers, labels, radii, b_max, 1.0, pool);
    for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = ps[j];
  }
  return out;
}

void run_learn_kernel(const LearnArgs& a, const Globals& g) {
  auto pool = g.pool();
  int b_max = 0, channel = 0;
  auto patches = load_patches(a.patches, pool, b_max, channel);
  std::vector<NonLinearity> kset;
  for (const auto& k : split(a.kappas)) kset.push_back(parse_nonlinearity(k));
  require(!kset.empty(), "--kappas is empty");

  auto cm = cluster_patches(patches, a.k, a.seed, a.pad, pool);
  int target = -1;
  std::size_t best_size = 0;
  for (int j = 0; j < cm.k; ++j) {
    if (!cm.selected[j] || cm.majority_label[j] != a.label) continue;
    std::size_t n = cm.members(j).size();
    if (target < 0 || cm.homogeneity[j] > cm.homogeneity[target] ||
        (cm.homogeneity[j] == cm.homogeneity[target] && n > best_size)) {
      target = j;
      best_size = n;
    }
  }
  if (target < 0) throw Error("no homogeneous cluster with label " + std::to_string(a.label));
  std::vector<Patch> members;
  for (auto i : cm.members(target)) members.push_back(patches[i]);
  auto reg = register_cluster(members, cm.centroids[target], a.register_pad, pool);
  auto vm = variance_map(reg, 64, 32, pool);
  auto pl = place_kernel_points(vm, a.points, a.separation, a.signal_fraction);
  auto maps = learn_mappings(reg, pl, kset, a.seed);
  auto spec = emit_kernel_spec(pl, maps.front(), b_max, channel);
  std::ofstream f(a.out);
  if (!f) throw Error("cannot write " + a.out);
  f << kernel_to_json_text(spec) << '\n';

  if (!a.report.empty()) {
    Report r(a.report);
    r.out() << "cluster,members,homogeneity,majority_label,selected\n";
    for (int j = 0; j < cm.k; ++j)
      r.out() << j << ',' << cm.members(j).size() << ',' << num(cm.homogeneity[j]) << ',' << cm.majority_label[j]
              << ',' << (cm.selected[j] ? 1 : 0) << '\n';
  }
}

// ---- texgen / bench-texture ----------------------------------------------------

struct TexgenArgs {
  std::string out;
  int cases = 6, dims = 32;
  std::uint64_t seed = 7;
  double gray_shift = 0.25;
};

void run_texgen(const TexgenArgs& a) {
  require(a.dims >= 1, "--dims must be >= 1");
  fs::create_directories(a.out);
  auto cases = generate_texture_cases(a.cases, {a.dims, a.dims, a.dims}, a.seed, a.gray_shift);
  json manifest = {{"dims", {a.dims, a.dims, a.dims}}, {"seed", a.seed}, {"gray_shift", a.gray_shift},
                   {"cases", json::array()}};
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& c = cases[i];
    std::string stem = "case" + std::to_string(i);
    auto save = [&](const Volume& v, const std::string& name) {
      save_volume(v, (fs::path(a.out) / (stem + "_" + name)).string());
      return stem + "_" + name;
    };
    json files = {{"train", save(c.train.volume, "train")},
                  {"train_labels", save(c.train.labels, "train_labels")},
                  {"test", save(c.test.volume, "test")},
                  {"test_labels", save(c.test.labels, "test_labels")},
                  {"test_shifted", save(c.test_shifted.volume, "test_shifted")}};
    manifest["cases"].push_back({{"kind_a", c.kind_a},
                                 {"kind_b", c.kind_b},
                                 {"recipe_a", json::parse(recipe_to_json_text(c.a))},
                                 {"recipe_b", json::parse(recipe_to_json_text(c.b))},
                                 {"train_seed", c.train_seed},
                                 {"test_seed", c.test_seed},
                                 {"shift_a", c.test_shifted.shift_a},
                                 {"shift_b", c.test_shifted.shift_b},
                                 {"files", files}});
  }
  std::ofstream f(fs::path(a.out) / "manifest.json");
  if (!f) throw Error("cannot write manifest in " + a.out);
  f << manifest.dump(2) << '\n';
}

struct BenchTextureArgs {
  std::string dir, feature = "sh_abs", radii = "4,8", report;
  int b_max = 5;
};

void run_bench_texture(const BenchTextureArgs& a, const Globals& g) {
  json manifest = read_json((fs::path(a.dir) / "manifest.json").string());
  auto radii = parse_doubles(a.radii);
  auto features = split(a.feature);
  require(!features.empty(), "--feature is empty");
  auto pool = g.pool();
  Report r(a.report);
  r.out() << "case,feature,accuracy,accuracy_shifted,loss_points\n";
  const auto& cases = manifest.at("cases");
  for (std::size_t i = 0; i < cases.size(); ++i) {
    const auto& files = cases[i].at("files");
    auto load = [&](const char* key) { return load_volume((fs::path(a.dir) / files.at(key).get<std::string>()).string()); };
    Volume train = load("train"), train_labels = load("train_labels"), test = load("test"),
           test_labels = load("test_labels"), shifted = load("test_shifted");
    for (const auto& f : features) {
      auto s = score_texture_case(train, train_labels, test, shifted, test_labels, f, radii, a.b_max, pool);
      r.out() << i << ',' << f << ',' << num(s.accuracy) << ',' << num(s.accuracy_shifted) << ','
              << num(s.loss_points()) << '\n';
    }
  }
}

std::string one_line(std::string s) {
  std::replace(s.begin(), s.end(), '\n', ' ');
  while (!s.empty() && s.back() == ' ') s.pop_back();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotation-invariant local features on 3D volumes"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(0, 1);
  Globals g;
  app.add_option("--workers", g.workers, "Worker threads (default: SPHEREFEAT_WORKERS or all cores)")
      ->check(CLI::PositiveNumber);

  TransformArgs ta;
  auto* tr = app.add_subcommand("transform", "Spherical harmonic expansion of a volume at one radius");
  tr->add_option("--volume", ta.volume, "Input volume (header or stem)")->required();
  tr->add_option("--radius", ta.radius, "Shell radius in voxels");
  tr->add_option("--bmax", ta.b_max, "Maximum band")->check(CLI::NonNegativeNumber);
  tr->add_option("--sigma-radial", ta.sigma_radial, "Radial window width");
  tr->add_option("--channel", ta.channel, "Input channel");
  tr->add_option("--point", ta.point, "x,y,z: write the expansion of one voxel as JSON");
  tr->add_option("--out", ta.out, "Output path")->required();

  EstimateArgs ea;
  auto* er = app.add_subcommand("estimate-rotation", "Rotation R with a close to R b; prints phi theta psi peak");
  er->add_option("--a", ea.a, "Expansion JSON")->required();
  er->add_option("--b", ea.b, "Expansion JSON")->required();
  er->add_option("--bmax", ea.b_max, "Band limit used (default: both inputs)");
  er->add_option("--pad", ea.pad, "Correlation pad")->check(CLI::NonNegativeNumber);

  BenchRotationArgs ba;
  auto* br = app.add_subcommand("bench-rotation", "Random-rotation accuracy benchmark, CSV per trial");
  br->add_option("--mode", ba.mode, "harmonic (A) or spatial (B)");
  br->add_option("--bmax", ba.cfg.b_max, "Maximum band")->check(CLI::NonNegativeNumber);
  br->add_option("--pad", ba.cfg.pad, "Correlation pad")->check(CLI::NonNegativeNumber);
  br->add_option("--trials", ba.cfg.trials, "Number of trials")->check(CLI::PositiveNumber);
  br->add_option("--seed", ba.cfg.seed, "Random seed");
  br->add_option("--sigma", ba.cfg.sigma, "Spatial mode: Gaussian pre-smoothing in voxels");
  br->add_option("--radius", ba.cfg.radius, "Spatial mode: shell radius (0: smallest legal)");
  br->add_flag("--no-timing", ba.no_timing, "Write 0 for runtime_ms");
  br->add_option("--out", ba.out, "Report path (default stdout)");

  ExtractArgs xa;
  auto* ex = app.add_subcommand("extract", "Voxel-wise feature field");
  ex->add_option("--volume", xa.volume, "Input volume")->required();
  ex->add_option("--feature", xa.feature, "shabs|shphase|shautocorr|shbispectrum|2p|3p|np")
      ->required()
      ->check(CLI::IsMember({"shabs", "shphase", "shautocorr", "shbispectrum", "2p", "3p", "np"}));
  ex->add_option("--params", xa.params, "Feature parameters (JSON); np takes a kernel spec");
  ex->add_option("--out", xa.out, "Output feature field")->required();

  SelectArgs sa;
  auto* sel = app.add_subcommand("select", "Feature ranking from a labeled CSV");
  sel->require_subcommand(1);
  auto* mmd = sel->add_subcommand("mmd", "Maximum marginal diversity ranking");
  mmd->add_option("--csv", sa.csv, "Labeled CSV")->required();
  mmd->add_option("--bins", sa.bins, "Histogram bins")->check(CLI::Range(2, 1 << 20));
  mmd->add_option("--top", sa.top, "Number of features reported");
  mmd->add_option("--binning", sa.binning, "quantile or width");
  mmd->add_option("--out", sa.out, "Report path (default stdout)");
  auto* simba = sel->add_subcommand("simba", "SIMBA margin-based weights");
  simba->add_option("--csv", sa.csv, "Labeled CSV")->required();
  simba->add_option("--iters", sa.iters, "Iterations")->check(CLI::PositiveNumber);
  simba->add_option("--seed", sa.seed, "Random seed");
  simba->add_option("--out", sa.out, "Report path (default stdout)");

  LearnArgs la;
  auto* lk = app.add_subcommand("learn-kernel", "Learn an np kernel from labeled patches");
  lk->add_option("--patches", la.patches, "patches.json")->required();
  lk->add_option("--k", la.k, "Number of clusters")->check(CLI::PositiveNumber);
  lk->add_option("--points", la.points, "Kernel points")->check(CLI::PositiveNumber);
  lk->add_option("--kappas", la.kappas, "Comma-separated candidate mappings");
  lk->add_option("--seed", la.seed, "Random seed");
  lk->add_option("--label", la.label, "Target label");
  lk->add_option("--pad", la.pad, "Pad for patch distances")->check(CLI::NonNegativeNumber);
  lk->add_option("--register-pad", la.register_pad, "Pad for cluster registration")->check(CLI::NonNegativeNumber);
  lk->add_option("--separation", la.separation, "Minimum point separation in degrees");
  lk->add_option("--signal-fraction", la.signal_fraction, "Candidate points need |mean| >= f * max |mean|");
  lk->add_option("--report", la.report, "Cluster report CSV");
  lk->add_option("--out", la.out, "Kernel spec JSON")->required();

  TexgenArgs ga;
  auto* tg = app.add_subcommand("texgen", "Synthetic texture segmentation cases");
  tg->add_option("--out", ga.out, "Output directory")->required();
  tg->add_option("--cases", ga.cases, "Number of cases")->check(CLI::PositiveNumber);
  tg->add_option("--dims", ga.dims, "Cube side")->check(CLI::PositiveNumber);
  tg->add_option("--seed", ga.seed, "Random seed");
  tg->add_option("--gray-shift", ga.gray_shift, "Maximum per-texture gray shift")->check(CLI::NonNegativeNumber);

  BenchTextureArgs ta2;
  auto* bt = app.add_subcommand("bench-texture", "Nearest-centroid segmentation accuracy on texgen cases");
  bt->add_option("--dir", ta2.dir, "texgen directory")->required();
  bt->add_option("--feature", ta2.feature, "Comma-separated: " + [] {
    std::string s;
    for (const auto& n : texture_feature_names()) s += (s.empty() ? "" : ",") + n;
    return s;
  }());
  bt->add_option("--radii", ta2.radii, "Comma-separated radii");
  bt->add_option("--bmax", ta2.b_max, "Maximum band")->check(CLI::NonNegativeNumber);
  bt->add_option("--report", ta2.report, "Report path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 2;
  }
  if (app.get_subcommands().empty()) {
    std::cerr << "error: a subcommand is required (see --help)\n";
    return 2;
  }

  try {
    if (*tr) run_transform(ta, g);
    else if (*er) run_estimate(ea);
    else if (*br) run_bench_rotation(ba, g);
    else if (*ex) run_extract(xa, g);
    else if (*mmd) run_select_mmd(sa, g);
    else if (*simba) run_select_simba(sa);
    else if (*lk) run_learn_kernel(la, g);
    else if (*tg) run_texgen(ga);
    else if (*bt) run_bench_texture(ta2, g);
  } catch (const std::exception& e) {
    std::cerr << "error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}
