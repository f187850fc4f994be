#include "spherefeat/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace spherefeat {

namespace {

constexpr double kEps = 1e-12;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    auto b = cell.find_first_not_of(" \t\r"), e = cell.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_number(const std::string& s, std::size_t row) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("csv: row " + std::to_string(row) + ": not a number '" + s + "'");
  }
}

double weighted_distance(const LabeledFeatureMatrix& d, const std::vector<double>& w, std::size_t a,
                         std::size_t b) {
  double s = 0.0;
  for (std::size_t k = 0; k < d.n_features; ++k) {
    double z = w[k] * (d.at(a, k) - d.at(b, k));
    s += z * z;
  }
  return std::sqrt(s);
}

}  // namespace

int LabeledFeatureMatrix::classes() const {
  return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
}

std::vector<double> LabeledFeatureMatrix::priors() const {
  std::vector<double> p(classes(), 0.0);
  for (int l : labels) p[l - 1] += 1.0;
  for (double& x : p) x /= static_cast<double>(labels.size());
  return p;
}

void LabeledFeatureMatrix::validate() const {
  require(n_samples > 0 && n_features > 0, "feature matrix: empty");
  require(values.size() == n_samples * n_features, "feature matrix: size mismatch");
  require(labels.size() == n_samples, "feature matrix: one label per sample required");
  for (double v : values) require(std::isfinite(v), "feature matrix: non-finite value");
  int m = classes();
  require(m >= 1, "feature matrix: labels must start at 1");
  std::vector<int> count(m, 0);
  for (int l : labels) {
    require(l >= 1, "feature matrix: labels must be 1..m");
    ++count[l - 1];
  }
  for (int c = 0; c < m; ++c)
    require(count[c] > 0, "feature matrix: class " + std::to_string(c + 1) + " is empty");
}

LabeledFeatureMatrix parse_labeled_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  LabeledFeatureMatrix d;
  if (!std::getline(in, line)) throw Error("csv: missing header");
  auto header = split_csv_line(line);
  require(header.size() >= 2, "csv: need at least one feature column and a label column");
  d.names.assign(header.begin(), header.end() - 1);
  d.n_features = d.names.size();
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = split_csv_line(line);
    require(cells.size() == header.size(), "csv: row " + std::to_string(row) + " has " +
                                               std::to_string(cells.size()) + " columns, expected " +
                                               std::to_string(header.size()));
    for (std::size_t k = 0; k < d.n_features; ++k) d.values.push_back(parse_number(cells[k], row));
    double label = parse_number(cells.back(), row);
    require(label == std::floor(label), "csv: row " + std::to_string(row) + ": label must be an integer");
    d.labels.push_back(static_cast<int>(label));
  }
  d.n_samples = d.labels.size();
  d.validate();
  return d;
}

LabeledFeatureMatrix read_labeled_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("csv: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_labeled_csv(ss.str());
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
  require(p.size() == q.size(), "kl_divergence: support size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] == 0.0) continue;
    if (q[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += p[i] * std::log(p[i] / q[i]);
  }
  return s;
}

double mutual_information(const std::vector<std::vector<double>>& joint) {
  require(!joint.empty() && !joint[0].empty(), "mutual_information: empty joint");
  std::size_t cols = joint[0].size();
  std::vector<double> px(joint.size(), 0.0), py(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    require(joint[i].size() == cols, "mutual_information: ragged joint");
    for (std::size_t j = 0; j < cols; ++j) {
      require(joint[i][j] >= 0.0, "mutual_information: negative probability");
      px[i] += joint[i][j];
      py[j] += joint[i][j];
      total += joint[i][j];
    }
  }
  require(std::abs(total - 1.0) < 1e-9, "mutual_information: joint does not sum to 1");
  double s = 0.0;
  for (std::size_t i = 0; i < joint.size(); ++i)
    for (std::size_t j = 0; j < cols; ++j)
      if (joint[i][j] > 0.0) s += joint[i][j] * std::log(joint[i][j] / (px[i] * py[j]));
  return s;
}

std::vector<double> bin_edges(std::vector<double> column, int bins, Binning binning) {
  require(bins >= 2, "histogram: need at least 2 bins");
  require(!column.empty(), "histogram: empty column");
  std::vector<double> edges(bins - 1);
  if (binning == Binning::EqualWidth) {
    auto [lo, hi] = std::minmax_element(column.begin(), column.end());
    for (int j = 1; j < bins; ++j) edges[j - 1] = *lo + (*hi - *lo) * j / bins;
    return edges;
  }
  std::sort(column.begin(), column.end());
  const double n1 = static_cast<double>(column.size() - 1);
  for (int j = 1; j < bins; ++j) {
    double pos = n1 * j / bins;
    std::size_t a = static_cast<std::size_t>(std::floor(pos));
    double frac = pos - a;
    edges[j - 1] = frac == 0.0 ? column[a] : column[a] + frac * (column[a + 1] - column[a]);
  }
  return edges;
}

HistogramSet build_histograms(const LabeledFeatureMatrix& data, int bins, Binning binning,
                              const WorkerPool& pool) {
  data.validate();
  require(bins >= 2, "histogram: need at least 2 bins");
  const int m = data.classes();
  std::vector<double> class_count(m, 0.0);
  for (int l : data.labels) class_count[l - 1] += 1.0;
  HistogramSet h;
  h.bins = bins;
  h.per_class.assign(data.n_features, std::vector<std::vector<double>>(m, std::vector<double>(bins, 0.0)));
  h.pooled.assign(data.n_features, std::vector<double>(bins, 0.0));
  pool.parallel_for(data.n_features, [&](std::size_t k) {
    std::vector<double> col(data.n_samples);
    for (std::size_t i = 0; i < data.n_samples; ++i) col[i] = data.at(i, k);
    auto edges = bin_edges(col, bins, binning);
    for (std::size_t i = 0; i < data.n_samples; ++i) {
      // count of edges <= x
      auto b = std::upper_bound(edges.begin(), edges.end(), col[i]) - edges.begin();
      h.per_class[k][data.labels[i] - 1][b] += 1.0;
    }
    for (int c = 0; c < m; ++c)
      for (int b = 0; b < bins; ++b) {
        h.per_class[k][c][b] /= class_count[c];
        h.pooled[k][b] += h.per_class[k][c][b] / m;
      }
  });
  return h;
}

std::vector<double> marginal_diversity(const LabeledFeatureMatrix& data, int bins, Binning binning,
                                       const WorkerPool& pool) {
  auto h = build_histograms(data, bins, binning, pool);
  auto p = data.priors();
  std::vector<double> md(data.n_features, 0.0);
  for (std::size_t k = 0; k < data.n_features; ++k) {
    double s = 0.0;
    for (std::size_t c = 0; c < p.size(); ++c) s += p[c] * kl_divergence(h.per_class[k][c], h.pooled[k]);
    md[k] = s;
  }
  return md;
}

std::vector<RankedFeature> mmd_rank(const LabeledFeatureMatrix& data, int bins, std::size_t top_n,
                                    Binning binning, const WorkerPool& pool) {
  require(top_n <= data.n_features, "mmd_rank: top_n exceeds the number of features");
  auto md = marginal_diversity(data, bins, binning, pool);
  auto ranked = rank_by_weight(md);
  ranked.resize(top_n);
  return ranked;
}

std::vector<RankedFeature> rank_by_weight(const std::vector<double>& w) {
  std::vector<RankedFeature> r(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) r[k] = {k, w[k]};
  std::stable_sort(r.begin(), r.end(), [](const RankedFeature& a, const RankedFeature& b) { return a.score > b.score; });
  return r;
}

MarginDetail hypothesis_margin_detail(const LabeledFeatureMatrix& data, const std::vector<double>& w,
                                      std::size_t x) {
  require(x < data.n_samples, "hypothesis_margin: sample index out of range");
  require(w.size() == data.n_features, "hypothesis_margin: weight length mismatch");
  MarginDetail d;
  double best_hit = std::numeric_limits<double>::infinity(), best_miss = best_hit;
  bool have_hit = false, have_miss = false;
  for (std::size_t j = 0; j < data.n_samples; ++j) {
    if (j == x) continue;
    double dist = weighted_distance(data, w, x, j);
    if (data.labels[j] == data.labels[x]) {
      if (!have_hit || dist < best_hit) {
        best_hit = dist;
        d.nearhit = j;
        have_hit = true;
      }
    } else if (!have_miss || dist < best_miss) {
      best_miss = dist;
      d.nearmiss = j;
      have_miss = true;
    }
  }
  require(have_hit, "hypothesis_margin: sample " + std::to_string(x) + " is the only member of its class");
  require(have_miss, "hypothesis_margin: no sample of another class");
  d.hit_distance = best_hit;
  d.miss_distance = best_miss;
  d.margin = 0.5 * (best_miss - best_hit);
  return d;
}

double hypothesis_margin(const LabeledFeatureMatrix& data, const std::vector<double>& w, std::size_t x) {
  return hypothesis_margin_detail(data, w, x).margin;
}

std::vector<double> simba_train(const LabeledFeatureMatrix& data, int iterations, std::uint64_t seed) {
  data.validate();
  require(iterations >= 1, "simba: iterations must be >= 1");
  bool spread = false;
  for (std::size_t i = 1; i < data.n_samples && !spread; ++i)
    for (std::size_t k = 0; k < data.n_features && !spread; ++k) spread = data.at(i, k) != data.at(0, k);
  require(spread, "simba: all samples are identical");

  const std::size_t n = data.n_features;
  std::vector<double> w(n, 1.0), grad(n);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, data.n_samples - 1);
  for (int t = 0; t < iterations; ++t) {
    std::size_t x = pick(rng);
    auto d = hypothesis_margin_detail(data, w, x);
    for (std::size_t k = 0; k < n; ++k) {
      double zm = data.at(x, k) - data.at(d.nearmiss, k), zh = data.at(x, k) - data.at(d.nearhit, k);
      grad[k] = 0.5 * (zm * zm / (d.miss_distance + kEps) - zh * zh / (d.hit_distance + kEps)) * w[k];
    }
    for (std::size_t k = 0; k < n; ++k) w[k] = std::max(0.0, w[k] + grad[k]);
  }
  double top = 0.0;
  for (double& x : w) {
    x *= x;
    top = std::max(top, x);
  }
  require(top > 0.0, "simba: all weights collapsed to zero");
  for (double& x : w) x /= top;
  return w;
}

}  // namespace spherefeat
