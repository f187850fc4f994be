#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spherefeat/common.hpp"
#include "spherefeat/parallel.hpp"

namespace spherefeat {

/// Samples x features, row-major, with integer labels 1..m.
struct LabeledFeatureMatrix {
  std::size_t n_samples = 0, n_features = 0;
  std::vector<double> values;
  std::vector<int> labels;
  std::vector<std::string> names;

  double at(std::size_t i, std::size_t k) const { return values[i * n_features + k]; }
  double& at(std::size_t i, std::size_t k) { return values[i * n_features + k]; }
  int classes() const;
  /// Class frequencies p_1..p_m.
  std::vector<double> priors() const;
  /// Throws on NaN, empty classes or labels that are not 1..m.
  void validate() const;
};

/// CSV with a header row; the last column is the integer label.
LabeledFeatureMatrix read_labeled_csv(const std::string& path);
LabeledFeatureMatrix parse_labeled_csv(const std::string& text);

/// sum P_i log(P_i / Q_i) with 0 log 0 = 0; +infinity when some Q_i = 0 < P_i.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

/// Mutual information of a joint distribution given as rows x columns.
double mutual_information(const std::vector<std::vector<double>>& joint);

enum class Binning { Quantile, EqualWidth };

/// Per-feature histograms h_{k,i}, each normalized to 1, and the unweighted
/// class average h_k.
struct HistogramSet {
  int bins = 2;
  std::vector<std::vector<std::vector<double>>> per_class;  // [k][i][bin]
  std::vector<std::vector<double>> pooled;                  // [k][bin]
};

/// Bin edges of one feature: B-1 interior edges, a value falls into the bin
/// given by the number of edges <= value.
std::vector<double> bin_edges(std::vector<double> column, int bins, Binning binning);
HistogramSet build_histograms(const LabeledFeatureMatrix& data, int bins, Binning binning = Binning::Quantile,
                              const WorkerPool& pool = WorkerPool::serial());

/// md(X_k) = sum_i p_i h_{k,i}^T log(h_{k,i} / h_k).
std::vector<double> marginal_diversity(const LabeledFeatureMatrix& data, int bins,
                                       Binning binning = Binning::Quantile,
                                       const WorkerPool& pool = WorkerPool::serial());

struct RankedFeature {
  std::size_t index = 0;
  double score = 0.0;
};

/// Stable descending sort by md, first top_n entries.
std::vector<RankedFeature> mmd_rank(const LabeledFeatureMatrix& data, int bins, std::size_t top_n,
                                    Binning binning = Binning::Quantile,
                                    const WorkerPool& pool = WorkerPool::serial());

struct MarginDetail {
  std::size_t nearhit = 0, nearmiss = 0;
  double hit_distance = 0.0, miss_distance = 0.0;
  double margin = 0.0;
};

/// Hypothesis margin of sample x against all other samples under the
/// w-weighted norm. Neighbor ties go to the smallest index.
MarginDetail hypothesis_margin_detail(const LabeledFeatureMatrix& data, const std::vector<double>& w,
                                      std::size_t x);
double hypothesis_margin(const LabeledFeatureMatrix& data, const std::vector<double>& w, std::size_t x);

/// SIMBA with unit steps, clamping at zero after each step; returns w^2 / max(w^2).
std::vector<double> simba_train(const LabeledFeatureMatrix& data, int iterations, std::uint64_t seed);

/// Stable descending order of a weight vector.
std::vector<RankedFeature> rank_by_weight(const std::vector<double>& w);

}  // namespace spherefeat
