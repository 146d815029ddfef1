#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pedteach/corpus.hpp"

namespace pedteach {

/// Unit-cost edit distance.
std::size_t levenshtein(std::string_view a, std::string_view b);

/// Single-linkage grouping of a corpus's examples: two examples share a
/// cluster iff a chain of pairwise distances <= threshold connects them.
/// Clusters are ordered by their first position; positions are ascending.
struct Clustering {
  std::size_t threshold = 0;
  std::vector<std::vector<std::size_t>> clusters;

  std::size_t count() const noexcept { return clusters.size(); }
};

Clustering cluster_corpus(const Corpus& c, std::size_t threshold);

double mean_clusters_per_corpus(const Dataset& d, std::size_t threshold);

struct PermutationTestResult {
  double observed_statistic = 0.0;
  std::vector<double> null_samples;
  std::size_t n_samples = 0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double p_lower = 0.0;  // share of null samples <= observed
  std::uint64_t seed = 0;
};

/// Null samples shuffle every example (label attached) across the corpora of
/// the same rule, keeping corpus sizes. Sample k draws from its own seeded
/// stream, so results do not depend on evaluation order.
/// Throws InsufficientData for fewer than two corpora or n_samples == 0.
PermutationTestResult permutation_test_clusters(const Dataset& d, std::size_t threshold,
                                                std::size_t n_samples, std::uint64_t seed);

/// Linear-interpolation percentile (q in [0, 1]) of an unsorted sample.
double percentile(std::vector<double> xs, double q);

struct FirstInClusterPolarity {
  std::size_t first_positive = 0;
  std::size_t first_negative = 0;
  double chi_square = 0.0;
};

/// One-df goodness-of-fit statistic against an even split, (a-b)^2/(a+b),
/// without continuity correction. Zero when a + b == 0.
double balanced_chi_square(std::size_t a, std::size_t b);

FirstInClusterPolarity first_in_cluster_polarity(const Dataset& d, std::size_t threshold);

/// Share of clusters whose positions form one consecutive run.
double cluster_contiguity(const Clustering& cl);

struct PolarityBalance {
  double mean_diff = 0.0;  // mean of n_positive - n_negative
  double sd_diff = 0.0;    // sample standard deviation
  double t_statistic = 0.0;
  std::size_t df = 0;
};

/// One-sample t-test of per-corpus (n_positive - n_negative) against zero,
/// i.e. the paired test of positive vs. negative counts.
/// Throws InsufficientData with fewer than two corpora for the rule.
PolarityBalance polarity_balance_test(const Dataset& d, const std::string& rule_id);
PolarityBalance polarity_balance_test(const std::vector<double>& diffs);

struct AnalysisOptions {
  std::size_t threshold = 2;
  std::size_t n_samples = 1000;
  std::uint64_t seed = 0;
};

/// Full key-value report: error rates, cluster statistics, permutation test,
/// first-in-cluster polarity, contiguity and per-rule polarity balance.
std::string analysis_report(const Dataset& d, const AnalysisOptions& opts);

}  // namespace pedteach
