#include "pedteach/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "pedteach/errors.hpp"
#include "random_util.hpp"

namespace pedteach {

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

namespace {

struct DisjointSets {
  explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  // The smaller index becomes the root so roots are first positions.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent[b] = a;
  }

  std::vector<std::size_t> parent;
};

std::vector<std::vector<std::size_t>> cluster_strings(const std::vector<const std::string*>& texts,
                                                      std::size_t threshold) {
  DisjointSets sets(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    for (std::size_t j = i + 1; j < texts.size(); ++j) {
      if (sets.find(i) == sets.find(j)) continue;
      if (levenshtein(*texts[i], *texts[j]) <= threshold) sets.unite(i, j);
    }
  }
  std::vector<std::vector<std::size_t>> clusters;
  std::map<std::size_t, std::size_t> slot;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    std::size_t root = sets.find(i);
    auto [it, fresh] = slot.emplace(root, clusters.size());
    if (fresh) clusters.emplace_back();
    clusters[it->second].push_back(i);
  }
  return clusters;
}

std::size_t count_clusters(const std::vector<const std::string*>& texts, std::size_t threshold) {
  return cluster_strings(texts, threshold).size();
}

}  // namespace

Clustering cluster_corpus(const Corpus& c, std::size_t threshold) {
  std::vector<const std::string*> texts;
  texts.reserve(c.size());
  for (const auto& e : c.examples) texts.push_back(&e.text);
  Clustering cl;
  cl.threshold = threshold;
  cl.clusters = cluster_strings(texts, threshold);
  return cl;
}

double mean_clusters_per_corpus(const Dataset& d, std::size_t threshold) {
  if (d.corpora.empty()) return 0.0;
  double total = 0.0;
  for (const auto& c : d.corpora) total += static_cast<double>(cluster_corpus(c, threshold).count());
  return total / static_cast<double>(d.corpora.size());
}

double percentile(std::vector<double> xs, double q) {
  if (xs.empty()) throw InsufficientData("percentile of an empty sample");
  std::sort(xs.begin(), xs.end());
  double pos = q * static_cast<double>(xs.size() - 1);
  auto lo = static_cast<std::size_t>(std::floor(pos));
  auto hi = static_cast<std::size_t>(std::ceil(pos));
  double frac = pos - static_cast<double>(lo);
  return xs[lo] + (xs[hi] - xs[lo]) * frac;
}

PermutationTestResult permutation_test_clusters(const Dataset& d, std::size_t threshold,
                                                std::size_t n_samples, std::uint64_t seed) {
  if (d.corpora.size() < 2) throw InsufficientData("permutation test needs at least 2 corpora");
  if (n_samples == 0) throw InsufficientData("permutation test needs at least 1 sample");

  // Per rule: the pooled strings and the sizes of the corpora that share them.
  struct RuleGroup {
    std::vector<const std::string*> strings;
    std::vector<std::size_t> sizes;
  };
  std::map<std::string, RuleGroup> groups;
  for (const auto& c : d.corpora) {
    auto& g = groups[c.rule_id];
    for (const auto& e : c.examples) g.strings.push_back(&e.text);
    g.sizes.push_back(c.size());
  }

  PermutationTestResult result;
  result.seed = seed;
  result.n_samples = n_samples;
  result.observed_statistic = mean_clusters_per_corpus(d, threshold);
  result.null_samples.assign(n_samples, 0.0);

  auto run_sample = [&](std::size_t k) {
    auto rng = detail::make_stream(seed, k);
    std::size_t total = 0;
    std::vector<const std::string*> shuffled, slice;
    for (const auto& [rule, g] : groups) {
      shuffled = g.strings;
      for (std::size_t i = shuffled.size(); i > 1; --i) {
        std::swap(shuffled[i - 1], shuffled[detail::draw_below(rng, i)]);
      }
      std::size_t offset = 0;
      for (std::size_t size : g.sizes) {
        slice.assign(shuffled.begin() + static_cast<std::ptrdiff_t>(offset),
                     shuffled.begin() + static_cast<std::ptrdiff_t>(offset + size));
        total += count_clusters(slice, threshold);
        offset += size;
      }
    }
    result.null_samples[k] = static_cast<double>(total) / static_cast<double>(d.corpora.size());
  };

  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, n_samples);
  std::vector<std::thread> threads;
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&, w] {
      for (std::size_t k = w; k < n_samples; k += workers) run_sample(k);
    });
  }
  for (auto& t : threads) t.join();

  result.ci_low = percentile(result.null_samples, 0.025);
  result.ci_high = percentile(result.null_samples, 0.975);
  auto at_or_below = std::count_if(result.null_samples.begin(), result.null_samples.end(),
                                   [&](double x) { return x <= result.observed_statistic; });
  result.p_lower = static_cast<double>(at_or_below) / static_cast<double>(n_samples);
  return result;
}

double balanced_chi_square(std::size_t a, std::size_t b) {
  if (a + b == 0) return 0.0;
  double diff = static_cast<double>(a) - static_cast<double>(b);
  return diff * diff / static_cast<double>(a + b);
}

FirstInClusterPolarity first_in_cluster_polarity(const Dataset& d, std::size_t threshold) {
  FirstInClusterPolarity out;
  for (const auto& c : d.corpora) {
    for (const auto& cluster : cluster_corpus(c, threshold).clusters) {
      if (is_positive(c.examples[cluster.front()].label)) ++out.first_positive;
      else ++out.first_negative;
    }
  }
  out.chi_square = balanced_chi_square(out.first_positive, out.first_negative);
  return out;
}

double cluster_contiguity(const Clustering& cl) {
  if (cl.clusters.empty()) return 1.0;
  std::size_t contiguous = 0;
  for (const auto& cluster : cl.clusters) {
    if (cluster.back() - cluster.front() + 1 == cluster.size()) ++contiguous;
  }
  return static_cast<double>(contiguous) / static_cast<double>(cl.clusters.size());
}

PolarityBalance polarity_balance_test(const std::vector<double>& diffs) {
  if (diffs.size() < 2) throw InsufficientData("t-test needs at least 2 corpora");
  const double n = static_cast<double>(diffs.size());
  PolarityBalance out;
  out.mean_diff = std::accumulate(diffs.begin(), diffs.end(), 0.0) / n;
  double ss = 0.0;
  for (double x : diffs) ss += (x - out.mean_diff) * (x - out.mean_diff);
  out.sd_diff = std::sqrt(ss / (n - 1.0));
  out.df = diffs.size() - 1;
  if (out.sd_diff == 0.0) {
    out.t_statistic = out.mean_diff == 0.0 ? 0.0 : std::copysign(INFINITY, out.mean_diff);
  } else {
    out.t_statistic = out.mean_diff / (out.sd_diff / std::sqrt(n));
  }
  return out;
}

PolarityBalance polarity_balance_test(const Dataset& d, const std::string& rule_id) {
  std::vector<double> diffs;
  for (const auto& c : d.corpora) {
    if (c.rule_id != rule_id) continue;
    auto counts = polarity_counts(c);
    diffs.push_back(static_cast<double>(counts.positive) - static_cast<double>(counts.negative));
  }
  return polarity_balance_test(diffs);
}

std::string analysis_report(const Dataset& d, const AnalysisOptions& opts) {
  std::ostringstream out;
  out << std::setprecision(12);
  out << "# corpus analysis report\n";
  out << "threshold=" << opts.threshold << "\n";
  out << "n_samples=" << opts.n_samples << "\n";
  out << "seed=" << opts.seed << "\n";
  out << "n_corpora=" << d.corpora.size() << "\n";

  std::size_t examples = 0, wrong = 0;
  std::map<std::string, std::pair<std::size_t, std::size_t>> per_rule;  // examples, wrong
  for (const auto& c : d.corpora) {
    const RuleSpace& space = d.space(c.rule_id);
    const Regex& taught = c.taught.empty() ? space.target() : space.hypotheses()[*space.index_of(c.taught)];
    auto q = static_cast<std::size_t>(std::lround(mislabel_rate(c, taught) * static_cast<double>(c.size())));
    examples += c.size();
    wrong += q;
    per_rule[c.rule_id].first += c.size();
    per_rule[c.rule_id].second += q;
  }
  out << "error_rate=" << (examples ? static_cast<double>(wrong) / static_cast<double>(examples) : 0.0)
      << "\n";
  for (const auto& [rule, counts] : per_rule) {
    out << "error_rate." << rule << "="
        << static_cast<double>(counts.second) / static_cast<double>(counts.first) << "\n";
  }

  out << "mean_clusters_per_corpus=" << mean_clusters_per_corpus(d, opts.threshold) << "\n";
  if (d.corpora.size() >= 2) {
    auto perm = permutation_test_clusters(d, opts.threshold, opts.n_samples, opts.seed);
    out << "permutation.observed=" << perm.observed_statistic << "\n";
    out << "permutation.ci_low=" << perm.ci_low << "\n";
    out << "permutation.ci_high=" << perm.ci_high << "\n";
    out << "permutation.p_lower=" << perm.p_lower << "\n";
    out << "permutation.n_samples=" << perm.n_samples << "\n";
    out << "permutation.seed=" << perm.seed << "\n";
    out << "permutation.scheme=within-rule shuffle, labels travel with strings, sizes kept\n";
  } else {
    out << "permutation.skipped=insufficient data\n";
  }

  auto first = first_in_cluster_polarity(d, opts.threshold);
  out << "first_in_cluster.positive=" << first.first_positive << "\n";
  out << "first_in_cluster.negative=" << first.first_negative << "\n";
  out << "first_in_cluster.chi_square=" << first.chi_square << "\n";

  double contiguity = 0.0;
  for (const auto& c : d.corpora) contiguity += cluster_contiguity(cluster_corpus(c, opts.threshold));
  out << "contiguity.mean=" << (d.corpora.empty() ? 0.0 : contiguity / static_cast<double>(d.corpora.size()))
      << "\n";
  out << "contiguity.definition=share of clusters spanning consecutive positions (ad hoc statistic)\n";

  for (const auto& rule : d.rule_ids()) {
    try {
      auto bal = polarity_balance_test(d, rule);
      out << "polarity_balance." << rule << ".mean_diff=" << bal.mean_diff << "\n";
      out << "polarity_balance." << rule << ".sd_diff=" << bal.sd_diff << "\n";
      out << "polarity_balance." << rule << ".t=" << bal.t_statistic << "\n";
      out << "polarity_balance." << rule << ".df=" << bal.df << "\n";
    } catch (const InsufficientData&) {
      out << "polarity_balance." << rule << ".skipped=insufficient data\n";
    }
  }
  return out.str();
}

}  // namespace pedteach
