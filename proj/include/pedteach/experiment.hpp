#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pedteach/corpus.hpp"
#include "pedteach/learners.hpp"

namespace pedteach {

enum class PoolPolicy { EmpiricalOnly, EmpiricalPlusObserved, EmpiricalPlusSynthetic };

std::string to_string(PoolPolicy p);
PoolPolicy parse_pool_policy(const std::string& s);

struct SynthesisOptions {
  std::size_t per_hypothesis = 10;
  std::size_t max_examples = 8;
  std::size_t max_len = 12;
  /// Empty: derive from the dataset corpora of the rule plus the characters
  /// named by the hypotheses.
  std::string alphabet;
};

struct GridSpec {
  std::vector<double> alphas{1, 2, 4, 8};
  std::vector<double> log_betas{-0.1, -1, -2, -4};
  double eta = 0.0;
  PoolPolicy pool_policy = PoolPolicy::EmpiricalPlusObserved;
  std::uint64_t seed = 0;
  /// Corpus sources that are scored. Synthetic corpora always feed the pool.
  std::set<CorpusSource> evaluate_sources{CorpusSource::Paper, CorpusSource::Session};
  SynthesisOptions synthesis;

  /// Throws InvalidParams.
  void validate() const;
};

struct GridRecord {
  double alpha = 1.0;
  double log_beta = 0.0;
  double beta = 1.0;
  std::string rule_id;
  std::size_t corpus_index = 0;  // into Dataset::corpora
  std::string teacher_id;
  double p_correct_l0 = 0.0;
  double p_correct_l1 = 0.0;
  double map_correct_l0 = 0.0;
  double map_correct_l1 = 0.0;
  bool fallback = false;
};

struct GridCell {
  double alpha = 1.0;
  double log_beta = 0.0;
  double mean_l0 = 0.0;
  double mean_l1 = 0.0;
  double map_l0 = 0.0;
  double map_l1 = 0.0;
  std::size_t n_corpora = 0;
  std::size_t n_fallback = 0;
};

struct GridResult {
  GridSpec spec;
  std::vector<GridRecord> records;  // ordered by (alpha, log_beta, corpus_index)
  std::vector<GridCell> cells;      // row-major: alpha outer, log_beta inner

  const GridCell& cell(std::size_t alpha_index, std::size_t beta_index) const;
};

/// Draws corpora from the teacher's prior: size ~ Geometric(1/2) on {1,2,..},
/// string length ~ Geometric(1/2) on {0,1,..}, characters uniform over the
/// alphabet, every example labeled by r. Draws beyond the caps are redrawn.
std::vector<Corpus> synthesize_corpora(const Regex& r, std::size_t n, std::uint64_t seed,
                                       std::size_t max_examples, std::size_t max_len,
                                       const Alphabet& alphabet);

/// Characters of the rule's corpora in `d` plus those named by its hypotheses.
Alphabet default_alphabet(const Dataset& d, const std::string& rule_id);

/// Teacher pool for learning about `rule_id`: every dataset corpus of the
/// rule (target and distractor teaching), then `observed` when the policy
/// asks for it, then synthetic corpora for each hypothesis when the policy
/// asks for those. Duplicates are dropped, first occurrence wins.
/// Throws MissingDistractorCorpora when a hypothesis has no corpus and the
/// policy cannot synthesize one.
CorpusPool build_pool(const Dataset& d, const std::string& rule_id, PoolPolicy policy,
                      const Corpus* observed, std::uint64_t seed,
                      const SynthesisOptions& synthesis);

/// Same, for an explicit space and empirical corpus list; `alphabet` is used
/// only when synthesizing.
CorpusPool build_pool(const RuleSpace& space, const std::vector<Corpus>& empirical,
                      PoolPolicy policy, const Corpus* observed, std::uint64_t seed,
                      const SynthesisOptions& synthesis, const Alphabet& alphabet);

GridResult run_grid(const Dataset& d, const GridSpec& spec);

/// Tables with rows = alpha and columns = log beta.
struct GridSummary {
  std::vector<double> alphas;
  std::vector<double> log_betas;
  std::vector<std::vector<double>> l0, l1, diff;
  std::vector<std::vector<double>> map_l0, map_l1;
};

GridSummary summarize(const GridResult& gr);

/// Writes grid.csv, summary_l0.csv, summary_l1.csv, summary_diff.csv, the
/// MAP tables, gnuplot matrices (*.dat) and a plain-text summary.txt.
void write_grid_outputs(const GridResult& gr, const std::filesystem::path& dir);

std::string summary_text(const GridResult& gr);

/// L0 and L1 on one corpus. `observed` is added to the pool if absent.
/// Shared by the command line `learn` tool and the session service so both
/// produce identical numbers.
struct LearnResult {
  PosteriorDistribution l0;
  PosteriorDistribution l1;
  std::vector<std::size_t> errors;  // Q per hypothesis
};

LearnResult learn(const RuleSpace& space, const Corpus& observed, CorpusPool pool,
                  double alpha, const LearnerParams& params);

}  // namespace pedteach
