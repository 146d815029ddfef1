#pragma once

// Bayesian regex learners over a finite rule space.
//
//   L0  (weak sampling)   P(r | c)  ∝ exp(-|r|) · exp(-β·Q_r(c))
//   T1  (helpful teacher) P(c ; r)  ∝ [π_T(c; r) · P_L0(r | c)]^α   over a pool
//   L1  (pedagogical)     P(r | c)  ∝ exp(-|r|) · P_T1(c ; r)
//
// where Q_r(c) counts examples whose label disagrees with r, and the teacher
// prior π_T(c; r) = 2^-|c| · Π 2^-|x_i| · Π w_i with w_i = 1 for a correctly
// labeled example and η/(1-η) otherwise (η = 0 forbids mislabels outright).
// All arithmetic is done in log space.

#include <cstddef>
#include <vector>

#include "pedteach/corpus.hpp"
#include "pedteach/regex.hpp"

namespace pedteach {

struct LearnerParams {
  double beta = 1.0;  // error tolerance, >= 0
  double eta = 0.0;   // teacher label-noise slack, in [0, 0.5)

  /// Throws InvalidParams.
  void validate() const;
};

using CorpusPool = std::vector<Corpus>;

struct TeacherParams {
  double alpha = 1.0;  // temperature, >= 1
  CorpusPool pool;     // duplicate-free under Corpus::same_examples
  LearnerParams learner;

  /// Throws InvalidParams.
  void validate() const;
};

/// Index of `c` in `pool` under example-sequence equality.
std::optional<std::size_t> find_in_pool(const CorpusPool& pool, const Corpus& c);

/// Inserts `c` unless an equal corpus is already present; returns its index.
std::size_t add_to_pool(CorpusPool& pool, const Corpus& c);

struct PosteriorDistribution {
  RuleSpace space;
  std::vector<double> probs;      // indexed like space.hypotheses()
  std::vector<double> log_probs;
  bool fallback = false;          // L1 reverted to L0

  double prob(std::size_t i) const { return probs.at(i); }
};

/// Probabilities are indexed like the teacher pool.
struct CorpusDistribution {
  std::vector<double> probs;
  std::vector<double> log_probs;

  std::size_t argmax() const;
};

/// Q_r(c): number of examples whose label disagrees with r.
std::size_t error_count(const Corpus& c, const Regex& r);

/// Normalized description-length prior exp(-|r|) over the space.
PosteriorDistribution prior_distribution(const RuleSpace& space);

PosteriorDistribution l0_posterior(const RuleSpace& space, const Corpus& c,
                                   const LearnerParams& params);

/// Unnormalized π_T(c; r).
double teacher_prior_score(const Corpus& c, const Regex& r, double eta);
double log_teacher_prior_score(const Corpus& c, const Regex& r, double eta);

/// Throws InvalidParams if r is not in the space, DegeneratePool if every
/// pool corpus has zero prior weight for r. Only depth 1 is implemented.
CorpusDistribution t1_distribution(const Regex& r, const RuleSpace& space,
                                   const TeacherParams& tp, int depth = 1);

/// Requires c to be in tp.pool (PoolMissingCorpus otherwise). Falls back to
/// L0 (with `fallback` set) when no hypothesis gives c positive teacher
/// probability.
PosteriorDistribution l1_posterior(const RuleSpace& space, const Corpus& c,
                                   const TeacherParams& tp, int depth = 1);

/// Probability assigned to `target`; throws InvalidParams if absent.
double prob_correct(const PosteriorDistribution& p, const Regex& target);

/// 1 if the target is the unique maximum, 1/k if tied with k-1 others, else 0.
double map_correct(const PosteriorDistribution& p, const Regex& target);

/// Precomputed evidence for one rule space and pool: error counts and
/// teacher-prior terms that do not depend on α or β. Lets a parameter sweep
/// reuse the matcher work across cells.
class EvidenceTable {
 public:
  EvidenceTable(const RuleSpace& space, const CorpusPool& pool);

  const RuleSpace& space() const noexcept { return space_; }
  std::size_t pool_size() const noexcept { return errors_.size(); }

  std::size_t errors(std::size_t corpus, std::size_t hypothesis) const {
    return errors_[corpus][hypothesis];
  }

  /// log P_L0(· | pool[corpus]) over the space.
  std::vector<double> l0_log_posterior(std::size_t corpus, const LearnerParams& params) const;

  /// log π_T(pool[corpus]; hypothesis).
  double log_teacher_prior(std::size_t corpus, std::size_t hypothesis, double eta) const;

  /// Unnormalized log T1 weights for `hypothesis` across the pool.
  std::vector<double> t1_log_weights(std::size_t hypothesis, double alpha,
                                     const LearnerParams& params) const;

  /// L1 posterior for pool[corpus].
  PosteriorDistribution l1_posterior(std::size_t corpus, double alpha,
                                     const LearnerParams& params) const;

 private:
  RuleSpace space_;
  std::vector<std::vector<std::size_t>> errors_;  // [corpus][hypothesis]
  std::vector<double> log_cost_;                  // log(2^-|c| Π 2^-|x|)
};

}  // namespace pedteach
