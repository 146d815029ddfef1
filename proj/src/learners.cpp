#include "pedteach/learners.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pedteach/errors.hpp"
#include "pedteach/logmath.hpp"

namespace pedteach {

void LearnerParams::validate() const {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidParams("beta must be finite and >= 0");
  if (!(eta >= 0.0 && eta < 0.5)) throw InvalidParams("eta must lie in [0, 0.5)");
}

void TeacherParams::validate() const {
  if (!(alpha >= 1.0) || !std::isfinite(alpha)) throw InvalidParams("alpha must be finite and >= 1");
  if (pool.empty()) throw InvalidParams("teacher pool must be nonempty");
  for (std::size_t i = 0; i < pool.size(); ++i) {
    for (std::size_t j = i + 1; j < pool.size(); ++j) {
      if (pool[i].same_examples(pool[j])) {
        throw InvalidParams("teacher pool contains duplicate corpora at " + std::to_string(i) +
                            " and " + std::to_string(j));
      }
    }
  }
  learner.validate();
}

std::optional<std::size_t> find_in_pool(const CorpusPool& pool, const Corpus& c) {
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (pool[i].same_examples(c)) return i;
  }
  return std::nullopt;
}

std::size_t add_to_pool(CorpusPool& pool, const Corpus& c) {
  if (auto i = find_in_pool(pool, c)) return *i;
  pool.push_back(c);
  return pool.size() - 1;
}

std::size_t CorpusDistribution::argmax() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

std::size_t error_count(const Corpus& c, const Regex& r) {
  std::size_t q = 0;
  for (const auto& e : c.examples) {
    if (r.matches(e.text) != is_positive(e.label)) ++q;
  }
  return q;
}

namespace {

PosteriorDistribution from_log_scores(const RuleSpace& space, std::vector<double> scores) {
  log_normalize(scores);
  PosteriorDistribution p{space, exp_all(scores), std::move(scores), false};
  return p;
}

std::vector<double> l0_log_scores(const RuleSpace& space, const std::vector<std::size_t>& errors,
                                  double beta) {
  std::vector<double> scores(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    scores[i] = -static_cast<double>(space.hypotheses()[i].description_length()) -
                beta * static_cast<double>(errors[i]);
  }
  log_normalize(scores);
  return scores;
}

double log_cost(const Corpus& c) {
  std::size_t bits = c.size();
  for (const auto& e : c.examples) bits += e.text.size();
  return -static_cast<double>(bits) * std::numbers::ln2;
}

double log_mislabel_weight(std::size_t mislabels, double eta) {
  if (mislabels == 0) return 0.0;
  if (eta == 0.0) return kNegInf;
  return static_cast<double>(mislabels) * std::log(eta / (1.0 - eta));
}

void require_depth(int depth) {
  if (depth != 1) throw InvalidParams("only recursion depth 1 (T1/L1) is supported");
}

}  // namespace

PosteriorDistribution prior_distribution(const RuleSpace& space) {
  std::vector<double> scores(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) {
    scores[i] = -static_cast<double>(space.hypotheses()[i].description_length());
  }
  return from_log_scores(space, std::move(scores));
}

PosteriorDistribution l0_posterior(const RuleSpace& space, const Corpus& c,
                                   const LearnerParams& params) {
  params.validate();
  std::vector<std::size_t> errors(space.size());
  for (std::size_t i = 0; i < space.size(); ++i) errors[i] = error_count(c, space.hypotheses()[i]);
  return from_log_scores(space, l0_log_scores(space, errors, params.beta));
}

double log_teacher_prior_score(const Corpus& c, const Regex& r, double eta) {
  return log_cost(c) + log_mislabel_weight(error_count(c, r), eta);
}

double teacher_prior_score(const Corpus& c, const Regex& r, double eta) {
  return std::exp(log_teacher_prior_score(c, r, eta));
}

EvidenceTable::EvidenceTable(const RuleSpace& space, const CorpusPool& pool) : space_(space) {
  errors_.reserve(pool.size());
  log_cost_.reserve(pool.size());
  for (const auto& c : pool) {
    std::vector<std::size_t> row(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) row[i] = error_count(c, space.hypotheses()[i]);
    errors_.push_back(std::move(row));
    log_cost_.push_back(log_cost(c));
  }
}

std::vector<double> EvidenceTable::l0_log_posterior(std::size_t corpus,
                                                    const LearnerParams& params) const {
  return l0_log_scores(space_, errors_.at(corpus), params.beta);
}

double EvidenceTable::log_teacher_prior(std::size_t corpus, std::size_t hypothesis,
                                        double eta) const {
  return log_cost_.at(corpus) + log_mislabel_weight(errors_.at(corpus).at(hypothesis), eta);
}

std::vector<double> EvidenceTable::t1_log_weights(std::size_t hypothesis, double alpha,
                                                  const LearnerParams& params) const {
  std::vector<double> w(pool_size());
  for (std::size_t j = 0; j < pool_size(); ++j) {
    double prior = log_teacher_prior(j, hypothesis, params.eta);
    w[j] = prior == kNegInf ? kNegInf : alpha * (prior + l0_log_posterior(j, params)[hypothesis]);
  }
  return w;
}

PosteriorDistribution EvidenceTable::l1_posterior(std::size_t corpus, double alpha,
                                                  const LearnerParams& params) const {
  // The L0 posteriors are shared by every hypothesis's teacher.
  std::vector<std::vector<double>> l0(pool_size());
  for (std::size_t j = 0; j < pool_size(); ++j) l0[j] = l0_log_posterior(j, params);

  std::vector<double> scores(space_.size());
  bool any = false;
  std::vector<double> w(pool_size());
  for (std::size_t i = 0; i < space_.size(); ++i) {
    for (std::size_t j = 0; j < pool_size(); ++j) {
      double prior = log_teacher_prior(j, i, params.eta);
      w[j] = prior == kNegInf ? kNegInf : alpha * (prior + l0[j][i]);
    }
    double z = log_sum_exp(w);
    double likelihood = (z == kNegInf || w[corpus] == kNegInf) ? kNegInf : w[corpus] - z;
    scores[i] = -static_cast<double>(space_.hypotheses()[i].description_length()) + likelihood;
    any = any || likelihood != kNegInf;
  }
  if (!any) {
    PosteriorDistribution p = from_log_scores(space_, l0[corpus]);
    p.fallback = true;
    return p;
  }
  return from_log_scores(space_, std::move(scores));
}

CorpusDistribution t1_distribution(const Regex& r, const RuleSpace& space,
                                   const TeacherParams& tp, int depth) {
  require_depth(depth);
  tp.validate();
  auto idx = space.index_of(r);
  if (!idx) throw InvalidParams("taught regex " + r.canonical() + " is not in the rule space");
  EvidenceTable table(space, tp.pool);
  std::vector<double> w = table.t1_log_weights(*idx, tp.alpha, tp.learner);
  if (log_sum_exp(w) == kNegInf) {
    throw DegeneratePool("no pool corpus is consistent with " + r.canonical());
  }
  log_normalize(w);
  return CorpusDistribution{exp_all(w), std::move(w)};
}

PosteriorDistribution l1_posterior(const RuleSpace& space, const Corpus& c,
                                   const TeacherParams& tp, int depth) {
  require_depth(depth);
  tp.validate();
  auto k = find_in_pool(tp.pool, c);
  if (!k) throw PoolMissingCorpus("observed corpus is not in the teacher pool");
  return EvidenceTable(space, tp.pool).l1_posterior(*k, tp.alpha, tp.learner);
}

double prob_correct(const PosteriorDistribution& p, const Regex& target) {
  auto idx = p.space.index_of(target);
  if (!idx) throw InvalidParams("target " + target.canonical() + " is not in the rule space");
  return p.probs[*idx];
}

double map_correct(const PosteriorDistribution& p, const Regex& target) {
  auto idx = p.space.index_of(target);
  if (!idx) throw InvalidParams("target " + target.canonical() + " is not in the rule space");
  double best = *std::max_element(p.log_probs.begin(), p.log_probs.end());
  if (p.log_probs[*idx] != best) return 0.0;
  auto ties = std::count(p.log_probs.begin(), p.log_probs.end(), best);
  return 1.0 / static_cast<double>(ties);
}

}  // namespace pedteach
