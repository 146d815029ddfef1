#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <algorithm>

#include "oracles/direct_learners.hpp"
#include "pedteach/errors.hpp"
#include "pedteach/experiment.hpp"

using namespace pedteach;

namespace {

const std::filesystem::path kData = PEDTEACH_DATA_DIR;

Dataset bundled() { return load_datasets({kData / "seed_corpora.jsonl", kData / "synthetic_corpora.jsonl"}); }

}  // namespace

TEST_CASE("synthetic corpora are deterministic and labeled by their regex") {
  Regex r = Regex::parse("^a{3,}$");
  Alphabet alpha("aA");
  auto a = synthesize_corpora(r, 50, 9, 8, 12, alpha);
  auto b = synthesize_corpora(r, 50, 9, 8, 12, alpha);
  CHECK(a == b);
  CHECK(a != synthesize_corpora(r, 50, 10, 8, 12, alpha));
  for (const auto& c : a) {
    CHECK(c.size() >= 1);
    CHECK(c.size() <= 8);
    CHECK(c.source == CorpusSource::Synthetic);
    CHECK(mislabel_rate(c, r) == 0.0);
    for (const auto& e : c.examples) {
      CHECK(e.text.size() <= 12);
      CHECK(e.text.find_first_not_of("aA") == std::string::npos);
    }
  }
  // The first k corpora do not depend on how many are requested.
  auto prefix = synthesize_corpora(r, 5, 9, 8, 12, alpha);
  CHECK(std::equal(prefix.begin(), prefix.end(), a.begin()));
}

TEST_CASE("synthetic sizes follow the geometric teacher prior") {
  auto cs = synthesize_corpora(Regex::parse("^a*$"), 4000, 1, 1000, 1000, Alphabet("a"));
  double size_sum = 0, len_sum = 0, n_strings = 0;
  for (const auto& c : cs) {
    size_sum += static_cast<double>(c.size());
    for (const auto& e : c.examples) {
      len_sum += static_cast<double>(e.text.size());
      n_strings += 1;
    }
  }
  // P(|c| = k) = 2^-k for k >= 1 has mean 2; P(|x| = k) = 2^-(k+1) has mean 1.
  CHECK(size_sum / 4000 == doctest::Approx(2.0).epsilon(0.05));
  CHECK(len_sum / n_strings == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("bundled dataset has empirical corpora for every hypothesis") {
  Dataset d = bundled();
  for (const auto& rule : d.rule_ids()) {
    const RuleSpace& s = d.space(rule);
    std::vector<std::size_t> per(s.size(), 0);
    for (const auto& c : d.corpora) {
      if (c.rule_id != rule) continue;
      ++per[c.taught.empty() ? 0 : *s.index_of(c.taught)];
    }
    CHECK(per[0] >= 10);
    for (std::size_t h = 1; h < s.size(); ++h) CHECK(per[h] >= 10);
  }
}

TEST_CASE("pool construction") {
  Dataset d = bundled();
  const Corpus& observed = d.corpora[0];
  auto pool = build_pool(d, "3a", PoolPolicy::EmpiricalPlusObserved, &observed, 0, {});
  std::size_t rule_count = 0;
  for (const auto& c : d.corpora) rule_count += c.rule_id == "3a" ? 1 : 0;
  CHECK(pool.size() <= rule_count);
  CHECK(find_in_pool(pool, observed).has_value());

  Corpus fresh = make_corpus("3a", {{"aaaaa", Polarity::Positive}, {"A", Polarity::Negative}});
  auto with = build_pool(d, "3a", PoolPolicy::EmpiricalPlusObserved, &fresh, 0, {});
  auto without = build_pool(d, "3a", PoolPolicy::EmpiricalOnly, &fresh, 0, {});
  CHECK(with.size() == without.size() + 1);
  CHECK(find_in_pool(with, fresh).has_value());
  CHECK_FALSE(find_in_pool(without, fresh).has_value());

  Dataset seed_only = load_dataset(kData / "seed_corpora.jsonl");
  CHECK_THROWS_AS(build_pool(seed_only, "3a", PoolPolicy::EmpiricalPlusObserved, nullptr, 0, {}),
                  MissingDistractorCorpora);
  SynthesisOptions so;
  so.per_hypothesis = 4;
  auto synth = build_pool(seed_only, "3a", PoolPolicy::EmpiricalPlusSynthetic, nullptr, 3, so);
  CHECK(synth.size() > 2);
  CHECK(synth == build_pool(seed_only, "3a", PoolPolicy::EmpiricalPlusSynthetic, nullptr, 3, so));
}

TEST_CASE("grid records match direct summation") {
  Dataset d = bundled();
  GridSpec spec;
  spec.alphas = {1, 4};
  spec.log_betas = {-1, -3};
  GridResult gr = run_grid(d, spec);
  REQUIRE(gr.cells.size() == 4);
  CHECK(gr.cell(0, 0).n_corpora == 8);  // only the paper corpora are scored

  for (const auto& rec : gr.records) {
    if (rec.alpha != 4 || rec.log_beta != -3) continue;
    const RuleSpace& space = d.space(rec.rule_id);
    auto hs = oracle::hyps_of(space);
    std::vector<oracle::Examples> pool;
    std::size_t observed = 0;
    for (const auto& c : build_pool(d, rec.rule_id, spec.pool_policy, &d.corpora[rec.corpus_index], 0, {})) {
      if (c.same_examples(d.corpora[rec.corpus_index])) observed = pool.size();
      pool.push_back(oracle::examples_of(c));
    }
    double beta = std::exp(-3.0);
    auto want_l0 = oracle::l0(hs, pool[observed], beta)[0];
    auto want_l1 = oracle::l1(hs, observed, pool, 4.0, beta, 0.0).probs[0];
    CHECK(rec.p_correct_l0 == doctest::Approx(want_l0).epsilon(1e-9));
    CHECK(rec.p_correct_l1 == doctest::Approx(want_l1).epsilon(1e-9));
  }
}

TEST_CASE("grid summary and outputs") {
  Dataset d = bundled();
  GridSpec spec;
  GridResult gr = run_grid(d, spec);
  GridSummary s = summarize(gr);
  REQUIRE(s.diff.size() == 4);
  REQUIRE(s.diff[0].size() == 4);
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      CHECK(s.diff[i][j] == doctest::Approx(s.l1[i][j] - s.l0[i][j]));
      CHECK(s.l0[i][j] == doctest::Approx(gr.cell(i, j).mean_l0));
    }
  }
  auto dir = std::filesystem::temp_directory_path() / "pedteach_grid_test";
  std::filesystem::remove_all(dir);
  write_grid_outputs(gr, dir);
  for (const char* f : {"grid.csv", "summary_l0.csv", "summary_l1.csv", "summary_diff.csv", "summary.txt"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  std::ifstream grid(dir / "grid.csv");
  std::string header;
  std::getline(grid, header);
  CHECK(header.find("alpha") != std::string::npos);
  std::filesystem::remove_all(dir);
  CHECK(summary_text(gr).find("L1 - L0") != std::string::npos);
}

TEST_CASE("grid parameter validation") {
  Dataset d = bundled();
  GridSpec spec;
  spec.alphas = {0.5};
  CHECK_THROWS_AS(run_grid(d, spec), InvalidParams);
  spec = GridSpec{};
  spec.log_betas = {};
  CHECK_THROWS_AS(run_grid(d, spec), InvalidParams);
  CHECK(parse_pool_policy("empirical-only") == PoolPolicy::EmpiricalOnly);
  CHECK(to_string(PoolPolicy::EmpiricalPlusSynthetic) == "empirical-plus-synthetic");
  CHECK_THROWS_AS(parse_pool_policy("everything"), InvalidParams);
}

TEST_CASE("learn puts the observed corpus in the pool") {
  RuleSpace s = *lookup_rule_space("3a");
  Corpus c = make_corpus("3a", {{"aaa", Polarity::Positive}});
  Corpus other = make_corpus("3a", {{"aaaaaa", Polarity::Positive}});
  LearnResult r = learn(s, c, {other}, 2.0, LearnerParams{1.0, 0.0});
  CHECK(r.errors == std::vector<std::size_t>{0, 1, 0});
  double total = 0;
  for (double p : r.l1.probs) total += p;
  CHECK(total == doctest::Approx(1.0));
  CHECK(r.l1.probs[1] == 0.0);  // ^a{6,}$ cannot have produced "aaa" as positive
}

TEST_CASE("grid runs are reproducible") {
  Dataset d = bundled();
  GridSpec spec;
  spec.alphas = {2};
  spec.log_betas = {-1};
  GridResult a = run_grid(d, spec);
  GridResult b = run_grid(d, spec);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].p_correct_l0 == b.records[i].p_correct_l0);
    CHECK(a.records[i].p_correct_l1 == b.records[i].p_correct_l1);
    CHECK(a.records[i].beta == std::exp(-1.0));
  }
  GridSummary s = summarize(a);
  CHECK(s.l0.size() == 1);
  CHECK(s.l0[0].size() == 1);
  CHECK(s.log_betas == std::vector<double>{-1});

  spec.log_betas = {0.5};
  CHECK_THROWS_AS(run_grid(d, spec), InvalidParams);
}

TEST_CASE("pool order does not change the posteriors") {
  Dataset d = bundled();
  const RuleSpace& space = d.space("zip-code");
  Corpus c = d.corpora[2];
  auto pool = build_pool(d, "zip-code", PoolPolicy::EmpiricalPlusObserved, &c, 0, {});
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    auto shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    LearnResult x = learn(space, c, pool, 4.0, LearnerParams{std::exp(-2.0), 0.0});
    LearnResult y = learn(space, c, shuffled, 4.0, LearnerParams{std::exp(-2.0), 0.0});
    for (std::size_t h = 0; h < space.size(); ++h) {
      CHECK(x.l1.probs[h] == doctest::Approx(y.l1.probs[h]).epsilon(1e-12));
    }
  }
}

TEST_CASE("fallback records are flagged and equal L0") {
  Dataset d = bundled();
  // "b" as a positive contradicts every hypothesis of the rule, so with eta = 0
  // no hypothesis can have produced it.
  Corpus bad = make_corpus("3a", {{"b", Polarity::Positive}});
  bad.source = CorpusSource::Paper;
  d.corpora.push_back(bad);
  GridSpec spec;
  spec.alphas = {1, 4};
  spec.log_betas = {-1};
  GridResult gr = run_grid(d, spec);
  std::size_t flagged = 0;
  for (const auto& rec : gr.records) {
    if (rec.corpus_index == d.corpora.size() - 1) {
      CHECK(rec.fallback);
    }
    if (rec.fallback) {
      ++flagged;
      CHECK(rec.p_correct_l1 == rec.p_correct_l0);
    }
  }
  CHECK(flagged >= 2);
  CHECK(gr.cell(0, 0).n_fallback >= 1);
}

TEST_CASE("zero-length synthesis yields empty strings") {
  Regex star = Regex::parse("^a*$");
  Regex plus = Regex::parse("^a+$");
  for (const auto& c : synthesize_corpora(star, 20, 3, 5, 0, Alphabet("a"))) {
    for (const auto& e : c.examples) {
      CHECK(e.text.empty());
      CHECK(e.label == Polarity::Positive);
    }
  }
  for (const auto& c : synthesize_corpora(plus, 20, 3, 5, 0, Alphabet("a"))) {
    for (const auto& e : c.examples) CHECK(e.label == Polarity::Negative);
  }
}
