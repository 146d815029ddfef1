#include "pedteach/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "pedteach/errors.hpp"
#include "random_util.hpp"

namespace pedteach {

std::string to_string(PoolPolicy p) {
  switch (p) {
    case PoolPolicy::EmpiricalOnly: return "empirical-only";
    case PoolPolicy::EmpiricalPlusObserved: return "empirical-plus-observed";
    case PoolPolicy::EmpiricalPlusSynthetic: return "empirical-plus-synthetic";
  }
  return "empirical-plus-observed";
}

PoolPolicy parse_pool_policy(const std::string& s) {
  if (s == "empirical-only") return PoolPolicy::EmpiricalOnly;
  if (s == "empirical-plus-observed") return PoolPolicy::EmpiricalPlusObserved;
  if (s == "empirical-plus-synthetic") return PoolPolicy::EmpiricalPlusSynthetic;
  throw InvalidParams("unknown pool policy '" + s + "'");
}

void GridSpec::validate() const {
  if (alphas.empty() || log_betas.empty()) throw InvalidParams("grid axes must be nonempty");
  for (double a : alphas) {
    if (!(a >= 1.0) || !std::isfinite(a)) throw InvalidParams("alpha values must be >= 1");
  }
  for (double lb : log_betas) {
    if (!(lb <= 0.0) || !std::isfinite(lb)) throw InvalidParams("log beta values must be <= 0");
  }
  LearnerParams{1.0, eta}.validate();
  if (synthesis.max_examples == 0) throw InvalidParams("synthesis max_examples must be >= 1");
}

const GridCell& GridResult::cell(std::size_t alpha_index, std::size_t beta_index) const {
  return cells.at(alpha_index * spec.log_betas.size() + beta_index);
}

std::vector<Corpus> synthesize_corpora(const Regex& r, std::size_t n, std::uint64_t seed,
                                       std::size_t max_examples, std::size_t max_len,
                                       const Alphabet& alphabet) {
  if (max_examples == 0) throw InvalidParams("max_examples must be >= 1");
  std::vector<Corpus> out;
  out.reserve(n);
  const std::string& chars = alphabet.chars();
  for (std::size_t k = 0; k < n; ++k) {
    auto rng = detail::make_stream(seed, k);
    std::size_t size;
    do {
      size = detail::draw_geometric(rng, 1);
    } while (size > max_examples);
    Corpus c;
    c.source = CorpusSource::Synthetic;
    for (std::size_t i = 0; i < size; ++i) {
      std::size_t len;
      do {
        len = detail::draw_geometric(rng, 0);
      } while (len > max_len);
      std::string text(len, ' ');
      for (auto& ch : text) ch = chars[detail::draw_below(rng, chars.size())];
      bool positive = r.matches(text);
      c.add(std::move(text), positive ? Polarity::Positive : Polarity::Negative);
    }
    out.push_back(std::move(c));
  }
  return out;
}

Alphabet default_alphabet(const Dataset& d, const std::string& rule_id) {
  std::string chars;
  for (const auto& c : d.corpora) {
    if (c.rule_id != rule_id) continue;
    for (const auto& e : c.examples) chars += e.text;
  }
  for (const auto& h : d.space(rule_id).hypotheses()) chars += Alphabet::chars_of(h.ast());
  return Alphabet(chars);
}

CorpusPool build_pool(const RuleSpace& space, const std::vector<Corpus>& empirical,
                      PoolPolicy policy, const Corpus* observed, std::uint64_t seed,
                      const SynthesisOptions& synthesis, const Alphabet& alphabet) {
  CorpusPool pool;
  for (const auto& c : empirical) add_to_pool(pool, c);
  if (observed && policy != PoolPolicy::EmpiricalOnly) add_to_pool(pool, *observed);

  if (policy == PoolPolicy::EmpiricalPlusSynthetic) {
    for (std::size_t h = 0; h < space.size(); ++h) {
      const Regex& r = space.hypotheses()[h];
      auto corpora = synthesize_corpora(r, synthesis.per_hypothesis, detail::splitmix64(seed) + h,
                                        synthesis.max_examples, synthesis.max_len, alphabet);
      for (std::size_t k = 0; k < corpora.size(); ++k) {
        auto& c = corpora[k];
        c.rule_id = space.name();
        c.teacher_id = "synthetic-" + std::to_string(h) + "-" + std::to_string(k);
        if (h != RuleSpace::target_index()) c.taught = r.canonical();
        add_to_pool(pool, c);
      }
    }
    return pool;
  }

  for (std::size_t h = 1; h < space.size(); ++h) {
    const std::string& canonical = space.hypotheses()[h].canonical();
    bool covered = std::any_of(empirical.begin(), empirical.end(),
                               [&](const Corpus& c) { return c.taught == canonical; });
    if (!covered) {
      throw MissingDistractorCorpora("no teaching corpora for distractor " + canonical +
                                     " of rule " + space.name());
    }
  }
  return pool;
}

CorpusPool build_pool(const Dataset& d, const std::string& rule_id, PoolPolicy policy,
                      const Corpus* observed, std::uint64_t seed,
                      const SynthesisOptions& synthesis) {
  const RuleSpace& space = d.space(rule_id);
  std::vector<Corpus> empirical;
  for (const auto& c : d.corpora) {
    if (c.rule_id == rule_id) empirical.push_back(c);
  }
  Alphabet alphabet = synthesis.alphabet.empty() ? default_alphabet(d, rule_id)
                                                 : Alphabet(synthesis.alphabet);
  return build_pool(space, empirical, policy, observed, seed, synthesis, alphabet);
}

LearnResult learn(const RuleSpace& space, const Corpus& observed, CorpusPool pool, double alpha,
                  const LearnerParams& params) {
  params.validate();
  std::size_t k = add_to_pool(pool, observed);
  EvidenceTable table(space, pool);
  LearnResult out{l0_posterior(space, observed, params), table.l1_posterior(k, alpha, params), {}};
  for (std::size_t i = 0; i < space.size(); ++i) out.errors.push_back(table.errors(k, i));
  return out;
}

GridResult run_grid(const Dataset& d, const GridSpec& spec) {
  spec.validate();
  GridResult result;
  result.spec = spec;

  struct RuleWork {
    std::string rule_id;
    std::vector<std::size_t> corpus_indices;  // into d.corpora
    std::vector<std::size_t> pool_indices;
    std::optional<EvidenceTable> table;
  };
  std::vector<RuleWork> work;
  for (const auto& rule_id : d.rule_ids()) {
    RuleWork w;
    w.rule_id = rule_id;
    for (std::size_t i = 0; i < d.corpora.size(); ++i) {
      const Corpus& c = d.corpora[i];
      if (c.rule_id == rule_id && c.taught.empty() && spec.evaluate_sources.count(c.source)) {
        w.corpus_indices.push_back(i);
      }
    }
    if (w.corpus_indices.empty()) continue;
    // Every evaluated corpus is already an empirical pool member, so one pool
    // serves the whole rule.
    CorpusPool pool = build_pool(d, rule_id, spec.pool_policy, nullptr, spec.seed, spec.synthesis);
    for (std::size_t i : w.corpus_indices) {
      auto k = find_in_pool(pool, d.corpora[i]);
      if (!k) throw PoolMissingCorpus("corpus " + std::to_string(i) + " is not in its pool");
      w.pool_indices.push_back(*k);
    }
    w.table.emplace(d.space(rule_id), pool);
    work.push_back(std::move(w));
  }

  for (double alpha : spec.alphas) {
    for (double log_beta : spec.log_betas) {
      LearnerParams params{std::exp(log_beta), spec.eta};
      GridCell cell{alpha, log_beta};
      std::vector<GridRecord> cell_records;
      for (const auto& w : work) {
        const Regex& target = w.table->space().target();
        for (std::size_t n = 0; n < w.corpus_indices.size(); ++n) {
          std::size_t k = w.pool_indices[n];
          PosteriorDistribution l0 = l0_posterior(w.table->space(), d.corpora[w.corpus_indices[n]], params);
          PosteriorDistribution l1 = w.table->l1_posterior(k, alpha, params);
          GridRecord rec;
          rec.alpha = alpha;
          rec.log_beta = log_beta;
          rec.beta = params.beta;
          rec.rule_id = w.rule_id;
          rec.corpus_index = w.corpus_indices[n];
          rec.teacher_id = d.corpora[rec.corpus_index].teacher_id;
          rec.p_correct_l0 = prob_correct(l0, target);
          rec.p_correct_l1 = prob_correct(l1, target);
          rec.map_correct_l0 = map_correct(l0, target);
          rec.map_correct_l1 = map_correct(l1, target);
          rec.fallback = l1.fallback;
          cell_records.push_back(std::move(rec));
        }
      }
      std::sort(cell_records.begin(), cell_records.end(),
                [](const GridRecord& a, const GridRecord& b) { return a.corpus_index < b.corpus_index; });
      for (const auto& rec : cell_records) {
        cell.mean_l0 += rec.p_correct_l0;
        cell.mean_l1 += rec.p_correct_l1;
        cell.map_l0 += rec.map_correct_l0;
        cell.map_l1 += rec.map_correct_l1;
        cell.n_fallback += rec.fallback ? 1 : 0;
      }
      cell.n_corpora = cell_records.size();
      if (cell.n_corpora > 0) {
        auto n = static_cast<double>(cell.n_corpora);
        cell.mean_l0 /= n;
        cell.mean_l1 /= n;
        cell.map_l0 /= n;
        cell.map_l1 /= n;
      }
      result.cells.push_back(cell);
      for (auto& rec : cell_records) result.records.push_back(std::move(rec));
    }
  }
  return result;
}

GridSummary summarize(const GridResult& gr) {
  GridSummary s;
  s.alphas = gr.spec.alphas;
  s.log_betas = gr.spec.log_betas;
  auto table = [&] {
    return std::vector<std::vector<double>>(s.alphas.size(), std::vector<double>(s.log_betas.size()));
  };
  s.l0 = table();
  s.l1 = table();
  s.diff = table();
  s.map_l0 = table();
  s.map_l1 = table();
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    for (std::size_t b = 0; b < s.log_betas.size(); ++b) {
      const GridCell& c = gr.cell(a, b);
      s.l0[a][b] = c.mean_l0;
      s.l1[a][b] = c.mean_l1;
      s.diff[a][b] = c.mean_l1 - c.mean_l0;
      s.map_l0[a][b] = c.map_l0;
      s.map_l1[a][b] = c.map_l1;
    }
  }
  return s;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

void write_table_csv(const std::filesystem::path& path, const GridSummary& s,
                     const std::vector<std::vector<double>>& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "alpha";
  for (double lb : s.log_betas) out << ",log_beta=" << fmt(lb);
  out << "\n";
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    out << fmt(s.alphas[a]);
    for (double v : t[a]) out << "," << fmt(v);
    out << "\n";
  }
}

// gnuplot "nonuniform matrix": first row is the column count then the x axis.
void write_table_matrix(const std::filesystem::path& path, const GridSummary& s,
                        const std::vector<std::vector<double>>& t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << s.log_betas.size();
  for (double lb : s.log_betas) out << " " << fmt(lb);
  out << "\n";
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    out << fmt(s.alphas[a]);
    for (double v : t[a]) out << " " << fmt(v);
    out << "\n";
  }
}

void append_table(std::ostringstream& out, const char* title, const GridSummary& s,
                  const std::vector<std::vector<double>>& t) {
  out << title << "\n";
  out << std::setw(10) << "alpha";
  for (double lb : s.log_betas) out << std::setw(12) << ("lb=" + fmt(lb));
  out << "\n";
  out << std::fixed << std::setprecision(4);
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    out << std::setw(10) << s.alphas[a];
    for (double v : t[a]) out << std::setw(12) << v;
    out << "\n";
  }
  out << std::defaultfloat << std::setprecision(6) << "\n";
}

}  // namespace

std::string summary_text(const GridResult& gr) {
  GridSummary s = summarize(gr);
  std::ostringstream out;
  out << "pool_policy=" << to_string(gr.spec.pool_policy) << "\n";
  out << "eta=" << fmt(gr.spec.eta) << "\n";
  out << "seed=" << gr.spec.seed << "\n";
  out << "beta=exp(log_beta); metric=mean probability of the target\n\n";
  append_table(out, "mean P(correct), L0", s, s.l0);
  append_table(out, "mean P(correct), L1", s, s.l1);
  append_table(out, "L1 - L0", s, s.diff);

  double best = -1.0, worst = 1.0;
  std::size_t best_a = 0, best_b = 0;
  for (std::size_t a = 0; a < s.alphas.size(); ++a) {
    for (std::size_t b = 0; b < s.log_betas.size(); ++b) {
      if (s.diff[a][b] > best) best = s.diff[a][b], best_a = a, best_b = b;
      worst = std::min(worst, s.diff[a][b]);
    }
  }
  out << "largest_gain=" << fmt(best) << " at alpha=" << fmt(s.alphas[best_a])
      << " log_beta=" << fmt(s.log_betas[best_b]) << "\n";
  out << "smallest_gain=" << fmt(worst) << "\n";

  auto alpha_one = std::find(s.alphas.begin(), s.alphas.end(), 1.0);
  if (alpha_one != s.alphas.end()) {
    auto a = static_cast<std::size_t>(alpha_one - s.alphas.begin());
    double m = 0.0;
    for (double v : s.diff[a]) m = std::max(m, std::abs(v));
    out << "flag.alpha_1_row.max_abs_diff=" << fmt(m) << "\n";
  }
  auto top = static_cast<std::size_t>(std::max_element(s.log_betas.begin(), s.log_betas.end()) -
                                      s.log_betas.begin());
  double m = 0.0;
  for (std::size_t a = 0; a < s.alphas.size(); ++a) m = std::max(m, std::abs(s.diff[a][top]));
  out << "flag.largest_beta_column.log_beta=" << fmt(s.log_betas[top]) << "\n";
  out << "flag.largest_beta_column.max_abs_diff=" << fmt(m) << "\n";
  return out.str();
}

void write_grid_outputs(const GridResult& gr, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "grid.csv");
    if (!out) throw Error("cannot write grid.csv");
    out << "alpha,log_beta,beta,rule_id,corpus_index,teacher_id,p_correct_l0,p_correct_l1,"
           "map_correct_l0,map_correct_l1,fallback\n";
    for (const auto& r : gr.records) {
      out << fmt(r.alpha) << "," << fmt(r.log_beta) << "," << fmt(r.beta) << "," << r.rule_id << ","
          << r.corpus_index << "," << r.teacher_id << "," << fmt(r.p_correct_l0) << ","
          << fmt(r.p_correct_l1) << "," << fmt(r.map_correct_l0) << "," << fmt(r.map_correct_l1)
          << "," << (r.fallback ? 1 : 0) << "\n";
    }
  }
  GridSummary s = summarize(gr);
  write_table_csv(dir / "summary_l0.csv", s, s.l0);
  write_table_csv(dir / "summary_l1.csv", s, s.l1);
  write_table_csv(dir / "summary_diff.csv", s, s.diff);
  write_table_csv(dir / "summary_map_l0.csv", s, s.map_l0);
  write_table_csv(dir / "summary_map_l1.csv", s, s.map_l1);
  write_table_matrix(dir / "summary_l0.dat", s, s.l0);
  write_table_matrix(dir / "summary_l1.dat", s, s.l1);
  write_table_matrix(dir / "summary_diff.dat", s, s.diff);
  std::ofstream out(dir / "summary.txt");
  out << summary_text(gr);
}

}  // namespace pedteach
