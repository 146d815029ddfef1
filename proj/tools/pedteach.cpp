// Command line front end: regex utilities, learners, corpus analysis, the
// L0/L1 comparison grid, synthetic corpora and the HTTP session service.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pedteach/analysis.hpp"
#include "pedteach/corpus.hpp"
#include "pedteach/errors.hpp"
#include "pedteach/experiment.hpp"
#include "pedteach/learners.hpp"
#include "pedteach/regex.hpp"
#include "pedteach/service.hpp"

using namespace pedteach;
using json = nlohmann::json;

namespace {

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

std::vector<std::filesystem::path> as_paths(const std::vector<std::string>& xs) {
  return {xs.begin(), xs.end()};
}

// "text:label", split at the last colon so text may contain colons.
std::pair<std::string, Polarity> parse_example(const std::string& arg) {
  auto colon = arg.rfind(':');
  if (colon == std::string::npos) throw InvalidParams("example must look like text:pos or text:neg");
  return {arg.substr(0, colon), parse_polarity(arg.substr(colon + 1))};
}

struct LearnArgs {
  std::vector<std::string> data;
  std::string rule;
  std::vector<std::string> examples;
  long corpus_index = -1;
  double alpha = ServiceConfig{}.default_alpha;
  double beta = ServiceConfig{}.default_beta;
  double log_beta = NAN;
  double eta = 0.0;
  std::string pool = "empirical-plus-observed";
  std::uint64_t seed = 0;
};

int run_learn(const LearnArgs& a) {
  std::optional<Dataset> dataset;
  if (!a.data.empty()) dataset = load_datasets(as_paths(a.data));
  Corpus observed;
  std::optional<RuleSpace> space;
  if (a.corpus_index >= 0) {
    if (!dataset) throw InvalidParams("--corpus-index needs --data");
    observed = dataset->corpora.at(static_cast<std::size_t>(a.corpus_index));
    space = dataset->space(observed.rule_id);
  } else {
    space = dataset && dataset->rule_spaces.count(a.rule) ? dataset->rule_spaces.at(a.rule)
                                                          : lookup_rule_space(a.rule);
    if (!space) throw UnknownRule(a.rule);
    observed.rule_id = a.rule;
    for (const auto& e : a.examples) {
      auto [text, label] = parse_example(e);
      observed.add(text, label);
    }
  }
  validate(observed);
  LearnerParams params{std::isnan(a.log_beta) ? a.beta : std::exp(a.log_beta), a.eta};
  CorpusPool pool = pool_for_space(dataset ? &*dataset : nullptr, *space, parse_pool_policy(a.pool),
                                   a.seed, SynthesisOptions{});
  LearnResult r = learn(*space, observed, std::move(pool), a.alpha, params);
  json out = learn_result_json(r);
  out["rule_id"] = space->name();
  out["params"] = {{"alpha", a.alpha}, {"beta", params.beta}, {"eta", params.eta}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedagogical regex learners, teacher model and teaching-corpus analysis"};
  app.require_subcommand(1);

  // parse
  std::string pattern;
  auto* parse_cmd = app.add_subcommand("parse", "Parse a pattern; print canonical form and size");
  parse_cmd->add_option("pattern", pattern, "Anchored pattern, e.g. ^a{3,}$")->required();

  // match
  std::vector<std::string> texts;
  auto* match_cmd = app.add_subcommand("match", "Test strings against a pattern");
  match_cmd->add_option("pattern", pattern)->required();
  match_cmd->add_option("strings", texts);

  // learn
  LearnArgs la;
  auto* learn_cmd = app.add_subcommand("learn", "L0 and L1 posteriors for one corpus");
  learn_cmd->add_option("--data", la.data, "Dataset file(s), JSON lines");
  learn_cmd->add_option("--rule", la.rule, "Rule id");
  learn_cmd->add_option("--example", la.examples, "Example as text:pos or text:neg (repeatable, in order)");
  learn_cmd->add_option("--corpus-index", la.corpus_index, "Use this dataset corpus instead of --example");
  learn_cmd->add_option("--alpha", la.alpha)->capture_default_str();
  learn_cmd->add_option("--beta", la.beta)->capture_default_str();
  learn_cmd->add_option("--log-beta", la.log_beta, "Overrides --beta");
  learn_cmd->add_option("--eta", la.eta)->capture_default_str();
  learn_cmd->add_option("--pool", la.pool)->capture_default_str();
  learn_cmd->add_option("--seed", la.seed)->capture_default_str();

  // teach
  std::vector<std::string> teach_data;
  std::string teach_rule, teach_hypothesis;
  double teach_alpha = 1.0, teach_beta = 1.0, teach_eta = 0.0;
  std::size_t teach_top = 10;
  auto* teach_cmd = app.add_subcommand("teach", "Teacher (T1) distribution over a rule's corpus pool");
  teach_cmd->add_option("--data", teach_data)->required();
  teach_cmd->add_option("--rule", teach_rule)->required();
  teach_cmd->add_option("--hypothesis", teach_hypothesis, "Regex to teach (default: the target)");
  teach_cmd->add_option("--alpha", teach_alpha)->capture_default_str();
  teach_cmd->add_option("--beta", teach_beta)->capture_default_str();
  teach_cmd->add_option("--eta", teach_eta)->capture_default_str();
  teach_cmd->add_option("--top", teach_top)->capture_default_str();

  // analyze
  std::vector<std::string> analyze_data;
  AnalysisOptions ao;
  std::string analyze_out;
  auto* analyze_cmd = app.add_subcommand("analyze", "Clustering, permutation and polarity statistics");
  analyze_cmd->add_option("--data", analyze_data)->required();
  analyze_cmd->add_option("--threshold", ao.threshold)->capture_default_str();
  analyze_cmd->add_option("--samples", ao.n_samples)->capture_default_str();
  analyze_cmd->add_option("--seed", ao.seed)->capture_default_str();
  analyze_cmd->add_option("--out", analyze_out, "Report file (default: stdout)");

  // compare
  std::vector<std::string> compare_data;
  std::string alphas = "1,2,4,8", log_betas = "-0.1,-1,-2,-4", pool_policy = "empirical-plus-observed";
  std::string compare_out = "compare_out";
  GridSpec spec;
  bool include_synthetic = false;
  auto* compare_cmd = app.add_subcommand("compare", "L0 vs L1 over an (alpha, log beta) grid");
  compare_cmd->add_option("--data", compare_data)->required();
  compare_cmd->add_option("--alphas", alphas)->capture_default_str();
  compare_cmd->add_option("--log-betas", log_betas)->capture_default_str();
  compare_cmd->add_option("--eta", spec.eta)->capture_default_str();
  compare_cmd->add_option("--pool", pool_policy)->capture_default_str();
  compare_cmd->add_option("--seed", spec.seed)->capture_default_str();
  compare_cmd->add_option("--synthetic-per-hypothesis", spec.synthesis.per_hypothesis)->capture_default_str();
  compare_cmd->add_flag("--evaluate-synthetic", include_synthetic, "Also score synthetic target corpora");
  compare_cmd->add_option("--out", compare_out)->capture_default_str();

  // synthesize
  std::vector<std::string> synth_data;
  std::string synth_rule, synth_hypothesis, synth_alphabet, synth_out;
  std::size_t synth_n = 10;
  std::uint64_t synth_seed = 0;
  SynthesisOptions so;
  auto* synth_cmd = app.add_subcommand("synthesize", "Draw corpora from the teacher prior");
  synth_cmd->add_option("--rule", synth_rule)->required();
  synth_cmd->add_option("--hypothesis", synth_hypothesis, "Regex to label by (default: the target)");
  synth_cmd->add_option("--data", synth_data, "Dataset whose strings seed the default alphabet");
  synth_cmd->add_option("--alphabet", synth_alphabet);
  synth_cmd->add_option("--n", synth_n)->capture_default_str();
  synth_cmd->add_option("--seed", synth_seed)->capture_default_str();
  synth_cmd->add_option("--max-examples", so.max_examples)->capture_default_str();
  synth_cmd->add_option("--max-len", so.max_len)->capture_default_str();
  synth_cmd->add_option("--out", synth_out, "Output file (default: stdout)");

  // serve
  ServiceConfig sc;
  std::string host = "127.0.0.1";
  int port = 8080;
  long idle_seconds = 24 * 60 * 60;
  std::string persist, serve_pool = "empirical-plus-observed";
  std::vector<std::string> serve_data;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP teaching-session service");
  serve_cmd->add_option("--host", host)->envname("PEDTEACH_HOST")->capture_default_str();
  serve_cmd->add_option("--port", port)->envname("PEDTEACH_PORT")->capture_default_str();
  serve_cmd->add_option("--idle-timeout", idle_seconds, "Seconds")->envname("PEDTEACH_IDLE_TIMEOUT")->capture_default_str();
  serve_cmd->add_option("--persist", persist, "Append-only session log (JSON lines)")->envname("PEDTEACH_PERSIST");
  serve_cmd->add_option("--suggest-max-len", sc.suggest_max_len)->envname("PEDTEACH_SUGGEST_MAX_LEN")->capture_default_str();
  serve_cmd->add_option("--data", serve_data, "Dataset file(s) providing teacher pools")->envname("PEDTEACH_DATA");
  serve_cmd->add_option("--pool", serve_pool)->capture_default_str();
  serve_cmd->add_option("--seed", sc.seed)->capture_default_str();
  serve_cmd->add_option("--cors-origin", sc.cors_origin)->envname("PEDTEACH_CORS_ORIGIN")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*parse_cmd) {
      Regex r = Regex::parse(pattern);
      std::cout << r.canonical() << "\t" << r.description_length() << "\n";
    } else if (*match_cmd) {
      Regex r = Regex::parse(pattern);
      for (const auto& t : texts) std::cout << (r.matches(t) ? "1" : "0") << "\t" << t << "\n";
    } else if (*learn_cmd) {
      return run_learn(la);
    } else if (*teach_cmd) {
      Dataset d = load_datasets(as_paths(teach_data));
      const RuleSpace& space = d.space(teach_rule);
      Regex taught = teach_hypothesis.empty() ? space.target() : Regex::parse(teach_hypothesis);
      TeacherParams tp{teach_alpha, build_pool(d, teach_rule, PoolPolicy::EmpiricalPlusObserved, nullptr,
                                               0, SynthesisOptions{}),
                       {teach_beta, teach_eta}};
      CorpusDistribution dist = t1_distribution(taught, space, tp);
      std::vector<std::size_t> order(dist.probs.size());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t x, std::size_t y) { return dist.probs[x] > dist.probs[y]; });
      for (std::size_t i = 0; i < std::min(teach_top, order.size()); ++i) {
        const Corpus& c = tp.pool[order[i]];
        std::cout << std::setprecision(12) << dist.probs[order[i]] << "\t";
        for (const auto& e : c.examples) std::cout << e.text << (is_positive(e.label) ? "+ " : "- ");
        std::cout << "\n";
      }
    } else if (*analyze_cmd) {
      Dataset d = load_datasets(as_paths(analyze_data));
      std::string report = analysis_report(d, ao);
      if (analyze_out.empty()) {
        std::cout << report;
      } else {
        std::ofstream(analyze_out) << report;
      }
    } else if (*compare_cmd) {
      Dataset d = load_datasets(as_paths(compare_data));
      spec.alphas = parse_list(alphas);
      spec.log_betas = parse_list(log_betas);
      spec.pool_policy = parse_pool_policy(pool_policy);
      if (include_synthetic) spec.evaluate_sources.insert(CorpusSource::Synthetic);
      GridResult gr = run_grid(d, spec);
      write_grid_outputs(gr, compare_out);
      std::cout << summary_text(gr);
    } else if (*synth_cmd) {
      std::optional<Dataset> d;
      if (!synth_data.empty()) d = load_datasets(as_paths(synth_data));
      auto found = d && d->rule_spaces.count(synth_rule) ? d->space(synth_rule) : lookup_rule_space(synth_rule);
      if (!found) throw UnknownRule(synth_rule);
      const RuleSpace& space = *found;
      Regex r = synth_hypothesis.empty() ? space.target() : Regex::parse(synth_hypothesis);
      auto idx = space.index_of(r);
      if (!idx) throw InvalidParams("hypothesis is not in the rule space");
      Alphabet alphabet = !synth_alphabet.empty() ? Alphabet(synth_alphabet)
                          : d ? default_alphabet(*d, synth_rule)
                              : Alphabet(Alphabet::chars_of(r.ast()) + "a");
      auto corpora = synthesize_corpora(r, synth_n, synth_seed, so.max_examples, so.max_len, alphabet);
      std::ofstream file;
      if (!synth_out.empty()) file.open(synth_out);
      std::ostream& out = synth_out.empty() ? std::cout : file;
      for (std::size_t k = 0; k < corpora.size(); ++k) {
        Corpus& c = corpora[k];
        c.rule_id = synth_rule;
        c.teacher_id = "synthetic-" + std::to_string(*idx) + "-" + std::to_string(synth_seed) + "-" +
                       std::to_string(k);
        if (*idx != RuleSpace::target_index()) c.taught = r.canonical();
        out << corpus_to_json_line(c) << "\n";
      }
    } else if (*serve_cmd) {
      sc.idle_timeout = std::chrono::seconds(idle_seconds);
      if (!persist.empty()) sc.persistence_path = persist;
      if (!serve_data.empty()) sc.dataset = load_datasets(as_paths(serve_data));
      sc.pool_policy = parse_pool_policy(serve_pool);
      SessionStore store(sc);
      std::cerr << "listening on " << host << ":" << port << "\n";
      serve(store, host, port);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
