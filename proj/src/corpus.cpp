#include "pedteach/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "pedteach/errors.hpp"

namespace pedteach {

using json = nlohmann::json;

std::string_view to_string(Polarity p) { return is_positive(p) ? "pos" : "neg"; }

Polarity parse_polarity(std::string_view s) {
  if (s == "pos" || s == "+") return Polarity::Positive;
  if (s == "neg" || s == "-") return Polarity::Negative;
  throw ValidationError("invalid label '" + std::string(s) + "' (expected pos or neg)");
}

std::string_view to_string(CorpusSource s) {
  switch (s) {
    case CorpusSource::Paper: return "paper";
    case CorpusSource::Synthetic: return "synthetic";
    case CorpusSource::Session: return "session";
  }
  return "paper";
}

CorpusSource parse_source(std::string_view s) {
  if (s == "paper") return CorpusSource::Paper;
  if (s == "synthetic") return CorpusSource::Synthetic;
  if (s == "session") return CorpusSource::Session;
  throw ValidationError("invalid source '" + std::string(s) + "'");
}

void Corpus::add(std::string text, Polarity label) {
  examples.push_back({std::move(text), label, examples.size()});
}

bool Corpus::same_examples(const Corpus& other) const {
  return std::equal(examples.begin(), examples.end(), other.examples.begin(), other.examples.end(),
                    [](const LabeledExample& a, const LabeledExample& b) {
                      return a.text == b.text && a.label == b.label;
                    });
}

Corpus make_corpus(std::string rule_id, std::vector<std::pair<std::string, Polarity>> examples) {
  Corpus c;
  c.rule_id = std::move(rule_id);
  for (auto& [text, label] : examples) c.add(std::move(text), label);
  return c;
}

void validate(const Corpus& c) {
  if (c.examples.empty()) throw ValidationError("corpus must contain at least one example");
  for (std::size_t i = 0; i < c.examples.size(); ++i) {
    const auto& e = c.examples[i];
    if (e.position != i) {
      throw ValidationError("example positions must be 0..n-1 in order (found " +
                            std::to_string(e.position) + " at index " + std::to_string(i) + ")");
    }
    if (!is_printable_ascii(e.text)) {
      throw ValidationError("example text must be printable ASCII");
    }
  }
}

RuleSpace::RuleSpace(std::string name, Regex target, std::vector<Regex> distractors)
    : name_(std::move(name)) {
  hypotheses_.reserve(distractors.size() + 1);
  hypotheses_.push_back(std::move(target));
  for (auto& d : distractors) hypotheses_.push_back(std::move(d));
  std::set<std::string> seen;
  for (const auto& h : hypotheses_) {
    if (!seen.insert(h.canonical()).second) {
      throw InvalidParams("duplicate hypothesis " + h.canonical() + " in rule space " + name_);
    }
  }
}

std::vector<Regex> RuleSpace::distractors() const {
  return {hypotheses_.begin() + 1, hypotheses_.end()};
}

std::optional<std::size_t> RuleSpace::index_of(const Regex& r) const {
  for (std::size_t i = 0; i < hypotheses_.size(); ++i) {
    if (hypotheses_[i] == r) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> RuleSpace::index_of(std::string_view pattern) const {
  return index_of(Regex::parse(pattern));
}

std::vector<std::string> Dataset::rule_ids() const {
  std::vector<std::string> ids;
  for (const auto& [id, _] : rule_spaces) ids.push_back(id);
  return ids;
}

const RuleSpace& Dataset::space(const std::string& rule_id) const {
  auto it = rule_spaces.find(rule_id);
  if (it == rule_spaces.end()) throw UnknownRule(rule_id);
  return it->second;
}

const std::map<std::string, RuleSpace>& builtin_rule_spaces() {
  static const std::map<std::string, RuleSpace> spaces = [] {
    std::map<std::string, RuleSpace> m;
    auto add = [&m](const char* name, const char* target, const char* d1, const char* d2) {
      m.emplace(name, RuleSpace(name, Regex::parse(target), {Regex::parse(d1), Regex::parse(d2)}));
    };
    add("3a", "^a{3,}$", "^a{6,}$", "^[aA]+$");
    add("zip-code", "^\\d{5}$", "^.{5}$", "^\\d+$");
    add("suffix-s", "^.*s$", "^.*s.*$", "^.*[a-z].*$");
    add("bracketed", "^\\[.*\\]$", "^\\[.*$", "^.*\\]$");
    return m;
  }();
  return spaces;
}

std::optional<RuleSpace> lookup_rule_space(const std::string& rule_id) {
  const auto& spaces = builtin_rule_spaces();
  auto it = spaces.find(rule_id);
  if (it == spaces.end()) return std::nullopt;
  return it->second;
}

namespace {

Corpus corpus_from_json(const json& j, std::size_t line) {
  auto field = [&](const char* name) -> const json& {
    if (!j.contains(name)) throw ParseError(line, std::string("missing field '") + name + "'");
    return j.at(name);
  };
  Corpus c;
  try {
    c.rule_id = field("rule_id").get<std::string>();
    c.teacher_id = j.value("teacher_id", std::string());
    c.source = parse_source(j.value("source", std::string("paper")));
    c.taught = j.value("taught", std::string());
    const json& examples = field("examples");
    if (!examples.is_array()) throw ParseError(line, "'examples' must be an array");
    std::set<std::size_t> positions;
    for (const auto& e : examples) {
      LabeledExample ex;
      ex.text = e.at("text").get<std::string>();
      ex.label = parse_polarity(e.at("label").get<std::string>());
      ex.position = c.examples.size();
      if (e.contains("position")) {
        auto p = e.at("position").get<std::size_t>();
        if (!positions.insert(p).second) {
          throw ValidationError("line " + std::to_string(line) + ": duplicate position " +
                                std::to_string(p));
        }
        ex.position = p;
      }
      c.examples.push_back(std::move(ex));
    }
  } catch (const json::exception& e) {
    throw ParseError(line, e.what());
  }
  try {
    validate(c);
  } catch (const ValidationError& e) {
    throw ValidationError("line " + std::to_string(line) + ": " + e.what());
  }
  return c;
}

}  // namespace

Dataset read_dataset(std::istream& in) {
  Dataset d;
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(line, e.what());
    }
    if (!j.is_object()) throw ParseError(line, "record must be a JSON object");
    Corpus c = corpus_from_json(j, line);
    if (!d.rule_spaces.count(c.rule_id)) {
      auto space = lookup_rule_space(c.rule_id);
      if (!space) throw UnknownRule(c.rule_id);
      d.rule_spaces.emplace(c.rule_id, *space);
    }
    if (!c.taught.empty()) {
      const RuleSpace& space = d.space(c.rule_id);
      std::optional<std::size_t> idx;
      try {
        idx = space.index_of(c.taught);
      } catch (const SyntaxError& e) {
        throw ValidationError("line " + std::to_string(line) + ": bad taught regex: " + e.what());
      }
      if (!idx) {
        throw ValidationError("line " + std::to_string(line) + ": taught regex " + c.taught +
                              " is not in rule space " + c.rule_id);
      }
      c.taught = space.hypotheses()[*idx].canonical();
      if (*idx == RuleSpace::target_index()) c.taught.clear();
    }
    d.corpora.push_back(std::move(c));
  }
  if (d.corpora.empty()) throw ValidationError("no corpora");
  return d;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset " + path.string());
  return read_dataset(in);
}

Dataset load_datasets(const std::vector<std::filesystem::path>& paths) {
  Dataset merged;
  for (const auto& p : paths) {
    Dataset d = load_dataset(p);
    for (auto& c : d.corpora) merged.corpora.push_back(std::move(c));
    for (auto& [id, space] : d.rule_spaces) merged.rule_spaces.emplace(id, space);
  }
  if (merged.corpora.empty()) throw ValidationError("no corpora");
  return merged;
}

std::string corpus_to_json_line(const Corpus& c) {
  json j;
  j["rule_id"] = c.rule_id;
  j["teacher_id"] = c.teacher_id;
  j["source"] = std::string(to_string(c.source));
  if (!c.taught.empty()) j["taught"] = c.taught;
  json examples = json::array();
  for (const auto& e : c.examples) {
    examples.push_back({{"text", e.text}, {"label", std::string(to_string(e.label))}});
  }
  j["examples"] = std::move(examples);
  return j.dump();
}

void write_dataset(const Dataset& d, std::ostream& out) {
  for (const auto& c : d.corpora) out << corpus_to_json_line(c) << '\n';
}

void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write dataset " + path.string());
  write_dataset(d, out);
}

double mislabel_rate(const Corpus& c, const Regex& target) {
  if (c.examples.empty()) return 0.0;
  std::size_t wrong = 0;
  for (const auto& e : c.examples) {
    if (target.matches(e.text) != is_positive(e.label)) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(c.examples.size());
}

PolarityCounts polarity_counts(const Corpus& c) {
  PolarityCounts counts;
  for (const auto& e : c.examples) {
    if (is_positive(e.label)) ++counts.positive;
    else ++counts.negative;
  }
  return counts;
}

}  // namespace pedteach
