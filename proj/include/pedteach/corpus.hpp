#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pedteach/regex.hpp"

namespace pedteach {

enum class Polarity : bool { Negative = false, Positive = true };

inline bool is_positive(Polarity p) { return p == Polarity::Positive; }
std::string_view to_string(Polarity p);  // "pos" / "neg"
/// Accepts "pos"/"+" and "neg"/"-". Throws ValidationError otherwise.
Polarity parse_polarity(std::string_view s);

struct LabeledExample {
  std::string text;
  Polarity label = Polarity::Positive;
  std::size_t position = 0;

  bool operator==(const LabeledExample&) const = default;
};

enum class CorpusSource { Paper, Synthetic, Session };

std::string_view to_string(CorpusSource s);
CorpusSource parse_source(std::string_view s);

/// An ordered teaching corpus. `taught` names the hypothesis the teacher was
/// asked to convey; when empty the rule space target is implied.
struct Corpus {
  std::string rule_id;
  std::string teacher_id;
  CorpusSource source = CorpusSource::Paper;
  std::string taught;
  std::vector<LabeledExample> examples;

  std::size_t size() const noexcept { return examples.size(); }

  /// Appends with the next position index.
  void add(std::string text, Polarity label);

  /// Same ordered (text, label) sequence; metadata ignored.
  bool same_examples(const Corpus& other) const;

  bool operator==(const Corpus&) const = default;
};

/// Convenience for tests and tools: builds a corpus from (text, label) pairs.
Corpus make_corpus(std::string rule_id, std::vector<std::pair<std::string, Polarity>> examples);

/// Throws ValidationError on an empty corpus, position gaps, or
/// non-printable text.
void validate(const Corpus& c);

/// Finite hypothesis set: the target at index 0 followed by distractors.
class RuleSpace {
 public:
  /// Throws InvalidParams if any two hypotheses share a canonical form.
  RuleSpace(std::string name, Regex target, std::vector<Regex> distractors);

  const std::string& name() const noexcept { return name_; }
  const Regex& target() const noexcept { return hypotheses_.front(); }
  std::vector<Regex> distractors() const;
  const std::vector<Regex>& hypotheses() const noexcept { return hypotheses_; }
  std::size_t size() const noexcept { return hypotheses_.size(); }
  static constexpr std::size_t target_index() noexcept { return 0; }

  /// Index by canonical form.
  std::optional<std::size_t> index_of(const Regex& r) const;
  std::optional<std::size_t> index_of(std::string_view pattern) const;

  bool operator==(const RuleSpace&) const = default;

 private:
  std::string name_;
  std::vector<Regex> hypotheses_;
};

struct Dataset {
  std::vector<Corpus> corpora;
  std::map<std::string, RuleSpace> rule_spaces;

  std::vector<std::string> rule_ids() const;
  const RuleSpace& space(const std::string& rule_id) const;

  bool operator==(const Dataset&) const = default;
};

/// The four rule spaces used for the learner comparison.
const std::map<std::string, RuleSpace>& builtin_rule_spaces();
std::optional<RuleSpace> lookup_rule_space(const std::string& rule_id);

/// Line-delimited JSON, one corpus per line. Rule ids resolve against the
/// built-in spaces. Throws ParseError, ValidationError, UnknownRule.
Dataset load_dataset(const std::filesystem::path& path);
Dataset read_dataset(std::istream& in);

/// Concatenates the corpora of several files.
Dataset load_datasets(const std::vector<std::filesystem::path>& paths);

void save_dataset(const Dataset& d, const std::filesystem::path& path);
void write_dataset(const Dataset& d, std::ostream& out);
std::string corpus_to_json_line(const Corpus& c);

/// Q_target(c) / |c|.
double mislabel_rate(const Corpus& c, const Regex& target);

struct PolarityCounts {
  std::size_t positive = 0;
  std::size_t negative = 0;
  bool operator==(const PolarityCounts&) const = default;
};

PolarityCounts polarity_counts(const Corpus& c);

}  // namespace pedteach
