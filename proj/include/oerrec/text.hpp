#pragma once

// Vacancy ingestion: CSV loading, section splitting, sentence preprocessing
// and labeling of sentences for the skill-sentence classifier.

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "oerrec/date.hpp"

namespace oerrec {

struct Section {
  /// Normalized heading (lowercase, no trailing colon); empty optional for
  /// text that precedes the first heading.
  std::optional<std::string> heading;
  /// The heading line as it appeared in the body.
  std::string raw_heading;
  std::string text;

  bool operator==(const Section&) const = default;
};

struct RawVacancy {
  std::string id;
  std::string job_title;
  /// Region key produced by normalize_location.
  std::string location;
  Date posted_date{};
  std::string body;
  std::vector<Section> sections;
};

struct CleanSentence {
  std::vector<std::string> tokens;
  std::string source_vacancy;
  std::optional<std::string> source_heading;

  bool operator==(const CleanSentence&) const = default;
};

struct LabeledSentence {
  CleanSentence sentence;
  int label = 0;  // 1 = skill-related, 0 = other
};

/// Maps logical vacancy fields onto CSV header names.
struct ColumnMap {
  std::string id = "id";
  std::string title = "title";
  std::string location = "location";
  std::string date = "date";
  std::string body = "body";
};

struct LoadResult {
  std::vector<RawVacancy> vacancies;
  std::size_t skipped_empty_body = 0;
};

/// RFC 4180 CSV reader (quoted fields may contain separators, quotes and newlines).
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

LoadResult load_vacancies(std::istream& in, const ColumnMap& columns = {});
LoadResult load_vacancies(const std::string& path, const ColumnMap& columns = {});

/// Lowercase, trim and collapse whitespace. When the text holds a
/// comma-separated place ("Austin, TX 78701") only the last component,
/// minus any postal code, is kept, so the key is at state granularity.
std::string normalize_location(std::string_view location);

/// Lowercase, trim, collapse internal whitespace.
std::string normalize_key(std::string_view text);

/// Heading phrases recognised by split_sections. Matching is on the
/// normalized line (lowercase, collapsed whitespace, trailing ':' removed).
struct HeadingRules {
  std::set<std::string> required_skills{"required skills", "skills", "qualifications",
                                        "requirements", "skills & qualifications"};
  std::set<std::string> other{"about us",          "about the company", "about the role",
                              "about the job",     "overview",          "job description",
                              "description",       "responsibilities",  "duties",
                              "what you will do",  "what we offer",     "benefits",
                              "compensation",      "company overview",  "summary",
                              "job summary",       "how to apply",      "perks",
                              "position summary",  "key responsibilities"};
  std::size_t max_tokens = 6;

  bool is_required_skills(std::string_view normalized_heading) const;
};

/// The normalized heading if `line` is a heading under `rules`.
std::optional<std::string> match_heading(std::string_view line, const HeadingRules& rules = {});

RawVacancy split_sections(RawVacancy v, const HeadingRules& rules = {});

/// Word lists removed by preprocess.
class StopWords {
 public:
  /// The shipped list (articles, conjunctions, prepositions and general stop words).
  static const StopWords& builtin();
  static StopWords parse(std::istream& in);
  static StopWords load(const std::string& path);

  bool contains(std::string_view word) const;
  std::size_t size() const noexcept { return words_.size(); }

 private:
  std::set<std::string, std::less<>> words_;
};

/// Rule-based suffix stripping. Idempotent: lemmatize(lemmatize(w)) == lemmatize(w).
std::string lemmatize(std::string_view word);

std::vector<CleanSentence> preprocess(std::string_view text,
                                      const StopWords& stop_words = StopWords::builtin());

/// Preprocesses every section of `v` and tags each sentence with its
/// source vacancy and heading.
std::vector<CleanSentence> vacancy_sentences(const RawVacancy& v,
                                             const StopWords& stop_words = StopWords::builtin());

/// Sentences of required-skills sections get label 1, every other sentence
/// of the same vacancy label 0; vacancies without such a section are skipped.
std::vector<LabeledSentence> label_corpus(const std::vector<RawVacancy>& vacancies,
                                          const HeadingRules& rules = {},
                                          const StopWords& stop_words = StopWords::builtin());

/// `label<TAB>token token ...`, one sentence per line.
void write_labeled(std::ostream& out, const std::vector<LabeledSentence>& sentences);
std::vector<LabeledSentence> read_labeled(std::istream& in);

std::string join_tokens(const std::vector<std::string>& tokens);

}  // namespace oerrec
