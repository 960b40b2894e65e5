#pragma once

// Skill importance per job and location: occurrence rates over a sliding
// window of vacancies, max-normalisation and exponential decay against the
// previous scores.

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oerrec/classifier.hpp"
#include "oerrec/date.hpp"
#include "oerrec/text.hpp"
#include "oerrec/tfidf.hpp"

namespace oerrec {

struct SkillImportanceRecord {
  std::string skill;
  std::string job;
  std::string location;
  double importance = 0.0;  // [0, 100]
  Date last_updated{};

  bool operator==(const SkillImportanceRecord&) const = default;
};

struct JobSkillProfile {
  std::string job;
  std::string location;
  std::vector<SkillImportanceRecord> entries;  // importance descending, then skill ascending

  const SkillImportanceRecord* find(std::string_view skill) const;
  bool operator==(const JobSkillProfile&) const = default;
};

using RateMap = std::map<std::string, double>;

struct WindowQuery {
  std::string job;       // case-insensitive substring of the vacancy title
  std::string location;  // compared after normalize_location
  Date now{};
  int window_months = 6;
};

/// True when the vacancy matches the job and location and was posted in
/// [now - window_months, now].
bool in_window(const RawVacancy& v, const WindowQuery& q);

using SentenceFilter = std::function<bool(const CleanSentence&)>;

/// Fraction of matching vacancies with at least one skill sentence (per
/// `is_skill_sentence`) containing the term as a unigram or bigram. Every
/// skill gets an entry; all are 0 without matching vacancies. Throws
/// InvalidArgument for window_months < 1.
RateMap occurrence_rates(std::span<const RawVacancy> vacancies, const WindowQuery& q,
                         std::span<const SkillTerm> skills, const SentenceFilter& is_skill_sentence);

/// Skill sentences are those the classifier labels 1.
RateMap occurrence_rates(std::span<const RawVacancy> vacancies, const WindowQuery& q,
                         std::span<const SkillTerm> skills, const ClassifierModel& model);

/// 100 * rate / max rate; all zero when no rate is positive.
RateMap normalize_rates(const RateMap& rates);

/// alpha * new_rate + (1 - alpha) * old, or new_rate without an old score.
/// Throws ConfigError unless 0.5 < alpha <= 1.
double decay_update(std::optional<double> old, double new_rate, double alpha);

/// Sorted by importance descending, ties alphabetical; top_k == 0 keeps all.
JobSkillProfile build_profile(const std::string& job, const std::string& location,
                              std::vector<SkillImportanceRecord> records, std::size_t top_k = 0);

/// Decays `previous` (may be empty) towards the normalised rates, stamping
/// changed or new entries with `now`. Skills absent from the new rates decay
/// towards 0.
JobSkillProfile refresh_profile(const JobSkillProfile& previous, const std::string& job,
                                const std::string& location, const RateMap& normalized, Date now, double alpha,
                                std::size_t top_k = 0);

/// `job<TAB>location<TAB>skill<TAB>importance<TAB>date`, one entry per line.
void write_profiles(std::ostream& out, std::span<const JobSkillProfile> profiles);
std::vector<JobSkillProfile> read_profiles(std::istream& in);

}  // namespace oerrec
