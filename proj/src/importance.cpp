#include "oerrec/importance.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "oerrec/error.hpp"
#include "oerrec/format.hpp"

namespace oerrec {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

}  // namespace

const SkillImportanceRecord* JobSkillProfile::find(std::string_view skill) const {
  for (const auto& e : entries) {
    if (e.skill == skill) return &e;
  }
  return nullptr;
}

bool in_window(const RawVacancy& v, const WindowQuery& q) {
  if (lower(v.job_title).find(lower(q.job)) == std::string::npos) return false;
  if (normalize_location(v.location) != normalize_location(q.location)) return false;
  const auto begin = std::chrono::sys_days(add_months(q.now, -q.window_months));
  const auto posted = std::chrono::sys_days(v.posted_date);
  return begin <= posted && posted <= std::chrono::sys_days(q.now);
}

RateMap occurrence_rates(std::span<const RawVacancy> vacancies, const WindowQuery& q,
                         std::span<const SkillTerm> skills, const SentenceFilter& is_skill_sentence) {
  if (q.window_months < 1) throw InvalidArgument("window_months must be >= 1");
  RateMap rates;
  for (const SkillTerm& s : skills) rates[s.term] = 0.0;
  std::size_t matching = 0;
  std::map<std::string, std::size_t> containing;
  for (const RawVacancy& v : vacancies) {
    if (!in_window(v, q)) continue;
    ++matching;
    std::set<std::string> terms;
    for (const CleanSentence& s : vacancy_sentences(v)) {
      if (!is_skill_sentence(s)) continue;
      for (auto& t : sentence_terms(s.tokens)) terms.insert(std::move(t));
    }
    for (const auto& [term, _] : rates) {
      if (terms.count(term)) ++containing[term];
    }
  }
  if (matching == 0) return rates;
  for (auto& [term, rate] : rates) rate = static_cast<double>(containing[term]) / static_cast<double>(matching);
  return rates;
}

RateMap occurrence_rates(std::span<const RawVacancy> vacancies, const WindowQuery& q,
                         std::span<const SkillTerm> skills, const ClassifierModel& model) {
  return occurrence_rates(vacancies, q, skills,
                          [&model](const CleanSentence& s) { return predict(model, s).label == 1; });
}

RateMap normalize_rates(const RateMap& rates) {
  double top = 0.0;
  for (const auto& [_, r] : rates) top = std::max(top, r);
  RateMap out;
  for (const auto& [skill, r] : rates) out[skill] = top > 0.0 ? 100.0 * std::max(r, 0.0) / top : 0.0;
  return out;
}

double decay_update(std::optional<double> old, double new_rate, double alpha) {
  if (!(alpha > 0.5 && alpha <= 1.0)) {
    throw ConfigError("decay alpha must be in (0.5, 1], got " + format_double(alpha));
  }
  if (!old) return new_rate;
  return alpha * new_rate + (1.0 - alpha) * *old;
}

JobSkillProfile build_profile(const std::string& job, const std::string& location,
                              std::vector<SkillImportanceRecord> records, std::size_t top_k) {
  std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.importance != b.importance) return a.importance > b.importance;
    return a.skill < b.skill;
  });
  records.erase(std::unique(records.begin(), records.end(),
                            [](const auto& a, const auto& b) { return a.skill == b.skill; }),
                records.end());
  if (top_k > 0 && records.size() > top_k) records.resize(top_k);
  return JobSkillProfile{job, location, std::move(records)};
}

JobSkillProfile refresh_profile(const JobSkillProfile& previous, const std::string& job,
                                const std::string& location, const RateMap& normalized, Date now, double alpha,
                                std::size_t top_k) {
  std::map<std::string, SkillImportanceRecord> merged;
  for (const auto& e : previous.entries) merged[e.skill] = e;
  std::set<std::string> skills;
  for (const auto& [s, _] : merged) skills.insert(s);
  for (const auto& [s, _] : normalized) skills.insert(s);

  std::vector<SkillImportanceRecord> records;
  for (const auto& skill : skills) {
    auto old_it = merged.find(skill);
    auto new_it = normalized.find(skill);
    const std::optional<double> old =
        old_it == merged.end() ? std::nullopt : std::optional<double>(old_it->second.importance);
    const double rate = new_it == normalized.end() ? 0.0 : new_it->second;
    const double value = std::clamp(decay_update(old, rate, alpha), 0.0, 100.0);
    records.push_back({skill, job, location, value, now});
  }
  return build_profile(job, location, std::move(records), top_k);
}

void write_profiles(std::ostream& out, std::span<const JobSkillProfile> profiles) {
  for (const auto& p : profiles) {
    for (const auto& e : p.entries) {
      out << p.job << '\t' << p.location << '\t' << e.skill << '\t' << format_double(e.importance) << '\t'
          << format_date(e.last_updated) << '\n';
    }
  }
}

std::vector<JobSkillProfile> read_profiles(std::istream& in) {
  std::vector<JobSkillProfile> profiles;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_tabs(line);
    if (f.size() != 5) throw IngestError("profile line " + std::to_string(line_no) + ": expected 5 fields");
    if (profiles.empty() || profiles.back().job != f[0] || profiles.back().location != f[1]) {
      profiles.push_back(JobSkillProfile{f[0], f[1], {}});
    }
    try {
      profiles.back().entries.push_back({f[2], f[0], f[1], parse_double(f[3]), parse_date(f[4])});
    } catch (const InvalidArgument& e) {
      throw IngestError("profile line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return profiles;
}

}  // namespace oerrec
