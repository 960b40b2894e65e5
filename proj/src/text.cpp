#include "oerrec/text.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

#include "oerrec/error.hpp"
#include "oerrec_stopwords_data.hpp"

namespace oerrec {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= text.size(); ++i) {
    if (i == text.size() || text[i] == '\n') {
      std::string_view line = text.substr(start, i - start);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      lines.push_back(line);
      start = i + 1;
    }
  }
  return lines;
}

std::size_t count_tokens(std::string_view s) {
  std::size_t n = 0;
  bool in_token = false;
  for (char c : s) {
    if (is_space(c)) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++n;
    }
  }
  return n;
}

// Leading list markers: ASCII bullets and the UTF-8 encodings of common
// bullet glyphs (all of which start with 0xE2 or 0xC2).
bool starts_with_bullet(std::string_view line) {
  if (line.empty()) return false;
  const unsigned char c = static_cast<unsigned char>(line.front());
  return c == '-' || c == '*' || c == '+' || c == 0xE2 || c == 0xC2;
}

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

bool has_vowel(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return is_vowel(c) || c == 'y'; });
}

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

// Consonant test at position i; the 'u' of "qu" counts as a consonant.
bool consonant_at(std::string_view s, std::size_t i) {
  const char c = s[i];
  if (c == 'u' && i > 0 && s[i - 1] == 'q') return true;
  return !is_vowel(c);
}

// Restores the base form of a stem left after removing "-ing" / "-ed".
std::string restore_stem(std::string stem) {
  const std::size_t n = stem.size();
  const char last = stem[n - 1];
  if (n >= 2 && last == stem[n - 2] && !is_vowel(last) && last != 'y') {
    if (last == 's' || last == 'z') return stem;
    if (last == 'l') {
      if (ends_with(stem, "ill") || ends_with(stem, "all") || n <= 5) return stem;
    }
    stem.pop_back();
    return stem;
  }
  if (last == 'c' || last == 'v' || last == 'u' || last == 'z') return stem + 'e';
  if (n < 3) return stem;
  const std::string_view tail = std::string_view(stem).substr(n - 2);
  const bool consonant_before = consonant_at(stem, n - 3);
  if (tail == "at") {
    const char before = stem[n - 3];
    return (before == 'e' || before == 'a' || before == 'o') ? stem : stem + 'e';
  }
  if (tail == "ag" || tail == "rg" || tail == "dg" || tail == "ib") return stem + 'e';
  if (ends_with(stem, "ang")) return stem + 'e';
  if (tail == "ns" || tail == "rs" || tail == "ps" || tail == "ls") return stem + 'e';
  if (tail == "is" && stem != "this") return stem + 'e';
  if (tail == "us") return consonant_before ? stem : stem + 'e';
  if (tail == "as") return (consonant_before || ends_with(stem, "eas")) ? stem + 'e' : stem;
  if (consonant_before &&
      (tail == "ir" || tail == "ur" || tail == "id" || tail == "od" || tail == "in" ||
       tail == "ut" || tail == "ak" || tail == "os" || tail == "ar" || tail == "ul")) {
    return stem + 'e';
  }
  return stem;
}

const std::unordered_set<std::string_view>& protected_words() {
  static const std::unordered_set<std::string_view> words{
      "embed", "hundred", "kindred", "sacred", "naked", "wicked", "morning", "evening", "ceiling"};
  return words;
}

// One rule application; returns the input unchanged when no rule fires.
std::string lemma_step(const std::string& w) {
  const std::size_t n = w.size();
  if (n <= 3 || protected_words().count(w)) return w;
  if (n > 4 && (ends_with(w, "ies") || ends_with(w, "ied"))) return w.substr(0, n - 3) + 'y';
  if (ends_with(w, "sses")) return w.substr(0, n - 2);
  if (ends_with(w, "es")) {
    const std::string_view stem = std::string_view(w).substr(0, n - 2);
    if (stem.size() >= 3 && (ends_with(stem, "x") || ends_with(stem, "z") ||
                             ends_with(stem, "ch") || ends_with(stem, "sh"))) {
      return std::string(stem);
    }
  }
  if (ends_with(w, "s")) {
    if (ends_with(w, "ss") || ends_with(w, "us") || ends_with(w, "is")) return w;
    return w.substr(0, n - 1);
  }
  if (ends_with(w, "ing")) {
    const std::string stem = w.substr(0, n - 3);
    if (stem.size() >= 3 && has_vowel(stem)) return restore_stem(stem);
    return w;
  }
  if (ends_with(w, "ed") && !ends_with(w, "eed")) {
    const std::string stem = w.substr(0, n - 2);
    if (stem.size() >= 3 && has_vowel(stem)) return restore_stem(stem);
    return w;
  }
  return w;
}

bool digits_only(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

}  // namespace

// ---------------------------------------------------------------- CSV / load

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  char c;
  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw IngestError("unterminated quoted field at end of input");
  if (!field.empty() && field.back() == '\r') field.pop_back();
  if (field_started || !row.empty()) end_row();
  return rows;
}

std::string normalize_key(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(text)) {
    if (is_space(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string normalize_location(std::string_view location) {
  std::string_view s = location;
  if (const auto comma = s.rfind(','); comma != std::string_view::npos) s = s.substr(comma + 1);
  std::string key = normalize_key(s);
  // Drop a trailing postal code ("tx 78701" -> "tx").
  if (const auto space = key.rfind(' '); space != std::string::npos &&
                                         digits_only(std::string_view(key).substr(space + 1))) {
    key.resize(space);
  }
  return key;
}

LoadResult load_vacancies(std::istream& in, const ColumnMap& columns) {
  const auto rows = parse_csv(in);
  if (rows.empty()) throw SchemaError(columns.id);
  const auto& header = rows.front();
  auto find_column = [&](const std::string& name) {
    const std::string wanted = normalize_key(name);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (normalize_key(header[i]) == wanted) return i;
    }
    throw SchemaError(name);
  };
  const std::size_t id_col = find_column(columns.id);
  const std::size_t title_col = find_column(columns.title);
  const std::size_t location_col = find_column(columns.location);
  const std::size_t date_col = find_column(columns.date);
  const std::size_t body_col = find_column(columns.body);

  LoadResult result;
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto cell = [&](std::size_t i) -> std::string { return i < row.size() ? row[i] : std::string(); };
    std::string body = cell(body_col);
    if (trim(body).empty()) {
      ++result.skipped_empty_body;
      continue;
    }
    RawVacancy v;
    v.id = std::string(trim(cell(id_col)));
    if (v.id.empty()) throw IngestError("row " + std::to_string(r) + ": empty id");
    if (!seen.insert(v.id).second) throw IngestError("duplicate vacancy id: " + v.id);
    v.job_title = std::string(trim(cell(title_col)));
    v.location = normalize_location(cell(location_col));
    try {
      v.posted_date = parse_date(cell(date_col));
    } catch (const InvalidArgument& e) {
      throw IngestError("row " + std::to_string(r) + " (" + v.id + "): " + e.what());
    }
    v.body = std::move(body);
    result.vacancies.push_back(std::move(v));
  }
  return result;
}

LoadResult load_vacancies(const std::string& path, const ColumnMap& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read vacancy file: " + path);
  return load_vacancies(in, columns);
}

// ---------------------------------------------------------------- sections

bool HeadingRules::is_required_skills(std::string_view normalized_heading) const {
  return required_skills.count(std::string(normalized_heading)) > 0;
}

std::optional<std::string> match_heading(std::string_view line, const HeadingRules& rules) {
  std::string_view s = trim(line);
  if (s.empty() || starts_with_bullet(s)) return std::nullopt;
  bool colon = false;
  if (s.back() == ':') {
    colon = true;
    s.remove_suffix(1);
    s = trim(s);
  }
  if (s.empty() || count_tokens(s) > rules.max_tokens) return std::nullopt;
  std::string key = normalize_key(s);
  if (rules.required_skills.count(key) || rules.other.count(key)) return key;
  if (colon && std::none_of(key.begin(), key.end(),
                            [](char c) { return c == '.' || c == '!' || c == '?' || c == ';'; })) {
    return key;
  }
  return std::nullopt;
}

RawVacancy split_sections(RawVacancy v, const HeadingRules& rules) {
  std::vector<Section> sections;
  Section current;
  std::vector<std::string_view> pending;
  bool have_heading = false;
  auto flush = [&] {
    std::string text;
    for (std::size_t i = 0; i < pending.size(); ++i) {
      if (i) text.push_back('\n');
      text.append(pending[i]);
    }
    current.text = std::string(trim(text));
    if (have_heading || !current.text.empty()) sections.push_back(std::move(current));
    current = Section{};
    pending.clear();
  };
  for (std::string_view line : split_lines(v.body)) {
    if (auto heading = match_heading(line, rules)) {
      flush();
      have_heading = true;
      current.heading = std::move(*heading);
      current.raw_heading = std::string(trim(line));
    } else {
      pending.push_back(line);
    }
  }
  flush();
  if (sections.empty()) sections.push_back(Section{std::nullopt, "", std::string(trim(v.body))});
  v.sections = std::move(sections);
  return v;
}

// ---------------------------------------------------------------- stop words

const StopWords& StopWords::builtin() {
  static const StopWords words = [] {
    std::istringstream in{std::string(detail::kStopWordData)};
    return parse(in);
  }();
  return words;
}

StopWords StopWords::parse(std::istream& in) {
  StopWords sw;
  std::string line;
  while (std::getline(in, line)) {
    const std::string_view s = trim(line);
    if (s.empty() || s.front() == '#' || s.front() == '[') continue;
    sw.words_.insert(lower(s));
  }
  return sw;
}

StopWords StopWords::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IngestError("cannot read stop-word file: " + path);
  return parse(in);
}

bool StopWords::contains(std::string_view word) const { return words_.find(word) != words_.end(); }

// ---------------------------------------------------------------- preprocess

std::string lemmatize(std::string_view word) {
  std::string current(word);
  // Every rule strictly shortens the word, so the fixpoint is reached.
  for (;;) {
    std::string next = lemma_step(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

std::vector<CleanSentence> preprocess(std::string_view text, const StopWords& stop_words) {
  std::vector<CleanSentence> out;
  std::string chunk;
  auto finish = [&] {
    CleanSentence sentence;
    std::string token;
    auto emit = [&] {
      if (token.empty()) return;
      std::string word = lower(token);
      token.clear();
      if (stop_words.contains(word) || digits_only(word)) return;
      std::string lemma = lemmatize(word);
      if (lemma.empty() || stop_words.contains(lemma)) return;
      sentence.tokens.push_back(std::move(lemma));
    };
    for (char c : chunk) {
      const unsigned char u = static_cast<unsigned char>(c);
      if (u < 0x80 && std::isalnum(u)) {
        token.push_back(c);
      } else if (c == '\'') {
        // "team's" -> "teams"
      } else {
        emit();
      }
    }
    emit();
    chunk.clear();
    if (!sentence.tokens.empty()) out.push_back(std::move(sentence));
  };
  for (char c : text) {
    if (c == '.' || c == '!' || c == '?' || c == ';' || c == '\n') {
      finish();
    } else {
      chunk.push_back(c);
    }
  }
  finish();
  return out;
}

std::vector<CleanSentence> vacancy_sentences(const RawVacancy& v, const StopWords& stop_words) {
  const RawVacancy split = v.sections.empty() ? split_sections(v) : v;
  std::vector<CleanSentence> out;
  for (const Section& section : split.sections) {
    for (CleanSentence& s : preprocess(section.text, stop_words)) {
      s.source_vacancy = v.id;
      s.source_heading = section.heading;
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<LabeledSentence> label_corpus(const std::vector<RawVacancy>& vacancies,
                                          const HeadingRules& rules, const StopWords& stop_words) {
  std::vector<LabeledSentence> out;
  for (const RawVacancy& raw : vacancies) {
    const RawVacancy v = raw.sections.empty() ? split_sections(raw, rules) : raw;
    const bool has_skills_section =
        std::any_of(v.sections.begin(), v.sections.end(), [&](const Section& s) {
          return s.heading && rules.is_required_skills(*s.heading);
        });
    if (!has_skills_section) continue;
    for (const Section& section : v.sections) {
      const int label = section.heading && rules.is_required_skills(*section.heading) ? 1 : 0;
      for (CleanSentence& s : preprocess(section.text, stop_words)) {
        s.source_vacancy = v.id;
        s.source_heading = section.heading;
        out.push_back(LabeledSentence{std::move(s), label});
      }
    }
  }
  return out;
}

std::string join_tokens(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

void write_labeled(std::ostream& out, const std::vector<LabeledSentence>& sentences) {
  for (const LabeledSentence& s : sentences) {
    out << s.label << '\t' << join_tokens(s.sentence.tokens) << '\n';
  }
}

std::vector<LabeledSentence> read_labeled(std::istream& in) {
  std::vector<LabeledSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || (line.substr(0, tab) != "0" && line.substr(0, tab) != "1")) {
      throw IngestError("labeled file line " + std::to_string(line_no) + ": expected 'label<TAB>tokens'");
    }
    LabeledSentence s;
    s.label = line[0] - '0';
    std::istringstream tokens(line.substr(tab + 1));
    std::string token;
    while (tokens >> token) s.sentence.tokens.push_back(token);
    s.sentence.source_vacancy = "line" + std::to_string(line_no);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace oerrec
