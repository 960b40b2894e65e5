#include "oerrec/tfidf.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>

#include "oerrec/error.hpp"
#include "oerrec/format.hpp"

namespace oerrec {

std::vector<std::string> sentence_terms(const std::vector<std::string>& tokens) {
  std::vector<std::string> terms(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) terms.push_back(tokens[i] + ' ' + tokens[i + 1]);
  return terms;
}

std::vector<SkillTerm> extract_skill_terms(std::span<const CleanSentence> skill_sentences, long long min_df,
                                           std::size_t top_n) {
  if (min_df < 1) throw InvalidArgument("min_df must be >= 1");
  // document -> term -> count
  std::map<std::string, std::map<std::string, long long>> docs;
  for (const CleanSentence& s : skill_sentences) {
    auto& counts = docs[s.source_vacancy];
    for (auto& term : sentence_terms(s.tokens)) ++counts[term];
  }
  if (docs.empty()) return {};

  struct Stats {
    long long df = 0;
    long long total = 0;
  };
  std::map<std::string, Stats> stats;
  for (const auto& [_, counts] : docs) {
    for (const auto& [term, n] : counts) {
      auto& st = stats[term];
      ++st.df;
      st.total += n;
    }
  }

  const double n_docs = static_cast<double>(docs.size());
  std::vector<SkillTerm> terms;
  for (const auto& [term, st] : stats) {
    if (st.df < min_df) continue;
    // sum_d tf(t,d) * idf(t) == idf(t) * total count of t
    const double idf = std::log(n_docs / static_cast<double>(st.df));
    terms.push_back(SkillTerm{term, static_cast<double>(st.total) * idf, st.df});
  }
  std::sort(terms.begin(), terms.end(), [](const SkillTerm& a, const SkillTerm& b) {
    if (a.tfidf_score != b.tfidf_score) return a.tfidf_score > b.tfidf_score;
    return a.term < b.term;
  });
  if (terms.size() > top_n) terms.resize(top_n);
  return terms;
}

void write_skill_terms(std::ostream& out, std::span<const SkillTerm> terms) {
  for (const SkillTerm& t : terms) {
    out << t.term << '\t' << format_double(t.tfidf_score) << '\t' << t.document_frequency << '\n';
  }
}

std::vector<SkillTerm> read_skill_terms(std::istream& in) {
  std::vector<SkillTerm> terms;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) {
      throw IngestError("skill-term file line " + std::to_string(line_no) + ": expected 3 fields");
    }
    SkillTerm t;
    t.term = line.substr(0, t1);
    t.tfidf_score = parse_double(std::string_view(line).substr(t1 + 1, t2 - t1 - 1));
    t.document_frequency = static_cast<long long>(parse_double(std::string_view(line).substr(t2 + 1)));
    terms.push_back(std::move(t));
  }
  return terms;
}

}  // namespace oerrec
