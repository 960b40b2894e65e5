#pragma once

#include <cstddef>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "oerrec/text.hpp"

namespace oerrec {

struct SkillTerm {
  std::string term;  // unigram or space-joined bigram
  double tfidf_score = 0.0;
  long long document_frequency = 0;

  bool operator==(const SkillTerm&) const = default;
};

/// Ranks unigram and bigram terms of skill sentences by aggregate TF-IDF.
///
/// Sentences are grouped into one document per source vacancy. For a term
/// t, tf(t, d) is its raw count in document d, idf(t) = ln(N / df(t)), and
/// the score is the sum of tf * idf over documents. Bigrams never span
/// sentence boundaries. Terms with df < min_df are dropped; the rest are
/// sorted by score descending, then term ascending, and truncated to top_n.
std::vector<SkillTerm> extract_skill_terms(std::span<const CleanSentence> skill_sentences,
                                           long long min_df = 3,
                                           std::size_t top_n = std::numeric_limits<std::size_t>::max());

/// `term<TAB>tfidf<TAB>df` per line.
void write_skill_terms(std::ostream& out, std::span<const SkillTerm> terms);
std::vector<SkillTerm> read_skill_terms(std::istream& in);

/// Unigrams and adjacent-token bigrams of one sentence, in order.
std::vector<std::string> sentence_terms(const std::vector<std::string>& tokens);

}  // namespace oerrec
