#pragma once

// Candidate selection and cosine matching between a learner's preferences
// and OER properties.

#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oerrec/importance.hpp"
#include "oerrec/model.hpp"

namespace oerrec {

/// (long, short, quality, accessibility, resource_1 .. resource_R).
using PropertyVector = std::vector<double>;

/// Sorted distinct repositories of the catalog; the resource axes.
std::vector<std::string> resource_axis(std::span<const OERRecord> catalog);

/// Missing pref_resources entries count as 50.
PropertyVector learner_vector(const LearnerProfile& p, std::span<const std::string> resources);
/// Resource one-hot scaled to 100.
PropertyVector oer_vector(const OERRecord& o, std::span<const std::string> resources);

/// 0 when either vector is zero. Throws InvalidArgument on a dimension mismatch.
double cosine(std::span<const double> u, std::span<const double> o);

/// Most important skill of the profile the learner has not mastered (level
/// < 100, missing levels count as 0); ties alphabetical. nullopt when every
/// skill is mastered or the profile is empty.
std::optional<std::string> target_skill(const LearnerProfile& p, const JobSkillProfile& profile);

struct CandidateOptions {
  double level_band = 25.0;
  /// OER ids the learner may not receive (rated, flagged irrelevant, or
  /// changed away from for this skill).
  std::set<std::string> blocked;
};

/// OERs of `skill` that are neither excluded for it nor blocked, with
/// |level - learner level| <= band; the band widens to 50 and then is
/// dropped while the set is empty.
std::vector<OERRecord> candidate_set(const LearnerProfile& p, std::string_view skill,
                                     std::span<const OERRecord> catalog, const CandidateOptions& options = {});

struct ScoredCandidate {
  std::string oer_id;
  double score = 0.0;
};

/// Candidates by cosine descending, ties by oer_id ascending.
std::vector<ScoredCandidate> rank_candidates(const LearnerProfile& p, std::span<const OERRecord> candidates,
                                             std::span<const std::string> resources);

enum class RecommendationStatus { pending, rated, irrelevant, changed };

std::string_view to_string(RecommendationStatus s);
RecommendationStatus recommendation_status_from_string(std::string_view s);

struct Recommendation {
  std::string recommendation_id;
  std::string user_id;
  std::string oer_id;
  std::string skill;
  double skill_importance = 0.0;
  double cosine_score = 0.0;
  RecommendationStatus status = RecommendationStatus::pending;
  Timestamp issued_at = 0;

  bool operator==(const Recommendation&) const = default;
};

struct RecommendOutcome {
  enum class Kind { issued, completed, catalog_gap };
  Kind kind = Kind::completed;
  std::optional<Recommendation> recommendation;
  std::string skill;  // the target skill for issued and catalog_gap
};

std::string_view to_string(RecommendOutcome::Kind k);

/// Picks the max-cosine candidate for the learner's target skill and
/// increments its total_recom (relevance is recomputed). The catalog
/// resource axes span the whole catalog.
RecommendOutcome recommend(const LearnerProfile& p, const JobSkillProfile& profile, std::span<OERRecord> catalog,
                           const CandidateOptions& options, std::string recommendation_id, Timestamp now);

}  // namespace oerrec
