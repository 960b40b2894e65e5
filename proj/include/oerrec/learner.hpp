#pragma once

// Learner properties: user-user similarity from equality weights, the
// equality-value procedure over the rating log, cold-start initialisation
// and the per-rating preference update.

#include <array>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oerrec/model.hpp"

namespace oerrec {

/// Properties the learner enters directly; these drive similarity.
enum class PropertyKey { location, gender, education, selected_job, skill_levels };

inline constexpr std::array<PropertyKey, 5> kKnownProperties{
    PropertyKey::location, PropertyKey::gender, PropertyKey::education, PropertyKey::selected_job,
    PropertyKey::skill_levels};

std::string_view to_string(PropertyKey key);
/// Throws InvalidArgument for names outside the known-property set.
PropertyKey property_key_from_string(std::string_view name);

/// Inclusive timestamp range.
struct Period {
  Timestamp begin = 0;
  Timestamp end = 0;

  bool contains(Timestamp t) const { return begin <= t && t <= end; }
  bool operator==(const Period&) const = default;
};

/// Weight per known property; sums to 100 unless empty.
struct EqualityWeights {
  std::map<PropertyKey, double> values;
  Period period;

  /// 100 / |known properties| each; used before any rating log exists.
  static EqualityWeights uniform();
  double get(PropertyKey key) const;
  bool empty() const { return values.empty(); }

  bool operator==(const EqualityWeights&) const = default;
};

/// Mean absolute level difference over shared skills at or below which two
/// learners count as equal on skill_levels.
inline constexpr double kSkillLevelTolerance = 10.0;

/// Equality predicate behind sim_effect. Categorical properties compare by
/// normalized text, the job exactly, skill levels by kSkillLevelTolerance
/// (two empty maps are equal; disjoint non-empty maps are not).
bool equal_on(const LearnerProfile& i, const LearnerProfile& j, PropertyKey key);

double sim_effect(const LearnerProfile& i, const LearnerProfile& j, PropertyKey key, const EqualityWeights& w);
double sim_effect(const LearnerProfile& i, const LearnerProfile& j, std::string_view key,
                  const EqualityWeights& w);

/// Sum of sim_effect over the known properties, divided by 100.
double similarity(const LearnerProfile& i, const LearnerProfile& j, const EqualityWeights& w);

struct EqualityPairs {
  std::size_t pairs = 0;
  std::map<PropertyKey, std::size_t> equal_counts;
};

/// Step 1-2 of the procedure: (user pair, OER) instances in `period` where
/// both users gave the same stars, and per property how many of those
/// pairs are equal on it. Only each user's latest rating of an OER inside
/// the period counts; users missing from `profiles` are ignored.
EqualityPairs collect_equal_rating_pairs(std::span<const RatingEvent> events,
                                         const std::map<std::string, LearnerProfile>& profiles, Period period);

/// Full procedure: ratios normalized to sum to 100. Returns empty weights
/// when there are no pairs or no pair agrees on any property.
EqualityWeights equality_values(std::span<const RatingEvent> events,
                                const std::map<std::string, LearnerProfile>& profiles, Period period);

struct KnownProperties {
  std::string user_id;
  std::string selected_job;
  std::map<std::string, double> skill_levels;
  PersonalInfo personal;
};

struct InitOptions {
  std::size_t k_neighbors = 10;
  std::vector<std::string> repositories;
  double default_preference = 50.0;
};

/// Unknown preferences become the similarity-weighted mean over the
/// k_neighbors most similar pool members with similarity > 0 (ties by
/// user_id). Without such neighbours every preference is the default.
LearnerProfile init_profile(const KnownProperties& known, std::span<const LearnerProfile> pool,
                            const EqualityWeights& w, const InitOptions& options = {});

struct UpdateOptions {
  double eta = 0.1;
  double level_step = 10.0;
};

/// Moves every aligned preference towards (satisfaction > 0.5) or away from
/// (satisfaction < 0.5) the OER's property value, then raises the level of
/// the OER's skill by level_step * satisfaction. Results are clamped to
/// [0, 100]. Throws InvalidArgument for a rating by another user or eta
/// outside (0, 1].
LearnerProfile apply_rating(LearnerProfile p, const OERRecord& oer, const RatingEvent& e,
                            const UpdateOptions& options = {});

}  // namespace oerrec
