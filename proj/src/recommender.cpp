#include "oerrec/recommender.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "oerrec/catalog.hpp"
#include "oerrec/error.hpp"

namespace oerrec {

std::vector<std::string> resource_axis(std::span<const OERRecord> catalog) {
  std::set<std::string> names;
  for (const OERRecord& o : catalog) names.insert(o.resource);
  return {names.begin(), names.end()};
}

PropertyVector learner_vector(const LearnerProfile& p, std::span<const std::string> resources) {
  PropertyVector v{p.pref_long, p.pref_short, p.pref_check, p.pref_accessibility};
  for (const auto& r : resources) {
    auto it = p.pref_resources.find(r);
    v.push_back(it == p.pref_resources.end() ? 50.0 : it->second);
  }
  return v;
}

PropertyVector oer_vector(const OERRecord& o, std::span<const std::string> resources) {
  PropertyVector v{o.how_long, o.how_short, o.quality, o.accessibility};
  for (const auto& r : resources) v.push_back(r == o.resource ? 100.0 : 0.0);
  return v;
}

double cosine(std::span<const double> u, std::span<const double> o) {
  if (u.size() != o.size()) {
    throw InvalidArgument("cosine of vectors with dimensions " + std::to_string(u.size()) + " and " +
                          std::to_string(o.size()));
  }
  double dot = 0.0, uu = 0.0, oo = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    dot += u[i] * o[i];
    uu += u[i] * u[i];
    oo += o[i] * o[i];
  }
  if (uu == 0.0 || oo == 0.0) return 0.0;
  return dot / (std::sqrt(uu) * std::sqrt(oo));
}

std::optional<std::string> target_skill(const LearnerProfile& p, const JobSkillProfile& profile) {
  const SkillImportanceRecord* best = nullptr;
  for (const auto& e : profile.entries) {
    auto it = p.skill_levels.find(e.skill);
    const double level = it == p.skill_levels.end() ? 0.0 : it->second;
    if (level >= 100.0) continue;
    if (best == nullptr || e.importance > best->importance ||
        (e.importance == best->importance && e.skill < best->skill)) {
      best = &e;
    }
  }
  if (best == nullptr) return std::nullopt;
  return best->skill;
}

std::vector<OERRecord> candidate_set(const LearnerProfile& p, std::string_view skill,
                                     std::span<const OERRecord> catalog, const CandidateOptions& options) {
  auto it = p.skill_levels.find(std::string(skill));
  const double level = it == p.skill_levels.end() ? 0.0 : it->second;
  std::vector<const OERRecord*> eligible;
  for (const OERRecord& o : catalog) {
    if (o.skill == skill && !o.excluded_for_skill && !options.blocked.count(o.oer_id)) eligible.push_back(&o);
  }
  const std::array<double, 3> bands{options.level_band, std::max(options.level_band, 50.0),
                                    std::numeric_limits<double>::infinity()};
  std::vector<OERRecord> out;
  for (double band : bands) {
    for (const OERRecord* o : eligible) {
      if (std::abs(o->level - level) <= band) out.push_back(*o);
    }
    if (!out.empty()) break;
  }
  return out;
}

std::vector<ScoredCandidate> rank_candidates(const LearnerProfile& p, std::span<const OERRecord> candidates,
                                             std::span<const std::string> resources) {
  const PropertyVector u = learner_vector(p, resources);
  std::vector<ScoredCandidate> ranked;
  for (const OERRecord& o : candidates) ranked.push_back({o.oer_id, cosine(u, oer_vector(o, resources))});
  std::sort(ranked.begin(), ranked.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.oer_id < b.oer_id;
  });
  return ranked;
}

std::string_view to_string(RecommendationStatus s) {
  switch (s) {
    case RecommendationStatus::pending: return "pending";
    case RecommendationStatus::rated: return "rated";
    case RecommendationStatus::irrelevant: return "irrelevant";
    case RecommendationStatus::changed: return "changed";
  }
  return "?";
}

RecommendationStatus recommendation_status_from_string(std::string_view s) {
  for (auto v : {RecommendationStatus::pending, RecommendationStatus::rated, RecommendationStatus::irrelevant,
                 RecommendationStatus::changed}) {
    if (to_string(v) == s) return v;
  }
  throw InvalidArgument("unknown recommendation status '" + std::string(s) + "'");
}

std::string_view to_string(RecommendOutcome::Kind k) {
  switch (k) {
    case RecommendOutcome::Kind::issued: return "recommendation";
    case RecommendOutcome::Kind::completed: return "completed";
    case RecommendOutcome::Kind::catalog_gap: return "catalog_gap";
  }
  return "?";
}

RecommendOutcome recommend(const LearnerProfile& p, const JobSkillProfile& profile, std::span<OERRecord> catalog,
                           const CandidateOptions& options, std::string recommendation_id, Timestamp now) {
  RecommendOutcome outcome;
  const auto skill = target_skill(p, profile);
  if (!skill) return outcome;
  outcome.skill = *skill;

  const auto candidates = candidate_set(p, *skill, catalog, options);
  if (candidates.empty()) {
    outcome.kind = RecommendOutcome::Kind::catalog_gap;
    return outcome;
  }
  const auto resources = resource_axis(catalog);
  const ScoredCandidate best = rank_candidates(p, candidates, resources).front();

  auto chosen = std::find_if(catalog.begin(), catalog.end(),
                             [&](const OERRecord& o) { return o.oer_id == best.oer_id; });
  ++chosen->total_recom;
  chosen->relevance = relevance(*chosen);

  const SkillImportanceRecord* entry = profile.find(*skill);
  outcome.kind = RecommendOutcome::Kind::issued;
  outcome.recommendation = Recommendation{std::move(recommendation_id),
                                          p.user_id,
                                          best.oer_id,
                                          *skill,
                                          entry ? entry->importance : 0.0,
                                          best.score,
                                          RecommendationStatus::pending,
                                          now};
  return outcome;
}

}  // namespace oerrec
