#include "oerrec/learner.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "oerrec/error.hpp"
#include "oerrec/text.hpp"

namespace oerrec {

RatingEvent make_rating(std::string user_id, std::string oer_id, std::string recommendation_id, int stars,
                        Timestamp timestamp) {
  if (stars < 1 || stars > 5) throw InvalidArgument("stars must be in 1..5, got " + std::to_string(stars));
  return RatingEvent{std::move(user_id), std::move(oer_id), std::move(recommendation_id), stars,
                     (stars - 1) / 4.0, timestamp};
}

double clamp_score(double value) { return std::clamp(value, 0.0, 100.0); }

std::string_view to_string(PropertyKey key) {
  switch (key) {
    case PropertyKey::location: return "location";
    case PropertyKey::gender: return "gender";
    case PropertyKey::education: return "education";
    case PropertyKey::selected_job: return "selected_job";
    case PropertyKey::skill_levels: return "skill_levels";
  }
  return "?";
}

PropertyKey property_key_from_string(std::string_view name) {
  for (PropertyKey k : kKnownProperties) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown property key: '" + std::string(name) + "'");
}

EqualityWeights EqualityWeights::uniform() {
  EqualityWeights w;
  for (PropertyKey k : kKnownProperties) w.values[k] = 100.0 / static_cast<double>(kKnownProperties.size());
  return w;
}

double EqualityWeights::get(PropertyKey key) const {
  auto it = values.find(key);
  return it == values.end() ? 0.0 : it->second;
}

bool equal_on(const LearnerProfile& i, const LearnerProfile& j, PropertyKey key) {
  switch (key) {
    case PropertyKey::location: return normalize_key(i.personal.location) == normalize_key(j.personal.location);
    case PropertyKey::gender: return normalize_key(i.personal.gender) == normalize_key(j.personal.gender);
    case PropertyKey::education:
      return normalize_key(i.personal.education) == normalize_key(j.personal.education);
    case PropertyKey::selected_job: return i.selected_job == j.selected_job;
    case PropertyKey::skill_levels: {
      if (i.skill_levels.empty() && j.skill_levels.empty()) return true;
      double diff = 0.0;
      std::size_t shared = 0;
      for (const auto& [skill, level] : i.skill_levels) {
        if (auto it = j.skill_levels.find(skill); it != j.skill_levels.end()) {
          diff += std::abs(level - it->second);
          ++shared;
        }
      }
      return shared > 0 && diff / static_cast<double>(shared) <= kSkillLevelTolerance;
    }
  }
  return false;
}

double sim_effect(const LearnerProfile& i, const LearnerProfile& j, PropertyKey key, const EqualityWeights& w) {
  return equal_on(i, j, key) ? w.get(key) : 0.0;
}

double sim_effect(const LearnerProfile& i, const LearnerProfile& j, std::string_view key,
                  const EqualityWeights& w) {
  return sim_effect(i, j, property_key_from_string(key), w);
}

double similarity(const LearnerProfile& i, const LearnerProfile& j, const EqualityWeights& w) {
  double total = 0.0;
  for (PropertyKey k : kKnownProperties) total += sim_effect(i, j, k, w);
  return total / 100.0;
}

EqualityPairs collect_equal_rating_pairs(std::span<const RatingEvent> events,
                                         const std::map<std::string, LearnerProfile>& profiles, Period period) {
  // oer -> user -> latest rating in period
  std::map<std::string, std::map<std::string, const RatingEvent*>> latest;
  for (const RatingEvent& e : events) {
    if (!period.contains(e.timestamp) || !profiles.count(e.user_id)) continue;
    const RatingEvent*& slot = latest[e.oer_id][e.user_id];
    if (slot == nullptr || slot->timestamp <= e.timestamp) slot = &e;
  }
  EqualityPairs result;
  for (PropertyKey k : kKnownProperties) result.equal_counts[k] = 0;
  for (const auto& [oer, by_user] : latest) {
    for (auto a = by_user.begin(); a != by_user.end(); ++a) {
      for (auto b = std::next(a); b != by_user.end(); ++b) {
        if (a->second->stars != b->second->stars) continue;
        ++result.pairs;
        const LearnerProfile& pa = profiles.at(a->first);
        const LearnerProfile& pb = profiles.at(b->first);
        for (PropertyKey k : kKnownProperties) {
          if (equal_on(pa, pb, k)) ++result.equal_counts[k];
        }
      }
    }
  }
  return result;
}

EqualityWeights equality_values(std::span<const RatingEvent> events,
                                const std::map<std::string, LearnerProfile>& profiles, Period period) {
  EqualityWeights w;
  w.period = period;
  const EqualityPairs pairs = collect_equal_rating_pairs(events, profiles, period);
  if (pairs.pairs == 0) return w;
  std::map<PropertyKey, double> ratios;
  double sum = 0.0;
  for (const auto& [k, n] : pairs.equal_counts) {
    ratios[k] = static_cast<double>(n) / static_cast<double>(pairs.pairs);
    sum += ratios[k];
  }
  if (sum <= 0.0) return w;
  for (const auto& [k, r] : ratios) w.values[k] = 100.0 * r / sum;
  return w;
}

LearnerProfile init_profile(const KnownProperties& known, std::span<const LearnerProfile> pool,
                            const EqualityWeights& w, const InitOptions& options) {
  LearnerProfile p;
  p.user_id = known.user_id;
  p.selected_job = known.selected_job;
  p.skill_levels = known.skill_levels;
  p.personal = known.personal;
  for (auto& [_, level] : p.skill_levels) level = clamp_score(level);

  struct Neighbour {
    double sim;
    const LearnerProfile* profile;
  };
  std::vector<Neighbour> neighbours;
  for (const LearnerProfile& other : pool) {
    if (other.user_id == p.user_id) continue;
    const double s = similarity(p, other, w);
    if (s > 0.0) neighbours.push_back({s, &other});
  }
  std::sort(neighbours.begin(), neighbours.end(), [](const Neighbour& a, const Neighbour& b) {
    if (a.sim != b.sim) return a.sim > b.sim;
    return a.profile->user_id < b.profile->user_id;
  });
  if (neighbours.size() > options.k_neighbors) neighbours.resize(options.k_neighbors);

  std::set<std::string> repositories(options.repositories.begin(), options.repositories.end());
  for (const auto& n : neighbours) {
    for (const auto& [repo, _] : n.profile->pref_resources) repositories.insert(repo);
  }

  const double d = options.default_preference;
  if (neighbours.empty()) {
    p.pref_long = p.pref_short = p.pref_check = p.pref_accessibility = d;
    for (const auto& repo : repositories) p.pref_resources[repo] = d;
    return p;
  }

  double total = 0.0;
  double lng = 0.0, shrt = 0.0, check = 0.0, access = 0.0;
  std::map<std::string, double> resources;
  for (const auto& n : neighbours) {
    const LearnerProfile& q = *n.profile;
    total += n.sim;
    lng += n.sim * q.pref_long;
    shrt += n.sim * q.pref_short;
    check += n.sim * q.pref_check;
    access += n.sim * q.pref_accessibility;
    for (const auto& repo : repositories) {
      auto it = q.pref_resources.find(repo);
      resources[repo] += n.sim * (it == q.pref_resources.end() ? d : it->second);
    }
  }
  p.pref_long = clamp_score(lng / total);
  p.pref_short = clamp_score(shrt / total);
  p.pref_check = clamp_score(check / total);
  p.pref_accessibility = clamp_score(access / total);
  for (const auto& [repo, sum] : resources) p.pref_resources[repo] = clamp_score(sum / total);
  return p;
}

LearnerProfile apply_rating(LearnerProfile p, const OERRecord& oer, const RatingEvent& e,
                            const UpdateOptions& options) {
  if (e.user_id != p.user_id) {
    throw InvalidArgument("rating by '" + e.user_id + "' applied to learner '" + p.user_id + "'");
  }
  if (!(options.eta > 0.0 && options.eta <= 1.0)) throw InvalidArgument("eta must be in (0, 1]");
  const double coefficient = options.eta * (2.0 * e.satisfaction - 1.0);
  auto pull = [&](double pref, double target) { return clamp_score(pref + coefficient * (target - pref)); };

  p.pref_long = pull(p.pref_long, oer.how_long);
  p.pref_short = pull(p.pref_short, oer.how_short);
  p.pref_check = pull(p.pref_check, oer.quality);
  p.pref_accessibility = pull(p.pref_accessibility, oer.accessibility);
  if (coefficient != 0.0 && !oer.resource.empty() && !p.pref_resources.count(oer.resource)) {
    p.pref_resources[oer.resource] = 50.0;
  }
  for (auto& [repo, value] : p.pref_resources) value = pull(value, repo == oer.resource ? 100.0 : 0.0);

  double& level = p.skill_levels[oer.skill];
  level = clamp_score(level + options.level_step * e.satisfaction);
  return p;
}

}  // namespace oerrec
