#pragma once

// Domain records shared by the learner, catalog and recommender modules.

#include <map>
#include <string>

#include "oerrec/date.hpp"

namespace oerrec {

struct PersonalInfo {
  std::string location;
  std::string gender;
  std::string education;

  bool operator==(const PersonalInfo&) const = default;
};

/// Learner properties. Every preference is on the [0, 100] scale.
struct LearnerProfile {
  std::string user_id;
  std::string selected_job;
  std::map<std::string, double> skill_levels;
  PersonalInfo personal;
  std::map<std::string, double> pref_resources;
  double pref_long = 50.0;
  double pref_short = 50.0;
  double pref_check = 50.0;
  double pref_accessibility = 50.0;

  bool operator==(const LearnerProfile&) const = default;
};

/// OER properties. Numeric properties are on [0, 100] except relevance,
/// which is a fraction in [0, 1]. how_short is always 100 - how_long.
struct OERRecord {
  std::string oer_id;
  std::string title;
  std::string resource;
  std::string skill;
  std::string author;
  std::string url;
  double how_long = 50.0;
  double how_short = 50.0;
  double level = 50.0;
  double quality = 50.0;
  double accessibility = 50.0;
  double relevance = 1.0;
  long long total_recom = 0;
  long long irrelev_count = 0;
  bool excluded_for_skill = false;

  bool operator==(const OERRecord&) const = default;
};

struct RatingEvent {
  std::string user_id;
  std::string oer_id;
  std::string recommendation_id;
  int stars = 3;
  double satisfaction = 0.5;  // (stars - 1) / 4
  Timestamp timestamp = 0;

  bool operator==(const RatingEvent&) const = default;
};

/// Builds a rating with satisfaction derived from stars; throws
/// InvalidArgument unless 1 <= stars <= 5.
RatingEvent make_rating(std::string user_id, std::string oer_id, std::string recommendation_id, int stars,
                        Timestamp timestamp);

double clamp_score(double value);

}  // namespace oerrec
