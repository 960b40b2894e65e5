#pragma once

// JSON encodings of the domain records (nlohmann ADL hooks). Doubles
// round-trip exactly.

#include "json.hpp"

#include "oerrec/catalog.hpp"
#include "oerrec/importance.hpp"
#include "oerrec/learner.hpp"
#include "oerrec/model.hpp"
#include "oerrec/recommender.hpp"

namespace oerrec {

using Json = nlohmann::json;

void to_json(Json& j, const PersonalInfo& v);
void from_json(const Json& j, PersonalInfo& v);
void to_json(Json& j, const LearnerProfile& v);
void from_json(const Json& j, LearnerProfile& v);
void to_json(Json& j, const OERRecord& v);
void from_json(const Json& j, OERRecord& v);
void to_json(Json& j, const RatingEvent& v);
void from_json(const Json& j, RatingEvent& v);
void to_json(Json& j, const Period& v);
void from_json(const Json& j, Period& v);
void to_json(Json& j, const EqualityWeights& v);
void from_json(const Json& j, EqualityWeights& v);
void to_json(Json& j, const SkillImportanceRecord& v);
void from_json(const Json& j, SkillImportanceRecord& v);
void to_json(Json& j, const JobSkillProfile& v);
void from_json(const Json& j, JobSkillProfile& v);
void to_json(Json& j, const OerDraft& v);
void from_json(const Json& j, OerDraft& v);
void to_json(Json& j, const Recommendation& v);
void from_json(const Json& j, Recommendation& v);

}  // namespace oerrec
