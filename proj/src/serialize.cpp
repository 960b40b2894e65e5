#include "oerrec/serialize.hpp"

namespace oerrec {

void to_json(Json& j, const PersonalInfo& v) {
  j = Json{{"location", v.location}, {"gender", v.gender}, {"education", v.education}};
}

void from_json(const Json& j, PersonalInfo& v) {
  v.location = j.value("location", "");
  v.gender = j.value("gender", "");
  v.education = j.value("education", "");
}

void to_json(Json& j, const LearnerProfile& v) {
  j = Json{{"user_id", v.user_id},
           {"selected_job", v.selected_job},
           {"skill_levels", v.skill_levels},
           {"personal", v.personal},
           {"pref_resources", v.pref_resources},
           {"pref_long", v.pref_long},
           {"pref_short", v.pref_short},
           {"pref_check", v.pref_check},
           {"pref_accessibility", v.pref_accessibility}};
}

void from_json(const Json& j, LearnerProfile& v) {
  j.at("user_id").get_to(v.user_id);
  j.at("selected_job").get_to(v.selected_job);
  j.at("skill_levels").get_to(v.skill_levels);
  j.at("personal").get_to(v.personal);
  j.at("pref_resources").get_to(v.pref_resources);
  j.at("pref_long").get_to(v.pref_long);
  j.at("pref_short").get_to(v.pref_short);
  j.at("pref_check").get_to(v.pref_check);
  j.at("pref_accessibility").get_to(v.pref_accessibility);
}

void to_json(Json& j, const OERRecord& v) {
  j = Json{{"oer_id", v.oer_id},
           {"title", v.title},
           {"resource", v.resource},
           {"skill", v.skill},
           {"author", v.author},
           {"url", v.url},
           {"how_long", v.how_long},
           {"how_short", v.how_short},
           {"level", v.level},
           {"quality", v.quality},
           {"accessibility", v.accessibility},
           {"relevance", v.relevance},
           {"total_recom", v.total_recom},
           {"irrelev_count", v.irrelev_count},
           {"excluded_for_skill", v.excluded_for_skill}};
}

void from_json(const Json& j, OERRecord& v) {
  j.at("oer_id").get_to(v.oer_id);
  v.title = j.value("title", "");
  j.at("resource").get_to(v.resource);
  j.at("skill").get_to(v.skill);
  v.author = j.value("author", "");
  v.url = j.value("url", "");
  j.at("how_long").get_to(v.how_long);
  j.at("how_short").get_to(v.how_short);
  j.at("level").get_to(v.level);
  j.at("quality").get_to(v.quality);
  j.at("accessibility").get_to(v.accessibility);
  v.relevance = j.value("relevance", 1.0);
  v.total_recom = j.value("total_recom", 0LL);
  v.irrelev_count = j.value("irrelev_count", 0LL);
  v.excluded_for_skill = j.value("excluded_for_skill", false);
}

void to_json(Json& j, const RatingEvent& v) {
  j = Json{{"user_id", v.user_id},     {"oer_id", v.oer_id},           {"recommendation_id", v.recommendation_id},
           {"stars", v.stars},         {"satisfaction", v.satisfaction}, {"timestamp", v.timestamp}};
}

void from_json(const Json& j, RatingEvent& v) {
  j.at("user_id").get_to(v.user_id);
  j.at("oer_id").get_to(v.oer_id);
  j.at("recommendation_id").get_to(v.recommendation_id);
  j.at("stars").get_to(v.stars);
  j.at("satisfaction").get_to(v.satisfaction);
  j.at("timestamp").get_to(v.timestamp);
}

void to_json(Json& j, const Period& v) { j = Json{{"begin", v.begin}, {"end", v.end}}; }

void from_json(const Json& j, Period& v) {
  j.at("begin").get_to(v.begin);
  j.at("end").get_to(v.end);
}

void to_json(Json& j, const EqualityWeights& v) {
  Json values = Json::object();
  for (const auto& [k, w] : v.values) values[std::string(to_string(k))] = w;
  j = Json{{"values", values}, {"period", v.period}};
}

void from_json(const Json& j, EqualityWeights& v) {
  v.values.clear();
  for (const auto& [name, w] : j.at("values").items()) v.values[property_key_from_string(name)] = w.get<double>();
  j.at("period").get_to(v.period);
}

void to_json(Json& j, const SkillImportanceRecord& v) {
  j = Json{{"skill", v.skill},
           {"job", v.job},
           {"location", v.location},
           {"importance", v.importance},
           {"last_updated", v.last_updated.ok() ? Json(format_date(v.last_updated)) : Json()}};
}

void from_json(const Json& j, SkillImportanceRecord& v) {
  j.at("skill").get_to(v.skill);
  j.at("job").get_to(v.job);
  j.at("location").get_to(v.location);
  j.at("importance").get_to(v.importance);
  const Json& d = j.at("last_updated");
  v.last_updated = d.is_null() ? Date{} : parse_date(d.get<std::string>());
}

void to_json(Json& j, const JobSkillProfile& v) {
  j = Json{{"job", v.job}, {"location", v.location}, {"entries", v.entries}};
}

void from_json(const Json& j, JobSkillProfile& v) {
  j.at("job").get_to(v.job);
  j.at("location").get_to(v.location);
  j.at("entries").get_to(v.entries);
}

namespace {

void put_optional(Json& j, const char* key, const std::optional<double>& v) {
  if (v) j[key] = *v;
  else j[key] = nullptr;
}

std::optional<double> get_optional(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<double>();
}

}  // namespace

void to_json(Json& j, const OerDraft& v) {
  j = Json{{"oer_id", v.oer_id}, {"title", v.title}, {"resource", v.resource},
           {"skill", v.skill},   {"author", v.author}, {"url", v.url}};
  put_optional(j, "how_long", v.how_long);
  put_optional(j, "level", v.level);
  put_optional(j, "quality", v.quality);
  put_optional(j, "accessibility", v.accessibility);
}

void from_json(const Json& j, OerDraft& v) {
  j.at("oer_id").get_to(v.oer_id);
  v.title = j.value("title", "");
  j.at("resource").get_to(v.resource);
  j.at("skill").get_to(v.skill);
  v.author = j.value("author", "");
  v.url = j.value("url", "");
  v.how_long = get_optional(j, "how_long");
  v.level = get_optional(j, "level");
  v.quality = get_optional(j, "quality");
  v.accessibility = get_optional(j, "accessibility");
}

void to_json(Json& j, const Recommendation& v) {
  j = Json{{"recommendation_id", v.recommendation_id},
           {"user_id", v.user_id},
           {"oer_id", v.oer_id},
           {"skill", v.skill},
           {"skill_importance", v.skill_importance},
           {"cosine_score", v.cosine_score},
           {"status", std::string(to_string(v.status))},
           {"issued_at", v.issued_at}};
}

void from_json(const Json& j, Recommendation& v) {
  j.at("recommendation_id").get_to(v.recommendation_id);
  j.at("user_id").get_to(v.user_id);
  j.at("oer_id").get_to(v.oer_id);
  j.at("skill").get_to(v.skill);
  j.at("skill_importance").get_to(v.skill_importance);
  j.at("cosine_score").get_to(v.cosine_score);
  v.status = recommendation_status_from_string(j.at("status").get<std::string>());
  j.at("issued_at").get_to(v.issued_at);
}

}  // namespace oerrec
