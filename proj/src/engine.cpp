#include "oerrec/engine.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>
#include <set>

#include "oerrec/error.hpp"
#include "oerrec/format.hpp"

namespace oerrec {

namespace {

constexpr Timestamp kSecondsPerDay = 86400;

void require_range(const char* name, double value, double lo, double hi, bool lo_open = false) {
  const bool ok = (lo_open ? value > lo : value >= lo) && value <= hi;
  if (!ok) {
    throw ConfigError(std::string(name) + " = " + format_double(value) + " outside " + (lo_open ? "(" : "[") +
                      format_double(lo) + ", " + format_double(hi) + "]");
  }
}

std::string sequence_id(char prefix, std::uint64_t n) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%c%06llu", prefix, static_cast<unsigned long long>(n));
  return buffer;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

OERRecord* find_oer(EngineState& s, const std::string& oer_id) {
  auto it = std::lower_bound(s.catalog.begin(), s.catalog.end(), oer_id,
                             [](const OERRecord& o, const std::string& id) { return o.oer_id < id; });
  return it != s.catalog.end() && it->oer_id == oer_id ? &*it : nullptr;
}

LearnerProfile& find_learner(EngineState& s, const std::string& user_id) {
  auto it = s.learners.find(user_id);
  if (it == s.learners.end()) throw NotFound("unknown learner '" + user_id + "'");
  return it->second;
}

void validate_levels(const std::map<std::string, double>& levels, const JobSkillProfile& profile) {
  for (const auto& [skill, level] : levels) {
    if (!profile.find(skill)) {
      throw InvalidArgument("skill '" + skill + "' is not part of the profile for job '" + profile.job + "'");
    }
    if (!(level >= 0.0 && level <= 100.0)) {
      throw InvalidArgument("level for '" + skill + "' must be in [0, 100], got " + format_double(level));
    }
  }
}

Json event(const char* type, Timestamp now) { return Json{{"type", type}, {"ts", now}}; }

}  // namespace

void EngineConfig::validate() const {
  require_range("alpha", alpha, 0.5, 1.0, true);
  require_range("eta", eta, 0.0, 1.0, true);
  require_range("k_neighbors", static_cast<double>(k_neighbors), 1, 1000);
  require_range("level_band", level_band, 0.0, 100.0);
  require_range("level_step", level_step, 0.0, 100.0);
  require_range("batch_period_days", batch_period_days, 1, 3650);
  require_range("window_months", window_months, 1, 120);
  require_range("top_k", static_cast<double>(top_k), 0, 10000);
  require_range("gd.learning_rate", gd.learning_rate, 0.0, 10.0, true);
  require_range("gd.max_iterations", gd.max_iterations, 1, 1000000);
  require_range("gd.tolerance", gd.tolerance, 0.0, 1.0);
}

// ---------------------------------------------------------------- JSON

void to_json(Json& j, const EngineState& s) {
  Json learners = Json::array();
  for (const auto& [_, p] : s.learners) learners.push_back(p);
  Json recommendations = Json::array();
  for (const auto& [_, r] : s.recommendations) recommendations.push_back(r);
  Json ratings = Json::array();
  for (const auto& r : s.ratings) ratings.push_back(Json{{"event", r.event}, {"rater", r.rater}});
  j = Json{{"learners", learners},
           {"catalog", s.catalog},
           {"job_profiles", s.job_profiles},
           {"recommendations", recommendations},
           {"ratings", ratings},
           {"weights", s.weights},
           {"last_batch_end", s.last_batch_end ? Json(*s.last_batch_end) : Json(nullptr)},
           {"last_importance_refresh",
            s.last_importance_refresh ? Json(*s.last_importance_refresh) : Json(nullptr)},
           {"next_learner", s.next_learner},
           {"next_recommendation", s.next_recommendation}};
}

void from_json(const Json& j, EngineState& s) {
  s = EngineState{};
  for (const auto& p : j.at("learners")) {
    auto profile = p.get<LearnerProfile>();
    s.learners.emplace(profile.user_id, std::move(profile));
  }
  j.at("catalog").get_to(s.catalog);
  j.at("job_profiles").get_to(s.job_profiles);
  for (const auto& r : j.at("recommendations")) {
    auto rec = r.get<Recommendation>();
    s.recommendations.emplace(rec.recommendation_id, std::move(rec));
  }
  for (const auto& r : j.at("ratings")) {
    s.ratings.push_back({r.at("event").get<RatingEvent>(), r.at("rater").get<LearnerProfile>()});
  }
  j.at("weights").get_to(s.weights);
  if (!j.at("last_batch_end").is_null()) s.last_batch_end = j.at("last_batch_end").get<Timestamp>();
  if (!j.at("last_importance_refresh").is_null()) {
    s.last_importance_refresh = j.at("last_importance_refresh").get<Timestamp>();
  }
  j.at("next_learner").get_to(s.next_learner);
  j.at("next_recommendation").get_to(s.next_recommendation);
}

void to_json(Json& j, const BatchReport& r) {
  Json period{{"end", r.period.end}};
  period["begin"] = r.period.begin == std::numeric_limits<Timestamp>::min() ? Json(nullptr) : Json(r.period.begin);
  j = Json{{"period", period},
           {"equality_updated", r.equality_updated},
           {"equality_pairs", r.equality_pairs},
           {"refits", r.refits},
           {"refit_failures", r.refit_failures},
           {"failures", r.failures},
           {"excluded", r.excluded},
           {"importance_refreshed", r.importance_refreshed}};
}

void to_json(Json& j, const RecommendOutcome& o) {
  j = Json{{"kind", std::string(to_string(o.kind))}};
  if (!o.skill.empty()) j["skill"] = o.skill;
  if (o.recommendation) j["recommendation"] = *o.recommendation;
}

// ---------------------------------------------------------------- engine

Engine::Engine(EngineConfig config) : config_(config) { config_.validate(); }

void Engine::set_journal(Journal journal) {
  std::lock_guard write(write_mutex_);
  journal_ = std::move(journal);
}

void Engine::set_importance_source(std::shared_ptr<const ImportanceSource> source) {
  std::lock_guard write(write_mutex_);
  importance_ = std::move(source);
}

void Engine::journal(Json event) const {
  if (journal_) journal_(event);
}

const JobSkillProfile* Engine::find_profile(const EngineState& s, const std::string& job,
                                            const std::string& location) const {
  const std::string key = normalize_location(location);
  const JobSkillProfile* fallback = nullptr;
  for (const auto& p : s.job_profiles) {
    if (p.job != job) continue;
    if (p.location == key) return &p;
    if (!fallback) fallback = &p;
  }
  return fallback;
}

std::size_t Engine::import_drafts(const std::vector<OerDraft>& drafts, Timestamp now) {
  std::lock_guard write(write_mutex_);
  std::unique_lock lock(state_mutex_);
  std::size_t added = 0;
  for (const OerDraft& d : drafts) {
    if (find_oer(state_, d.oer_id)) continue;
    OERRecord r = init_oer(d, state_.catalog);
    auto pos = std::lower_bound(state_.catalog.begin(), state_.catalog.end(), r.oer_id,
                                [](const OERRecord& o, const std::string& id) { return o.oer_id < id; });
    state_.catalog.insert(pos, std::move(r));
    ++added;
  }
  Json e = event("import_drafts", now);
  e["drafts"] = drafts;
  journal(std::move(e));
  return added;
}

void Engine::import_profiles(const std::vector<JobSkillProfile>& profiles, Timestamp now) {
  std::lock_guard write(write_mutex_);
  std::unique_lock lock(state_mutex_);
  for (const JobSkillProfile& p : profiles) {
    auto& list = state_.job_profiles;
    auto it = std::find_if(list.begin(), list.end(),
                           [&](const JobSkillProfile& q) { return q.job == p.job && q.location == p.location; });
    if (it != list.end()) {
      *it = p;
    } else {
      list.push_back(p);
    }
  }
  std::sort(state_.job_profiles.begin(), state_.job_profiles.end(), [](const auto& a, const auto& b) {
    return std::tie(a.job, a.location) < std::tie(b.job, b.location);
  });
  Json e = event("import_profiles", now);
  e["profiles"] = profiles;
  journal(std::move(e));
}

LearnerProfile Engine::create_learner(const NewLearner& learner, Timestamp now) {
  std::lock_guard write(write_mutex_);
  const JobSkillProfile* profile = find_profile(state_, learner.selected_job, learner.personal.location);
  if (!profile) throw InvalidArgument("unknown job '" + learner.selected_job + "'");
  validate_levels(learner.skill_levels, *profile);

  std::vector<LearnerProfile> pool;
  for (const auto& [_, p] : state_.learners) pool.push_back(p);
  KnownProperties known{sequence_id('u', state_.next_learner), learner.selected_job, learner.skill_levels,
                        learner.personal};
  InitOptions options;
  options.k_neighbors = config_.k_neighbors;
  options.repositories = resource_axis(state_.catalog);
  const EqualityWeights& w = state_.weights.empty() ? EqualityWeights::uniform() : state_.weights;
  LearnerProfile created = init_profile(known, pool, w, options);

  std::unique_lock lock(state_mutex_);
  state_.learners.emplace(created.user_id, created);
  ++state_.next_learner;
  Json e = event("create_learner", now);
  e["learner"] = Json{{"selected_job", learner.selected_job},
                      {"personal", learner.personal},
                      {"skill_levels", learner.skill_levels}};
  journal(std::move(e));
  return created;
}

LearnerProfile Engine::set_skill_levels(const std::string& user_id, const std::map<std::string, double>& levels,
                                        Timestamp now) {
  std::lock_guard write(write_mutex_);
  LearnerProfile updated = find_learner(state_, user_id);
  const JobSkillProfile* profile = find_profile(state_, updated.selected_job, updated.personal.location);
  if (!profile) throw InvalidArgument("unknown job '" + updated.selected_job + "'");
  validate_levels(levels, *profile);
  for (const auto& [skill, level] : levels) updated.skill_levels[skill] = level;

  std::unique_lock lock(state_mutex_);
  state_.learners[user_id] = updated;
  Json e = event("set_skill_levels", now);
  e["user_id"] = user_id;
  e["levels"] = levels;
  journal(std::move(e));
  return updated;
}

RecommendOutcome Engine::issue(EngineState& s, const std::string& user_id, Timestamp now) {
  const LearnerProfile& learner = find_learner(s, user_id);
  const JobSkillProfile* profile = find_profile(s, learner.selected_job, learner.personal.location);
  if (!profile) throw NotFound("no skill profile for job '" + learner.selected_job + "'");

  CandidateOptions options;
  options.level_band = config_.level_band;
  for (const auto& [_, r] : s.recommendations) {
    if (r.user_id == user_id) options.blocked.insert(r.oer_id);
  }
  RecommendOutcome outcome =
      recommend(learner, *profile, s.catalog, options, sequence_id('r', s.next_recommendation), now);
  if (outcome.recommendation) {
    ++s.next_recommendation;
    s.recommendations.emplace(outcome.recommendation->recommendation_id, *outcome.recommendation);
  }
  return outcome;
}

RecommendOutcome Engine::recommendation_for(const std::string& user_id, Timestamp now) {
  std::lock_guard write(write_mutex_);
  find_learner(state_, user_id);
  for (const auto& [_, r] : state_.recommendations) {
    if (r.user_id == user_id && r.status == RecommendationStatus::pending) {
      return RecommendOutcome{RecommendOutcome::Kind::issued, r, r.skill};
    }
  }
  std::unique_lock lock(state_mutex_);
  RecommendOutcome outcome = issue(state_, user_id, now);
  if (outcome.recommendation) {
    Json e = event("issue", now);
    e["user_id"] = user_id;
    journal(std::move(e));
  }
  return outcome;
}

Recommendation& Engine::pending_recommendation(EngineState& s, const std::string& recommendation_id) {
  auto it = s.recommendations.find(recommendation_id);
  if (it == s.recommendations.end()) throw NotFound("unknown recommendation '" + recommendation_id + "'");
  if (it->second.status != RecommendationStatus::pending) {
    throw StateError("recommendation '" + recommendation_id + "' already has feedback (" +
                     std::string(to_string(it->second.status)) + ")");
  }
  return it->second;
}

FeedbackResult Engine::rate(const std::string& recommendation_id, int stars, Timestamp now) {
  std::lock_guard write(write_mutex_);
  Recommendation& rec = pending_recommendation(state_, recommendation_id);
  const RatingEvent e = make_rating(rec.user_id, rec.oer_id, rec.recommendation_id, stars, now);
  const OERRecord* oer = find_oer(state_, rec.oer_id);
  if (!oer) throw NotFound("unknown OER '" + rec.oer_id + "'");
  LearnerProfile& learner = find_learner(state_, rec.user_id);
  LearnerProfile updated = apply_rating(learner, *oer, e, UpdateOptions{config_.eta, config_.level_step});

  std::unique_lock lock(state_mutex_);
  state_.ratings.push_back({e, learner});
  learner = std::move(updated);
  rec.status = RecommendationStatus::rated;
  FeedbackResult result{rec, learner, issue(state_, rec.user_id, now)};
  Json ev = event("rate", now);
  ev["recommendation_id"] = recommendation_id;
  ev["stars"] = stars;
  journal(std::move(ev));
  return result;
}

FeedbackResult Engine::mark_irrelevant(const std::string& recommendation_id, Timestamp now) {
  std::lock_guard write(write_mutex_);
  Recommendation& rec = pending_recommendation(state_, recommendation_id);
  OERRecord* oer = find_oer(state_, rec.oer_id);
  if (!oer) throw NotFound("unknown OER '" + rec.oer_id + "'");

  std::unique_lock lock(state_mutex_);
  ++oer->irrelev_count;
  oer->relevance = relevance(*oer);
  rec.status = RecommendationStatus::irrelevant;
  FeedbackResult result{rec, find_learner(state_, rec.user_id), issue(state_, rec.user_id, now)};
  Json ev = event("irrelevant", now);
  ev["recommendation_id"] = recommendation_id;
  journal(std::move(ev));
  return result;
}

FeedbackResult Engine::change(const std::string& recommendation_id, Timestamp now) {
  std::lock_guard write(write_mutex_);
  Recommendation& rec = pending_recommendation(state_, recommendation_id);

  std::unique_lock lock(state_mutex_);
  rec.status = RecommendationStatus::changed;
  FeedbackResult result{rec, find_learner(state_, rec.user_id), issue(state_, rec.user_id, now)};
  Json ev = event("change", now);
  ev["recommendation_id"] = recommendation_id;
  journal(std::move(ev));
  return result;
}

EngineState Engine::batch(EngineState s, Timestamp now, BatchReport& report) const {
  const Timestamp begin = s.last_batch_end ? *s.last_batch_end + 1 : std::numeric_limits<Timestamp>::min();
  report.period = Period{begin, now};

  std::vector<RatingEvent> events;
  std::map<std::string, std::vector<Rater>> raters_by_oer;
  for (const RatingRecord& r : s.ratings) {
    if (!report.period.contains(r.event.timestamp)) continue;
    events.push_back(r.event);
    raters_by_oer[r.event.oer_id].push_back({r.rater, r.event});
  }

  // Equality values.
  report.equality_pairs = collect_equal_rating_pairs(events, s.learners, report.period).pairs;
  EqualityWeights weights = equality_values(events, s.learners, report.period);
  if (!weights.empty()) {
    s.weights = std::move(weights);
    report.equality_updated = true;
  }

  // Property refit.
  for (const auto& [oer_id, raters] : raters_by_oer) {
    OERRecord* oer = find_oer(s, oer_id);
    try {
      if (!oer) throw NotFound("unknown OER");
      *oer = refit_properties(*oer, raters, config_.gd).record;
      ++report.refits;
    } catch (const Error& e) {
      ++report.refit_failures;
      report.failures.push_back(oer_id + ": " + e.what());
    }
  }

  // Relevance exclusions.
  std::set<std::string> skills;
  for (const OERRecord& o : s.catalog) skills.insert(o.skill);
  for (const auto& skill : skills) report.excluded += exclude_below_average(skill, s.catalog).size();

  // Importance refresh.
  const Timestamp period_seconds = static_cast<Timestamp>(config_.batch_period_days) * kSecondsPerDay;
  if (importance_ && !importance_->skills.empty() &&
      (!s.last_importance_refresh || now - *s.last_importance_refresh >= period_seconds)) {
    const ImportanceSource& src = *importance_;
    SentenceFilter filter;
    if (src.model) {
      filter = [&src](const CleanSentence& c) { return predict(*src.model, c).label == 1; };
    } else {
      filter = [&src](const CleanSentence& c) {
        return c.source_heading && src.headings.is_required_skills(*c.source_heading);
      };
    }
    const Date today = to_date(now);
    for (JobSkillProfile& p : s.job_profiles) {
      const WindowQuery q{p.job, p.location, today, config_.window_months};
      const RateMap rates = normalize_rates(occurrence_rates(src.vacancies, q, src.skills, filter));
      p = refresh_profile(p, p.job, p.location, rates, today, config_.alpha, config_.top_k);
      ++report.importance_refreshed;
    }
    s.last_importance_refresh = now;
  }

  s.last_batch_end = s.last_batch_end ? std::max(*s.last_batch_end, now) : now;
  return s;
}

BatchReport Engine::run_batch(Timestamp now) {
  std::lock_guard write(write_mutex_);
  BatchReport report;
  EngineState next = batch(state_, now, report);
  {
    std::unique_lock lock(state_mutex_);
    state_ = std::move(next);
  }
  journal(event("batch", now));
  return report;
}

void Engine::restore(EngineState state) {
  std::lock_guard write(write_mutex_);
  std::unique_lock lock(state_mutex_);
  state_ = std::move(state);
}

void Engine::inspect(const std::function<void(const EngineState&)>& f) {
  std::lock_guard write(write_mutex_);
  std::shared_lock lock(state_mutex_);
  f(state_);
}

EngineState Engine::state() const {
  std::shared_lock lock(state_mutex_);
  return state_;
}

LearnerProfile Engine::learner(const std::string& user_id) const {
  std::shared_lock lock(state_mutex_);
  auto it = state_.learners.find(user_id);
  if (it == state_.learners.end()) throw NotFound("unknown learner '" + user_id + "'");
  return it->second;
}

Recommendation Engine::recommendation(const std::string& recommendation_id) const {
  std::shared_lock lock(state_mutex_);
  auto it = state_.recommendations.find(recommendation_id);
  if (it == state_.recommendations.end()) throw NotFound("unknown recommendation '" + recommendation_id + "'");
  return it->second;
}

std::vector<OERRecord> Engine::catalog() const {
  std::shared_lock lock(state_mutex_);
  return state_.catalog;
}

std::optional<OERRecord> Engine::oer(const std::string& oer_id) const {
  std::shared_lock lock(state_mutex_);
  for (const auto& o : state_.catalog) {
    if (o.oer_id == oer_id) return o;
  }
  return std::nullopt;
}

std::vector<std::string> Engine::jobs(const std::string& query) const {
  std::shared_lock lock(state_mutex_);
  const std::string q = lower(query);
  std::set<std::string> titles;
  for (const auto& p : state_.job_profiles) {
    if (lower(p.job).find(q) != std::string::npos) titles.insert(p.job);
  }
  return {titles.begin(), titles.end()};
}

JobSkillProfile Engine::job_profile(const std::string& job, const std::string& location) const {
  std::shared_lock lock(state_mutex_);
  const JobSkillProfile* p = find_profile(state_, job, location);
  if (!p) throw NotFound("unknown job '" + job + "'");
  return *p;
}

void replay_event(Engine& engine, const Json& e) {
  const std::string type = e.at("type").get<std::string>();
  const Timestamp ts = e.at("ts").get<Timestamp>();
  if (type == "import_drafts") {
    engine.import_drafts(e.at("drafts").get<std::vector<OerDraft>>(), ts);
  } else if (type == "import_profiles") {
    engine.import_profiles(e.at("profiles").get<std::vector<JobSkillProfile>>(), ts);
  } else if (type == "create_learner") {
    const Json& l = e.at("learner");
    engine.create_learner(NewLearner{l.at("selected_job").get<std::string>(), l.at("personal").get<PersonalInfo>(),
                                     l.at("skill_levels").get<std::map<std::string, double>>()},
                          ts);
  } else if (type == "set_skill_levels") {
    engine.set_skill_levels(e.at("user_id").get<std::string>(), e.at("levels").get<std::map<std::string, double>>(),
                            ts);
  } else if (type == "issue") {
    engine.recommendation_for(e.at("user_id").get<std::string>(), ts);
  } else if (type == "rate") {
    engine.rate(e.at("recommendation_id").get<std::string>(), e.at("stars").get<int>(), ts);
  } else if (type == "irrelevant") {
    engine.mark_irrelevant(e.at("recommendation_id").get<std::string>(), ts);
  } else if (type == "change") {
    engine.change(e.at("recommendation_id").get<std::string>(), ts);
  } else if (type == "batch") {
    engine.run_batch(ts);
  } else {
    throw PersistenceError("unknown event type '" + type + "'");
  }
}

}  // namespace oerrec
