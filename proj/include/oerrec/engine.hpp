#pragma once

// The stateful recommender: learners, catalog, job profiles, the rating log
// and the recommendation issue/feedback loop, plus the periodic batch jobs.
//
// Every mutation takes an explicit timestamp so that replaying the journal
// reproduces the state exactly. Mutations are serialized; readers take a
// shared lock and see either the state before or after a mutation or batch.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "oerrec/catalog.hpp"
#include "oerrec/classifier.hpp"
#include "oerrec/importance.hpp"
#include "oerrec/learner.hpp"
#include "oerrec/recommender.hpp"
#include "oerrec/serialize.hpp"
#include "oerrec/text.hpp"
#include "oerrec/tfidf.hpp"

namespace oerrec {

struct EngineConfig {
  double alpha = 0.7;
  double eta = 0.1;
  std::size_t k_neighbors = 10;
  double level_band = 25.0;
  double level_step = 10.0;
  int batch_period_days = 30;
  int window_months = 6;
  std::size_t top_k = 0;
  GdOptions gd;

  /// Throws ConfigError naming the first parameter outside its range.
  void validate() const;
};

/// A rating with the rater's profile as it was just before the rating.
struct RatingRecord {
  RatingEvent event;
  LearnerProfile rater;

  bool operator==(const RatingRecord&) const = default;
};

struct EngineState {
  std::map<std::string, LearnerProfile> learners;
  std::vector<OERRecord> catalog;            // sorted by oer_id
  std::vector<JobSkillProfile> job_profiles;  // sorted by (job, location)
  std::map<std::string, Recommendation> recommendations;
  std::vector<RatingRecord> ratings;
  EqualityWeights weights = EqualityWeights::uniform();
  std::optional<Timestamp> last_batch_end;
  std::optional<Timestamp> last_importance_refresh;
  std::uint64_t next_learner = 1;
  std::uint64_t next_recommendation = 1;

  bool operator==(const EngineState&) const = default;
};

void to_json(Json& j, const EngineState& s);
void from_json(const Json& j, EngineState& s);

/// Inputs of the importance refresh. Without a model, sentences under a
/// required-skills heading count as skill sentences.
struct ImportanceSource {
  std::vector<RawVacancy> vacancies;
  std::vector<SkillTerm> skills;
  std::optional<ClassifierModel> model;
  HeadingRules headings;
};

struct NewLearner {
  std::string selected_job;
  PersonalInfo personal;
  std::map<std::string, double> skill_levels;
};

struct FeedbackResult {
  Recommendation recommendation;  // with its final status
  LearnerProfile learner;
  RecommendOutcome next;
};

struct BatchReport {
  Period period;
  bool equality_updated = false;
  std::size_t equality_pairs = 0;
  std::size_t refits = 0;
  std::size_t refit_failures = 0;
  std::vector<std::string> failures;  // "oer_id: message"
  std::size_t excluded = 0;
  std::size_t importance_refreshed = 0;
};

void to_json(Json& j, const BatchReport& r);
void to_json(Json& j, const RecommendOutcome& o);

class Engine {
 public:
  /// Receives each successful mutation as a journal event, under the
  /// mutation lock, before the mutation returns.
  using Journal = std::function<void(const Json& event)>;

  explicit Engine(EngineConfig config = {});

  const EngineConfig& config() const noexcept { return config_; }
  void set_journal(Journal journal);
  void set_importance_source(std::shared_ptr<const ImportanceSource> source);

  // Mutations.
  /// New OERs are initialised against the current catalog; drafts whose id
  /// already exists are skipped. Returns the number added.
  std::size_t import_drafts(const std::vector<OerDraft>& drafts, Timestamp now);
  /// Replaces profiles with the same (job, location).
  void import_profiles(const std::vector<JobSkillProfile>& profiles, Timestamp now);
  LearnerProfile create_learner(const NewLearner& learner, Timestamp now);
  LearnerProfile set_skill_levels(const std::string& user_id, const std::map<std::string, double>& levels,
                                  Timestamp now);
  /// Returns the learner's pending recommendation if there is one,
  /// otherwise issues a new one.
  RecommendOutcome recommendation_for(const std::string& user_id, Timestamp now);
  FeedbackResult rate(const std::string& recommendation_id, int stars, Timestamp now);
  FeedbackResult mark_irrelevant(const std::string& recommendation_id, Timestamp now);
  FeedbackResult change(const std::string& recommendation_id, Timestamp now);
  BatchReport run_batch(Timestamp now);
  void restore(EngineState state);

  // Reads.
  EngineState state() const;
  /// Calls `f` with the state while no mutation is in progress, so that
  /// the state matches everything journaled so far.
  void inspect(const std::function<void(const EngineState&)>& f);
  LearnerProfile learner(const std::string& user_id) const;
  Recommendation recommendation(const std::string& recommendation_id) const;
  std::vector<OERRecord> catalog() const;
  std::optional<OERRecord> oer(const std::string& oer_id) const;
  /// Distinct job titles containing `query` case-insensitively.
  std::vector<std::string> jobs(const std::string& query) const;
  /// The profile for (job, location); an empty location or one without a
  /// profile falls back to the job's first profile. NotFound for unknown jobs.
  JobSkillProfile job_profile(const std::string& job, const std::string& location) const;

 private:
  void journal(Json event) const;
  const JobSkillProfile* find_profile(const EngineState& s, const std::string& job,
                                      const std::string& location) const;
  RecommendOutcome issue(EngineState& s, const std::string& user_id, Timestamp now);
  Recommendation& pending_recommendation(EngineState& s, const std::string& recommendation_id);
  EngineState batch(EngineState s, Timestamp now, BatchReport& report) const;

  EngineConfig config_;
  Journal journal_;
  std::shared_ptr<const ImportanceSource> importance_;
  std::mutex write_mutex_;
  mutable std::shared_mutex state_mutex_;
  EngineState state_;
};

/// Re-executes a journal event against the engine (used for recovery).
void replay_event(Engine& engine, const Json& event);

}  // namespace oerrec
