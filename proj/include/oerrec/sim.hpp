#pragma once

// Closed-loop simulation: synthetic learners with planted preferences rate
// the engine's recommendations.
//
// One step is one issue -> feedback interaction. Learners arrive over time
// (one every `arrival_every` steps) and are served round-robin among those
// present; a learner whose target skills are exhausted or mastered drops
// out. Learners form clusters that share personal information, a selected
// job and a planted preference centre.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oerrec/engine.hpp"

namespace oerrec {

struct SimConfig {
  std::size_t n_learners = 20;
  std::size_t n_oers = 50;
  std::size_t steps = 200;
  std::uint64_t seed = 1;
  double noise = 0.0;          // std-dev of the additive satisfaction noise
  double d_max = 50.0;         // distance at which satisfaction reaches 0
  std::size_t n_clusters = 2;
  double cluster_spread = 5.0;  // planted jitter around the cluster centre
  double planted_low = 20.0;
  double planted_high = 80.0;
  /// Cluster centres differ by at least this much in every component.
  double centre_separation = 30.0;
  /// When positive, OER i is generated around the planted centre of
  /// cluster i mod n_clusters with this half-width; otherwise uniformly.
  double catalog_spread = 15.0;
  std::size_t n_skills = 2;
  bool job_per_cluster = true;   // clusters select different jobs with the same skills
  std::size_t level_classes = 1;  // OER levels drawn from {0, 25, ...} up to this many classes
  std::size_t n_repositories = 2;
  std::size_t arrival_every = 10; // 0: every learner present from step 0
  /// 0: no periodic batch. Steps are one hour apart, so the engine's
  /// default monthly batch would fall at step 720.
  std::size_t batch_every = 0;
  double hidden_fraction = 0.2;   // share of OER properties unknown to the engine
  double irrelevant_probability = 0.0;
  double change_probability = 0.0;
  EngineConfig engine;

  /// Throws InvalidArgument when a count is zero or a range is inverted.
  void validate() const;
};

/// (long, short, check, accessibility) on [0, 100].
using PreferencePoint = std::array<double, 4>;

struct SimLearner {
  std::string user_id;  // empty until the learner arrives
  std::size_t cluster = 0;
  PersonalInfo personal;
  PreferencePoint planted{};
  std::size_t arrival_step = 0;
};

struct SimStep {
  std::size_t step = 0;
  std::string user_id;
  std::string oer_id;
  std::string action;  // rate, irrelevant, change, completed, catalog_gap, idle
  int stars = 0;
  std::optional<double> satisfaction;
  double mean_cosine = 0.0;  // engine vs planted, over learners present
};

struct SimLearnerResult {
  std::string user_id;
  std::size_t cluster = 0;
  PreferencePoint planted{};
  PreferencePoint initial{};  // engine preferences right after arrival
  PreferencePoint final{};
  std::size_t ratings = 0;
  double final_l1 = 0.0;
};

struct SimReport {
  std::vector<SimStep> steps;
  std::vector<SimLearnerResult> learners;
  std::vector<BatchReport> batches;
  double oer_recovery_error = 0.0;  // mean |engine - truth| over refitted OERs and components
  std::size_t refitted_oers = 0;
  std::size_t irrelevant = 0;
  std::size_t changed = 0;
  EngineState final_state;

  std::vector<std::optional<double>> satisfaction_series() const;
  std::vector<double> cosine_series() const;
  /// Mean satisfaction over rated steps among steps [begin, end).
  std::optional<double> window_satisfaction(std::size_t begin, std::size_t end) const;
  double max_final_l1() const;
};

PreferencePoint engine_preferences(const LearnerProfile& p);
double l1_distance(const PreferencePoint& a, const PreferencePoint& b);

SimReport run_sim(const SimConfig& config);

/// One JSON object per step, then one summary object.
void write_sim_metrics(std::ostream& out, const SimReport& report);

}  // namespace oerrec
