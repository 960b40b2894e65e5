#include "oerrec/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <set>

#include "oerrec/error.hpp"
#include "oerrec/random.hpp"

namespace oerrec {

namespace {

constexpr Timestamp kStepSeconds = 3600;

std::string numbered(const char* prefix, std::size_t n) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%s%03zu", prefix, n);
  return buffer;
}

double mean_abs_difference(const PreferencePoint& a, const PreferencePoint& b) {
  return l1_distance(a, b) / 4.0;
}

double cosine4(const PreferencePoint& a, const PreferencePoint& b) { return cosine(a, b); }

}  // namespace

void SimConfig::validate() const {
  if (n_learners == 0 || n_oers == 0 || steps == 0) throw InvalidArgument("learner, OER and step counts must be >= 1");
  if (n_clusters == 0 || n_skills == 0 || n_repositories == 0 || level_classes == 0 || level_classes > 5) {
    throw InvalidArgument("cluster, skill and repository counts must be >= 1 and level classes in [1, 5]");
  }
  if (!(d_max > 0.0)) throw InvalidArgument("d_max must be positive");
  if (noise < 0.0) throw InvalidArgument("noise must be >= 0");
  if (centre_separation < 0.0) throw InvalidArgument("centre separation must be >= 0");
  if (!(0.0 <= planted_low && planted_low <= planted_high && planted_high <= 100.0)) {
    throw InvalidArgument("planted range must satisfy 0 <= low <= high <= 100");
  }
  for (double p : {hidden_fraction, irrelevant_probability, change_probability}) {
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("probabilities must be in [0, 1]");
  }
  engine.validate();
}

PreferencePoint engine_preferences(const LearnerProfile& p) {
  return {p.pref_long, p.pref_short, p.pref_check, p.pref_accessibility};
}

double l1_distance(const PreferencePoint& a, const PreferencePoint& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

std::vector<std::optional<double>> SimReport::satisfaction_series() const {
  std::vector<std::optional<double>> out;
  for (const auto& s : steps) out.push_back(s.satisfaction);
  return out;
}

std::vector<double> SimReport::cosine_series() const {
  std::vector<double> out;
  for (const auto& s : steps) out.push_back(s.mean_cosine);
  return out;
}

std::optional<double> SimReport::window_satisfaction(std::size_t begin, std::size_t end) const {
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = begin; i < std::min(end, steps.size()); ++i) {
    if (steps[i].satisfaction) {
      sum += *steps[i].satisfaction;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

double SimReport::max_final_l1() const {
  double worst = 0.0;
  for (const auto& l : learners) worst = std::max(worst, l.final_l1);
  return worst;
}

SimReport run_sim(const SimConfig& config) {
  config.validate();
  Rng rng(config.seed);
  Engine engine(config.engine);
  const Timestamp start = to_timestamp(Date{std::chrono::year{2024}, std::chrono::month{1}, std::chrono::day{1}});

  // Job profiles: one shared job, or one per cluster.
  const std::string location = "simland";
  std::vector<std::string> skills;
  for (std::size_t s = 0; s < config.n_skills; ++s) skills.push_back(numbered("skill ", s + 1));
  std::vector<std::string> jobs;
  std::vector<JobSkillProfile> profiles;
  for (std::size_t j = 0; j < (config.job_per_cluster ? config.n_clusters : 1); ++j) {
    jobs.push_back(numbered("Simulated Analyst ", j + 1));
    std::vector<SkillImportanceRecord> entries;
    for (std::size_t s = 0; s < config.n_skills; ++s) {
      entries.push_back({skills[s], jobs.back(), location, 100.0 - 10.0 * static_cast<double>(s), to_date(start)});
    }
    profiles.push_back(build_profile(jobs.back(), location, entries));
  }
  engine.import_profiles(profiles, start);

  // Planted cluster centres.
  auto separated = [&](const std::vector<PreferencePoint>& set) {
    for (std::size_t a = 0; a < set.size(); ++a) {
      for (std::size_t b = a + 1; b < set.size(); ++b) {
        for (std::size_t k = 0; k < set[a].size(); ++k) {
          if (std::abs(set[a][k] - set[b][k]) < config.centre_separation) return false;
        }
      }
    }
    return true;
  };
  std::vector<PreferencePoint> centres;
  for (std::size_t attempt = 0;; ++attempt) {
    if (attempt == 10000) throw InvalidArgument("cannot place cluster centres with the requested separation");
    centres.clear();
    for (std::size_t c = 0; c < config.n_clusters; ++c) {
      const double lng = rng.uniform(config.planted_low, config.planted_high);
      centres.push_back({lng, 100.0 - lng, rng.uniform(config.planted_low, config.planted_high),
                         rng.uniform(config.planted_low, config.planted_high)});
    }
    if (separated(centres)) break;
  }

  // Catalog; the engine sees a draft with some properties hidden.
  std::map<std::string, PreferencePoint> truth;
  std::vector<OerDraft> drafts;
  for (std::size_t i = 0; i < config.n_oers; ++i) {
    const std::string repo = numbered("repo-", rng.below(config.n_repositories) + 1);
    OerDraft d;
    d.oer_id = repo + ":" + numbered("oer-", i + 1);
    d.title = numbered("Simulated resource ", i + 1);
    d.resource = repo;
    d.skill = skills[rng.below(config.n_skills)];
    d.author = numbered("author-", rng.below(5) + 1);
    d.url = "https://example.org/" + d.oer_id;
    double how_long, quality, accessibility;
    if (config.catalog_spread > 0.0) {
      const PreferencePoint& c = centres[i % config.n_clusters];
      const double w = config.catalog_spread;
      how_long = clamp_score(c[0] + rng.uniform(-w, w));
      quality = clamp_score(c[2] + rng.uniform(-w, w));
      accessibility = clamp_score(c[3] + rng.uniform(-w, w));
    } else {
      how_long = rng.uniform(0.0, 100.0);
      quality = rng.uniform(0.0, 100.0);
      accessibility = rng.uniform(0.0, 100.0);
    }
    d.level = 25.0 * static_cast<double>(rng.below(config.level_classes));
    truth[d.oer_id] = {how_long, 100.0 - how_long, quality, accessibility};
    if (rng.uniform() >= config.hidden_fraction) d.how_long = how_long;
    if (rng.uniform() >= config.hidden_fraction) d.quality = quality;
    if (rng.uniform() >= config.hidden_fraction) d.accessibility = accessibility;
    drafts.push_back(std::move(d));
  }
  engine.import_drafts(drafts, start);

  // Learners.
  std::vector<SimLearner> learners(config.n_learners);
  for (std::size_t i = 0; i < config.n_learners; ++i) {
    SimLearner& l = learners[i];
    l.cluster = i % config.n_clusters;
    l.personal = PersonalInfo{numbered("region-", l.cluster + 1), l.cluster % 2 == 0 ? "female" : "male",
                              numbered("education-", l.cluster + 1)};
    const PreferencePoint& c = centres[l.cluster];
    const double spread = config.cluster_spread;
    const double lng = clamp_score(c[0] + rng.uniform(-spread, spread));
    l.planted = {lng, 100.0 - lng, clamp_score(c[2] + rng.uniform(-spread, spread)),
                 clamp_score(c[3] + rng.uniform(-spread, spread))};
    l.arrival_step = i * config.arrival_every;
  }

  SimReport report;
  std::map<std::string, SimLearnerResult> results;
  std::vector<std::size_t> present;  // indices into learners, in arrival order
  std::set<std::size_t> dropped;
  std::size_t cursor = 0;
  std::set<std::string> rated_before_batch;
  std::set<std::string> refitted;

  for (std::size_t t = 0; t < config.steps; ++t) {
    const Timestamp now = start + static_cast<Timestamp>(t + 1) * kStepSeconds;
    for (std::size_t i = 0; i < learners.size(); ++i) {
      if (learners[i].user_id.empty() && learners[i].arrival_step == t) {
        const LearnerProfile p = engine.create_learner({jobs[config.job_per_cluster ? learners[i].cluster : 0], learners[i].personal, {}}, now);
        learners[i].user_id = p.user_id;
        present.push_back(i);
        SimLearnerResult r;
        r.user_id = p.user_id;
        r.cluster = learners[i].cluster;
        r.planted = learners[i].planted;
        r.initial = engine_preferences(p);
        results[p.user_id] = r;
      }
    }

    SimStep step;
    step.step = t;
    step.action = "idle";
    for (std::size_t attempt = 0; attempt < present.size(); ++attempt) {
      const std::size_t idx = present[(cursor + attempt) % present.size()];
      if (dropped.count(idx)) continue;
      const SimLearner& learner = learners[idx];
      const RecommendOutcome outcome = engine.recommendation_for(learner.user_id, now);
      if (!outcome.recommendation) {
        dropped.insert(idx);
        continue;
      }
      cursor = (cursor + attempt + 1) % present.size();
      const Recommendation& rec = *outcome.recommendation;
      step.user_id = learner.user_id;
      step.oer_id = rec.oer_id;

      const double u = rng.uniform();
      if (u < config.irrelevant_probability) {
        engine.mark_irrelevant(rec.recommendation_id, now);
        step.action = "irrelevant";
        ++report.irrelevant;
      } else if (u < config.irrelevant_probability + config.change_probability) {
        engine.change(rec.recommendation_id, now);
        step.action = "change";
        ++report.changed;
      } else {
        const double d = mean_abs_difference(learner.planted, truth.at(rec.oer_id));
        const double noise = config.noise > 0.0 ? config.noise * rng.normal() : 0.0;
        const double s = std::clamp(1.0 - d / config.d_max + noise, 0.0, 1.0);
        const int stars = 1 + static_cast<int>(std::lround(4.0 * s));
        engine.rate(rec.recommendation_id, stars, now);
        step.action = "rate";
        step.stars = stars;
        step.satisfaction = (stars - 1) / 4.0;
        ++results[learner.user_id].ratings;
        rated_before_batch.insert(rec.oer_id);
      }
      break;
    }

    double cos_sum = 0.0;
    std::size_t cos_n = 0;
    for (std::size_t idx : present) {
      cos_sum += cosine4(engine_preferences(engine.learner(learners[idx].user_id)), learners[idx].planted);
      ++cos_n;
    }
    step.mean_cosine = cos_n ? cos_sum / static_cast<double>(cos_n) : 0.0;
    report.steps.push_back(std::move(step));

    if (config.batch_every > 0 && (t + 1) % config.batch_every == 0) {
      report.batches.push_back(engine.run_batch(now));
      refitted.insert(rated_before_batch.begin(), rated_before_batch.end());
      rated_before_batch.clear();
    }
  }

  report.final_state = engine.state();
  for (auto& [id, r] : results) {
    r.final = engine_preferences(report.final_state.learners.at(id));
    r.final_l1 = l1_distance(r.final, r.planted);
  }
  for (const SimLearner& l : learners) {
    if (!l.user_id.empty()) report.learners.push_back(results.at(l.user_id));
  }

  double err = 0.0;
  for (const OERRecord& o : report.final_state.catalog) {
    if (!refitted.count(o.oer_id)) continue;
    const PreferencePoint engine_side{o.how_long, o.how_short, o.quality, o.accessibility};
    err += mean_abs_difference(engine_side, truth.at(o.oer_id));
  }
  report.refitted_oers = refitted.size();
  report.oer_recovery_error = refitted.empty() ? 0.0 : err / static_cast<double>(refitted.size());
  return report;
}

void write_sim_metrics(std::ostream& out, const SimReport& report) {
  for (const SimStep& s : report.steps) {
    Json j{{"step", s.step},
           {"user_id", s.user_id},
           {"oer_id", s.oer_id},
           {"action", s.action},
           {"stars", s.stars},
           {"satisfaction", s.satisfaction ? Json(*s.satisfaction) : Json(nullptr)},
           {"mean_cosine", s.mean_cosine}};
    out << j.dump() << '\n';
  }
  Json learners = Json::array();
  for (const auto& l : report.learners) {
    learners.push_back(Json{{"user_id", l.user_id},
                            {"cluster", l.cluster},
                            {"planted", l.planted},
                            {"initial", l.initial},
                            {"final", l.final},
                            {"ratings", l.ratings},
                            {"final_l1", l.final_l1}});
  }
  const std::size_t n = report.steps.size();
  const std::size_t w = std::min<std::size_t>(20, n);
  auto window = [&](std::size_t b, std::size_t e) {
    auto v = report.window_satisfaction(b, e);
    return v ? Json(*v) : Json(nullptr);
  };
  Json summary{{"summary",
                {{"steps", n},
                 {"first_window_satisfaction", window(0, w)},
                 {"final_window_satisfaction", window(n - w, n)},
                 {"max_final_l1", report.max_final_l1()},
                 {"oer_recovery_error", report.oer_recovery_error},
                 {"refitted_oers", report.refitted_oers},
                 {"irrelevant", report.irrelevant},
                 {"changed", report.changed},
                 {"batches", report.batches.size()},
                 {"learners", learners}}}};
  out << summary.dump() << '\n';
}

}  // namespace oerrec
