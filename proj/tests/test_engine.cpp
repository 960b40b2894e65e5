#include <algorithm>

#include "doctest.h"
#include "oerrec/engine.hpp"
#include "oerrec/error.hpp"

using namespace oerrec;

namespace {

OERRecord oer(const std::string& id, const std::string& skill, double how_long, double quality) {
  OERRecord o;
  o.oer_id = id;
  o.skill = skill;
  o.resource = "skillscommons";
  o.level = 0;
  o.how_long = how_long;
  o.how_short = 100 - how_long;
  o.quality = quality;
  return o;
}

EngineState seeded() {
  EngineState s;
  JobSkillProfile p{"data scientist", "london", {}};
  p.entries.push_back({"sql", p.job, p.location, 100, {}});
  p.entries.push_back({"python", p.job, p.location, 80, {}});
  s.job_profiles.push_back(p);
  s.catalog = {oer("a", "sql", 90, 90), oer("b", "sql", 60, 70), oer("c", "sql", 10, 20), oer("d", "python", 50, 50),
               oer("e", "python", 80, 40)};
  return s;
}

NewLearner newcomer() {
  NewLearner n;
  n.selected_job = "data scientist";
  n.personal.location = "London";
  return n;
}

struct Fixture {
  Engine engine;
  std::vector<Json> events;

  explicit Fixture(EngineConfig c = {}) : engine(c) {
    engine.restore(seeded());
    engine.set_journal([this](const Json& e) { events.push_back(e); });
  }
};

}  // namespace

TEST_CASE("learner creation and first recommendation") {
  Fixture f;
  const auto u = f.engine.create_learner(newcomer(), 10);
  CHECK(u.pref_long == 50.0);
  const auto out = f.engine.recommendation_for(u.user_id, 11);
  REQUIRE(out.kind == RecommendOutcome::Kind::issued);
  CHECK(out.recommendation->skill == "sql");
  CHECK(out.recommendation->skill_importance == 100);
  // asking again returns the same pending recommendation
  CHECK(f.engine.recommendation_for(u.user_id, 12).recommendation == out.recommendation);
  CHECK(f.engine.oer(out.recommendation->oer_id)->total_recom == 1);
  CHECK(f.events.size() == 2);
  CHECK_THROWS_AS(f.engine.recommendation_for("nobody", 13), NotFound);

  NewLearner bad = newcomer();
  bad.selected_job = "astronaut";
  CHECK_THROWS_AS(f.engine.create_learner(bad, 14), InvalidArgument);
}

TEST_CASE("irrelevant feedback updates relevance and issues a replacement") {
  Fixture f;
  const auto u = f.engine.create_learner(newcomer(), 0);
  const auto first = *f.engine.recommendation_for(u.user_id, 1).recommendation;
  EngineState s = f.engine.state();
  for (auto& o : s.catalog) {
    if (o.oer_id == first.oer_id) o.total_recom = 4;
  }
  f.engine.restore(s);
  const auto before = f.engine.learner(u.user_id);
  const auto res = f.engine.mark_irrelevant(first.recommendation_id, 2);
  CHECK(res.recommendation.status == RecommendationStatus::irrelevant);
  const auto o = *f.engine.oer(first.oer_id);
  CHECK(o.irrelev_count == 1);
  CHECK(o.relevance == 0.75);
  CHECK(res.learner == before);
  REQUIRE(res.next.recommendation.has_value());
  CHECK(res.next.recommendation->oer_id != first.oer_id);
  CHECK_THROWS_AS(f.engine.mark_irrelevant(first.recommendation_id, 3), StateError);
  CHECK_THROWS_AS(f.engine.rate(first.recommendation_id, 5, 3), StateError);
}

TEST_CASE("change issues the runner-up") {
  Fixture f;
  const auto u = f.engine.create_learner(newcomer(), 0);
  const auto learner = f.engine.learner(u.user_id);
  const auto catalog = f.engine.catalog();
  std::vector<OERRecord> sql;
  for (const auto& o : catalog) {
    if (o.skill == "sql") sql.push_back(o);
  }
  const auto ranked = rank_candidates(learner, sql, resource_axis(catalog));
  REQUIRE(ranked.size() == 3);

  const auto first = *f.engine.recommendation_for(u.user_id, 1).recommendation;
  CHECK(first.oer_id == ranked[0].oer_id);
  const auto res = f.engine.change(first.recommendation_id, 2);
  CHECK(res.recommendation.status == RecommendationStatus::changed);
  REQUIRE(res.next.recommendation.has_value());
  CHECK(res.next.recommendation->oer_id == ranked[1].oer_id);
  CHECK(f.engine.oer(first.oer_id)->irrelev_count == 0);
  CHECK(res.learner == learner);
  CHECK(f.engine.state().ratings.empty());
}

TEST_CASE("rating five stars raises the skill level by level_step") {
  Fixture f;
  auto nl = newcomer();
  nl.skill_levels["sql"] = 30;
  const auto u = f.engine.create_learner(nl, 0);
  const auto first = *f.engine.recommendation_for(u.user_id, 1).recommendation;
  const auto res = f.engine.rate(first.recommendation_id, 5, 2);
  CHECK(res.learner.skill_levels.at("sql") == doctest::Approx(40.0));
  CHECK(res.recommendation.status == RecommendationStatus::rated);
  const auto st = f.engine.state();
  REQUIRE(st.ratings.size() == 1);
  CHECK(st.ratings[0].event.satisfaction == 1.0);
  CHECK(st.ratings[0].rater.skill_levels.at("sql") == 30);
  CHECK_THROWS_AS(f.engine.rate(first.recommendation_id, 4, 3), StateError);
  CHECK_THROWS_AS(f.engine.rate(res.next.recommendation->recommendation_id, 6, 3), InvalidArgument);
  CHECK_THROWS_AS(f.engine.rate("r999", 3, 3), NotFound);
}

TEST_CASE("rated and changed OERs are never reissued to the same learner") {
  Fixture f;
  const auto u = f.engine.create_learner(newcomer(), 0);
  std::vector<std::string> seen;
  auto out = f.engine.recommendation_for(u.user_id, 1);
  for (int i = 0; i < 10 && out.recommendation; ++i) {
    seen.push_back(out.recommendation->oer_id);
    const auto id = out.recommendation->recommendation_id;
    out = i % 2 ? f.engine.change(id, 2 + i).next : f.engine.rate(id, 3, 2 + i).next;
  }
  auto sorted = seen;
  std::sort(sorted.begin(), sorted.end());
  CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  CHECK(seen.size() == 3);
  CHECK(out.kind == RecommendOutcome::Kind::catalog_gap);
  CHECK(out.skill == "sql");
}

TEST_CASE("batch refits rated OERs once") {
  Fixture f;
  SUBCASE("no events") {
    const auto r = f.engine.run_batch(100);
    CHECK(r.refits == 0);
    CHECK_FALSE(r.equality_updated);
    CHECK(f.engine.state().last_batch_end == 100);
  }
  SUBCASE("three rated OERs") {
    // learner i rates the top OER, then skips i - 1 OERs and rates the next one
    for (int i = 0; i < 3; ++i) {
      const auto u = f.engine.create_learner(newcomer(), 10 * i);
      Timestamp t = 10 * i + 1;
      auto rec = *f.engine.recommendation_for(u.user_id, t).recommendation;
      if (i == 0) {
        f.engine.rate(rec.recommendation_id, 4, ++t);
        continue;
      }
      rec = *f.engine.rate(rec.recommendation_id, 4, ++t).next.recommendation;
      for (int k = 1; k < i; ++k) rec = *f.engine.change(rec.recommendation_id, ++t).next.recommendation;
      f.engine.rate(rec.recommendation_id, 2, ++t);
    }
    std::set<std::string> rated;
    for (const auto& r : f.engine.state().ratings) rated.insert(r.event.oer_id);
    REQUIRE(rated.size() == 3);
    const auto before = f.engine.catalog();
    const auto r1 = f.engine.run_batch(1000);
    CHECK(r1.refits == 3);
    CHECK(r1.refit_failures == 0);
    CHECK(r1.equality_pairs > 0);
    CHECK(r1.period.end == 1000);
    const auto after = f.engine.catalog();
    for (std::size_t i = 0; i < after.size(); ++i) {
      if (!rated.count(after[i].oer_id)) {
        CHECK(after[i].how_long == before[i].how_long);
        CHECK(after[i].quality == before[i].quality);
      }
      CHECK(after[i].how_short == doctest::Approx(100 - after[i].how_long));
    }
    const auto r2 = f.engine.run_batch(2000);
    CHECK(r2.refits == 0);
    CHECK(r2.period.begin == 1001);
    CHECK(f.engine.catalog() == after);
  }
}

TEST_CASE("batch exclusions are honoured by later recommendations") {
  Fixture f;
  EngineState s = f.engine.state();
  for (auto& o : s.catalog) {
    if (o.oer_id == "a") {
      o.total_recom = 10;
      o.irrelev_count = 8;
      o.relevance = 0.2;
    }
    if (o.oer_id == "b" || o.oer_id == "c") o.total_recom = 10;
  }
  f.engine.restore(s);
  const auto r = f.engine.run_batch(5);
  CHECK(r.excluded == 1);
  CHECK(f.engine.oer("a")->excluded_for_skill);
  const auto u = f.engine.create_learner(newcomer(), 6);
  auto out = f.engine.recommendation_for(u.user_id, 7);
  for (int i = 0; i < 5 && out.recommendation; ++i) {
    CHECK(out.recommendation->oer_id != "a");
    out = f.engine.change(out.recommendation->recommendation_id, 8 + i).next;
  }
}

TEST_CASE("replaying the journal reproduces the state") {
  Fixture f;
  std::string last;
  for (int i = 0; i < 4; ++i) {
    const auto u = f.engine.create_learner(newcomer(), i);
    last = u.user_id;
    auto rec = *f.engine.recommendation_for(u.user_id, 10 + i).recommendation;
    if (i == 1) f.engine.mark_irrelevant(rec.recommendation_id, 20 + i);
    if (i != 1) f.engine.rate(rec.recommendation_id, 1 + i, 20 + i);
  }
  f.engine.set_skill_levels(last, {{"python", 50}}, 30);
  f.engine.run_batch(40);

  Engine copy;
  copy.restore(seeded());
  for (const auto& e : f.events) replay_event(copy, e);
  CHECK(copy.state() == f.engine.state());
  CHECK_THROWS_AS(replay_event(copy, Json{{"type", "warp"}, {"ts", 0}}), PersistenceError);
}

TEST_CASE("job lookup") {
  Fixture f;
  CHECK(f.engine.jobs("SCIEN") == std::vector<std::string>{"data scientist"});
  CHECK(f.engine.jobs("chef").empty());
  CHECK(f.engine.job_profile("data scientist", "paris").location == "london");
  CHECK_THROWS_AS(f.engine.job_profile("chef", ""), NotFound);
}

TEST_CASE("engine config ranges") {
  CHECK_NOTHROW(EngineConfig{}.validate());
  EngineConfig c;
  c.alpha = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.eta = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.k_neighbors = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.gd.learning_rate = 0;
  CHECK_THROWS_AS(Engine{c}, ConfigError);
}

TEST_CASE("state json round trip") {
  Fixture f;
  const auto u = f.engine.create_learner(newcomer(), 1);
  f.engine.rate(f.engine.recommendation_for(u.user_id, 2).recommendation->recommendation_id, 4, 3);
  f.engine.run_batch(4);
  const EngineState s = f.engine.state();
  const Json j = s;
  CHECK(j.get<EngineState>() == s);
}
