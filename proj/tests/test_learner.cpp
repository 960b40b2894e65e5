#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "learner_oracles.hpp"
#include "oerrec/error.hpp"
#include "oerrec/learner.hpp"
#include "test_support.hpp"

using namespace oerrec;

namespace {

LearnerProfile person(const std::string& id, const std::string& location, const std::string& gender,
                      const std::string& education, const std::string& job = "", std::map<std::string, double> skills = {}) {
  LearnerProfile p;
  p.user_id = id;
  p.personal = PersonalInfo{location, gender, education};
  p.selected_job = job.empty() ? "job-" + id : job;
  p.skill_levels = skills.empty() ? std::map<std::string, double>{{"skill-" + id, 50.0}} : skills;
  return p;
}

EqualityWeights weights(std::map<PropertyKey, double> v) {
  EqualityWeights w;
  w.values = std::move(v);
  return w;
}

RatingEvent rating(const std::string& user, const std::string& oer, int stars, Timestamp t) {
  return make_rating(user, oer, "r", stars, t);
}

}  // namespace

TEST_CASE("property keys") {
  for (auto k : kKnownProperties) CHECK(property_key_from_string(to_string(k)) == k);
  CHECK_THROWS_AS(property_key_from_string("shoe_size"), InvalidArgument);
  const auto u = EqualityWeights::uniform();
  CHECK(u.values.size() == kKnownProperties.size());
  for (auto k : kKnownProperties) CHECK(u.get(k) == doctest::Approx(20.0));
}

TEST_CASE("sim effect") {
  const auto w = weights({{PropertyKey::location, 40}, {PropertyKey::gender, 60}});
  const auto a = person("a", "London", "f", "msc");
  const auto b = person("b", " london ", "m", "msc");
  CHECK(sim_effect(a, b, PropertyKey::location, w) == 40.0);
  CHECK(sim_effect(a, b, "gender", w) == 0.0);
  CHECK(sim_effect(a, b, PropertyKey::education, w) == 0.0);  // no weight
  for (auto k : kKnownProperties) CHECK(sim_effect(a, a, k, w) == w.get(k));
}

TEST_CASE("similarity examples") {
  const auto w = weights({{PropertyKey::location, 40},
                          {PropertyKey::gender, 10},
                          {PropertyKey::education, 25},
                          {PropertyKey::selected_job, 25}});
  const auto a = person("a", "london", "f", "msc");
  const auto b = person("b", "london", "f", "bsc");
  CHECK(similarity(a, b, w) == doctest::Approx(0.5));
  CHECK(similarity(a, a, w) == doctest::Approx(1.0));
  CHECK(similarity(a, person("c", "leeds", "m", "phd"), w) == 0.0);
}

TEST_CASE("skill-level equality") {
  LearnerProfile a, b;
  CHECK(equal_on(a, b, PropertyKey::skill_levels));
  a.skill_levels = {{"sql", 50}, {"python", 20}};
  b.skill_levels = {{"sql", 60}, {"go", 90}};
  CHECK(equal_on(a, b, PropertyKey::skill_levels));
  b.skill_levels["sql"] = 61;
  CHECK_FALSE(equal_on(a, b, PropertyKey::skill_levels));
  b.skill_levels = {{"go", 1}};
  CHECK_FALSE(equal_on(a, b, PropertyKey::skill_levels));
}

TEST_CASE("similarity agrees with the brute-force oracle") {
  Rng rng(2024);
  for (int i = 0; i < 500; ++i) {
    const auto a = oracle::random_profile(rng, "a");
    const auto b = oracle::random_profile(rng, "b");
    const auto w = oracle::random_weights(rng);
    const double s = similarity(a, b, w);
    CHECK(std::abs(s - oracle::similarity(a, b, w.values)) <= 1e-12);
    CHECK(s == similarity(b, a, w));
    CHECK(s >= 0.0);
    CHECK(s <= 1.0 + 1e-12);
    CHECK(similarity(a, a, w) == doctest::Approx(1.0));
  }
}

TEST_CASE("equality values: worked example") {
  // four agreeing pairs on one OER chain; job and skills never agree
  std::map<std::string, LearnerProfile> users{
      {"u1", person("u1", "london", "f", "msc")}, {"u2", person("u2", "london", "f", "bsc")},
      {"u3", person("u3", "leeds", "f", "phd")},  {"u4", person("u4", "leeds", "f", "ba")},
      {"u5", person("u5", "york", "m", "ba")},    {"u6", person("u6", "hull", "m", "ma")},
      {"u7", person("u7", "york", "x", "mba")},   {"u8", person("u8", "bath", "y", "mba")}};
  const std::vector<RatingEvent> log{rating("u1", "o1", 5, 1), rating("u2", "o1", 5, 2),   // location, gender
                                     rating("u3", "o2", 4, 3), rating("u4", "o2", 4, 4),   // location, gender
                                     rating("u5", "o3", 2, 5), rating("u6", "o3", 2, 6),   // gender
                                     rating("u7", "o4", 1, 7), rating("u8", "o4", 1, 8),   // education
                                     rating("u1", "o5", 1, 9), rating("u5", "o5", 3, 10)};  // disagree
  const auto pairs = collect_equal_rating_pairs(log, users, Period{0, 100});
  CHECK(pairs.pairs == 4);
  CHECK(pairs.equal_counts.at(PropertyKey::location) == 2);
  CHECK(pairs.equal_counts.at(PropertyKey::gender) == 3);
  CHECK(pairs.equal_counts.at(PropertyKey::education) == 1);
  const auto w = equality_values(log, users, Period{0, 100});
  CHECK(w.get(PropertyKey::location) == doctest::Approx(100.0 / 3.0));
  CHECK(w.get(PropertyKey::gender) == doctest::Approx(50.0));
  CHECK(w.get(PropertyKey::education) == doctest::Approx(100.0 / 6.0));
  CHECK(w.get(PropertyKey::selected_job) == 0.0);

  CHECK(equality_values(log, users, Period{200, 300}).empty());
  CHECK(equality_values({}, users, Period{0, 100}).empty());
}

TEST_CASE("only the latest rating per user and OER counts") {
  std::map<std::string, LearnerProfile> users{{"a", person("a", "x", "f", "e")}, {"b", person("b", "x", "f", "e")}};
  const std::vector<RatingEvent> log{rating("a", "o", 5, 1), rating("b", "o", 5, 2), rating("a", "o", 2, 3)};
  CHECK(collect_equal_rating_pairs(log, users, Period{0, 10}).pairs == 0);
  CHECK(collect_equal_rating_pairs(log, users, Period{0, 2}).pairs == 1);
}

TEST_CASE("location-driven log gives location the largest weight") {
  Rng rng(31);
  std::map<std::string, LearnerProfile> users;
  for (int i = 0; i < 30; ++i) {
    const std::string id = "u" + std::to_string(i);
    users[id] = oracle::random_profile(rng, id);
    users[id].personal.location = i % 3 == 0 ? "london" : (i % 3 == 1 ? "leeds" : "york");
  }
  std::vector<RatingEvent> log;
  Timestamp t = 0;
  for (int o = 0; o < 10; ++o) {
    for (const auto& [id, p] : users) {
      // stars depend only on location
      const int stars = p.personal.location == "london" ? 5 : (p.personal.location == "leeds" ? 3 : 1);
      log.push_back(rating(id, "o" + std::to_string(o), stars, ++t));
    }
  }
  const auto w = equality_values(log, users, Period{0, t});
  for (auto k : kKnownProperties) {
    if (k != PropertyKey::location) CHECK(w.get(PropertyKey::location) > w.get(k));
  }
  const auto ref = oracle::equality_values(log, users, 0, t);
  for (auto k : kKnownProperties) CHECK(w.get(k) == doctest::Approx(ref.at(k)).epsilon(1e-12));
}

TEST_CASE("equality values agree with pair enumeration on random logs") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    std::map<std::string, LearnerProfile> users;
    const auto n_users = 2 + rng.below(10);
    for (std::uint64_t i = 0; i < n_users; ++i) {
      const std::string id = "u" + std::to_string(i);
      users[id] = oracle::random_profile(rng, id);
    }
    std::vector<RatingEvent> log;
    const auto n_events = rng.below(60);
    for (std::uint64_t e = 0; e < n_events; ++e) {
      const std::string user = "u" + std::to_string(rng.below(n_users + 1));  // sometimes unknown
      log.push_back(rating(user, "o" + std::to_string(rng.below(5)), 1 + static_cast<int>(rng.below(5)),
                           static_cast<Timestamp>(rng.below(40))));
    }
    std::size_t ref_pairs = 0;
    const auto ref = oracle::equality_values(log, users, 5, 30, &ref_pairs);
    CHECK(collect_equal_rating_pairs(log, users, Period{5, 30}).pairs == ref_pairs);
    const auto w = equality_values(log, users, Period{5, 30});
    CHECK(w.values.size() == ref.size());
    double sum = 0;
    for (const auto& [k, v] : ref) {
      CHECK(w.get(k) == doctest::Approx(v).epsilon(1e-12));
      sum += w.get(k);
    }
    if (!w.empty()) CHECK(std::abs(sum - 100.0) <= 1e-6);
  }
}

TEST_CASE("cold start: weighted mean of the pool") {
  const auto w = weights({{PropertyKey::location, 80}, {PropertyKey::gender, 20}});
  auto a = person("a", "london", "f", "x");
  a.pref_long = 80;
  auto b = person("b", "leeds", "f", "x");
  b.pref_long = 30;
  KnownProperties k{"new", "job", {}, PersonalInfo{"london", "f", "y"}};
  const std::vector<LearnerProfile> pool{a, b};
  const auto p = init_profile(k, pool, w);
  // similarities 1.0 and 0.2
  CHECK(p.pref_long == doctest::Approx((1.0 * 80 + 0.2 * 30) / 1.2));

  SUBCASE("example from the definition: similarities 0.8 and 0.2") {
    const auto w2 = weights({{PropertyKey::location, 80}, {PropertyKey::gender, 20}});
    auto c = person("c", "london", "m", "x");
    c.pref_long = 80;
    auto d = person("d", "leeds", "f", "x");
    d.pref_long = 30;
    const std::vector<LearnerProfile> pool2{c, d};
    CHECK(init_profile(k, pool2, w2).pref_long == doctest::Approx(70.0));
  }
  SUBCASE("empty pool") {
    InitOptions opt;
    opt.repositories = {"r1", "r2"};
    const auto q = init_profile(k, {}, w, opt);
    CHECK(q.pref_long == 50.0);
    CHECK(q.pref_short == 50.0);
    CHECK(q.pref_check == 50.0);
    CHECK(q.pref_accessibility == 50.0);
    CHECK(q.pref_resources == std::map<std::string, double>{{"r1", 50.0}, {"r2", 50.0}});
  }
  SUBCASE("nobody similar") {
    const std::vector<LearnerProfile> strangers{person("z", "york", "m", "x")};
    CHECK(init_profile(k, strangers, w).pref_long == 50.0);
  }
}

TEST_CASE("cold start equals the best-subset oracle") {
  Rng rng(5150);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<LearnerProfile> pool;
    for (int i = 0; i < 25; ++i) pool.push_back(oracle::random_profile(rng, "p" + std::to_string(100 + i)));
    const auto w = oracle::random_weights(rng);
    const auto me = oracle::random_profile(rng, "me");
    const KnownProperties known{"me", me.selected_job, me.skill_levels, me.personal};
    InitOptions opt;
    opt.k_neighbors = 1 + rng.below(4);

    // every subset of size k among the positively similar; keep the best by
    // total similarity, then by smallest sorted id list
    std::vector<std::size_t> positive;
    std::vector<double> sims(pool.size());
    for (std::size_t i = 0; i < pool.size(); ++i) {
      sims[i] = oracle::similarity(me, pool[i], w.values);
      if (sims[i] > 0) positive.push_back(i);
    }
    const std::size_t k = std::min<std::size_t>(opt.k_neighbors, positive.size());
    std::vector<std::size_t> best;
    double best_sum = -1;
    std::vector<bool> pick(positive.size(), false);
    std::fill(pick.begin(), pick.begin() + static_cast<long>(k), true);
    do {
      std::vector<std::size_t> subset;
      double sum = 0;
      for (std::size_t i = 0; i < pick.size(); ++i) {
        if (pick[i]) subset.push_back(positive[i]), sum += sims[positive[i]];
      }
      if (sum > best_sum + 1e-12 || (std::abs(sum - best_sum) <= 1e-12 && subset < best)) {
        best = subset;
        best_sum = sum;
      }
    } while (std::prev_permutation(pick.begin(), pick.end()));

    const auto got = init_profile(known, pool, w, opt);
    if (best.empty()) {
      CHECK(got.pref_long == 50.0);
      continue;
    }
    double total = 0, lng = 0, chk = 0, acc = 0, repo_a = 0;
    for (std::size_t i : best) {
      total += sims[i];
      lng += sims[i] * pool[i].pref_long;
      chk += sims[i] * pool[i].pref_check;
      acc += sims[i] * pool[i].pref_accessibility;
      repo_a += sims[i] * pool[i].pref_resources.at("repo-a");
    }
    CHECK(got.pref_long == doctest::Approx(lng / total).epsilon(1e-12));
    CHECK(got.pref_check == doctest::Approx(chk / total).epsilon(1e-12));
    CHECK(got.pref_accessibility == doctest::Approx(acc / total).epsilon(1e-12));
    CHECK(got.pref_resources.at("repo-a") == doctest::Approx(repo_a / total).epsilon(1e-12));
    CHECK(got.skill_levels == me.skill_levels);
  }
}

TEST_CASE("rating update") {
  LearnerProfile p;
  p.user_id = "u";
  p.pref_resources = {{"repo", 50.0}, {"other", 50.0}};
  OERRecord o;
  o.oer_id = "o";
  o.resource = "repo";
  o.skill = "sql";
  o.how_long = 100;
  o.how_short = 0;
  o.accessibility = 100;

  SUBCASE("disliked long OER lowers the length preference") {
    const auto q = apply_rating(p, o, make_rating("u", "o", "r", 1, 0));
    CHECK(q.pref_long == doctest::Approx(45.0));
    CHECK(q.pref_short == doctest::Approx(55.0));
    CHECK(q.skill_levels.at("sql") == 0.0);
  }
  SUBCASE("neutral rating changes no preference") {
    const auto q = apply_rating(p, o, make_rating("u", "o", "r", 3, 0));
    CHECK(q.pref_long == 50.0);
    CHECK(q.pref_accessibility == 50.0);
    CHECK(q.pref_resources == p.pref_resources);
    CHECK(q.skill_levels.at("sql") == doctest::Approx(5.0));
  }
  SUBCASE("liked accessible OER raises accessibility monotonically") {
    p.pref_accessibility = 60;
    auto q = apply_rating(p, o, make_rating("u", "o", "r", 5, 0));
    CHECK(q.pref_accessibility == doctest::Approx(64.0));
    CHECK(q.pref_resources.at("repo") == doctest::Approx(55.0));
    CHECK(q.pref_resources.at("other") == doctest::Approx(45.0));
    CHECK(q.skill_levels.at("sql") == doctest::Approx(10.0));
    double prev = q.pref_accessibility;
    for (int i = 0; i < 30; ++i) {
      q = apply_rating(q, o, make_rating("u", "o", "r", 5, 0));
      CHECK(q.pref_accessibility > prev);
      CHECK(q.pref_accessibility <= 100.0);
      prev = q.pref_accessibility;
    }
    CHECK(q.skill_levels.at("sql") == 100.0);
  }
  SUBCASE("input validation") {
    CHECK_THROWS_AS(apply_rating(p, o, make_rating("someone", "o", "r", 5, 0)), InvalidArgument);
    CHECK_THROWS_AS(apply_rating(p, o, make_rating("u", "o", "r", 5, 0), UpdateOptions{0.0, 10.0}), InvalidArgument);
    CHECK_THROWS_AS(make_rating("u", "o", "r", 6, 0), InvalidArgument);
    CHECK_THROWS_AS(make_rating("u", "o", "r", 0, 0), InvalidArgument);
  }
}

TEST_CASE("rating update stays in range") {
  Rng rng(8);
  for (int i = 0; i < 500; ++i) {
    LearnerProfile p = oracle::random_profile(rng, "u");
    OERRecord o;
    o.resource = rng.below(2) ? "repo-a" : "repo-c";
    o.skill = "python";
    o.how_long = rng.uniform(0, 100);
    o.how_short = 100 - o.how_long;
    o.quality = rng.uniform(0, 100);
    o.accessibility = rng.uniform(0, 100);
    const int stars = 1 + static_cast<int>(rng.below(5));
    const auto q = apply_rating(p, o, make_rating("u", "o", "r", stars, 0), UpdateOptions{rng.uniform(0.01, 1.0), 10});
    for (double v : {q.pref_long, q.pref_short, q.pref_check, q.pref_accessibility}) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
    // moves towards the OER when satisfied, away otherwise
    const double before = std::abs(p.pref_long - o.how_long), after = std::abs(q.pref_long - o.how_long);
    if (stars > 3) CHECK(after <= before + 1e-12);
    if (stars < 3 && q.pref_long > 0 && q.pref_long < 100) CHECK(after >= before - 1e-12);
  }
}
