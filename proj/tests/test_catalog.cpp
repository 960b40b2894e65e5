#include <chrono>
#include <fstream>
#include <sstream>
#include <thread>

#include "catalog_oracles.hpp"
#include "doctest.h"
#include "httplib.h"
#include "oerrec/error.hpp"
#include "oerrec/model.hpp"
#include "test_support.hpp"

using namespace oerrec;

namespace {

OERRecord record(const std::string& id, const std::string& skill, long long total, long long irrelevant) {
  OERRecord r;
  r.oer_id = id;
  r.skill = skill;
  r.total_recom = total;
  r.irrelev_count = irrelevant;
  r.relevance = relevance(r);
  return r;
}

}  // namespace

TEST_CASE("fixture connector") {
  FixtureConnector sc("skillscommons", testing::fixture("oer/skillscommons.jsonl"));
  const auto a = sc.fetch();
  CHECK(a.records.size() == 11);
  CHECK(a.skipped == 1);
  CHECK(sc.fetch().records == a.records);
  CHECK(a.records[0].accessibility == std::optional<std::vector<std::string>>({"captions"}));
  CHECK_FALSE(a.records[5].reviewed.has_value());

  const auto empty = FixtureConnector("x", testing::fixture("oer/empty.jsonl")).fetch();
  CHECK(empty.records.empty());
  CHECK(empty.skipped == 0);

  try {
    FixtureConnector("missing", testing::fixture("oer/nope.jsonl")).fetch();
    FAIL("expected ConnectorError");
  } catch (const ConnectorError& e) {
    CHECK(e.repository() == "missing");
  }
}

TEST_CASE("raw record validation") {
  std::istringstream in(
      "{\"title\":\"t\",\"subject\":\"s\",\"url\":\"u\"}\n"
      "[1,2]\n"
      "{\"title\":\"t\",\"subject\":\"\",\"url\":\"u\"}\n"
      "{\"title\":\"t\",\"subject\":\"s\",\"url\":\"u\",\"accessibility\":\"captions\"}\n"
      "{\"title\":\"t\",\"subject\":\"s\",\"url\":\"u\",\"reviewed\":\"yes\"}\n"
      "\n");
  const auto r = parse_raw_records(in);
  CHECK(r.records.size() == 1);
  CHECK(r.skipped == 4);
}

TEST_CASE("http connector") {
  httplib::Server server;
  const std::string body = testing::slurp(testing::fixture("oer/wisconline.jsonl"));
  server.Get("/feed", [&](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/x-ndjson"); });
  server.Get("/down", [](const httplib::Request&, httplib::Response& res) { res.status = 503; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  const std::string base = "http://127.0.0.1:" + std::to_string(port);
  const auto live = HttpConnector("wisc-online", base, "/feed").fetch();
  CHECK(live.records == FixtureConnector("wisc-online", testing::fixture("oer/wisconline.jsonl")).fetch().records);
  CHECK_THROWS_AS(HttpConnector("wisc-online", base, "/down").fetch(), ConnectorError);
  server.stop();
  t.join();
  CHECK_THROWS_AS(HttpConnector("gone", base, "/feed", 1).fetch(), ConnectorError);
}

TEST_CASE("ordinal scales") {
  const std::vector<std::string> three{"advanced", "beginner", "Intermediate"};
  CHECK(normalize_property(three, "intermediate", kLevelOrdering) == 50.0);
  CHECK(normalize_property(three, "advanced", kLevelOrdering) == 100.0);
  CHECK(normalize_property(three, "beginner", kLevelOrdering) == 0.0);
  const std::vector<std::string> yes_no{"no", "yes"};
  CHECK(normalize_property(yes_no, "yes") == 100.0);
  const std::vector<std::string> one{"only"};
  CHECK(normalize_property(one, "only") == 50.0);
  try {
    normalize_property(three, "guru", kLevelOrdering);
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("beginner") != std::string::npos);
  }
}

TEST_CASE("duration classes") {
  CHECK(duration_class("45 minutes") == std::optional<std::string>("<=1h"));
  CHECK(duration_class("1 hour") == std::optional<std::string>("<=1h"));
  CHECK(duration_class("90 min") == std::optional<std::string>("<=1d"));
  CHECK(duration_class("3 days") == std::optional<std::string>("<=1w"));
  CHECK(duration_class("2 weeks") == std::optional<std::string>(">1w"));
  CHECK(duration_class("1 month") == std::optional<std::string>(">1w"));
  CHECK_FALSE(duration_class("self paced").has_value());
}

TEST_CASE("drafts from raw records") {
  const auto fetched = FixtureConnector("skillscommons", testing::fixture("oer/skillscommons.jsonl")).fetch();
  const auto drafts = drafts_from_raw(fetched.records, "skillscommons");
  REQUIRE(drafts.size() == 11);
  CHECK(drafts[0].oer_id == "skillscommons:sc-001");
  CHECK(drafts[0].skill == "python");
  CHECK(drafts[9].skill == "machine learn");
  CHECK(drafts[6].skill == "statistic");
  CHECK(drafts[0].level == std::optional<double>(0.0));
  CHECK(drafts[1].level == std::optional<double>(50.0));
  CHECK(drafts[2].level == std::optional<double>(100.0));
  CHECK(drafts[0].how_long == std::optional<double>(0.0));   // <=1h
  CHECK(drafts[2].how_long == std::optional<double>(100.0)); // >1w
  CHECK(drafts[1].quality == std::optional<double>(100.0));  // reviewed and badge
  CHECK(drafts[0].quality == std::optional<double>(50.0));
  CHECK_FALSE(drafts[5].quality.has_value());
  CHECK(drafts[3].accessibility == std::optional<double>(0.0));
  CHECK(drafts[6].accessibility == std::optional<double>(100.0));  // three of at most three features
  CHECK_FALSE(drafts[2].accessibility.has_value());
  for (const auto& d : drafts) CHECK(d.resource == "skillscommons");
}

TEST_CASE("cold start of OER properties") {
  std::vector<OERRecord> catalog(3);
  catalog[0].oer_id = "a";
  catalog[0].skill = "sql";
  catalog[0].author = "Ann";
  catalog[0].quality = 60;
  catalog[1].oer_id = "b";
  catalog[1].skill = "sql";
  catalog[1].author = "ann ";
  catalog[1].quality = 80;
  catalog[2].oer_id = "c";
  catalog[2].skill = "sql";
  catalog[2].author = "Bob";
  catalog[2].quality = 10;

  OerDraft d;
  d.oer_id = "new";
  d.skill = "sql";
  d.author = "Ann";
  d.how_long = 30;
  const auto r = init_oer(d, catalog);
  CHECK(r.quality == doctest::Approx(70.0));
  CHECK(r.how_long == 30.0);
  CHECK(r.how_short == 70.0);
  CHECK(r.relevance == 1.0);
  CHECK(r.total_recom == 0);

  d.author = "Zed";
  CHECK(init_oer(d, catalog).quality == doctest::Approx(50.0));  // skill-only mean of 60, 80, 10
  d.skill = "go";
  const auto none = init_oer(d, catalog);
  CHECK(none.quality == 50.0);
  CHECK(none.level == 50.0);
  CHECK(none.accessibility == 50.0);
}

TEST_CASE("cold start matches the filter-and-average oracle") {
  Rng rng(30);
  const std::vector<std::string> skills{"sql", "python", "go"}, authors{"ann", "bob", "cy", "dee"};
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<OERRecord> catalog(30);
    for (std::size_t i = 0; i < catalog.size(); ++i) {
      auto& r = catalog[i];
      r.oer_id = "o" + std::to_string(i);
      r.skill = skills[rng.below(skills.size())];
      r.author = authors[rng.below(authors.size())];
      r.how_long = rng.uniform(0, 100);
      r.how_short = 100 - r.how_long;
      r.level = rng.uniform(0, 100);
      r.quality = rng.uniform(0, 100);
      r.accessibility = rng.uniform(0, 100);
    }
    OerDraft d;
    d.oer_id = "new";
    d.skill = skills[rng.below(skills.size())];
    d.author = authors[rng.below(authors.size())];
    if (rng.below(2)) d.level = 25.0;

    std::vector<const OERRecord*> same_author, same_skill;
    for (const auto& r : catalog) {
      if (r.skill != d.skill) continue;
      same_skill.push_back(&r);
      if (r.author == d.author) same_author.push_back(&r);
    }
    const auto& pool = same_author.empty() ? same_skill : same_author;
    auto mean = [&](double OERRecord::*f) {
      if (pool.empty()) return 50.0;
      double s = 0;
      for (const auto* r : pool) s += r->*f;
      return s / pool.size();
    };
    const auto got = init_oer(d, catalog);
    CHECK(got.quality == doctest::Approx(mean(&OERRecord::quality)).epsilon(1e-12));
    CHECK(got.accessibility == doctest::Approx(mean(&OERRecord::accessibility)).epsilon(1e-12));
    CHECK(got.how_long == doctest::Approx(mean(&OERRecord::how_long)).epsilon(1e-12));
    CHECK(got.level == (d.level ? 25.0 : doctest::Approx(mean(&OERRecord::level)).epsilon(1e-12)));
  }
}

TEST_CASE("refit: zero loss is a fixed point") {
  Rater r;
  r.event.satisfaction = 0.5;
  OERRecord o;  // all properties at 50
  const std::vector<Rater> raters{r};
  CHECK(rater_weights(r.profile) == PropertyPoint{0.25, 0.25, 0.25, 0.25});
  const auto res = refit_properties(o, raters);
  CHECK(res.initial_loss == 0.0);
  CHECK(res.final_loss == 0.0);
  CHECK(res.record == o);
  CHECK(refit_properties(o, {}).record == o);
}

TEST_CASE("refit subgradient matches finite differences away from kinks") {
  Rng rng(12);
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    auto problem = oracle::planted_problem(rng, 1 + rng.below(6));
    for (auto& r : problem.raters) r.event.satisfaction = rng.uniform();
    const PropertyPoint x{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    bool near_kink = false;
    for (const auto& r : problem.raters) {
      const auto t = rater_weights(r.profile);
      const double res = t[0] * x[0] + t[1] * x[1] + t[2] * x[2] + t[3] * x[3] - r.event.satisfaction;
      near_kink = near_kink || std::abs(res) < 1e-4;
    }
    if (near_kink) continue;
    const auto g = refit_subgradient(x, problem.raters);
    for (int c = 0; c < 4; ++c) {
      PropertyPoint plus = x, minus = x;
      plus[c] += 1e-7;
      minus[c] -= 1e-7;
      const double numeric = (refit_loss(plus, problem.raters) - refit_loss(minus, problem.raters)) / 2e-7;
      CHECK(g[c] == doctest::Approx(numeric).epsilon(1e-6));
    }
    ++checked;
  }
  CHECK(checked > 150);
}

TEST_CASE("refit recovers a planted OER from six exact raters") {
  Rng rng(99);
  for (int trial = 0; trial < 100; ++trial) {
    const auto problem = oracle::planted_problem(rng, 6);
    OERRecord start;
    const auto res = refit_properties(start, problem.raters);
    CHECK(res.final_loss <= 1e-3);
    CHECK(res.final_loss <= res.initial_loss);
    const double l = res.record.how_long / 100, q = res.record.quality / 100, a = res.record.accessibility / 100;
    for (const auto& r : problem.ratings) {
      const double predicted = r.theta[0] * l + r.theta[1] * (1 - l) + r.theta[2] * q + r.theta[3] * a;
      CHECK(std::abs(predicted - r.y) <= 0.02);
    }
    CHECK(res.final_loss <= oracle::grid_minimum(problem.ratings) + 1e-3);
    CHECK(res.record.how_short == doctest::Approx(100 - res.record.how_long));
    CHECK(res.record.level == start.level);
  }
}

TEST_CASE("refit on an underdetermined problem reaches the grid minimum") {
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto problem = oracle::planted_problem(rng, 3);
    const auto res = refit_properties(OERRecord{}, problem.raters);
    CHECK(res.final_loss <= oracle::grid_minimum(problem.ratings) + 1e-3);
  }
}

TEST_CASE("refit on inconsistent ratings never increases the loss") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    auto problem = oracle::planted_problem(rng, 2 + rng.below(8));
    for (auto& r : problem.ratings) r.y = rng.uniform();
    for (std::size_t i = 0; i < problem.raters.size(); ++i) problem.raters[i].event.satisfaction = problem.ratings[i].y;
    OERRecord start;
    start.how_long = rng.uniform(0, 100);
    start.how_short = 100 - start.how_long;
    const auto res = refit_properties(start, problem.raters);
    CHECK(res.final_loss <= res.initial_loss);
    CHECK(res.final_loss <= oracle::grid_minimum(problem.ratings) + 1e-3);
    for (double v : {res.record.how_long, res.record.quality, res.record.accessibility}) {
      CHECK(v >= 0.0);
      CHECK(v <= 100.0);
    }
  }
  CHECK_THROWS_AS(refit_properties(OERRecord{}, oracle::planted_problem(rng, 2).raters, GdOptions{0.0, 10, 0}),
                  InvalidArgument);
}

TEST_CASE("relevance arithmetic is exact") {
  CHECK(relevance(record("a", "s", 10, 2)) == 0.8);
  CHECK(relevance(record("a", "s", 5, 0)) == 1.0);
  CHECK(relevance(record("a", "s", 1, 1)) == 0.0);
  CHECK(relevance(record("a", "s", 0, 0)) == 1.0);
  for (long long total = 1; total <= 100; ++total) {
    for (long long irr = 0; irr <= total; ++irr) {
      const double want = static_cast<double>(oracle::Rational(total - irr, total));
      CHECK(relevance(record("a", "s", total, irr)) == want);
    }
  }
}

TEST_CASE("exclusion below the skill average") {
  std::vector<OERRecord> rs{record("a", "s", 1, 0), record("b", "s", 5, 1), record("c", "s", 5, 4),
                            record("d", "t", 5, 5), record("e", "s", 0, 0)};
  CHECK(exclude_below_average("s", rs) == std::set<std::string>{"c"});
  CHECK(rs[2].excluded_for_skill);
  CHECK_FALSE(rs[3].excluded_for_skill);  // other skill untouched
  CHECK_FALSE(rs[4].excluded_for_skill);  // never recommended

  std::vector<OERRecord> equal{record("a", "s", 3, 1), record("b", "s", 6, 2), record("c", "s", 9, 3)};
  CHECK(exclude_below_average("s", equal).empty());

  std::vector<OERRecord> unrated{record("a", "s", 0, 0)};
  unrated[0].excluded_for_skill = true;
  CHECK(exclude_below_average("s", unrated).empty());
  CHECK_FALSE(unrated[0].excluded_for_skill);
}

TEST_CASE("exclusion matches the exact rule on random relevance sets") {
  Rng rng(404);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<OERRecord> rs;
    const auto n = 1 + rng.below(30);
    for (std::uint64_t i = 0; i < n; ++i) {
      const long long total = static_cast<long long>(rng.below(101));
      const long long irr = total == 0 ? 0 : static_cast<long long>(rng.below(static_cast<std::uint64_t>(total) + 1));
      rs.push_back(record("o" + std::to_string(i), rng.below(3) ? "s" : "t", total, irr));
    }
    const auto want = oracle::excluded_exact(rs, "s");
    CHECK(exclude_below_average("s", rs) == want);
    for (const auto& r : rs) {
      if (r.skill == "s") CHECK(r.excluded_for_skill == (want.count(r.oer_id) > 0));
    }
  }
}

TEST_CASE("catalog file round trip") {
  const auto fetched = FixtureConnector("wisc-online", testing::fixture("oer/wisconline.jsonl")).fetch();
  std::vector<OERRecord> catalog;
  for (const auto& d : drafts_from_raw(fetched.records, "wisc-online")) catalog.push_back(init_oer(d, catalog));
  catalog[0].total_recom = 3;
  catalog[0].irrelev_count = 1;
  catalog[0].relevance = relevance(catalog[0]);
  std::stringstream io;
  write_catalog(io, catalog);
  CHECK(read_catalog(io) == catalog);
}
