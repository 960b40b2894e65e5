#include <filesystem>

#include "doctest.h"
#include "oerrec/error.hpp"
#include "oerrec/store.hpp"
#include "test_support.hpp"
#include "workload.hpp"

using namespace oerrec;
namespace fs = std::filesystem;

TEST_CASE("events append with increasing sequence numbers") {
  testing::TempDir dir;
  {
    Store store(dir.path());
    CHECK(store.last_seq() == 0);
    CHECK(store.append(Json{{"type", "a"}, {"ts", 1}}) == 1);
    CHECK(store.append(Json{{"type", "b"}, {"ts", 2}}) == 2);
  }
  Store store(dir.path());
  CHECK(store.last_seq() == 2);
  const auto all = store.read_events();
  REQUIRE(all.size() == 2);
  CHECK(all[1]["type"] == "b");
  CHECK(store.read_events(1).size() == 1);
  CHECK(store.append(Json{{"type", "c"}, {"ts", 3}}) == 3);
}

TEST_CASE("a torn last line is dropped and overwritten") {
  testing::TempDir dir;
  {
    Store store(dir.path());
    store.append(Json{{"type", "a"}, {"ts", 1}});
  }
  testing::write_file(dir / "events.log", testing::slurp(dir / "events.log") + "{\"type\":\"b\",\"se");
  Store store(dir.path());
  CHECK(store.read_events().size() == 1);
  CHECK(store.append(Json{{"type", "c"}, {"ts", 2}}) == 2);
  const auto all = store.read_events();
  REQUIRE(all.size() == 2);
  CHECK(all[1]["type"] == "c");
}

TEST_CASE("a corrupt line before the end is an error") {
  testing::TempDir dir;
  testing::write_file(dir / "events.log", "{\"seq\":1,\"type\":\"a\"}\ngarbage\n{\"seq\":3,\"type\":\"a\"}\n");
  CHECK_THROWS_AS(Store{dir.path()}, PersistenceError);
  testing::write_file(dir / "events.log", "{\"seq\":2,\"type\":\"a\"}\n{\"seq\":2,\"type\":\"a\"}\n");
  CHECK_THROWS_AS(Store{dir.path()}, PersistenceError);
}

TEST_CASE("snapshot round trip and checksum") {
  testing::TempDir dir;
  Engine engine;
  workload::drive(engine, 5, 40, [] {});
  const EngineState state = engine.state();
  {
    Store store(dir.path());
    store.write_snapshot(state, 77);
  }
  Store store(dir.path());
  const auto snap = store.read_snapshot();
  REQUIRE(snap.has_value());
  CHECK(snap->state == state);
  CHECK(snap->manifest.created == 77);
  CHECK(snap->manifest.counts.at("learners") == state.learners.size());
  CHECK(snap->manifest.checksum == state_checksum(Json(state)));

  SUBCASE("tampered content") {
    std::string text = testing::slurp(dir / "snapshot.json");
    const auto at = text.find("\"pref_long\":");
    REQUIRE(at != std::string::npos);
    text.insert(at + 12, "1");
    testing::write_file(dir / "snapshot.json", text);
    CHECK_THROWS_WITH_AS(store.read_snapshot(), doctest::Contains("checksum"), PersistenceError);
  }
  SUBCASE("newer schema") {
    Json doc = Json::parse(testing::slurp(dir / "snapshot.json"));
    doc["manifest"]["schema_version"] = kSnapshotSchemaVersion + 1;
    testing::write_file(dir / "snapshot.json", doc.dump());
    CHECK_THROWS_AS(store.read_snapshot(), PersistenceError);
  }
  SUBCASE("not json") {
    testing::write_file(dir / "snapshot.json", "{\"manifest\":");
    CHECK_THROWS_AS(store.read_snapshot(), PersistenceError);
  }
}

TEST_CASE("an unwritable directory is reported") {
  if (::geteuid() == 0) return;  // root ignores permissions
  testing::TempDir dir;
  fs::permissions(dir.path(), fs::perms::owner_read | fs::perms::owner_exec);
  CHECK_THROWS_AS(Store{dir.path() / "sub"}, PersistenceError);
  fs::permissions(dir.path(), fs::perms::owner_all);
}

TEST_CASE("recovery from an empty directory") {
  testing::TempDir dir;
  Store store(dir.path());
  Engine engine;
  const auto r = recover(store, engine);
  CHECK_FALSE(r.from_snapshot);
  CHECK(r.replayed == 0);
  CHECK(engine.state() == EngineState{});
}

TEST_CASE("killing at random points and recovering reproduces the state") {
  Rng rng(1234);
  std::uint64_t total = 0;
  {
    testing::TempDir dir;
    total = workload::cut_and_recover(dir.path(), 8, 120, ~0ull, 25, "").events;
  }
  REQUIRE(total > 60);
  for (int i = 0; i < 20; ++i) {
    const std::uint64_t cut = 1 + rng.below(total);
    const std::string torn = i % 3 == 0 ? "" : std::string("{\"type\":\"rate\",\"ts\":17").substr(0, 1 + rng.below(20));
    CAPTURE(cut);
    testing::TempDir dir;
    const auto r = workload::cut_and_recover(dir.path(), 8, 120, cut, 25, torn);
    CHECK(r.same_state);
    CHECK(r.events == cut);
    if (cut <= 25) CHECK_FALSE(r.recovery.from_snapshot);
    if (cut > 30) CHECK(r.recovery.from_snapshot);
    CHECK(r.recovery.snapshot_seq + r.recovery.replayed == cut);
  }
}

TEST_CASE("replay failure names the event") {
  testing::TempDir dir;
  testing::write_file(dir / "events.log", "{\"seq\":1,\"type\":\"rate\",\"ts\":5,\"recommendation_id\":\"r9\",\"stars\":3}\n");
  Store store(dir.path());
  Engine engine;
  CHECK_THROWS_WITH_AS(recover(store, engine), doctest::Contains("event 1"), PersistenceError);
}
