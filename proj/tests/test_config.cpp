#include <map>

#include "doctest.h"
#include "oerrec/config.hpp"
#include "oerrec/error.hpp"
#include "test_support.hpp"

using namespace oerrec;

namespace {

EnvLookup env_of(std::map<std::string, std::string> vars) {
  return [vars](const std::string& name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

const EnvLookup kNoEnv = env_of({});

}  // namespace

TEST_CASE("defaults resolve to the struct defaults") {
  const Json doc = resolve_config("", kNoEnv);
  const EngineConfig e = engine_config(doc);
  CHECK(e.alpha == EngineConfig{}.alpha);
  CHECK(e.k_neighbors == 10);
  CHECK(e.level_band == 25.0);
  CHECK(e.gd.max_iterations == 500);
  const ServiceConfig s = service_config(doc);
  CHECK(s.port == 8080);
  CHECK(s.connector_mode == "fixture");
  CHECK(classifier_config(doc).epochs == ClassifierHyper{}.epochs);
  CHECK(sim_config(doc).n_learners == 20);
}

TEST_CASE("file, environment and command line apply in order") {
  testing::TempDir dir;
  testing::write_file(dir / "c.json", R"({"engine": {"alpha": 0.8, "eta": 0.2, "gd": {"tolerance": 0.001}},
                                          "service": {"port": 9000}})");
  const auto env = env_of({{"OERREC_ENGINE_ALPHA", "0.9"}, {"OERREC_SERVICE_PORT", "9100"}});

  const Json file_only = resolve_config(dir / "c.json", kNoEnv);
  CHECK(engine_config(file_only).alpha == 0.8);
  CHECK(engine_config(file_only).gd.tolerance == 0.001);

  const Json with_env = resolve_config(dir / "c.json", env);
  CHECK(engine_config(with_env).alpha == 0.9);
  CHECK(engine_config(with_env).eta == 0.2);
  CHECK(service_config(with_env).port == 9100);

  const Json all = resolve_config(dir / "c.json", env, {"engine.alpha=0.95", "engine.gd.max_iterations=40"});
  CHECK(engine_config(all).alpha == 0.95);
  CHECK(engine_config(all).gd.max_iterations == 40);
  CHECK(service_config(all).port == 9100);
}

TEST_CASE("environment names") {
  CHECK(env_name("engine.gd.learning_rate") == "OERREC_ENGINE_GD_LEARNING_RATE");
  CHECK(env_name("service.port") == "OERREC_SERVICE_PORT");
  const Json doc = resolve_config("", env_of({{"OERREC_ENGINE_GD_LEARNING_RATE", "0.2"},
                                               {"OERREC_SIM_JOB_PER_CLUSTER", "false"}}));
  CHECK(engine_config(doc).gd.learning_rate == 0.2);
  CHECK_FALSE(sim_config(doc).job_per_cluster);
}

TEST_CASE("unknown keys and wrong types are rejected") {
  testing::TempDir dir;
  testing::write_file(dir / "typo.json", R"({"engine": {"alpah": 0.8}})");
  CHECK_THROWS_WITH_AS(resolve_config(dir / "typo.json", kNoEnv), doctest::Contains("engine.alpah"), ConfigError);
  testing::write_file(dir / "section.json", R"({"dashboard": {}})");
  CHECK_THROWS_AS(resolve_config(dir / "section.json", kNoEnv), ConfigError);
  testing::write_file(dir / "type.json", R"({"service": {"port": "eighty"}})");
  CHECK_THROWS_AS(resolve_config(dir / "type.json", kNoEnv), ConfigError);
  testing::write_file(dir / "frac.json", R"({"service": {"port": 80.5}})");
  CHECK_THROWS_AS(resolve_config(dir / "frac.json", kNoEnv), ConfigError);
  testing::write_file(dir / "bad.json", "{");
  CHECK_THROWS_AS(resolve_config(dir / "bad.json", kNoEnv), ConfigError);
  CHECK_THROWS_AS(resolve_config(dir / "missing.json", kNoEnv), ConfigError);

  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"engine.beta=1"}), ConfigError);
  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"engine.alpha"}), ConfigError);
  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"engine.gd=1"}), ConfigError);
  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"engine.k_neighbors=2.5"}), ConfigError);
  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"engine.k_neighbors=-1"}), ConfigError);
  CHECK_THROWS_AS(resolve_config("", env_of({{"OERREC_ENGINE_ETA", "lots"}})), ConfigError);
  CHECK_THROWS_AS(resolve_config("", kNoEnv, {"sim.job_per_cluster=maybe"}), ConfigError);
}

TEST_CASE("out-of-range values name the key") {
  const std::vector<std::pair<std::string, std::string>> bad{
      {"engine.alpha=0.5", "alpha"},           {"engine.alpha=1.01", "alpha"},
      {"engine.eta=0", "eta"},                 {"engine.eta=1.5", "eta"},
      {"engine.k_neighbors=0", "k_neighbors"}, {"engine.level_band=101", "level_band"},
      {"engine.level_step=-1", "level_step"},  {"engine.batch_period_days=0", "batch_period_days"},
      {"engine.window_months=0", "window_months"}, {"engine.gd.learning_rate=0", "learning_rate"},
      {"engine.gd.max_iterations=0", "max_iterations"}, {"engine.gd.tolerance=2", "tolerance"},
  };
  for (const auto& [o, key] : bad) {
    CAPTURE(o);
    CHECK_THROWS_WITH_AS(engine_config(resolve_config("", kNoEnv, {o})), doctest::Contains(key.c_str()), ConfigError);
  }
  CHECK_NOTHROW(engine_config(resolve_config("", kNoEnv, {"engine.alpha=1"})));
  CHECK_THROWS_AS(service_config(resolve_config("", kNoEnv, {"service.port=70000"})), ConfigError);
  CHECK_THROWS_AS(service_config(resolve_config("", kNoEnv, {"service.connector_mode=ftp"})), ConfigError);
  CHECK_THROWS_AS(service_config(resolve_config("", kNoEnv, {"service.threads=0"})), ConfigError);
  CHECK_THROWS_AS(classifier_config(resolve_config("", kNoEnv, {"classifier.max_n=0"})), ConfigError);
  CHECK_THROWS_AS(classifier_config(resolve_config("", kNoEnv, {"classifier.learning_rate=0"})), ConfigError);
  CHECK_THROWS_AS(sim_config(resolve_config("", kNoEnv, {"sim.n_oers=0"})), ConfigError);
}

TEST_CASE("repository sources") {
  testing::TempDir dir;
  testing::write_file(dir / "r.json", R"({"service": {"repositories": [
      {"name": "skillscommons", "fixture": "a.jsonl"}, {"name": "w", "fixture": "b.jsonl", "path": "/x"}]}})");
  const auto s = service_config(resolve_config(dir / "r.json", kNoEnv));
  REQUIRE(s.repositories.size() == 2);
  CHECK(s.repositories[1].path == "/x");
  testing::write_file(dir / "live.json", R"({"service": {"connector_mode": "live",
      "repositories": [{"name": "x", "fixture": "a.jsonl"}]}})");
  CHECK_THROWS_AS(service_config(resolve_config(dir / "live.json", kNoEnv)), ConfigError);
  testing::write_file(dir / "extra.json", R"({"service": {"repositories": [{"name": "x", "token": "t"}]}})");
  CHECK_THROWS_AS(service_config(resolve_config(dir / "extra.json", kNoEnv)), ConfigError);
}
