#include "oerrec/config.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "oerrec/error.hpp"
#include "oerrec/format.hpp"

namespace oerrec {

namespace {

template <typename T>
T get_as(const Json& doc, const char* section, const char* key) {
  try {
    return doc.at(section).at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string(section) + "." + key + ": " + e.what());
  }
}

void require(bool ok, const std::string& key, const std::string& range) {
  if (!ok) throw ConfigError(key + " must be in " + range);
}

bool same_kind(const Json& a, const Json& b) {
  if (a.is_number() && b.is_number()) {
    if (a.is_number_float()) return true;
    return b.is_number_integer() || b.is_number_unsigned() ||
           (b.is_number_float() && std::floor(b.get<double>()) == b.get<double>());
  }
  return a.type() == b.type();
}

Json integer_like(const Json& like, const std::string& key, double v) {
  if (like.is_number_unsigned()) {
    if (v < 0.0) throw ConfigError(key + " must be >= 0");
    return static_cast<unsigned long long>(v);
  }
  return static_cast<long long>(v);
}

// Merges `patch` into `base`, accepting only keys and value kinds the base has.
void merge_checked(Json& base, const Json& patch, const std::string& path) {
  if (!patch.is_object()) throw ConfigError((path.empty() ? "config" : path) + " must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string dotted = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key: " + dotted);
    Json& target = base[key];
    if (target.is_object()) {
      merge_checked(target, value, dotted);
    } else if (!same_kind(target, value)) {
      throw ConfigError(dotted + ": expected " + std::string(target.type_name()) + ", got " +
                        std::string(value.type_name()));
    } else if (target.is_number_integer() || target.is_number_unsigned()) {
      target = integer_like(target, dotted, value.get<double>());
    } else {
      target = value;
    }
  }
}

Json parse_scalar(const Json& like, const std::string& key, const std::string& text) {
  try {
    if (like.is_boolean()) {
      if (text == "true" || text == "1") return true;
      if (text == "false" || text == "0") return false;
      throw ConfigError(key + ": expected true or false, got '" + text + "'");
    }
    if (like.is_number_integer() || like.is_number_unsigned()) {
      const double v = parse_double(text);
      if (std::floor(v) != v) throw ConfigError(key + ": expected an integer, got '" + text + "'");
      return integer_like(like, key, v);
    }
    if (like.is_number()) return parse_double(text);
  } catch (const InvalidArgument&) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  if (like.is_string()) return text;
  throw ConfigError(key + " cannot be set from text");
}

Json* find_leaf(Json& doc, const std::string& dotted) {
  Json* node = &doc;
  std::size_t pos = 0;
  while (pos <= dotted.size()) {
    const std::size_t dot = dotted.find('.', pos);
    const std::string part = dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (!node->is_object() || !node->contains(part)) return nullptr;
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    pos = dot + 1;
  }
  return node;
}

void for_each_scalar(const Json& node, const std::string& path,
                     const std::function<void(const std::string&, const Json&)>& f) {
  for (const auto& [key, value] : node.items()) {
    const std::string dotted = path.empty() ? key : path + "." + key;
    if (value.is_object()) {
      for_each_scalar(value, dotted, f);
    } else if (!value.is_array()) {
      f(dotted, value);
    }
  }
}

Json engine_json(const EngineConfig& c) {
  return Json{{"alpha", c.alpha},
              {"eta", c.eta},
              {"k_neighbors", c.k_neighbors},
              {"level_band", c.level_band},
              {"level_step", c.level_step},
              {"batch_period_days", c.batch_period_days},
              {"window_months", c.window_months},
              {"top_k", c.top_k},
              {"gd",
               {{"learning_rate", c.gd.learning_rate},
                {"max_iterations", c.gd.max_iterations},
                {"tolerance", c.gd.tolerance}}}};
}

}  // namespace

void ServiceConfig::validate() const {
  require(port >= 0 && port <= 65535, "service.port", "[0, 65535]");
  require(!data_dir.empty(), "service.data_dir", "non-empty paths");
  require(connector_mode == "fixture" || connector_mode == "live", "service.connector_mode", "{fixture, live}");
  require(scheduler_seconds >= 0 && scheduler_seconds <= 31536000, "service.scheduler_seconds", "[0, 31536000]");
  require(snapshot_every >= 1 && snapshot_every <= 1000000, "service.snapshot_every", "[1, 1000000]");
  require(threads >= 1 && threads <= 256, "service.threads", "[1, 256]");
  for (const auto& r : repositories) {
    require(!r.name.empty(), "service.repositories[].name", "non-empty names");
    if (connector_mode == "fixture") {
      require(!r.fixture.empty(), "service.repositories[].fixture", "non-empty paths in fixture mode");
    } else {
      require(!r.base_url.empty(), "service.repositories[].base_url", "non-empty URLs in live mode");
    }
  }
}

Json default_config() {
  const ServiceConfig s;
  const ClassifierHyper h;
  const SimConfig sim;
  return Json{{"service",
               {{"host", s.host},
                {"port", s.port},
                {"data_dir", s.data_dir},
                {"connector_mode", s.connector_mode},
                {"repositories", Json::array()},
                {"profiles", s.profiles},
                {"vacancies", s.vacancies},
                {"skills", s.skills},
                {"model", s.model},
                {"scheduler_seconds", s.scheduler_seconds},
                {"snapshot_every", s.snapshot_every},
                {"threads", s.threads}}},
              {"engine", engine_json(EngineConfig{})},
              {"classifier",
               {{"dimension", h.dimension},
                {"min_n", h.min_n},
                {"max_n", h.max_n},
                {"epochs", h.epochs},
                {"learning_rate", h.learning_rate},
                {"seed", h.seed}}},
              {"sim",
               {{"n_learners", sim.n_learners},
                {"n_oers", sim.n_oers},
                {"steps", sim.steps},
                {"seed", sim.seed},
                {"noise", sim.noise},
                {"d_max", sim.d_max},
                {"n_clusters", sim.n_clusters},
                {"cluster_spread", sim.cluster_spread},
                {"planted_low", sim.planted_low},
                {"planted_high", sim.planted_high},
                {"centre_separation", sim.centre_separation},
                {"catalog_spread", sim.catalog_spread},
                {"n_skills", sim.n_skills},
                {"job_per_cluster", sim.job_per_cluster},
                {"level_classes", sim.level_classes},
                {"n_repositories", sim.n_repositories},
                {"arrival_every", sim.arrival_every},
                {"batch_every", sim.batch_every},
                {"hidden_fraction", sim.hidden_fraction},
                {"irrelevant_probability", sim.irrelevant_probability},
                {"change_probability", sim.change_probability}}}};
}

EnvLookup process_env() {
  return [](const std::string& name) -> std::optional<std::string> {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
  };
}

std::string env_name(std::string_view dotted_key) {
  std::string out = "OERREC_";
  for (char c : dotted_key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

Json resolve_config(const std::string& file, const EnvLookup& env, const std::vector<std::string>& overrides) {
  Json doc = default_config();
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot read config file " + file);
    const Json patch = Json::parse(in, nullptr, false);
    if (patch.is_discarded()) throw ConfigError(file + ": not valid JSON");
    merge_checked(doc, patch, "");
  }
  if (env) {
    std::vector<std::pair<std::string, Json>> updates;
    for_each_scalar(doc, "", [&](const std::string& key, const Json& value) {
      if (auto text = env(env_name(key))) updates.emplace_back(key, parse_scalar(value, env_name(key), *text));
    });
    for (auto& [key, value] : updates) *find_leaf(doc, key) = std::move(value);
  }
  for (const std::string& o : overrides) {
    const std::size_t eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    const std::string key = o.substr(0, eq);
    Json* leaf = find_leaf(doc, key);
    if (!leaf || leaf->is_object() || leaf->is_array()) throw ConfigError("unknown config key: " + key);
    *leaf = parse_scalar(*leaf, key, o.substr(eq + 1));
  }
  return doc;
}

ServiceConfig service_config(const Json& doc) {
  ServiceConfig c;
  c.host = get_as<std::string>(doc, "service", "host");
  c.port = get_as<int>(doc, "service", "port");
  c.data_dir = get_as<std::string>(doc, "service", "data_dir");
  c.connector_mode = get_as<std::string>(doc, "service", "connector_mode");
  c.profiles = get_as<std::string>(doc, "service", "profiles");
  c.vacancies = get_as<std::string>(doc, "service", "vacancies");
  c.skills = get_as<std::string>(doc, "service", "skills");
  c.model = get_as<std::string>(doc, "service", "model");
  c.scheduler_seconds = get_as<int>(doc, "service", "scheduler_seconds");
  c.snapshot_every = get_as<int>(doc, "service", "snapshot_every");
  c.threads = get_as<int>(doc, "service", "threads");
  for (const Json& r : doc.at("service").at("repositories")) {
    RepositorySource src;
    for (const auto& [key, value] : r.items()) {
      if (!value.is_string()) throw ConfigError("service.repositories[]." + key + " must be a string");
      if (key == "name") {
        src.name = value;
      } else if (key == "fixture") {
        src.fixture = value;
      } else if (key == "base_url") {
        src.base_url = value;
      } else if (key == "path") {
        src.path = value;
      } else {
        throw ConfigError("unknown config key: service.repositories[]." + key);
      }
    }
    c.repositories.push_back(std::move(src));
  }
  c.validate();
  return c;
}

EngineConfig engine_config(const Json& doc) {
  EngineConfig c;
  c.alpha = get_as<double>(doc, "engine", "alpha");
  c.eta = get_as<double>(doc, "engine", "eta");
  c.k_neighbors = get_as<std::size_t>(doc, "engine", "k_neighbors");
  c.level_band = get_as<double>(doc, "engine", "level_band");
  c.level_step = get_as<double>(doc, "engine", "level_step");
  c.batch_period_days = get_as<int>(doc, "engine", "batch_period_days");
  c.window_months = get_as<int>(doc, "engine", "window_months");
  c.top_k = get_as<std::size_t>(doc, "engine", "top_k");
  try {
    const Json& gd = doc.at("engine").at("gd");
    c.gd.learning_rate = gd.at("learning_rate").get<double>();
    c.gd.max_iterations = gd.at("max_iterations").get<int>();
    c.gd.tolerance = gd.at("tolerance").get<double>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("engine.gd: ") + e.what());
  }
  c.validate();
  return c;
}

ClassifierHyper classifier_config(const Json& doc) {
  ClassifierHyper h;
  h.dimension = get_as<int>(doc, "classifier", "dimension");
  h.min_n = get_as<int>(doc, "classifier", "min_n");
  h.max_n = get_as<int>(doc, "classifier", "max_n");
  h.epochs = get_as<int>(doc, "classifier", "epochs");
  h.learning_rate = get_as<double>(doc, "classifier", "learning_rate");
  h.seed = get_as<std::uint64_t>(doc, "classifier", "seed");
  require(h.dimension >= 2 && h.dimension <= 1000, "classifier.dimension", "[2, 1000]");
  require(h.min_n >= 1 && h.min_n <= 10, "classifier.min_n", "[1, 10]");
  require(h.max_n >= h.min_n && h.max_n <= 10, "classifier.max_n", "[min_n, 10]");
  require(h.epochs >= 1 && h.epochs <= 1000, "classifier.epochs", "[1, 1000]");
  require(h.learning_rate > 0.0 && h.learning_rate <= 10.0, "classifier.learning_rate", "(0, 10]");
  return h;
}

SimConfig sim_config(const Json& doc) {
  SimConfig c;
  c.n_learners = get_as<std::size_t>(doc, "sim", "n_learners");
  c.n_oers = get_as<std::size_t>(doc, "sim", "n_oers");
  c.steps = get_as<std::size_t>(doc, "sim", "steps");
  c.seed = get_as<std::uint64_t>(doc, "sim", "seed");
  c.noise = get_as<double>(doc, "sim", "noise");
  c.d_max = get_as<double>(doc, "sim", "d_max");
  c.n_clusters = get_as<std::size_t>(doc, "sim", "n_clusters");
  c.cluster_spread = get_as<double>(doc, "sim", "cluster_spread");
  c.planted_low = get_as<double>(doc, "sim", "planted_low");
  c.planted_high = get_as<double>(doc, "sim", "planted_high");
  c.centre_separation = get_as<double>(doc, "sim", "centre_separation");
  c.catalog_spread = get_as<double>(doc, "sim", "catalog_spread");
  c.n_skills = get_as<std::size_t>(doc, "sim", "n_skills");
  c.job_per_cluster = get_as<bool>(doc, "sim", "job_per_cluster");
  c.level_classes = get_as<std::size_t>(doc, "sim", "level_classes");
  c.n_repositories = get_as<std::size_t>(doc, "sim", "n_repositories");
  c.arrival_every = get_as<std::size_t>(doc, "sim", "arrival_every");
  c.batch_every = get_as<std::size_t>(doc, "sim", "batch_every");
  c.hidden_fraction = get_as<double>(doc, "sim", "hidden_fraction");
  c.irrelevant_probability = get_as<double>(doc, "sim", "irrelevant_probability");
  c.change_probability = get_as<double>(doc, "sim", "change_probability");
  c.engine = engine_config(doc);
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(std::string("sim: ") + e.what());
  }
  return c;
}

}  // namespace oerrec
