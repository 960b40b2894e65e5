#include "oerrec/service.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <set>

#include "httplib.h"
#include "oerrec/error.hpp"

namespace oerrec {

namespace {

struct HttpError : Error {
  HttpError(int status, std::string code, const std::string& message)
      : Error(message), status(status), code(std::move(code)) {}
  int status;
  std::string code;
};

HttpError bad_request(const std::string& message) { return HttpError(400, "invalid_argument", message); }

HttpResponse error_response(int status, const std::string& code, const std::string& message) {
  return HttpResponse{status, Json{{"code", code}, {"message", message}}};
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos < path.size()) {
    const std::size_t slash = path.find('/', pos);
    const std::size_t end = slash == std::string::npos ? path.size() : slash;
    if (end > pos) parts.push_back(path.substr(pos, end - pos));
    pos = end + 1;
  }
  return parts;
}

std::string query_param(const std::multimap<std::string, std::string>& query, const std::string& key) {
  auto it = query.find(key);
  return it == query.end() ? std::string() : it->second;
}

Json parse_body(const std::string& body) {
  if (body.find_first_not_of(" \t\r\n") == std::string::npos) return Json::object();
  Json j = Json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw bad_request("request body must be a JSON object");
  return j;
}

std::map<std::string, double> parse_levels(const Json& j, const char* what) {
  if (!j.is_object()) throw bad_request(std::string(what) + " must be an object of skill -> level");
  std::map<std::string, double> levels;
  for (const auto& [skill, level] : j.items()) {
    if (!level.is_number()) throw bad_request(std::string(what) + "." + skill + " must be a number");
    levels[skill] = level.get<double>();
  }
  return levels;
}

std::string string_field(const Json& j, const char* key, bool required) {
  if (!j.contains(key)) {
    if (required) throw bad_request(std::string("missing field '") + key + "'");
    return {};
  }
  if (!j[key].is_string()) throw bad_request(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

}  // namespace

Clock system_clock() {
  return [] {
    return static_cast<Timestamp>(
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
            .count());
  };
}

std::shared_ptr<const ImportanceSource> load_importance_source(const ServiceConfig& config) {
  if (config.vacancies.empty() || config.skills.empty()) return nullptr;
  auto source = std::make_shared<ImportanceSource>();
  source->vacancies = load_vacancies(config.vacancies).vacancies;
  std::ifstream skills(config.skills);
  if (!skills) throw IngestError("cannot read skill terms " + config.skills);
  source->skills = read_skill_terms(skills);
  if (!config.model.empty()) source->model = load_model(config.model);
  return source;
}

std::vector<OerDraft> fetch_catalog(const ServiceConfig& config,
                                    const std::function<void(const std::string&)>& warn) {
  std::vector<OerDraft> drafts;
  for (const RepositorySource& r : config.repositories) {
    std::unique_ptr<RepositoryConnector> connector;
    if (config.connector_mode == "live") {
      connector = std::make_unique<HttpConnector>(r.name, r.base_url, r.path);
    } else {
      connector = std::make_unique<FixtureConnector>(r.name, r.fixture);
    }
    try {
      const FetchResult fetched = connector->fetch();
      if (fetched.skipped > 0) {
        warn(r.name + ": skipped " + std::to_string(fetched.skipped) + " malformed records");
      }
      for (OerDraft& d : drafts_from_raw(fetched.records, r.name)) drafts.push_back(std::move(d));
    } catch (const ConnectorError& e) {
      warn(e.what());
    }
  }
  return drafts;
}

Service::Service(ServiceConfig config, EngineConfig engine_config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
  config_.validate();
  engine_ = std::make_unique<Engine>(engine_config);
}

Service::~Service() { stop(); }

void Service::start() {
  store_ = std::make_unique<Store>(config_.data_dir);
  engine_->set_importance_source(load_importance_source(config_));
  recovery_ = recover(*store_, *engine_);
  engine_->set_journal([this](const Json& event) {
    try {
      store_->append(event);
    } catch (...) {
      journal_failed_ = true;
      throw;
    }
    ++events_since_snapshot_;
  });
  seed(clock_());
  after_mutation();

  server_ = std::make_unique<httplib::Server>();
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  server_->new_task_queue = [n = config_.threads] { return new httplib::ThreadPool(static_cast<std::size_t>(n)); };
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    std::multimap<std::string, std::string> query(req.params.begin(), req.params.end());
    const HttpResponse r = handle(req.method, req.path, query, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body.dump(), "application/json");
  };
  server_->Get(".*", route);
  server_->Post(".*", route);
  server_->Patch(".*", route);
  server_->Put(".*", route);
  server_->Delete(".*", route);
  server_->Options(".*", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  if (config_.port == 0) {
    port_ = server_->bind_to_any_port(config_.host);
  } else {
    port_ = server_->bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (port_ <= 0) {
    throw Error("cannot bind " + config_.host + ":" + std::to_string(config_.port) + " (port busy?)");
  }
  server_thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  if (config_.scheduler_seconds > 0) scheduler_thread_ = std::thread([this] { scheduler_loop(); });
}

void Service::stop() {
  {
    std::lock_guard lock(scheduler_mutex_);
    if (stopping_) return;
    stopping_ = true;
  }
  scheduler_cv_.notify_all();
  if (server_) server_->stop();
  if (server_thread_.joinable()) server_thread_.join();
  if (scheduler_thread_.joinable()) scheduler_thread_.join();
}

void Service::wait() {
  std::unique_lock lock(scheduler_mutex_);
  scheduler_cv_.wait(lock, [this] { return stopping_; });
}

void Service::seed(Timestamp now) {
  if (!config_.profiles.empty() && engine_->state().job_profiles.empty()) {
    std::ifstream in(config_.profiles);
    if (!in) throw IngestError("cannot read job profiles " + config_.profiles);
    engine_->import_profiles(read_profiles(in), now);
  }
  std::set<std::string> known;
  for (const OERRecord& o : engine_->catalog()) known.insert(o.oer_id);
  std::vector<OerDraft> fresh;
  for (OerDraft& d : fetch_catalog(config_, [](const std::string& m) { std::cerr << "warning: " << m << '\n'; })) {
    if (known.insert(d.oer_id).second) fresh.push_back(std::move(d));
  }
  if (!fresh.empty()) engine_->import_drafts(fresh, now);
}

void Service::snapshot() {
  std::lock_guard lock(snapshot_mutex_);
  engine_->inspect([this](const EngineState& s) { store_->write_snapshot(s, clock_()); });
  events_since_snapshot_ = 0;
}

void Service::after_mutation() {
  if (events_since_snapshot_ >= config_.snapshot_every) snapshot();
}

BatchReport Service::run_batch(Timestamp period_end) {
  BatchReport report = engine_->run_batch(period_end);
  snapshot();
  return report;
}

void Service::scheduler_loop() {
  std::unique_lock lock(scheduler_mutex_);
  while (!stopping_) {
    if (scheduler_cv_.wait_for(lock, std::chrono::seconds(config_.scheduler_seconds), [this] { return stopping_; })) {
      break;
    }
    lock.unlock();
    try {
      const BatchReport r = run_batch(clock_());
      std::cerr << "batch: " << Json(r).dump() << '\n';
    } catch (const std::exception& e) {
      std::cerr << "batch failed: " << e.what() << '\n';
    }
    lock.lock();
  }
}

HttpResponse Service::handle(const std::string& method, const std::string& path,
                             const std::multimap<std::string, std::string>& query, const std::string& body) {
  const std::vector<std::string> p = split_path(path);
  const bool mutating = method != "GET" || (p.size() == 3 && p[0] == "learners" && p[2] == "recommendation");
  try {
    if (mutating && journal_failed_) {
      return error_response(500, "internal", "event log is not writable; restart the service");
    }
    HttpResponse response = [&]() -> HttpResponse {
      if (method == "GET" && p.size() == 1 && p[0] == "health") {
        const EngineState s = engine_->state();
        return {200, Json{{"status", "ok"},
                          {"learners", s.learners.size()},
                          {"oers", s.catalog.size()},
                          {"job_profiles", s.job_profiles.size()},
                          {"last_seq", store_ ? store_->last_seq() : 0}}};
      }
      if (method == "GET" && p.size() == 1 && p[0] == "jobs") {
        return {200, Json{{"jobs", engine_->jobs(query_param(query, "query"))}}};
      }
      if (method == "GET" && p.size() == 3 && p[0] == "jobs" && p[2] == "skills") {
        return {200, Json(engine_->job_profile(p[1], query_param(query, "location")))};
      }
      if (method == "POST" && p.size() == 1 && p[0] == "learners") {
        const Json b = parse_body(body);
        NewLearner l;
        l.selected_job = string_field(b, "job", true);
        if (b.contains("personal")) {
          const Json& personal = b["personal"];
          if (!personal.is_object()) throw bad_request("field 'personal' must be an object");
          l.personal.location = string_field(personal, "location", false);
          l.personal.gender = string_field(personal, "gender", false);
          l.personal.education = string_field(personal, "education", false);
        }
        if (b.contains("skill_levels")) l.skill_levels = parse_levels(b["skill_levels"], "skill_levels");
        const LearnerProfile created = engine_->create_learner(l, clock_());
        return {201, Json{{"user_id", created.user_id}, {"profile", created}}};
      }
      if (method == "GET" && p.size() == 2 && p[0] == "learners") {
        return {200, Json(engine_->learner(p[1]))};
      }
      if (method == "PATCH" && p.size() == 3 && p[0] == "learners" && p[2] == "skills") {
        const auto levels = parse_levels(parse_body(body), "body");
        return {200, Json(engine_->set_skill_levels(p[1], levels, clock_()))};
      }
      auto with_oer = [this](Json outcome) {
        if (outcome.contains("recommendation")) {
          if (auto o = engine_->oer(outcome["recommendation"]["oer_id"].get<std::string>())) {
            outcome["recommendation"]["oer"] =
                Json{{"title", o->title}, {"url", o->url}, {"resource", o->resource}, {"skill", o->skill}};
          }
        }
        return outcome;
      };
      if (method == "GET" && p.size() == 3 && p[0] == "learners" && p[2] == "recommendation") {
        return {200, with_oer(Json(engine_->recommendation_for(p[1], clock_())))};
      }
      if (method == "POST" && p.size() == 3 && p[0] == "recommendations") {
        FeedbackResult r;
        if (p[2] == "rating") {
          const Json b = parse_body(body);
          if (!b.contains("stars") || !b["stars"].is_number_integer()) {
            throw bad_request("field 'stars' must be an integer 1..5");
          }
          r = engine_->rate(p[1], b["stars"].get<int>(), clock_());
        } else if (p[2] == "irrelevant") {
          r = engine_->mark_irrelevant(p[1], clock_());
        } else if (p[2] == "change") {
          r = engine_->change(p[1], clock_());
        } else {
          throw HttpError(404, "not_found", "no route for " + method + " " + path);
        }
        return {200, Json{{"recommendation", r.recommendation}, {"learner", r.learner}, {"next", with_oer(Json(r.next))}}};
      }
      if (method == "POST" && p.size() == 2 && p[0] == "admin" && p[1] == "batch") {
        const Json b = parse_body(body);
        Timestamp end = clock_();
        if (b.contains("period_end")) {
          const Json& v = b["period_end"];
          if (v.is_number_integer()) {
            end = v.get<Timestamp>();
          } else if (v.is_string()) {
            end = to_timestamp(parse_date(v.get<std::string>()));
          } else {
            throw bad_request("period_end must be a timestamp in seconds or a YYYY-MM-DD date");
          }
        }
        return {200, Json(run_batch(end))};
      }
      throw HttpError(404, "not_found", "no route for " + method + " " + path);
    }();
    if (mutating) after_mutation();
    return response;
  } catch (const HttpError& e) {
    return error_response(e.status, e.code, e.what());
  } catch (const InvalidArgument& e) {
    return error_response(400, "invalid_argument", e.what());
  } catch (const NotFound& e) {
    return error_response(404, "not_found", e.what());
  } catch (const StateError& e) {
    return error_response(409, "conflict", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
}

}  // namespace oerrec
