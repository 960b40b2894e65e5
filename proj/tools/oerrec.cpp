// oerrec: command-line entry points for the pipeline and the service.
//
// Exit codes: 0 success, 1 usage or configuration error, 2 data error,
// 3 internal error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "oerrec/config.hpp"
#include "oerrec/error.hpp"
#include "oerrec/format.hpp"
#include "oerrec/service.hpp"

using namespace oerrec;

namespace {

constexpr int kUsage = 1;
constexpr int kDataError = 2;
constexpr int kInternal = 3;

std::atomic<bool> g_interrupted{false};

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c, const std::string& seed_use) {
  cmd->add_option("--config", c.config, "JSON config file (sections service, engine, classifier, sim)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override a config value, e.g. --set engine.eta=0.2 (repeatable)");
  cmd->add_option("--seed", c.seed, "Random seed; " + seed_use);
}

Json resolve(const Common& c) { return resolve_config(c.config, process_env(), c.overrides); }

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read " + path);
  return in;
}

ColumnMap column_map(const std::vector<std::string>& specs) {
  ColumnMap m;
  for (const std::string& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--column expects field=header, got '" + s + "'");
    const std::string field = s.substr(0, eq);
    const std::string header = s.substr(eq + 1);
    if (field == "id") {
      m.id = header;
    } else if (field == "title") {
      m.title = header;
    } else if (field == "location") {
      m.location = header;
    } else if (field == "date") {
      m.date = header;
    } else if (field == "body") {
      m.body = header;
    } else {
      throw ConfigError("--column field must be one of id, title, location, date, body; got '" + field + "'");
    }
  }
  return m;
}

// `vacancy_id<TAB>token token ...` per line.
std::vector<CleanSentence> read_sentences(std::istream& in) {
  std::vector<CleanSentence> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) {
      throw IngestError("sentence file line " + std::to_string(line_no) + ": expected 'vacancy<TAB>tokens'");
    }
    CleanSentence s;
    s.source_vacancy = line.substr(0, tab);
    std::istringstream tokens(line.substr(tab + 1));
    std::string token;
    while (tokens >> token) s.tokens.push_back(token);
    out.push_back(std::move(s));
  }
  return out;
}

Timestamp parse_time(const std::string& text) {
  if (!text.empty() && text.find('-') == std::string::npos) return static_cast<Timestamp>(parse_double(text));
  return to_timestamp(parse_date(text));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oerrec: labour-market driven OER recommender"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // ingest
  Common ingest_common;
  std::string ingest_input, ingest_out, ingest_stopwords;
  std::vector<std::string> ingest_columns;
  auto* ingest = app.add_subcommand("ingest", "Vacancy CSV -> labeled sentences (label<TAB>tokens)");
  ingest->add_option("--input", ingest_input, "Vacancy CSV file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", ingest_out, "Labeled sentence output file")->required();
  ingest->add_option("--column", ingest_columns,
                     "Map a field to a CSV header: id|title|location|date|body=HEADER (repeatable)");
  ingest->add_option("--stopwords", ingest_stopwords, "Stop-word file replacing the shipped list")
      ->check(CLI::ExistingFile);
  add_common(ingest, ingest_common, "unused (ingest is deterministic)");

  // train
  Common train_common;
  std::string train_input, train_out, train_report;
  double test_fraction = 0.2;
  auto* train = app.add_subcommand("train", "Labeled sentences -> classifier model file and evaluation report");
  train->add_option("--input", train_input, "Labeled sentence file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_out, "Model output file")->required();
  train->add_option("--test-fraction", test_fraction, "Held-out share for evaluation, [0, 0.9]")
      ->check(CLI::Range(0.0, 0.9))
      ->capture_default_str();
  train->add_option("--report", train_report, "Also write the evaluation report (JSON) to this file");
  add_common(train, train_common, "drives the split, initialisation and sample order (default classifier.seed)");

  // extract-skills
  Common extract_common;
  std::string extract_vacancies, extract_sentences, extract_model, extract_out;
  long long min_df = 3;
  std::size_t top_n = 0;
  auto* extract = app.add_subcommand("extract-skills", "Skill sentences -> ranked skill terms (term<TAB>tfidf<TAB>df)");
  auto* ev = extract->add_option("--vacancies", extract_vacancies,
                                 "Vacancy CSV; skill sentences are those under required-skills headings, "
                                 "or those the --model labels 1")
                 ->check(CLI::ExistingFile);
  auto* es = extract->add_option("--sentences", extract_sentences,
                                 "Pre-tokenized skill sentences, vacancy<TAB>tokens per line")
                 ->check(CLI::ExistingFile);
  ev->excludes(es);
  extract->add_option("--model", extract_model, "Classifier model used with --vacancies")->check(CLI::ExistingFile);
  extract->add_option("--min-df", min_df, "Minimum document frequency, >= 1")
      ->check(CLI::Range(1LL, 1000000LL))
      ->capture_default_str();
  extract->add_option("--top-n", top_n, "Keep the top N terms; 0 keeps all")->capture_default_str();
  extract->add_option("--out", extract_out, "Skill-term output file")->required();
  add_common(extract, extract_common, "unused (extraction is deterministic)");

  // importance
  Common importance_common;
  std::string imp_vacancies, imp_skills, imp_model, imp_previous, imp_out, imp_now;
  std::vector<std::string> imp_jobs, imp_locations;
  auto* importance = app.add_subcommand("importance", "Vacancies + skill terms -> job skill-importance profiles");
  importance->add_option("--vacancies", imp_vacancies, "Vacancy CSV")->required()->check(CLI::ExistingFile);
  importance->add_option("--skills", imp_skills, "Skill-term file")->required()->check(CLI::ExistingFile);
  importance->add_option("--job", imp_jobs, "Job title (repeatable)")->required();
  importance->add_option("--location", imp_locations,
                         "Location (repeatable); default: every location of the job's vacancies");
  importance->add_option("--now", imp_now, "Window end date, YYYY-MM-DD")->required();
  importance->add_option("--model", imp_model, "Classifier model; heading rules when absent")
      ->check(CLI::ExistingFile);
  importance->add_option("--previous", imp_previous, "Previous profile file to decay against")
      ->check(CLI::ExistingFile);
  importance->add_option("--out", imp_out, "Profile output file (job<TAB>location<TAB>skill<TAB>importance<TAB>date)")
      ->required();
  add_common(importance, importance_common,
             "unused; engine.alpha, engine.window_months and engine.top_k come from the config");

  // serve
  Common serve_common;
  std::optional<int> serve_port;
  std::string serve_data_dir;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--port", serve_port, "Listen port, [0, 65535] (overrides service.port)");
  serve->add_option("--data-dir", serve_data_dir, "Data directory (overrides service.data_dir)");
  add_common(serve, serve_common, "unused (the service is deterministic given its inputs)");

  // simulate
  Common sim_common;
  std::string sim_out;
  std::optional<std::size_t> sim_steps, sim_learners, sim_oers;
  std::optional<double> sim_noise;
  auto* simulate = app.add_subcommand("simulate", "Closed-loop simulation -> per-step metrics (JSON lines)");
  simulate->add_option("--out", sim_out, "Metrics output file")->required();
  simulate->add_option("--steps", sim_steps, "Steps (overrides sim.steps)");
  simulate->add_option("--learners", sim_learners, "Learners (overrides sim.n_learners)");
  simulate->add_option("--oers", sim_oers, "OERs (overrides sim.n_oers)");
  simulate->add_option("--noise", sim_noise, "Satisfaction noise std-dev (overrides sim.noise)");
  add_common(simulate, sim_common, "drives catalog, learners and noise (default sim.seed)");

  // batch
  Common batch_common;
  std::string batch_data_dir, batch_end;
  auto* batch = app.add_subcommand("batch", "Run the periodic batch jobs once against a data directory");
  batch->add_option("--data-dir", batch_data_dir, "Data directory (overrides service.data_dir)");
  batch->add_option("--period-end", batch_end, "Period end, YYYY-MM-DD or seconds since the epoch; default now");
  add_common(batch, batch_common, "unused (batch jobs are deterministic)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs.front()->help());
    return kUsage;
  }

  try {
    if (ingest->parsed()) {
      resolve(ingest_common);
      LoadResult loaded = load_vacancies(ingest_input, column_map(ingest_columns));
      std::vector<LabeledSentence> labeled;
      if (ingest_stopwords.empty()) {
        labeled = label_corpus(loaded.vacancies);
      } else {
        labeled = label_corpus(loaded.vacancies, HeadingRules{}, StopWords::load(ingest_stopwords));
      }
      auto out = open_out(ingest_out);
      write_labeled(out, labeled);
      std::size_t positive = 0;
      for (const auto& s : labeled) positive += s.label == 1;
      std::cout << Json{{"vacancies", loaded.vacancies.size()},
                        {"skipped_empty_body", loaded.skipped_empty_body},
                        {"sentences", labeled.size()},
                        {"positive", positive},
                        {"negative", labeled.size() - positive}}
                       .dump()
                << '\n';
    } else if (train->parsed()) {
      ClassifierHyper hyper = classifier_config(resolve(train_common));
      if (train_common.seed) hyper.seed = *train_common.seed;
      auto in = open_in(train_input);
      const std::vector<LabeledSentence> data = read_labeled(in);
      const Split split = train_test_split(data, test_fraction, hyper.seed);
      const ClassifierModel model = train_classifier(split.train, hyper);
      save_model(train_out, model);
      Json report{{"train", split.train.size()}, {"test", split.test.size()}};
      if (!split.test.empty()) {
        try {
          const EvalReport r = evaluate(model, split.test);
          report["balanced_accuracy"] = r.balanced_accuracy;
          report["precision"] = r.precision;
          report["recall"] = r.recall;
          report["confusion"] = r.confusion;
        } catch (const InvalidArgument& e) {
          report["evaluation_error"] = e.what();
        }
      }
      if (!train_report.empty()) open_out(train_report) << report.dump() << '\n';
      std::cout << report.dump() << '\n';
    } else if (extract->parsed()) {
      resolve(extract_common);
      std::vector<CleanSentence> sentences;
      if (!extract_sentences.empty()) {
        auto in = open_in(extract_sentences);
        sentences = read_sentences(in);
      } else if (!extract_vacancies.empty()) {
        const auto vacancies = load_vacancies(extract_vacancies).vacancies;
        std::optional<ClassifierModel> model;
        if (!extract_model.empty()) model = load_model(extract_model);
        const HeadingRules rules;
        for (const RawVacancy& v : vacancies) {
          for (CleanSentence& s : vacancy_sentences(v)) {
            const bool skill = model ? predict(*model, s).label == 1
                                     : s.source_heading && rules.is_required_skills(*s.source_heading);
            if (skill) sentences.push_back(std::move(s));
          }
        }
      } else {
        throw ConfigError("extract-skills needs --vacancies or --sentences");
      }
      const auto terms = extract_skill_terms(sentences, min_df, top_n == 0 ? std::numeric_limits<std::size_t>::max() : top_n);
      auto out = open_out(extract_out);
      write_skill_terms(out, terms);
      std::cout << Json{{"sentences", sentences.size()}, {"terms", terms.size()}}.dump() << '\n';
    } else if (importance->parsed()) {
      const EngineConfig engine = engine_config(resolve(importance_common));
      const auto vacancies = load_vacancies(imp_vacancies).vacancies;
      auto skills_in = open_in(imp_skills);
      const auto skills = read_skill_terms(skills_in);
      std::optional<ClassifierModel> model;
      if (!imp_model.empty()) model = load_model(imp_model);
      std::vector<JobSkillProfile> previous;
      if (!imp_previous.empty()) {
        auto in = open_in(imp_previous);
        previous = read_profiles(in);
      }
      const Date now = parse_date(imp_now);
      const HeadingRules rules;
      const SentenceFilter by_heading = [&rules](const CleanSentence& s) {
        return s.source_heading && rules.is_required_skills(*s.source_heading);
      };
      std::vector<JobSkillProfile> profiles;
      for (const std::string& job : imp_jobs) {
        std::vector<std::string> locations = imp_locations;
        if (locations.empty()) {
          std::set<std::string> seen;
          for (const RawVacancy& v : vacancies) {
            if (in_window(v, WindowQuery{job, v.location, now, engine.window_months})) seen.insert(v.location);
          }
          locations.assign(seen.begin(), seen.end());
        }
        for (const std::string& location : locations) {
          const WindowQuery q{job, location, now, engine.window_months};
          const RateMap rates = model ? occurrence_rates(vacancies, q, skills, *model)
                                      : occurrence_rates(vacancies, q, skills, by_heading);
          JobSkillProfile prior;
          for (const auto& p : previous) {
            if (p.job == job && p.location == normalize_location(location)) prior = p;
          }
          profiles.push_back(refresh_profile(prior, job, normalize_location(location), normalize_rates(rates), now,
                                             engine.alpha, engine.top_k));
        }
      }
      auto out = open_out(imp_out);
      write_profiles(out, profiles);
      std::cout << Json{{"profiles", profiles.size()}}.dump() << '\n';
    } else if (serve->parsed()) {
      const Json doc = resolve(serve_common);
      ServiceConfig config = service_config(doc);
      if (serve_port) config.port = *serve_port;
      if (!serve_data_dir.empty()) config.data_dir = serve_data_dir;
      Service service(config, engine_config(doc));
      service.start();
      std::cerr << "listening on " << config.host << ":" << service.port() << " (recovered "
                << service.recovery().replayed << " events"
                << (service.recovery().from_snapshot ? " after snapshot" : "") << ")\n";
      std::signal(SIGINT, [](int) { g_interrupted = true; });
      std::signal(SIGTERM, [](int) { g_interrupted = true; });
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      service.stop();
      service.snapshot();
    } else if (simulate->parsed()) {
      SimConfig config = sim_config(resolve(sim_common));
      if (sim_common.seed) config.seed = *sim_common.seed;
      if (sim_steps) config.steps = *sim_steps;
      if (sim_learners) config.n_learners = *sim_learners;
      if (sim_oers) config.n_oers = *sim_oers;
      if (sim_noise) config.noise = *sim_noise;
      try {
        config.validate();
      } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
      }
      const SimReport report = run_sim(config);
      auto out = open_out(sim_out);
      write_sim_metrics(out, report);
      const std::size_t n = report.steps.size();
      const std::size_t w = std::min<std::size_t>(20, n);
      auto window = [&](std::size_t b, std::size_t e) {
        auto v = report.window_satisfaction(b, e);
        return v ? Json(*v) : Json(nullptr);
      };
      std::cout << Json{{"steps", n},
                        {"first_window_satisfaction", window(0, w)},
                        {"final_window_satisfaction", window(n - w, n)},
                        {"max_final_l1", report.max_final_l1()}}
                       .dump()
                << '\n';
    } else if (batch->parsed()) {
      const Json doc = resolve(batch_common);
      ServiceConfig config = service_config(doc);
      if (!batch_data_dir.empty()) config.data_dir = batch_data_dir;
      Store store(config.data_dir);
      Engine engine(engine_config(doc));
      engine.set_importance_source(load_importance_source(config));
      recover(store, engine);
      engine.set_journal([&store](const Json& e) { store.append(e); });
      const Timestamp end = batch_end.empty() ? system_clock()() : parse_time(batch_end);
      const BatchReport report = engine.run_batch(end);
      engine.inspect([&](const EngineState& s) { store.write_snapshot(s, end); });
      std::cout << Json(report).dump() << '\n';
    }
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return kUsage;
  } catch (const SchemaError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const IngestError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const PersistenceError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kDataError;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
