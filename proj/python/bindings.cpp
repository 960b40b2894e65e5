#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "oerrec/catalog.hpp"
#include "oerrec/classifier.hpp"
#include "oerrec/config.hpp"
#include "oerrec/engine.hpp"
#include "oerrec/error.hpp"
#include "oerrec/importance.hpp"
#include "oerrec/learner.hpp"
#include "oerrec/serialize.hpp"
#include "oerrec/sim.hpp"
#include "oerrec/text.hpp"
#include "oerrec/tfidf.hpp"

namespace py = pybind11;
using namespace oerrec;

namespace {

// Dicts cross the boundary as JSON text.
Json to_cpp(const py::object& o) {
  const auto dumps = py::module_::import("json").attr("dumps");
  return Json::parse(dumps(o).cast<std::string>());
}

py::object to_py(const Json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

template <class T>
T from_py(const py::object& o) {
  return to_cpp(o).get<T>();
}

EnvLookup no_env() {
  return [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
}

Json resolved(const std::string& file, const std::vector<std::string>& overrides) {
  return resolve_config(file, no_env(), overrides);
}

CleanSentence sentence_of(const std::vector<std::string>& tokens) {
  CleanSentence s;
  s.tokens = tokens;
  return s;
}

std::vector<LabeledSentence> labeled_of(const std::vector<std::pair<int, std::vector<std::string>>>& data) {
  std::vector<LabeledSentence> out;
  out.reserve(data.size());
  for (const auto& [label, tokens] : data) out.push_back({sentence_of(tokens), label});
  return out;
}

py::dict report_dict(const EvalReport& r) {
  py::dict d;
  d["balanced_accuracy"] = r.balanced_accuracy;
  d["precision"] = r.precision;
  d["recall"] = r.recall;
  d["confusion"] = r.confusion;
  return d;
}

Json feedback_json(const FeedbackResult& f) {
  return {{"recommendation", f.recommendation}, {"learner", f.learner}, {"next", f.next}};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Labour-market driven OER recommender";

  // Later registrations are tried first, so the base goes first.
  const auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base);
  py::register_exception<NotFound>(m, "NotFound", base);
  py::register_exception<StateError>(m, "StateError", base);

  m.def("config", [](const std::string& file, const std::vector<std::string>& overrides) {
    return to_py(resolved(file, overrides));
  }, py::arg("file") = "", py::arg("overrides") = std::vector<std::string>{});

  m.def("preprocess", [](const std::string& text) {
    std::vector<std::vector<std::string>> out;
    for (auto& s : preprocess(text)) out.push_back(std::move(s.tokens));
    return out;
  }, py::arg("text"));

  m.def("label_vacancies", [](const std::string& csv_path) {
    std::vector<std::pair<int, std::vector<std::string>>> out;
    for (auto& s : label_corpus(load_vacancies(csv_path).vacancies)) out.emplace_back(s.label, std::move(s.sentence.tokens));
    return out;
  }, py::arg("csv_path"));

  py::class_<ClassifierModel>(m, "Classifier")
      .def("predict", [](const ClassifierModel& model, const std::vector<std::string>& tokens) {
        const Prediction p = predict(model, sentence_of(tokens));
        return std::make_pair(p.label, p.probability);
      }, py::arg("tokens"))
      .def("evaluate", [](const ClassifierModel& model, const std::vector<std::pair<int, std::vector<std::string>>>& data) {
        return report_dict(evaluate(model, labeled_of(data)));
      }, py::arg("sentences"))
      .def("save", [](const ClassifierModel& model, const std::string& path) { save_model(path, model); }, py::arg("path"))
      .def_static("load", [](const std::string& path) { return load_model(path); }, py::arg("path"))
      .def("__eq__", [](const ClassifierModel& a, const ClassifierModel& b) { return a == b; });

  m.def("train_classifier", [](const std::vector<std::pair<int, std::vector<std::string>>>& data,
                               const std::vector<std::string>& overrides) {
    const ClassifierHyper hyper = classifier_config(resolved("", overrides));
    const auto labeled = labeled_of(data);
    py::gil_scoped_release release;
    return train_classifier(labeled, hyper);
  }, py::arg("sentences"), py::arg("overrides") = std::vector<std::string>{});

  m.def("extract_skill_terms", [](const std::vector<std::vector<std::string>>& docs, std::size_t min_df) {
    std::vector<CleanSentence> sentences;
    for (std::size_t i = 0; i < docs.size(); ++i) {
      sentences.push_back(sentence_of(docs[i]));
      sentences.back().source_vacancy = std::to_string(i);
    }
    std::vector<std::tuple<std::string, double, long long>> out;
    for (const auto& t : extract_skill_terms(sentences, min_df)) out.emplace_back(t.term, t.tfidf_score, t.document_frequency);
    return out;
  }, py::arg("documents"), py::arg("min_df") = 3);

  m.def("similarity", [](const py::object& a, const py::object& b, const py::object& weights) {
    const EqualityWeights w = weights.is_none() ? EqualityWeights::uniform() : from_py<EqualityWeights>(weights);
    return similarity(from_py<LearnerProfile>(a), from_py<LearnerProfile>(b), w);
  }, py::arg("a"), py::arg("b"), py::arg("weights") = py::none());

  m.def("relevance", [](long long total, long long irrelevant) {
    OERRecord r;
    r.total_recom = total;
    r.irrelev_count = irrelevant;
    return relevance(r);
  }, py::arg("total_recom"), py::arg("irrelev_count"));

  m.def("decay_update", [](std::optional<double> old, double fresh, double alpha) {
    return decay_update(old, fresh, alpha);
  }, py::arg("old"), py::arg("new_rate"), py::arg("alpha"));

  m.def("refit_properties", [](const py::object& oer, const py::list& raters) {
    std::vector<Rater> rs;
    for (const auto& r : raters) {
      const Json j = to_cpp(py::reinterpret_borrow<py::object>(r));
      rs.push_back({j.at("profile").get<LearnerProfile>(), j.at("event").get<RatingEvent>()});
    }
    const RefitResult res = refit_properties(from_py<OERRecord>(oer), rs);
    return to_py({{"record", res.record}, {"initial_loss", res.initial_loss},
                  {"final_loss", res.final_loss}, {"iterations", res.iterations}});
  }, py::arg("oer"), py::arg("raters"));

  py::class_<Engine>(m, "Engine")
      .def(py::init([](const std::vector<std::string>& overrides) {
        return std::make_unique<Engine>(engine_config(resolved("", overrides)));
      }), py::arg("overrides") = std::vector<std::string>{})
      .def("import_drafts", [](Engine& e, const py::object& drafts, Timestamp now) {
        return e.import_drafts(from_py<std::vector<OerDraft>>(drafts), now);
      }, py::arg("drafts"), py::arg("now"))
      .def("import_profiles", [](Engine& e, const py::object& profiles, Timestamp now) {
        e.import_profiles(from_py<std::vector<JobSkillProfile>>(profiles), now);
      }, py::arg("profiles"), py::arg("now"))
      .def("create_learner", [](Engine& e, const std::string& job, Timestamp now, const py::object& personal,
                                const std::map<std::string, double>& skill_levels) {
        const PersonalInfo info = personal.is_none() ? PersonalInfo{} : from_py<PersonalInfo>(personal);
        return to_py(e.create_learner(NewLearner{job, info, skill_levels}, now));
      }, py::arg("job"), py::arg("now"), py::arg("personal") = py::none(),
         py::arg("skill_levels") = std::map<std::string, double>{})
      .def("set_skill_levels", [](Engine& e, const std::string& user, const std::map<std::string, double>& levels,
                                  Timestamp now) { return to_py(e.set_skill_levels(user, levels, now)); },
           py::arg("user_id"), py::arg("levels"), py::arg("now"))
      .def("recommendation_for", [](Engine& e, const std::string& user, Timestamp now) {
        return to_py(e.recommendation_for(user, now));
      }, py::arg("user_id"), py::arg("now"))
      .def("rate", [](Engine& e, const std::string& rid, int stars, Timestamp now) {
        return to_py(feedback_json(e.rate(rid, stars, now)));
      }, py::arg("recommendation_id"), py::arg("stars"), py::arg("now"))
      .def("mark_irrelevant", [](Engine& e, const std::string& rid, Timestamp now) {
        return to_py(feedback_json(e.mark_irrelevant(rid, now)));
      }, py::arg("recommendation_id"), py::arg("now"))
      .def("change", [](Engine& e, const std::string& rid, Timestamp now) {
        return to_py(feedback_json(e.change(rid, now)));
      }, py::arg("recommendation_id"), py::arg("now"))
      .def("run_batch", [](Engine& e, Timestamp now) { return to_py(e.run_batch(now)); }, py::arg("now"))
      .def("learner", [](const Engine& e, const std::string& user) { return to_py(e.learner(user)); }, py::arg("user_id"))
      .def("catalog", [](const Engine& e) { return to_py(e.catalog()); })
      .def("jobs", &Engine::jobs, py::arg("query") = "")
      .def("state", [](const Engine& e) { return to_py(e.state()); })
      .def("restore", [](Engine& e, const py::object& state) { e.restore(from_py<EngineState>(state)); },
           py::arg("state"));

  m.def("simulate", [](const std::vector<std::string>& overrides) {
    const SimConfig config = sim_config(resolved("", overrides));
    SimReport r;
    {
      py::gil_scoped_release release;
      r = run_sim(config);
    }
    const std::size_t n = r.steps.size(), w = std::min<std::size_t>(20, n);
    py::dict d;
    d["steps"] = n;
    d["first_window_satisfaction"] = r.window_satisfaction(0, w);
    d["final_window_satisfaction"] = r.window_satisfaction(n - w, n);
    d["max_final_l1"] = r.max_final_l1();
    d["satisfaction"] = r.satisfaction_series();
    d["cosine"] = r.cosine_series();
    d["irrelevant"] = r.irrelevant;
    d["changed"] = r.changed;
    d["final_state"] = to_py(r.final_state);
    return d;
  }, py::arg("overrides") = std::vector<std::string>{});
}
