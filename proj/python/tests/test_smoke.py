import math
import pathlib
import random

import pytest

import oerrec

FIXTURES = pathlib.Path(__file__).resolve().parents[2] / "tests" / "fixtures"
NOW = 1_720_000_000


def profile(job="data scientist", location="london"):
    entries = [
        {"skill": "sql", "job": job, "location": location, "importance": 60.0, "last_updated": None},
        {"skill": "python", "job": job, "location": location, "importance": 40.0, "last_updated": None},
    ]
    return {"job": job, "location": location, "entries": entries}


def draft(i, skill, level, **props):
    return {"oer_id": f"oer{i}", "title": f"t{i}", "resource": "video" if i % 2 else "text",
            "skill": skill, "level": level, **props}


def seeded_engine():
    engine = oerrec.Engine()
    engine.import_profiles([profile()], NOW)
    drafts = [draft(i, "sql", 10.0 * (i % 4), how_long=20.0 * (i % 5), quality=50.0) for i in range(8)]
    drafts += [draft(100 + i, "python", 20.0, quality=70.0) for i in range(3)]
    assert engine.import_drafts(drafts, NOW) == 11
    return engine


def test_preprocess_lowercases_and_drops_stop_words():
    sentences = oerrec.preprocess("We need Python and SQL skills. The team is great!")
    assert len(sentences) == 2
    assert "python" in sentences[0]
    assert "the" not in sentences[1]


def test_classifier_separates_disjoint_vocabularies():
    rng = random.Random(3)
    pos, neg = ["python", "sql", "spark", "docker"], ["salary", "pension", "holiday", "canteen"]
    data = [(1, rng.sample(pos, 2)) if i % 3 == 0 else (0, rng.sample(neg, 2)) for i in range(120)]
    model = oerrec.train_classifier(data[:90], ["classifier.seed=5"])
    report = model.evaluate(data[90:])
    assert report["balanced_accuracy"] >= 0.95
    label, probability = model.predict(["python", "spark"])
    assert label == 1 and 0.5 < probability <= 1.0
    assert model == oerrec.train_classifier(data[:90], ["classifier.seed=5"])


def test_classifier_round_trips_through_a_file(tmp_path):
    data = [(1, ["sql"]), (0, ["salary"])] * 10
    model = oerrec.train_classifier(data, ["classifier.epochs=3"])
    model.save(str(tmp_path / "m.model"))
    assert oerrec.Classifier.load(str(tmp_path / "m.model")) == model


def test_tfidf_matches_an_inline_oracle():
    docs = [["python", "sql"], ["python", "python"], ["excel"]]
    terms = {t: (score, df) for t, score, df in oerrec.extract_skill_terms(docs, min_df=1)}
    assert terms["python"][1] == 2
    assert terms["python"][0] == pytest.approx(3 * math.log(3 / 2), abs=1e-12)
    assert "excel" not in dict((t, 0) for t, _, _ in oerrec.extract_skill_terms(docs, min_df=2))


def test_similarity_bounds_and_symmetry():
    engine = seeded_engine()
    a = engine.create_learner("data scientist", NOW, {"location": "London", "gender": "f"})
    b = engine.create_learner("data scientist", NOW, {"location": "Leeds", "gender": "f"})
    s = oerrec.similarity(a, b)
    assert 0.0 <= s <= 1.0
    assert s == oerrec.similarity(b, a)
    assert oerrec.similarity(a, a) == 1.0


def test_relevance_and_decay():
    assert oerrec.relevance(0, 0) == 1.0
    assert oerrec.relevance(4, 1) == 0.75
    assert oerrec.decay_update(50.0, 80.0, 0.7) == pytest.approx(71.0)
    assert oerrec.decay_update(None, 80.0, 0.7) == 80.0


def test_engine_feedback_loop_and_batch():
    engine = seeded_engine()
    user = engine.create_learner("data scientist", NOW, {"location": "London"}, {"sql": 20})["user_id"]
    outcome = engine.recommendation_for(user, NOW + 1)
    assert outcome["kind"] == "recommendation"
    rid = outcome["recommendation"]["recommendation_id"]
    result = engine.rate(rid, 5, NOW + 2)
    assert result["recommendation"]["status"] == "rated"
    assert result["learner"]["skill_levels"]["sql"] > 20
    with pytest.raises(oerrec.StateError):
        engine.rate(rid, 4, NOW + 3)
    with pytest.raises(oerrec.NotFound):
        engine.learner("u404")
    with pytest.raises(oerrec.InvalidArgument):
        engine.rate(engine.recommendation_for(user, NOW + 4)["recommendation"]["recommendation_id"], 9, NOW + 5)
    report = engine.run_batch(NOW + 86_400)
    assert report["refits"] == 1

    copy = oerrec.Engine()
    copy.restore(engine.state())
    assert copy.state() == engine.state()
    assert engine.jobs("data") == ["data scientist"]


def test_config_validation():
    assert oerrec.config()["engine"]["alpha"] == 0.7
    with pytest.raises(oerrec.ConfigError):
        oerrec.Engine(["engine.alpha=0.2"])
    with pytest.raises(oerrec.ConfigError):
        oerrec.config(overrides=["engine.nope=1"])


def test_simulation_converges_without_noise():
    summary = oerrec.simulate(["sim.seed=1"])
    assert summary["steps"] == 200
    assert summary["final_window_satisfaction"] > summary["first_window_satisfaction"]
    assert summary["max_final_l1"] <= 60.0


def test_label_vacancies_reads_the_fixture_corpus():
    labeled = oerrec.label_vacancies(str(FIXTURES / "vacancies10.csv"))
    assert {label for label, _ in labeled} == {0, 1}
