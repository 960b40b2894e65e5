from ._core import (
    Classifier,
    ConfigError,
    Engine,
    Error,
    InvalidArgument,
    NotFound,
    StateError,
    config,
    decay_update,
    extract_skill_terms,
    label_vacancies,
    preprocess,
    refit_properties,
    relevance,
    similarity,
    simulate,
    train_classifier,
)

__all__ = [
    "Classifier",
    "ConfigError",
    "Engine",
    "Error",
    "InvalidArgument",
    "NotFound",
    "StateError",
    "config",
    "decay_update",
    "extract_skill_terms",
    "label_vacancies",
    "preprocess",
    "refit_properties",
    "relevance",
    "similarity",
    "simulate",
    "train_classifier",
]
