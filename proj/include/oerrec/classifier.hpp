#pragma once

// Skill-sentence classifier: sentence vectors are the mean of word and
// character n-gram embeddings, fed to a two-class softmax layer. Embeddings
// and the output layer are trained jointly by SGD on weighted cross-entropy.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "oerrec/text.hpp"

namespace oerrec {

using Vector = std::vector<double>;

struct EmbeddingTable {
  int dimension = 0;
  int min_n = 3;
  int max_n = 6;
  std::map<std::string, Vector> word_vectors;
  /// Keyed by the character n-gram itself ("<ma", "ach", ...).
  std::map<std::string, Vector> subword_vectors;

  bool operator==(const EmbeddingTable&) const = default;
};

struct TrainingMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const TrainingMeta&) const = default;
};

struct ClassifierModel {
  EmbeddingTable embeddings;
  std::array<Vector, 2> weights;  // row per class
  std::array<double, 2> bias{0.0, 0.0};
  TrainingMeta meta;

  bool operator==(const ClassifierModel&) const = default;
};

struct ClassifierHyper {
  int dimension = 50;
  int min_n = 3;
  int max_n = 6;
  int epochs = 25;
  double learning_rate = 0.5;  // decays linearly to 0 over training
  std::uint64_t seed = 1;
};

struct Prediction {
  int label = 0;
  double probability = 0.5;
};

struct EvalReport {
  double balanced_accuracy = 0.0;
  double precision = 0.0;  // of the positive class
  double recall = 0.0;     // of the positive class
  /// confusion[actual][predicted]
  std::array<std::array<long long, 2>, 2> confusion{};
};

/// Character n-grams of "<token>" with length in [min_n, max_n], excluding
/// the bracketed token itself.
std::vector<std::string> char_ngrams(std::string_view token, int min_n, int max_n);

/// Mean over the token word vectors and their known subword vectors; the
/// zero vector when nothing is known.
Vector embed_sentence(const ClassifierModel& model, const CleanSentence& sentence);

std::array<double, 2> softmax(const std::array<double, 2>& logits);
std::array<double, 2> class_probabilities(const ClassifierModel& model, const Vector& sentence_vector);

/// Sentences with no known token or subword predict {0, 0.5}.
Prediction predict(const ClassifierModel& model, const CleanSentence& sentence);

/// Throws TrainingError on empty or single-class data or dimension < 2.
ClassifierModel train_classifier(std::span<const LabeledSentence> data, const ClassifierHyper& hyper = {});

/// Inverse-frequency weights n / (2 * n_c).
std::array<double, 2> class_weights(std::span<const LabeledSentence> data);

/// Weighted cross-entropy over `batch` and its gradient with respect to the
/// output layer, embeddings held fixed.
struct OutputGradient {
  double loss = 0.0;
  std::array<Vector, 2> weights;
  std::array<double, 2> bias{0.0, 0.0};
};
OutputGradient output_gradient(const ClassifierModel& model, std::span<const LabeledSentence> batch,
                               const std::array<double, 2>& weights_per_class);

EvalReport evaluate(const ClassifierModel& model, std::span<const LabeledSentence> test);
/// Metrics from parallel label sequences; throws InvalidArgument when
/// `actual` is empty or holds a single class.
EvalReport evaluate_labels(std::span<const int> actual, std::span<const int> predicted);

/// Text model format (see README): magic line, version, dimension, n-gram
/// range, training metadata, output layer, then word and subword tables.
void save_model(std::ostream& out, const ClassifierModel& model);
ClassifierModel load_model(std::istream& in);
void save_model(const std::string& path, const ClassifierModel& model);
ClassifierModel load_model(const std::string& path);

/// Deterministic split: shuffles with `seed` and puts round(test_fraction * n)
/// sentences in the test part.
struct Split {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> test;
};
Split train_test_split(std::span<const LabeledSentence> data, double test_fraction, std::uint64_t seed);

}  // namespace oerrec
