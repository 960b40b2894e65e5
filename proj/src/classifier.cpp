#include "oerrec/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "oerrec/error.hpp"
#include "oerrec/format.hpp"
#include "oerrec/random.hpp"

namespace oerrec {

namespace {

constexpr std::string_view kMagic = "OERREC-CLASSIFIER";
constexpr int kFormatVersion = 1;

// Indices of the embedding rows feeding one sentence.
using InputRows = std::vector<std::size_t>;

void add_scaled(Vector& acc, const Vector& v, double scale) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += scale * v[i];
}

std::array<double, 2> logits(const ClassifierModel& model, const Vector& h) {
  std::array<double, 2> z = model.bias;
  for (int c = 0; c < 2; ++c) {
    for (std::size_t i = 0; i < h.size(); ++i) z[c] += model.weights[c][i] * h[i];
  }
  return z;
}

void check_hyper(const ClassifierHyper& hyper) {
  if (hyper.dimension < 2) throw TrainingError("dimension must be >= 2");
  if (hyper.min_n < 1 || hyper.max_n < hyper.min_n) throw TrainingError("invalid n-gram range");
  if (hyper.epochs < 1) throw TrainingError("epochs must be >= 1");
  if (!(hyper.learning_rate > 0.0)) throw TrainingError("learning rate must be positive");
}

void write_vector(std::ostream& out, const Vector& v) {
  for (double x : v) out << ' ' << format_double(x);
}

Vector read_vector(std::istringstream& in, int dimension, const std::string& context) {
  Vector v(static_cast<std::size_t>(dimension));
  std::string field;
  for (double& x : v) {
    if (!(in >> field)) throw IngestError("model file: short vector in " + context);
    x = parse_double(field);
  }
  if (in >> field) throw IngestError("model file: extra values in " + context);
  return v;
}

std::string next_line(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw IngestError(std::string("model file truncated before ") + what);
  return line;
}

}  // namespace

std::vector<std::string> char_ngrams(std::string_view token, int min_n, int max_n) {
  std::string wrapped;
  wrapped.reserve(token.size() + 2);
  wrapped.push_back('<');
  wrapped.append(token);
  wrapped.push_back('>');
  std::vector<std::string> grams;
  const int len = static_cast<int>(wrapped.size());
  for (int n = min_n; n <= max_n; ++n) {
    if (n >= len) break;
    for (int start = 0; start + n <= len; ++start) grams.push_back(wrapped.substr(start, n));
  }
  return grams;
}

Vector embed_sentence(const ClassifierModel& model, const CleanSentence& sentence) {
  const EmbeddingTable& table = model.embeddings;
  Vector sum(static_cast<std::size_t>(table.dimension), 0.0);
  std::size_t count = 0;
  for (const std::string& token : sentence.tokens) {
    if (auto it = table.word_vectors.find(token); it != table.word_vectors.end()) {
      add_scaled(sum, it->second, 1.0);
      ++count;
    }
    for (const std::string& gram : char_ngrams(token, table.min_n, table.max_n)) {
      if (auto it = table.subword_vectors.find(gram); it != table.subword_vectors.end()) {
        add_scaled(sum, it->second, 1.0);
        ++count;
      }
    }
  }
  if (count > 0) {
    for (double& x : sum) x /= static_cast<double>(count);
  }
  return sum;
}

std::array<double, 2> softmax(const std::array<double, 2>& z) {
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m);
  const double e1 = std::exp(z[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

std::array<double, 2> class_probabilities(const ClassifierModel& model, const Vector& h) {
  return softmax(logits(model, h));
}

Prediction predict(const ClassifierModel& model, const CleanSentence& sentence) {
  const EmbeddingTable& table = model.embeddings;
  bool known = false;
  for (const std::string& token : sentence.tokens) {
    if (table.word_vectors.count(token)) {
      known = true;
      break;
    }
    for (const std::string& gram : char_ngrams(token, table.min_n, table.max_n)) {
      if (table.subword_vectors.count(gram)) {
        known = true;
        break;
      }
    }
    if (known) break;
  }
  if (!known) return Prediction{0, 0.5};
  const auto p = class_probabilities(model, embed_sentence(model, sentence));
  const int label = p[1] > p[0] ? 1 : 0;
  return Prediction{label, p[label]};
}

std::array<double, 2> class_weights(std::span<const LabeledSentence> data) {
  std::array<double, 2> counts{0.0, 0.0};
  for (const auto& s : data) counts[s.label == 1 ? 1 : 0] += 1.0;
  const double n = counts[0] + counts[1];
  std::array<double, 2> w{1.0, 1.0};
  for (int c = 0; c < 2; ++c) {
    if (counts[c] > 0) w[c] = n / (2.0 * counts[c]);
  }
  return w;
}

OutputGradient output_gradient(const ClassifierModel& model, std::span<const LabeledSentence> batch,
                               const std::array<double, 2>& weights_per_class) {
  const auto dim = static_cast<std::size_t>(model.embeddings.dimension);
  OutputGradient g;
  g.weights = {Vector(dim, 0.0), Vector(dim, 0.0)};
  for (const auto& s : batch) {
    const Vector h = embed_sentence(model, s.sentence);
    const auto p = class_probabilities(model, h);
    const int y = s.label == 1 ? 1 : 0;
    const double w = weights_per_class[y];
    g.loss -= w * std::log(p[y]);
    for (int c = 0; c < 2; ++c) {
      const double dz = w * (p[c] - (c == y ? 1.0 : 0.0));
      g.bias[c] += dz;
      add_scaled(g.weights[c], h, dz);
    }
  }
  return g;
}

ClassifierModel train_classifier(std::span<const LabeledSentence> data, const ClassifierHyper& hyper) {
  check_hyper(hyper);
  if (data.empty()) throw TrainingError("no training data");
  const auto cw = class_weights(data);
  {
    bool has0 = false, has1 = false;
    for (const auto& s : data) (s.label == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw TrainingError("training data must contain both labels");
  }

  const auto dim = static_cast<std::size_t>(hyper.dimension);

  // Vocabulary in sorted order so initialisation is independent of input order.
  std::map<std::string, std::size_t> words;
  std::map<std::string, std::size_t> grams;
  for (const auto& s : data) {
    for (const auto& token : s.sentence.tokens) {
      words.emplace(token, 0);
      for (auto& gram : char_ngrams(token, hyper.min_n, hyper.max_n)) grams.emplace(std::move(gram), 0);
    }
  }
  std::size_t next = 0;
  for (auto& [_, index] : words) index = next++;
  for (auto& [_, index] : grams) index = next++;

  Rng rng(hyper.seed);
  const double bound = 1.0 / static_cast<double>(dim);
  std::vector<Vector> rows(next, Vector(dim));
  for (Vector& row : rows) {
    for (double& x : row) x = rng.uniform(-bound, bound);
  }

  std::vector<InputRows> inputs;
  inputs.reserve(data.size());
  for (const auto& s : data) {
    InputRows r;
    for (const auto& token : s.sentence.tokens) {
      r.push_back(words.at(token));
      for (const auto& gram : char_ngrams(token, hyper.min_n, hyper.max_n)) r.push_back(grams.at(gram));
    }
    inputs.push_back(std::move(r));
  }

  ClassifierModel model;
  model.embeddings.dimension = hyper.dimension;
  model.embeddings.min_n = hyper.min_n;
  model.embeddings.max_n = hyper.max_n;
  model.weights = {Vector(dim, 0.0), Vector(dim, 0.0)};
  model.meta = TrainingMeta{hyper.epochs, hyper.learning_rate, hyper.seed};

  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const double total_steps = static_cast<double>(hyper.epochs) * static_cast<double>(data.size());
  double step = 0.0;
  Vector h(dim), grad_h(dim);

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t idx : order) {
      const double lr = hyper.learning_rate * (1.0 - step / total_steps);
      step += 1.0;
      const InputRows& in = inputs[idx];
      if (in.empty()) continue;
      std::fill(h.begin(), h.end(), 0.0);
      for (std::size_t r : in) add_scaled(h, rows[r], 1.0);
      const double inv = 1.0 / static_cast<double>(in.size());
      for (double& x : h) x *= inv;

      const auto p = class_probabilities(model, h);
      const int y = data[idx].label == 1 ? 1 : 0;
      std::array<double, 2> dz{};
      for (int c = 0; c < 2; ++c) dz[c] = cw[y] * (p[c] - (c == y ? 1.0 : 0.0));

      for (std::size_t i = 0; i < dim; ++i) {
        grad_h[i] = dz[0] * model.weights[0][i] + dz[1] * model.weights[1][i];
      }
      for (int c = 0; c < 2; ++c) {
        add_scaled(model.weights[c], h, -lr * dz[c]);
        model.bias[c] -= lr * dz[c];
      }
      for (std::size_t r : in) add_scaled(rows[r], grad_h, -lr * inv);
    }
  }

  for (auto& [word, index] : words) model.embeddings.word_vectors.emplace(word, std::move(rows[index]));
  for (auto& [gram, index] : grams) model.embeddings.subword_vectors.emplace(gram, std::move(rows[index]));
  return model;
}

EvalReport evaluate_labels(std::span<const int> actual, std::span<const int> predicted) {
  if (actual.size() != predicted.size()) throw InvalidArgument("label sequences differ in length");
  if (actual.empty()) throw InvalidArgument("empty test set");
  EvalReport report;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    ++report.confusion[actual[i] == 1 ? 1 : 0][predicted[i] == 1 ? 1 : 0];
  }
  const auto& m = report.confusion;
  const long long pos = m[1][0] + m[1][1];
  const long long neg = m[0][0] + m[0][1];
  if (pos == 0 || neg == 0) throw InvalidArgument("test set must contain both classes");
  const double recall_pos = static_cast<double>(m[1][1]) / static_cast<double>(pos);
  const double recall_neg = static_cast<double>(m[0][0]) / static_cast<double>(neg);
  report.recall = recall_pos;
  const long long predicted_pos = m[0][1] + m[1][1];
  report.precision = predicted_pos > 0 ? static_cast<double>(m[1][1]) / static_cast<double>(predicted_pos) : 0.0;
  report.balanced_accuracy = (recall_pos + recall_neg) / 2.0;
  return report;
}

EvalReport evaluate(const ClassifierModel& model, std::span<const LabeledSentence> test) {
  std::vector<int> actual, predicted;
  actual.reserve(test.size());
  predicted.reserve(test.size());
  for (const auto& s : test) {
    actual.push_back(s.label);
    predicted.push_back(predict(model, s.sentence).label);
  }
  return evaluate_labels(actual, predicted);
}

void save_model(std::ostream& out, const ClassifierModel& model) {
  const EmbeddingTable& t = model.embeddings;
  out << kMagic << '\n';
  out << "version " << kFormatVersion << '\n';
  out << "dimension " << t.dimension << '\n';
  out << "ngram_range " << t.min_n << ' ' << t.max_n << '\n';
  out << "training " << model.meta.epochs << ' ' << format_double(model.meta.learning_rate) << ' '
      << model.meta.seed << '\n';
  out << "bias " << format_double(model.bias[0]) << ' ' << format_double(model.bias[1]) << '\n';
  for (int c = 0; c < 2; ++c) {
    out << "weights" << c;
    write_vector(out, model.weights[c]);
    out << '\n';
  }
  out << "words " << t.word_vectors.size() << '\n';
  for (const auto& [word, v] : t.word_vectors) {
    out << word;
    write_vector(out, v);
    out << '\n';
  }
  out << "subwords " << t.subword_vectors.size() << '\n';
  for (const auto& [gram, v] : t.subword_vectors) {
    out << gram;
    write_vector(out, v);
    out << '\n';
  }
  out << "end\n";
}

ClassifierModel load_model(std::istream& in) {
  ClassifierModel model;
  EmbeddingTable& t = model.embeddings;
  if (next_line(in, "magic") != kMagic) throw IngestError("not a classifier model file");

  auto keyed = [&](const char* key) {
    std::istringstream line(next_line(in, key));
    std::string k;
    line >> k;
    if (k != key) throw IngestError(std::string("model file: expected '") + key + "', got '" + k + "'");
    return line;
  };
  {
    auto line = keyed("version");
    int version = 0;
    line >> version;
    if (version != kFormatVersion) {
      throw IngestError("model file: unsupported version " + std::to_string(version));
    }
  }
  keyed("dimension") >> t.dimension;
  if (t.dimension < 1) throw IngestError("model file: bad dimension");
  {
    auto line = keyed("ngram_range");
    line >> t.min_n >> t.max_n;
  }
  {
    auto line = keyed("training");
    std::string lr;
    line >> model.meta.epochs >> lr >> model.meta.seed;
    model.meta.learning_rate = parse_double(lr);
  }
  {
    auto line = keyed("bias");
    std::string b0, b1;
    line >> b0 >> b1;
    model.bias = {parse_double(b0), parse_double(b1)};
  }
  for (int c = 0; c < 2; ++c) {
    const std::string key = "weights" + std::to_string(c);
    auto line = keyed(key.c_str());
    model.weights[c] = read_vector(line, t.dimension, key);
  }
  auto read_table = [&](const char* key, std::map<std::string, Vector>& table) {
    std::size_t n = 0;
    keyed(key) >> n;
    for (std::size_t i = 0; i < n; ++i) {
      std::istringstream line(next_line(in, key));
      std::string name;
      line >> name;
      table.emplace(name, read_vector(line, t.dimension, name));
    }
  };
  read_table("words", t.word_vectors);
  read_table("subwords", t.subword_vectors);
  if (next_line(in, "end") != "end") throw IngestError("model file: missing end marker");
  return model;
}

void save_model(const std::string& path, const ClassifierModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write model file: " + path);
  save_model(out, model);
  if (!out) throw IngestError("failed writing model file: " + path);
}

ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot read model file: " + path);
  return load_model(in);
}

Split train_test_split(std::span<const LabeledSentence> data, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0.0 || test_fraction >= 1.0) throw InvalidArgument("test fraction must be in [0, 1)");
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(data.size())));
  Split split;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? split.test : split.train).push_back(data[order[i]]);
  }
  return split;
}

}  // namespace oerrec
