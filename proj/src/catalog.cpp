#include "oerrec/catalog.hpp"

#include "httplib.h"

#include <algorithm>
#include <limits>
#include <cmath>
#include <fstream>
#include <map>
#include <regex>
#include <sstream>

#include "oerrec/error.hpp"
#include "oerrec/serialize.hpp"
#include "oerrec/text.hpp"

namespace oerrec {

namespace {

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw std::invalid_argument(key);
  return it->get<std::string>();
}

std::optional<bool> optional_bool(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_boolean()) throw std::invalid_argument(key);
  return it->get<bool>();
}

std::optional<RawOerRecord> parse_raw_line(const std::string& line) {
  const auto j = nlohmann::json::parse(line, nullptr, /*allow_exceptions=*/false);
  if (!j.is_object()) return std::nullopt;
  try {
    RawOerRecord r;
    r.id = optional_string(j, "id").value_or("");
    r.title = optional_string(j, "title").value_or("");
    r.subject = optional_string(j, "subject").value_or("");
    r.author = optional_string(j, "author").value_or("");
    r.url = optional_string(j, "url").value_or("");
    if (r.title.empty() || r.subject.empty() || r.url.empty()) return std::nullopt;
    r.duration = optional_string(j, "duration");
    r.level = optional_string(j, "level");
    r.reviewed = optional_bool(j, "reviewed");
    r.badge = optional_bool(j, "badge");
    if (auto it = j.find("accessibility"); it != j.end() && !it->is_null()) {
      if (!it->is_array()) return std::nullopt;
      std::vector<std::string> features;
      for (const auto& f : *it) {
        if (!f.is_string()) return std::nullopt;
        features.push_back(f.get<std::string>());
      }
      r.accessibility = std::move(features);
    }
    return r;
  } catch (const std::invalid_argument&) {
    return std::nullopt;
  }
}

double mean_of(const std::vector<const OERRecord*>& rows, double OERRecord::*field) {
  double s = 0.0;
  for (const OERRecord* r : rows) s += r->*field;
  return s / static_cast<double>(rows.size());
}

// Gradient of theta . (l, 1 - l, q, a) with respect to the free parameters (l, q, a).
std::array<double, 3> free_direction(const PropertyPoint& theta) {
  return {theta[0] - theta[1], theta[2], theta[3]};
}

PropertyPoint expand(const std::array<double, 3>& p) { return {p[0], 1.0 - p[0], p[1], p[2]}; }

double dot3(const std::array<double, 3>& a, const std::array<double, 3>& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}

struct Generator {
  std::array<double, 3> v;
  double lo;
  double hi;
};

// Minimum-norm element of { base + sum_a s_a v_a : lo_a <= s_a <= hi_a } by
// cyclic coordinate descent on the convex quadratic.
std::array<double, 3> min_norm_subgradient(std::array<double, 3> base, const std::vector<Generator>& active) {
  std::vector<double> s(active.size(), 0.0);
  std::array<double, 3> g = base;
  for (int sweep = 0; sweep < 200 && !active.empty(); ++sweep) {
    double largest_move = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
      const double vv = dot3(active[a].v, active[a].v);
      if (vv <= 0.0) continue;
      const double target = std::clamp(s[a] - dot3(g, active[a].v) / vv, active[a].lo, active[a].hi);
      const double move = target - s[a];
      if (move == 0.0) continue;
      for (int c = 0; c < 3; ++c) g[c] += move * active[a].v[c];
      s[a] = target;
      largest_move = std::max(largest_move, std::abs(move));
    }
    if (largest_move < 1e-12) break;
  }
  return g;
}

}  // namespace

// ---------------------------------------------------------------- connectors

FetchResult parse_raw_records(std::istream& in) {
  FetchResult result;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    if (auto r = parse_raw_line(line)) {
      result.records.push_back(std::move(*r));
    } else {
      ++result.skipped;
    }
  }
  return result;
}

FixtureConnector::FixtureConnector(std::string repository, std::string path)
    : repository_(std::move(repository)), path_(std::move(path)) {}

FetchResult FixtureConnector::fetch() const {
  std::ifstream in(path_);
  if (!in) throw ConnectorError(repository_, "cannot open fixture " + path_);
  return parse_raw_records(in);
}

HttpConnector::HttpConnector(std::string repository, std::string base_url, std::string path, int timeout_seconds)
    : repository_(std::move(repository)),
      base_url_(std::move(base_url)),
      path_(std::move(path)),
      timeout_seconds_(timeout_seconds) {}

FetchResult HttpConnector::fetch() const {
  httplib::Client client(base_url_);
  client.set_connection_timeout(timeout_seconds_, 0);
  client.set_read_timeout(timeout_seconds_, 0);
  auto response = client.Get(path_);
  if (!response) {
    throw ConnectorError(repository_, "unreachable endpoint " + base_url_ + path_ + " (" +
                                          httplib::to_string(response.error()) + ")");
  }
  if (response->status != 200) {
    throw ConnectorError(repository_, "endpoint returned HTTP " + std::to_string(response->status));
  }
  std::istringstream body(response->body);
  return parse_raw_records(body);
}

// ---------------------------------------------------------------- normalisation

OrdinalScale OrdinalScale::from_values(std::span<const std::string> raw_values,
                                       std::span<const std::string> ordering) {
  std::vector<std::string> order;
  for (const auto& o : ordering) order.push_back(normalize_key(o));
  auto rank = [&](const std::string& v) {
    auto it = std::find(order.begin(), order.end(), v);
    return static_cast<std::size_t>(it - order.begin());
  };
  std::set<std::string> distinct;
  for (const auto& v : raw_values) distinct.insert(normalize_key(v));
  OrdinalScale scale;
  scale.classes_.assign(distinct.begin(), distinct.end());
  std::stable_sort(scale.classes_.begin(), scale.classes_.end(),
                   [&](const std::string& a, const std::string& b) { return rank(a) < rank(b); });
  return scale;
}

double OrdinalScale::value(std::string_view raw) const {
  const std::string key = normalize_key(raw);
  auto it = std::find(classes_.begin(), classes_.end(), key);
  if (it == classes_.end()) {
    std::string known;
    for (const auto& c : classes_) known += (known.empty() ? "" : ", ") + c;
    throw InvalidArgument("unknown class '" + key + "'; known classes: {" + known + "}");
  }
  if (classes_.size() == 1) return 50.0;
  return 100.0 * static_cast<double>(it - classes_.begin()) / static_cast<double>(classes_.size() - 1);
}

double normalize_property(std::span<const std::string> raw_values, std::string_view value,
                          std::span<const std::string> ordering) {
  return OrdinalScale::from_values(raw_values, ordering).value(value);
}

std::optional<std::string> duration_class(std::string_view text) {
  static const std::regex pattern(
      R"((\d+(?:\.\d+)?)\s*(minutes?|mins?|m|hours?|hrs?|h|days?|d|weeks?|wks?|w|months?|mos?)\b)",
      std::regex::icase);
  const std::string s(text);
  std::smatch m;
  if (!std::regex_search(s, m, pattern)) return std::nullopt;
  const double amount = std::stod(m[1].str());
  const std::string unit = normalize_key(m[2].str());
  double hours = 0.0;
  switch (unit.front()) {
    case 'm': hours = unit.rfind("mo", 0) == 0 ? amount * 24.0 * 30.0 : amount / 60.0; break;
    case 'h': hours = amount; break;
    case 'd': hours = amount * 24.0; break;
    default: hours = amount * 24.0 * 7.0; break;
  }
  if (hours <= 1.0) return kDurationClasses[0];
  if (hours <= 24.0) return kDurationClasses[1];
  if (hours <= 24.0 * 7.0) return kDurationClasses[2];
  return kDurationClasses[3];
}

std::vector<OerDraft> drafts_from_raw(std::span<const RawOerRecord> records, const std::string& repository) {
  std::vector<std::string> levels, durations, qualities, accessibilities;
  std::vector<std::optional<std::string>> duration_of(records.size());
  std::vector<std::optional<std::string>> quality_of(records.size());
  std::vector<std::optional<std::string>> access_of(records.size());
  std::size_t max_features = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawOerRecord& r = records[i];
    if (r.level) levels.push_back(*r.level);
    if (r.duration) duration_of[i] = duration_class(*r.duration);
    if (duration_of[i]) durations.push_back(*duration_of[i]);
    if (r.reviewed || r.badge) {
      quality_of[i] = std::to_string(int{r.reviewed.value_or(false)} + int{r.badge.value_or(false)});
      qualities.push_back(*quality_of[i]);
    }
    if (r.accessibility) {
      access_of[i] = std::to_string(r.accessibility->size());
      accessibilities.push_back(*access_of[i]);
      max_features = std::max(max_features, r.accessibility->size());
    }
  }
  std::vector<std::string> count_order;
  for (std::size_t n = 0; n <= std::max<std::size_t>(max_features, 2); ++n) count_order.push_back(std::to_string(n));

  const auto level_scale = OrdinalScale::from_values(levels, kLevelOrdering);
  const auto duration_scale = OrdinalScale::from_values(durations, kDurationClasses);
  const auto quality_scale = OrdinalScale::from_values(qualities, count_order);
  const auto access_scale = OrdinalScale::from_values(accessibilities, count_order);

  std::vector<OerDraft> drafts;
  drafts.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    const RawOerRecord& r = records[i];
    OerDraft d;
    d.oer_id = repository + ":" + (r.id.empty() ? r.url : r.id);
    d.title = r.title;
    d.resource = repository;
    const auto sentences = preprocess(r.subject);
    d.skill = sentences.empty() ? normalize_key(r.subject) : join_tokens(sentences.front().tokens);
    d.author = r.author;
    d.url = r.url;
    if (r.level) d.level = level_scale.value(*r.level);
    if (duration_of[i]) d.how_long = duration_scale.value(*duration_of[i]);
    if (quality_of[i]) d.quality = quality_scale.value(*quality_of[i]);
    if (access_of[i]) d.accessibility = access_scale.value(*access_of[i]);
    drafts.push_back(std::move(d));
  }
  return drafts;
}

OERRecord init_oer(const OerDraft& known, std::span<const OERRecord> catalog) {
  const std::string author = normalize_key(known.author);
  std::vector<const OERRecord*> matches;
  for (const OERRecord& r : catalog) {
    if (r.oer_id != known.oer_id && r.skill == known.skill && normalize_key(r.author) == author) {
      matches.push_back(&r);
    }
  }
  if (matches.empty()) {
    for (const OERRecord& r : catalog) {
      if (r.oer_id != known.oer_id && r.skill == known.skill) matches.push_back(&r);
    }
  }
  auto fill = [&](const std::optional<double>& value, double OERRecord::*field) {
    if (value) return clamp_score(*value);
    return matches.empty() ? 50.0 : mean_of(matches, field);
  };

  OERRecord r;
  r.oer_id = known.oer_id;
  r.title = known.title;
  r.resource = known.resource;
  r.skill = known.skill;
  r.author = known.author;
  r.url = known.url;
  r.how_long = fill(known.how_long, &OERRecord::how_long);
  r.how_short = 100.0 - r.how_long;
  r.level = fill(known.level, &OERRecord::level);
  r.quality = fill(known.quality, &OERRecord::quality);
  r.accessibility = fill(known.accessibility, &OERRecord::accessibility);
  r.relevance = 1.0;
  r.total_recom = 0;
  r.irrelev_count = 0;
  r.excluded_for_skill = false;
  return r;
}

// ---------------------------------------------------------------- refit

PropertyPoint rater_weights(const LearnerProfile& p) {
  PropertyPoint t{clamp_score(p.pref_long) / 100.0, clamp_score(p.pref_short) / 100.0,
                  clamp_score(p.pref_check) / 100.0, clamp_score(p.pref_accessibility) / 100.0};
  const double sum = t[0] + t[1] + t[2] + t[3];
  if (sum <= 0.0) return {0.25, 0.25, 0.25, 0.25};
  for (double& x : t) x /= sum;
  return t;
}

double refit_loss(const PropertyPoint& x, std::span<const Rater> raters) {
  double loss = 0.0;
  for (const Rater& r : raters) {
    const PropertyPoint t = rater_weights(r.profile);
    loss += std::abs(t[0] * x[0] + t[1] * x[1] + t[2] * x[2] + t[3] * x[3] - r.event.satisfaction);
  }
  return loss;
}

PropertyPoint refit_subgradient(const PropertyPoint& x, std::span<const Rater> raters) {
  PropertyPoint g{0.0, 0.0, 0.0, 0.0};
  for (const Rater& r : raters) {
    const PropertyPoint t = rater_weights(r.profile);
    const double residual = t[0] * x[0] + t[1] * x[1] + t[2] * x[2] + t[3] * x[3] - r.event.satisfaction;
    const double sign = residual > 0.0 ? 1.0 : (residual < 0.0 ? -1.0 : 0.0);
    for (int c = 0; c < 4; ++c) g[c] += sign * t[c];
  }
  return g;
}

RefitResult refit_properties(const OERRecord& oer, std::span<const Rater> raters, const GdOptions& options) {
  RefitResult result;
  result.record = oer;
  if (raters.empty()) return result;
  if (!(options.learning_rate > 0.0) || options.max_iterations < 0 || options.tolerance < 0.0) {
    throw InvalidArgument("invalid gradient-descent options");
  }

  const std::size_t n = raters.size();
  std::vector<PropertyPoint> theta(n);
  std::vector<std::array<double, 3>> directions(n);
  std::vector<double> target(n);
  for (std::size_t i = 0; i < n; ++i) {
    theta[i] = rater_weights(raters[i].profile);
    directions[i] = free_direction(theta[i]);
    target[i] = raters[i].event.satisfaction;
  }
  auto loss_at = [&](const std::array<double, 3>& p) {
    const PropertyPoint x = expand(p);
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = theta[i];
      loss += std::abs(t[0] * x[0] + t[1] * x[1] + t[2] * x[2] + t[3] * x[3] - target[i]);
    }
    return loss;
  };

  std::array<double, 3> p{std::clamp(oer.how_long / 100.0, 0.0, 1.0), std::clamp(oer.quality / 100.0, 0.0, 1.0),
                          std::clamp(oer.accessibility / 100.0, 0.0, 1.0)};
  double loss = loss_at(p);
  result.initial_loss = loss;

  // Kink bands tried each iteration; 0 is the plain subgradient with 0 at the kink.
  static constexpr std::array<double, 6> kBands{1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 0.0};
  static constexpr int kMaxHalvings = 40;
  static constexpr int kPatience = 10;
  int small_steps = 0;

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::vector<double> residual(n);
    const PropertyPoint x = expand(p);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = theta[i];
      residual[i] = t[0] * x[0] + t[1] * x[1] + t[2] * x[2] + t[3] * x[3] - target[i];
    }

    std::optional<std::array<double, 3>> best;
    double best_loss = loss;
    for (double band : kBands) {
      std::array<double, 3> base{0.0, 0.0, 0.0};
      std::vector<Generator> active;
      for (std::size_t i = 0; i < n; ++i) {
        const bool at_kink = band > 0.0 ? std::abs(residual[i]) < band : residual[i] == 0.0;
        if (at_kink) {
          active.push_back({directions[i], -1.0, 1.0});
        } else {
          const double sign = residual[i] > 0.0 ? 1.0 : -1.0;
          for (int c = 0; c < 3; ++c) base[c] += sign * directions[i][c];
        }
      }
      // Normals of the box faces within the band.
      constexpr double kInf = std::numeric_limits<double>::infinity();
      for (int c = 0; c < 3; ++c) {
        std::array<double, 3> e{0.0, 0.0, 0.0};
        e[c] = 1.0;
        if (p[c] <= band) active.push_back({e, -kInf, 0.0});
        if (p[c] >= 1.0 - band) active.push_back({e, 0.0, kInf});
      }
      const auto g = min_norm_subgradient(base, active);
      if (dot3(g, g) < 1e-28) continue;
      double step = options.learning_rate * 4.0;
      for (int h = 0; h < kMaxHalvings; ++h, step /= 2.0) {
        std::array<double, 3> candidate;
        for (int c = 0; c < 3; ++c) candidate[c] = std::clamp(p[c] - step * g[c], 0.0, 1.0);
        const double candidate_loss = loss_at(candidate);
        if (candidate_loss < loss) {
          if (candidate_loss < best_loss) {
            best_loss = candidate_loss;
            best = candidate;
          }
          break;
        }
      }
    }
    if (!best) break;
    const double improvement = loss - best_loss;
    p = *best;
    loss = best_loss;
    ++result.iterations;
    small_steps = improvement < options.tolerance ? small_steps + 1 : 0;
    if (small_steps >= kPatience) break;
  }

  result.final_loss = loss;
  result.record.how_long = 100.0 * p[0];
  result.record.how_short = 100.0 - result.record.how_long;
  result.record.quality = 100.0 * p[1];
  result.record.accessibility = 100.0 * p[2];
  return result;
}

// ---------------------------------------------------------------- relevance

double relevance(const OERRecord& oer) {
  if (oer.total_recom <= 0) return 1.0;
  return static_cast<double>(oer.total_recom - oer.irrelev_count) / static_cast<double>(oer.total_recom);
}

std::set<std::string> exclude_below_average(std::string_view skill, std::span<OERRecord> records) {
  double sum = 0.0;
  std::size_t rated = 0;
  for (const OERRecord& r : records) {
    if (r.skill == skill && r.total_recom > 0) {
      sum += r.relevance;
      ++rated;
    }
  }
  std::set<std::string> excluded;
  if (rated == 0) {
    for (OERRecord& r : records) {
      if (r.skill == skill) r.excluded_for_skill = false;
    }
    return excluded;
  }
  const double mean = sum / static_cast<double>(rated);
  const double margin = 1e-12 * std::max(1.0, std::abs(mean));
  for (OERRecord& r : records) {
    if (r.skill != skill) continue;
    r.excluded_for_skill = r.total_recom > 0 && r.relevance < mean - margin;
    if (r.excluded_for_skill) excluded.insert(r.oer_id);
  }
  return excluded;
}

void write_catalog(std::ostream& out, std::span<const OERRecord> records) {
  for (const OERRecord& r : records) out << nlohmann::json(r).dump() << '\n';
}

std::vector<OERRecord> read_catalog(std::istream& in) {
  std::vector<OERRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      records.push_back(nlohmann::json::parse(line).get<OERRecord>());
    } catch (const nlohmann::json::exception& e) {
      throw IngestError("catalog line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return records;
}

}  // namespace oerrec
