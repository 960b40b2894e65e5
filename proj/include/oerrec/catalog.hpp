#pragma once

// OER catalog: repository connectors, normalisation of raw metadata onto
// [0, 100] scales, cold-start initialisation, periodic refit of the
// learnable properties from ratings, and relevance bookkeeping.

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oerrec/model.hpp"

namespace oerrec {

/// Metadata as delivered by a repository, before normalisation.
struct RawOerRecord {
  std::string id;  // may be empty; the URL is used instead
  std::string title;
  std::string subject;
  std::string author;
  std::string url;
  std::optional<std::string> duration;  // free text, e.g. "45 minutes", "3 weeks"
  std::optional<std::string> level;     // e.g. "beginner"
  std::optional<bool> reviewed;
  std::optional<bool> badge;
  std::optional<std::vector<std::string>> accessibility;  // e.g. {"captions", "transcript"}

  bool operator==(const RawOerRecord&) const = default;
};

struct FetchResult {
  std::vector<RawOerRecord> records;
  std::size_t skipped = 0;  // malformed records
};

/// Parses one JSON object per line. Lines that are not objects or lack a
/// non-empty title, subject or url are counted as skipped.
FetchResult parse_raw_records(std::istream& in);

class RepositoryConnector {
 public:
  virtual ~RepositoryConnector() = default;
  virtual const std::string& repository() const = 0;
  /// Read-only; throws ConnectorError when the source is unreachable.
  virtual FetchResult fetch() const = 0;
};

/// Reads a recorded JSON-lines fixture file.
class FixtureConnector final : public RepositoryConnector {
 public:
  FixtureConnector(std::string repository, std::string path);
  const std::string& repository() const override { return repository_; }
  FetchResult fetch() const override;

 private:
  std::string repository_;
  std::string path_;
};

/// GETs `base_url + path`; the response body uses the fixture format.
class HttpConnector final : public RepositoryConnector {
 public:
  HttpConnector(std::string repository, std::string base_url, std::string path, int timeout_seconds = 10);
  const std::string& repository() const override { return repository_; }
  FetchResult fetch() const override;

 private:
  std::string repository_;
  std::string base_url_;
  std::string path_;
  int timeout_seconds_;
};

/// Ordered classes mapped to equally spaced points 100 * idx / (n - 1);
/// a single class maps to 50.
class OrdinalScale {
 public:
  /// Classes are the distinct normalized `raw_values`, ordered by their
  /// position in `ordering`; values missing from `ordering` follow in
  /// lexicographic order.
  static OrdinalScale from_values(std::span<const std::string> raw_values,
                                  std::span<const std::string> ordering = {});

  /// Throws InvalidArgument listing the known classes for unknown values.
  double value(std::string_view raw) const;
  const std::vector<std::string>& classes() const noexcept { return classes_; }

 private:
  std::vector<std::string> classes_;
};

double normalize_property(std::span<const std::string> raw_values, std::string_view value,
                          std::span<const std::string> ordering = {});

/// Duration classes in increasing order.
inline const std::vector<std::string> kDurationClasses{"<=1h", "<=1d", "<=1w", ">1w"};
inline const std::vector<std::string> kLevelOrdering{"beginner", "introductory", "intermediate", "advanced",
                                                     "expert"};

/// Buckets "90 minutes", "2 hours", "3 days", "10 weeks", "1 month" into
/// kDurationClasses; nullopt when the text has no recognisable duration.
std::optional<std::string> duration_class(std::string_view text);

/// An OER whose numeric properties may be unknown.
struct OerDraft {
  std::string oer_id;
  std::string title;
  std::string resource;
  std::string skill;
  std::string author;
  std::string url;
  std::optional<double> how_long;
  std::optional<double> level;
  std::optional<double> quality;
  std::optional<double> accessibility;

  bool operator==(const OerDraft&) const = default;
};

/// Normalises a fetched batch: skill from the preprocessed subject, level
/// and duration via OrdinalScale over the classes present in the batch,
/// quality from the number of true review/badge flags, accessibility from
/// the number of accessibility features.
std::vector<OerDraft> drafts_from_raw(std::span<const RawOerRecord> records, const std::string& repository);

/// Fills unknown properties with the mean over catalog records sharing
/// author and skill, else skill only, else 50. Counters start at zero and
/// relevance at 1.
OERRecord init_oer(const OerDraft& known, std::span<const OERRecord> catalog);

/// A rating together with the rater's profile at rating time.
struct Rater {
  LearnerProfile profile;
  RatingEvent event;
};

struct GdOptions {
  double learning_rate = 0.05;
  int max_iterations = 500;
  double tolerance = 1e-6;
};

/// (how_long, how_short, quality, accessibility) on [0, 1].
using PropertyPoint = std::array<double, 4>;

/// The rater's aligned preferences (long, short, check, accessibility)
/// scaled to [0, 1] and normalised to sum 1 (uniform when all are zero).
PropertyPoint rater_weights(const LearnerProfile& p);

/// Sum over raters of |theta_i . x - satisfaction_i|.
double refit_loss(const PropertyPoint& x, std::span<const Rater> raters);

/// Subgradient of refit_loss with respect to x, taking 0 at kinks.
PropertyPoint refit_subgradient(const PropertyPoint& x, std::span<const Rater> raters);

struct RefitResult {
  OERRecord record;
  double initial_loss = 0.0;
  double final_loss = 0.0;
  int iterations = 0;  // accepted steps
};

/// Minimises refit_loss over the OER's length, quality and accessibility
/// (how_short tied to 1 - how_long) by projected subgradient descent with
/// step halving. Each iteration takes the minimum-norm subgradient that
/// treats residuals within a small band of zero as kinks, so the iterate
/// can move along a kink instead of stalling on it; only loss-decreasing
/// steps are accepted. Level, relevance and counters are untouched. An
/// empty rater list is a no-op.
RefitResult refit_properties(const OERRecord& oer, std::span<const Rater> raters, const GdOptions& options = {});

/// (total_recom - irrelev_count) / total_recom; 1 when never recommended.
double relevance(const OERRecord& oer);

/// Among records of `skill` that have been recommended, flags those whose
/// relevance is strictly below the skill's mean and clears the flag on the
/// others. Returns the flagged ids.
std::set<std::string> exclude_below_average(std::string_view skill, std::span<OERRecord> records);

/// One JSON object per record.
void write_catalog(std::ostream& out, std::span<const OERRecord> records);
std::vector<OERRecord> read_catalog(std::istream& in);

}  // namespace oerrec
