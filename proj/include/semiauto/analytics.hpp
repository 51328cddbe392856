#pragma once

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "semiauto/session.hpp"

namespace semiauto::analytics {

struct Measure {
  std::string name;
  // Name used in the correlation table, when it differs.
  std::string report_label;
  std::vector<std::string> items;

  bool operator==(const Measure&) const = default;
};

struct QuestionnaireItem {
  std::string id;
  std::string text;

  bool operator==(const QuestionnaireItem&) const = default;
};

struct MeasureSchema {
  std::vector<Measure> measures;
  std::vector<std::string> excluded_items;
  std::vector<QuestionnaireItem> item_text;

  // Throws Error(kSchema) when an item belongs to more than one measure or
  // is both measured and excluded.
  void validate() const;

  bool operator==(const MeasureSchema&) const = default;
};

// The five-measure grouping of the 19-item listener questionnaire; the
// autonomy item is excluded.
MeasureSchema default_schema();

MeasureSchema schema_from_json(const nlohmann::json& j);
nlohmann::ordered_json schema_to_json(const MeasureSchema& schema);
MeasureSchema load_schema(const std::filesystem::path& path);

inline constexpr int kLikertMin = 1;
inline constexpr int kLikertMax = 7;

struct RatingRecord {
  std::string session_id;
  std::string item_id;
  int score = 0;

  bool operator==(const RatingRecord&) const = default;
};

// CSV with header session_id,item_id,score. Throws Error(kMalformedInput)
// on bad rows or scores outside the 7-point scale.
std::vector<RatingRecord> parse_ratings_csv(const std::string& csv);
std::vector<RatingRecord> load_ratings_csv(const std::filesystem::path& path);

using MeasureKey = std::pair<std::string, std::string>;  // (session_id, measure)

// Mean item score per measure per session. Throws Error(kIncompleteRecord)
// naming (session, item) when a schema item is missing, and
// Error(kMalformedInput) on duplicate or out-of-range records.
std::map<MeasureKey, double> measure_means(std::span<const RatingRecord> records,
                                           const MeasureSchema& schema);

// Pearson product-moment correlation. Throws Error(kShape) when lengths
// differ or n < 2 and Error(kUndefinedCorrelation) for a constant input.
double pearson_r(std::span<const double> x, std::span<const double> y);

struct CorrelationRow {
  std::string measure;
  std::string label;
  double r = 0.0;
  double mean_score = 0.0;
  std::size_t n = 0;

  bool operator==(const CorrelationRow&) const = default;
};

struct CorrelationReport {
  std::vector<CorrelationRow> rows;
  double mean_takeovers = 0.0;
  std::size_t sessions = 0;

  bool operator==(const CorrelationReport&) const = default;
};

// Correlates per-session takeover counts with each measure mean. Throws
// Error(kJoin) when session ids differ between logs and ratings.
CorrelationReport takeover_correlation_report(std::span<const SessionLog> logs,
                                              std::span<const RatingRecord> records,
                                              const MeasureSchema& schema);

// Same join, from takeover counts already keyed by session.
CorrelationReport correlation_report(const std::map<std::string, std::int64_t>& takeovers,
                                     std::span<const RatingRecord> records,
                                     const MeasureSchema& schema);

std::string report_to_text(const CorrelationReport& report);
nlohmann::ordered_json report_to_json(const CorrelationReport& report);
CorrelationReport report_from_json(const nlohmann::json& j);

}  // namespace semiauto::analytics
