#include "semiauto/analytics.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "semiauto/error.hpp"
#include "semiauto/metrics.hpp"

namespace semiauto::analytics {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string trim_field(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\"");
  const auto last = s.find_last_not_of(" \t\r\"");
  if (first == std::string::npos) return {};
  return s.substr(first, last - first + 1);
}

}  // namespace

void MeasureSchema::validate() const {
  std::set<std::string> seen;
  for (const auto& m : measures) {
    if (m.items.empty()) throw Error(ErrorCode::kSchema, "measure '" + m.name + "' has no items");
    for (const auto& item : m.items) {
      if (!seen.insert(item).second) {
        throw Error(ErrorCode::kSchema, "item '" + item + "' belongs to two measures");
      }
    }
  }
  for (const auto& item : excluded_items) {
    if (seen.count(item)) {
      throw Error(ErrorCode::kSchema, "item '" + item + "' is both measured and excluded");
    }
  }
}

MeasureSchema default_schema() {
  MeasureSchema s;
  s.measures = {
      {"Naturalness", "Naturalness", {"nat1", "nat2", "nat3", "nat4"}},
      {"User satisfaction", "Enjoyment", {"sat1", "sat2", "sat3", "sat4"}},
      {"Utterance Timing", "Timing", {"tim1", "tim2", "tim3"}},
      {"Empathetic listening", "Empathy", {"emp1", "emp2", "emp3", "emp4", "emp5"}},
      {"Interest", "Interest", {"int1", "int2"}},
  };
  s.excluded_items = {"oth1"};
  s.item_text = {
      {"nat1", "The agent's responses were human-like"},
      {"nat2", "The words the agent used were natural"},
      {"nat3", "The agent's responses could stimulate my own talk"},
      {"nat4", "The agent understood my talk"},
      {"sat1", "The agent was easy to talk to"},
      {"sat2", "I want to talk with the agent again"},
      {"sat3", "The conversation was smooth"},
      {"sat4", "I was satisfied with the conversation"},
      {"tim1", "The agent responded at an appropriate frequency"},
      {"tim2", "The agent responses were well timed"},
      {"tim3", "The agent had good pauses in the conversation"},
      {"emp1", "The agent displayed empathy towards me"},
      {"emp2", "The agent took the conversation seriously"},
      {"emp3", "The agent was listening intently"},
      {"emp4", "The agent was listening actively"},
      {"emp5", "The agent was accommodating"},
      {"int1", "The agent showed interest in the conversation"},
      {"int2", "The agent responded with special care"},
      {"oth1", "The agent was fully autonomous"},
  };
  return s;
}

MeasureSchema schema_from_json(const json& j) {
  MeasureSchema s;
  try {
    for (const auto& m : j.at("measures")) {
      Measure measure;
      measure.name = m.at("name").get<std::string>();
      measure.report_label = m.value("report_label", measure.name);
      measure.items = m.at("items").get<std::vector<std::string>>();
      s.measures.push_back(std::move(measure));
    }
    s.excluded_items = j.value("excluded_items", std::vector<std::string>{});
    if (j.contains("item_text")) {
      for (const auto& item : j.at("item_text")) {
        s.item_text.push_back({item.at("id").get<std::string>(), item.at("text").get<std::string>()});
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kSchema, std::string("bad schema: ") + e.what());
  }
  s.validate();
  return s;
}

ordered_json schema_to_json(const MeasureSchema& s) {
  ordered_json j;
  j["measures"] = ordered_json::array();
  for (const auto& m : s.measures) {
    j["measures"].push_back({{"name", m.name}, {"report_label", m.report_label}, {"items", m.items}});
  }
  j["excluded_items"] = s.excluded_items;
  ordered_json texts = ordered_json::array();
  for (const auto& item : s.item_text) texts.push_back({{"id", item.id}, {"text", item.text}});
  j["item_text"] = texts;
  return j;
}

MeasureSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kSchema, "cannot open schema " + path.string());
  try {
    return schema_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kSchema, std::string("schema: ") + e.what());
  }
}

std::vector<RatingRecord> parse_ratings_csv(const std::string& csv) {
  std::vector<RatingRecord> out;
  std::istringstream in(csv);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim_field(line).empty()) continue;
    std::vector<std::string> fields;
    std::stringstream row(line);
    std::string field;
    while (std::getline(row, field, ',')) fields.push_back(trim_field(field));
    if (line_no == 1 && !fields.empty() && fields[0] == "session_id") continue;
    if (fields.size() != 3) {
      throw Error(ErrorCode::kMalformedInput,
                  "ratings line " + std::to_string(line_no) + ": expected 3 columns");
    }
    RatingRecord r{fields[0], fields[1], 0};
    try {
      std::size_t used = 0;
      r.score = std::stoi(fields[2], &used);
      if (used != fields[2].size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw Error(ErrorCode::kMalformedInput,
                  "ratings line " + std::to_string(line_no) + ": score is not an integer");
    }
    if (r.score < kLikertMin || r.score > kLikertMax) {
      throw Error(ErrorCode::kMalformedInput,
                  "ratings line " + std::to_string(line_no) + ": score outside 1..7");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<RatingRecord> load_ratings_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMalformedInput, "cannot open ratings " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_ratings_csv(buffer.str());
}

std::map<MeasureKey, double> measure_means(std::span<const RatingRecord> records,
                                           const MeasureSchema& schema) {
  std::map<std::pair<std::string, std::string>, int> scores;  // (session, item)
  std::set<std::string> sessions;
  for (const auto& r : records) {
    if (r.score < kLikertMin || r.score > kLikertMax) {
      throw Error(ErrorCode::kMalformedInput, "score outside 1..7 for (" + r.session_id + ", " +
                                                  r.item_id + ")");
    }
    if (!scores.emplace(std::make_pair(r.session_id, r.item_id), r.score).second) {
      throw Error(ErrorCode::kMalformedInput,
                  "duplicate rating for (" + r.session_id + ", " + r.item_id + ")");
    }
    sessions.insert(r.session_id);
  }

  std::map<MeasureKey, double> means;
  for (const auto& session : sessions) {
    for (const auto& m : schema.measures) {
      long sum = 0;
      for (const auto& item : m.items) {
        auto it = scores.find({session, item});
        if (it == scores.end()) {
          throw Error(ErrorCode::kIncompleteRecord,
                      "missing rating for (" + session + ", " + item + ")");
        }
        sum += it->second;
      }
      means[{session, m.name}] = static_cast<double>(sum) / static_cast<double>(m.items.size());
    }
  }
  return means;
}

double pearson_r(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::kShape, "x and y differ in length");
  if (x.size() < 2) throw Error(ErrorCode::kShape, "need at least two observations");
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorCode::kUndefinedCorrelation, "correlation undefined for a constant vector");
  }
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

CorrelationReport correlation_report(const std::map<std::string, std::int64_t>& takeovers,
                                     std::span<const RatingRecord> records,
                                     const MeasureSchema& schema) {
  std::set<std::string> rated;
  for (const auto& r : records) rated.insert(r.session_id);
  for (const auto& [id, _] : takeovers) {
    if (!rated.count(id)) throw Error(ErrorCode::kJoin, "session '" + id + "' has no ratings");
  }
  for (const auto& id : rated) {
    if (!takeovers.count(id)) throw Error(ErrorCode::kJoin, "ratings for unknown session '" + id + "'");
  }

  const auto means = measure_means(records, schema);
  CorrelationReport report;
  report.sessions = takeovers.size();
  std::vector<double> counts;
  for (const auto& [_, count] : takeovers) counts.push_back(static_cast<double>(count));
  double total = 0;
  for (double c : counts) total += c;
  report.mean_takeovers = counts.empty() ? 0.0 : total / static_cast<double>(counts.size());

  for (const auto& m : schema.measures) {
    std::vector<double> scores;
    for (const auto& [id, _] : takeovers) scores.push_back(means.at({id, m.name}));
    CorrelationRow row;
    row.measure = m.name;
    row.label = m.report_label.empty() ? m.name : m.report_label;
    row.r = pearson_r(counts, scores);
    double sum = 0;
    for (double s : scores) sum += s;
    row.mean_score = sum / static_cast<double>(scores.size());
    row.n = scores.size();
    report.rows.push_back(std::move(row));
  }
  return report;
}

CorrelationReport takeover_correlation_report(std::span<const SessionLog> logs,
                                              std::span<const RatingRecord> records,
                                              const MeasureSchema& schema) {
  std::map<std::string, std::int64_t> takeovers;
  for (const auto& log : logs) {
    if (!takeovers.emplace(log.session_id, sim::compute_metrics(log).takeover_count).second) {
      throw Error(ErrorCode::kJoin, "duplicate session '" + log.session_id + "'");
    }
  }
  return correlation_report(takeovers, records, schema);
}

std::string report_to_text(const CorrelationReport& report) {
  std::string out = "Correlation coefficient between measures and number of takeovers\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-14s %8s %10s\n", "Measure", "r", "mean");
  out += line;
  for (const auto& row : report.rows) {
    std::snprintf(line, sizeof line, "%-14s %8.2f %10.2f\n", row.label.c_str(), row.r,
                  row.mean_score);
    out += line;
  }
  std::snprintf(line, sizeof line, "sessions: %zu, mean takeovers: %.2f\n", report.sessions,
                report.mean_takeovers);
  out += line;
  return out;
}

ordered_json report_to_json(const CorrelationReport& report) {
  ordered_json j;
  j["sessions"] = report.sessions;
  j["mean_takeovers"] = report.mean_takeovers;
  j["rows"] = ordered_json::array();
  for (const auto& row : report.rows) {
    j["rows"].push_back({{"measure", row.measure},
                         {"label", row.label},
                         {"r", row.r},
                         {"mean_score", row.mean_score},
                         {"n", row.n}});
  }
  return j;
}

CorrelationReport report_from_json(const json& j) {
  CorrelationReport report;
  try {
    report.sessions = j.at("sessions").get<std::size_t>();
    report.mean_takeovers = j.at("mean_takeovers").get<double>();
    for (const auto& row : j.at("rows")) {
      report.rows.push_back({row.at("measure").get<std::string>(),
                             row.at("label").get<std::string>(), row.at("r").get<double>(),
                             row.at("mean_score").get<double>(), row.at("n").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kMalformedInput, std::string("bad report: ") + e.what());
  }
  return report;
}

}  // namespace semiauto::analytics
