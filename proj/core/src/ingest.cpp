#include "hetbai/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "hetbai/error.hpp"

namespace hetbai {
namespace {

// Splits one CSV record. Returns false on an unterminated quote.
bool split_csv(const std::string& line, std::vector<std::string>& fields) {
  fields.assign(1, std::string());
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          fields.back() += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return !quoted;
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

}  // namespace

ParsedRatings parse_ratings_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> fields;
  ParsedRatings out;

  if (!std::getline(in, line)) throw Error("ratings file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (!split_csv(line, fields) || fields.size() != 3 || trim(fields[0]) != "client" ||
      trim(fields[1]) != "arm" || trim(fields[2]) != "rating") {
    throw Error("ratings header must be client,arm,rating");
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (!split_csv(line, fields)) {
      out.rejected.push_back({line_no, "unterminated quote"});
      continue;
    }
    if (fields.size() != 3) {
      out.rejected.push_back({line_no, "expected 3 fields, got " + std::to_string(fields.size())});
      continue;
    }
    Rating r{trim(fields[0]), trim(fields[1]), 0.0};
    if (r.client.empty() || r.arm.empty()) {
      out.rejected.push_back({line_no, "empty client or arm label"});
      continue;
    }
    const std::string value = trim(fields[2]);
    char* end = nullptr;
    r.rating = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(r.rating)) {
      out.rejected.push_back({line_no, "non-numeric rating \"" + value + "\""});
      continue;
    }
    out.table.rows.push_back(std::move(r));
  }
  if (out.table.rows.empty()) throw Error("ratings table has no valid rows");
  return out;
}

ParsedRatings parse_ratings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read ratings file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_ratings_text(buf.str());
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

IngestResult build_instance(const RatingsTable& table, const IngestOptions& options) {
  if (options.min_samples < 1) throw Error("min_samples must be at least 1");
  const auto [range_lo, range_hi] = options.normalize_range;
  if (!(range_hi > range_lo)) throw Error("normalize range must be increasing");

  // Samples grouped by client, then arm.
  std::map<std::string, std::map<std::string, std::vector<double>>> samples;
  for (const auto& r : table.rows) samples[r.client][r.arm].push_back(r.rating);

  IngestResult result;
  for (auto& [client, arms] : samples) {
    for (auto it = arms.begin(); it != arms.end();) {
      if (it->second.size() < options.min_samples) {
        ++result.dropped_pairs;
        it = arms.erase(it);
      } else {
        ++it;
      }
    }
  }
  // Arms never leave a client's set once pairs are filtered, so a single
  // sweep reaches the fixed point; the loop keeps that explicit.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto it = samples.begin(); it != samples.end();) {
      if (it->second.size() < 2) {
        result.dropped_clients.push_back(
            {it->first, it->second.empty() ? "no arm with enough samples"
                                            : "only one arm with enough samples"});
        it = samples.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  if (samples.empty()) throw Error("no client survives filtering");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  std::set<std::string> arm_names;
  for (const auto& [client, arms] : samples) {
    for (const auto& [arm, values] : arms) {
      arm_names.insert(arm);
      for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (!(hi > lo)) throw Error("all surviving ratings are equal; nothing to normalize");
  const double scale = (range_hi - range_lo) / (hi - lo);

  result.arm_labels.assign(arm_names.begin(), arm_names.end());
  std::map<std::string, int> arm_index;
  for (std::size_t i = 0; i < result.arm_labels.size(); ++i) {
    arm_index[result.arm_labels[i]] = static_cast<int>(i);
  }

  ProblemInstance& v = result.instance;
  v.num_arms = static_cast<int>(result.arm_labels.size());
  for (const auto& [client, arms] : samples) {
    result.client_labels.push_back(client);
    std::vector<int> set;
    std::vector<double> means;
    for (const auto& [arm, values] : arms) {  // map order == label order
      double sum = 0.0;
      for (double r : values) sum += range_lo + (r - lo) * scale;
      set.push_back(arm_index.at(arm));
      means.push_back(sum / static_cast<double>(values.size()));
    }
    v.arm_sets.push_back(std::move(set));
    v.means.push_back(std::move(means));
  }

  const ValidationReport report = validate(v);
  if (!report.admissible) {
    std::string details;
    for (const auto& msg : report.violations) details += "; " + msg;
    throw Error("ingested instance is not usable" + details);
  }
  return result;
}

std::string labels_to_json(const IngestResult& result) {
  nlohmann::json out;
  out["clients"] = result.client_labels;
  out["arms"] = result.arm_labels;
  out["dropped_clients"] = nlohmann::json::array();
  for (const auto& d : result.dropped_clients) {
    out["dropped_clients"].push_back({{"client", d.label}, {"reason", d.reason}});
  }
  out["dropped_pairs"] = result.dropped_pairs;
  return out.dump(2);
}

}  // namespace hetbai
