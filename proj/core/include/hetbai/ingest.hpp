#pragma once

// Ratings-table ingestion: turn (client, arm, rating) samples into a problem
// instance whose means are per-pair averages of min-max normalized ratings.

#include <cstddef>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "hetbai/instance.hpp"

namespace hetbai {

struct Rating {
  std::string client;
  std::string arm;
  double rating = 0.0;
};

struct RatingsTable {
  std::vector<Rating> rows;
};

struct RowError {
  std::size_t line = 0;  // 1-based line number in the file
  std::string message;
};

struct ParsedRatings {
  RatingsTable table;
  std::vector<RowError> rejected;
};

/// Reads a CSV with header `client,arm,rating` (RFC 4180 quoting allowed).
/// Malformed rows are collected, not fatal. Throws hetbai::Error if the file
/// cannot be read, the header is wrong, or no valid row remains.
ParsedRatings parse_ratings(const std::filesystem::path& path);
ParsedRatings parse_ratings_text(const std::string& text);

struct IngestOptions {
  std::size_t min_samples = 10;
  std::pair<double, double> normalize_range{0.0, 100.0};
};

struct DroppedClient {
  std::string label;
  std::string reason;
};

struct IngestResult {
  ProblemInstance instance;
  std::vector<std::string> client_labels;  // index -> label
  std::vector<std::string> arm_labels;     // index -> label
  std::vector<DroppedClient> dropped_clients;
  std::size_t dropped_pairs = 0;
};

/// Filters (client, arm) pairs with fewer than min_samples samples, drops
/// clients left with fewer than two arms (to a fixed point), min-max
/// normalizes the surviving ratings onto normalize_range, and averages per
/// pair. Labels are indexed in lexicographic order. Throws hetbai::Error if
/// the result is structurally invalid or has a tied best arm.
IngestResult build_instance(const RatingsTable& table, const IngestOptions& options = {});

/// {"clients": [...], "arms": [...], "dropped_clients": [{"client", "reason"}],
///  "dropped_pairs": n}
std::string labels_to_json(const IngestResult& result);

}  // namespace hetbai
