#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bflux::privacy {

enum class SpatialFloor : std::uint8_t { Province, District };

const char* to_string(SpatialFloor f);
std::optional<SpatialFloor> parse_spatial_floor(std::string_view s);

struct PrivacyPolicy {
  std::uint32_t k = 10;  // minimum publishable cell count
  SpatialFloor spatial_floor = SpatialFloor::Province;
};

// Marker emitted in place of a cell below k (e.g. "<10").
std::string suppression_marker(const PrivacyPolicy& policy);

// Deterministic keyed pseudonym: 32 lowercase hex characters. Same
// (id, key) always yields the same token; the key never appears in any
// artifact. Throws ConfigError on an empty key.
std::string pseudonymize(std::string_view raw_id, std::string_view key);

// Generic keyed count table, the unit of suppression.
struct CountTable {
  std::vector<std::string> key_columns;
  std::string value_column;
  struct Row {
    std::vector<std::string> keys;
    std::uint64_t value = 0;
  };
  std::vector<Row> rows;
};

struct SuppressedTable {
  std::vector<std::string> key_columns;
  std::string value_column;
  struct Row {
    std::vector<std::string> keys;
    std::optional<std::uint64_t> value;  // nullopt = suppressed
  };
  std::vector<Row> rows;
  // Marginal over published cells only; partial when anything was hidden.
  std::uint64_t published_total = 0;
  bool partial = false;
};

// Cells >= k pass through; cells < k (and > 0) are masked. Zero cells are
// publishable: an empty category reveals nothing below k.
SuppressedTable suppress(const CountTable& table, const PrivacyPolicy& policy);

// True when v may be published as-is under the policy.
inline bool publishable(std::uint64_t v, const PrivacyPolicy& policy) {
  return v == 0 || v >= policy.k;
}

// json count cell: the number, or the suppression marker string.
nlohmann::json count_cell(std::uint64_t v, const PrivacyPolicy& policy);
std::string count_cell_str(std::uint64_t v, const PrivacyPolicy& policy);

struct QueryError : std::runtime_error {
  std::string code;
  explicit QueryError(std::string error_code)
      : std::runtime_error(error_code), code(std::move(error_code)) {}
};

// Read-only view over a completed run directory. Holds published
// aggregates only; raw events are never present.
class PublishedStore {
 public:
  explicit PublishedStore(std::string dir);

  const PrivacyPolicy& policy() const { return policy_; }
  const std::string& dir() const { return dir_; }

  std::string read_artifact(const std::string& name) const;  // throws QueryError(ARTIFACT_MISSING)
  bool has_artifact(const std::string& name) const;

 private:
  std::string dir_;
  PrivacyPolicy policy_;
};

// The "Question and Answer" surface: whitelisted templates over the
// published store, suppression already applied. Request shape:
// {"template": "...", "params": {...}}.
nlohmann::json answer_query(const nlohmann::json& request, const PublishedStore& store);

const std::vector<std::string>& whitelisted_templates();

// Scans every known artifact in a run directory for count cells in
// (0, k). Returns human-readable violation descriptions; empty = clean.
std::vector<std::string> scan_outputs(const std::string& dir, const PrivacyPolicy& policy);

}  // namespace bflux::privacy
