#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "borderflux/types.hpp"

namespace bflux::ingest {

struct ParseLimits {
  // Malformed-line fraction tolerated before the parse is fatal.
  double max_error_rate = 0.01;
  // Optional observation horizon; events outside are filtered (counted,
  // not diagnosed per line, and not charged against the error budget).
  std::optional<std::int64_t> ts_min;
  std::optional<std::int64_t> ts_max;
};

struct ParseStats {
  std::size_t total_lines = 0;
  std::size_t emitted = 0;
  std::size_t malformed = 0;
  std::size_t filtered = 0;  // out-of-horizon or blank
  std::vector<Diagnostic> diagnostics;

  std::size_t rejected() const { return malformed + filtered; }
};

enum class XdrEncoding { Auto, Csv, Ndjson };

struct XdrParseResult {
  EventBatch batch;
  ParseStats stats;
};

// Parses an xDR export. CSV requires the canonical header
// `subscriber_id,ts,cell_id,kind` (kind optional); NDJSON uses the same
// keys one object per line. Emission is in file order regardless of the
// number of worker threads. Throws DataError when the malformed-line rate
// exceeds the budget.
XdrParseResult parse_xdr(std::string_view input, XdrEncoding encoding = XdrEncoding::Auto,
                         const ParseLimits& limits = {});
XdrParseResult parse_xdr_file(const std::string& path, XdrEncoding encoding = XdrEncoding::Auto,
                              const ParseLimits& limits = {});

// Canonical serialization; re-parsing yields identical records.
std::string to_canonical_csv(const EventBatch& batch);

struct TweetParseResult {
  std::vector<Tweet> tweets;
  ParseStats stats;
};

// NDJSON tweet export, keys id,user,ts,lat,lon,country,lang,text.
// Tweets without coordinates are retained (sentiment-only use); tweets
// without a lang are rejected.
TweetParseResult parse_tweets(std::string_view ndjson, const ParseLimits& limits = {});
TweetParseResult parse_tweets_file(const std::string& path, const ParseLimits& limits = {});

std::string to_canonical_ndjson(const std::vector<Tweet>& tweets);

CellRegistry parse_cells_csv(std::string_view text);
SubscriberTable parse_subscribers_csv(std::string_view text);
VisaPolicy parse_visa_policy_csv(std::string_view text);
LanguageGroupPolicy parse_lang_group_policy_csv(std::string_view text);
DestinationPolicy parse_destination_policy_csv(std::string_view text);

struct ReferenceTables {
  CellRegistry cells;
  SubscriberTable subscribers;
  VisaPolicy visa;
  LanguageGroupPolicy lang_groups;
  DestinationPolicy destinations;
};

ReferenceTables parse_reference_tables(const std::string& cells_path,
                                       const std::string& subscribers_path,
                                       const std::string& visa_path,
                                       const std::string& lang_groups_path,
                                       const std::string& destinations_path);

struct RefReport {
  std::vector<std::string> unknown_cells;        // fatal: placement impossible
  std::vector<std::string> unknown_subscribers;  // warning: excluded from cohorts
  std::size_t unknown_subscriber_events = 0;

  bool ok() const { return unknown_cells.empty(); }
};

RefReport validate_refs(const EventBatch& batch, const CellRegistry& registry,
                        const SubscriberTable& subscribers);

// Precomputed joins for the hot path. Throws DataError when any event cell
// is missing from the registry.
struct LinkedRefs {
  std::vector<std::uint16_t> cell_province;    // batch cell index -> province index
  std::vector<std::int32_t> cell_district;     // batch cell index -> district index or -1
  std::vector<std::int32_t> subscriber_row;    // batch subscriber index -> table row or -1
};

LinkedRefs link_refs(const EventBatch& batch, const CellRegistry& registry,
                     const SubscriberTable& subscribers);

std::string read_file(const std::string& path);

}  // namespace bflux::ingest
