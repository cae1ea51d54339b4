#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "borderflux/ingest.hpp"
#include "borderflux/types.hpp"

namespace bflux::mobility {

// Sentinel region values used by placement resolution.
inline constexpr std::uint16_t kLost = 0xFFFF;
inline constexpr std::uint16_t kUnplaced = 0xFFFE;
inline constexpr const char* kLostToken = "LOST";

struct PlacementSeries {
  std::uint32_t member_row = 0;  // subscriber-table row
  MobilityClass cls = MobilityClass::Unknown;
  Date first_obs{};
  Date last_obs{};
  std::vector<std::uint16_t> province;  // one entry per day in [first_obs, last_obs]
  std::vector<std::uint8_t> carried;    // 1 = gap day carrying the last observed province
  bool lost = false;
  Date lost_date{};  // last_obs + 1, meaningful iff lost

  std::uint16_t province_on(Date d) const {
    return province[static_cast<std::size_t>(d - first_obs)];
  }
};

struct SeriesSet {
  Horizon horizon{};
  UtcOffset tz{};
  std::vector<PlacementSeries> series;  // ascending member_row
  std::size_t excluded_no_events = 0;   // members with zero in-horizon events
};

// Majority province for one subscriber-day. `day_events` must be the
// subscriber's events of a single local date in chronological order
// (file order breaking timestamp ties). On a count tie the province of
// the chronologically last event among the tied provinces wins.
std::uint16_t daily_placement(std::span<const Event> day_events,
                              std::span<const std::uint16_t> cell_region);

// Builds one subscriber's series over the horizon from events in
// chronological order: gap days strictly inside the observed span carry
// the last observed province; trailing silence through the horizon end
// marks the subscriber lost at last_obs + 1. Returns nullopt when no
// event falls inside the horizon.
std::optional<PlacementSeries> build_series(std::span<const Event> events,
                                            std::span<const std::uint16_t> cell_region,
                                            Horizon horizon, UtcOffset tz);

// Per-member series for the whole cohort. Embarrassingly parallel;
// results are identical for any thread count.
SeriesSet build_series_all(const EventBatch& batch, std::span<const std::uint16_t> cell_region,
                           std::span<const std::uint32_t> members,
                           std::span<const MobilityClass> member_class,
                           const SubscriberTable& subscribers, Horizon horizon, UtcOffset tz);

// Resolved placement of a series at a date inside the horizon: a region
// index, kLost, or kUnplaced (only when back-fill is disabled and the
// date precedes first_obs).
std::uint16_t placement_at(const PlacementSeries& s, Date d, bool backfill);

// Figure-2-style five-group series. Bucket order:
// Visa@border, Visa@other, NoVisa@border, NoVisa@other, lost cumulative.
struct GroupSeries {
  Horizon horizon{};
  std::vector<std::array<std::uint64_t, 5>> counts;
  std::size_t cohort_size = 0;

  std::vector<std::pair<Date, std::uint64_t>> alive_series() const;
};

GroupSeries group_timeseries(const SeriesSet& set, const std::vector<bool>& border_region,
                             bool backfill);

struct ProvinceCounts {
  Date date{};
  std::vector<std::pair<std::string, std::uint64_t>> counts;  // region code asc
  std::uint64_t lost = 0;
  std::uint64_t unplaced = 0;
};

ProvinceCounts province_counts(const SeriesSet& set, std::span<const std::string> region_names,
                               Date date, bool backfill);

struct FlowMatrix {
  Date date_a{};
  Date date_b{};
  // (origin, destination, count); region codes or "LOST"; sorted.
  std::vector<std::tuple<std::string, std::string, std::uint64_t>> links;
  std::uint64_t total = 0;
};

FlowMatrix flow_matrix(const SeriesSet& set, std::span<const std::string> region_names,
                       Date date_a, Date date_b, bool backfill);

struct AntennaCounts {
  std::int64_t bucket_seconds = 3600;
  // (cell token, bucket start ts, distinct devices), sorted.
  std::vector<std::tuple<std::string, std::int64_t, std::uint64_t>> rows;
};

// Distinct devices per cell per time bucket; carries no ids.
AntennaCounts antenna_counts(const EventBatch& batch, std::int64_t bucket_seconds);

struct Drop {
  Date date{};
  double relative = 0;
};

// Day-over-day relative drops: (c[d-1] - c[d]) / max(c[d-1], 1).
// theta mode keeps drops >= theta; top_n keeps the n largest positive
// drops. Both orderings are by drop size descending, earlier date first.
std::vector<Drop> detect_drops(std::span<const std::pair<Date, std::uint64_t>> series,
                               std::optional<double> theta, std::optional<int> top_n);

struct CrossingEstimate {
  MobilityClass group = MobilityClass::Unknown;
  std::int64_t lost_at_border = 0;
  double share = 0;
  double churn_floor = 0;
  std::int64_t low = 0;
  std::int64_t high = 0;
};

// Assumption-driven bound, not a point estimate: scales the lost count by
// the operator's share after discounting the configured churn floor.
CrossingEstimate estimate_crossings(std::int64_t lost_at_border, double share,
                                    double churn_floor);

// Lost members whose final placement was a border region, per class.
std::map<MobilityClass, std::uint64_t> lost_at_border_by_class(
    const SeriesSet& set, const std::vector<bool>& border_region);

}  // namespace bflux::mobility
