#pragma once

// Plain serial implementations of the pipeline kernels, written
// independently of the optimized paths. Tests compare the two routes;
// the benchmark uses these as the baseline.

#include <span>

#include "borderflux/ingest.hpp"
#include "borderflux/mobility.hpp"
#include "borderflux/sentiment.hpp"
#include "borderflux/types.hpp"

namespace bflux::ref {

ingest::XdrParseResult parse_xdr_serial(std::string_view input,
                                        const ingest::ParseLimits& limits = {});

std::uint16_t daily_placement(std::span<const Event> day_events,
                              std::span<const std::uint16_t> cell_region);

std::optional<mobility::PlacementSeries> build_series(std::span<const Event> events,
                                                      std::span<const std::uint16_t> cell_region,
                                                      Horizon horizon, UtcOffset tz);

mobility::SeriesSet build_series_all(const EventBatch& batch,
                                     std::span<const std::uint16_t> cell_region,
                                     std::span<const std::uint32_t> members,
                                     std::span<const MobilityClass> member_class,
                                     const SubscriberTable& subscribers, Horizon horizon,
                                     UtcOffset tz);

mobility::GroupSeries group_timeseries(const mobility::SeriesSet& set,
                                       const std::vector<bool>& border_region, bool backfill);

mobility::ProvinceCounts province_counts(const mobility::SeriesSet& set,
                                         std::span<const std::string> region_names, Date date,
                                         bool backfill);

mobility::FlowMatrix flow_matrix(const mobility::SeriesSet& set,
                                 std::span<const std::string> region_names, Date date_a,
                                 Date date_b, bool backfill);

mobility::AntennaCounts antenna_counts(const EventBatch& batch, std::int64_t bucket_seconds);

std::vector<std::uint32_t> select_border_cohort(const EventBatch& batch,
                                                const ingest::LinkedRefs& links,
                                                const CellRegistry& registry,
                                                std::span<const std::string> border_provinces,
                                                Date window_start, Date window_end, UtcOffset tz);

std::vector<sentiment::Score> score_texts(std::span<const std::string> texts,
                                          const sentiment::Lexicon& lexicon);

}  // namespace bflux::ref
