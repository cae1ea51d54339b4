#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "borderflux/mobility.hpp"
#include "borderflux/privacy.hpp"
#include "borderflux/sentiment.hpp"
#include "borderflux/social.hpp"

namespace bflux::artifacts {

// Serializers for every published aggregate. The query service and the
// file writers share these row builders, so a served answer is exactly
// suppress(direct computation).

std::string format_double(double v);

// group_timeseries.csv — date,visa_border,visa_other,novisa_border,novisa_other,lost_cumulative
std::string group_timeseries_csv(const mobility::GroupSeries& gs,
                                 const privacy::PrivacyPolicy& policy);
nlohmann::json group_timeseries_rows(const mobility::GroupSeries& gs,
                                     const privacy::PrivacyPolicy& policy,
                                     std::optional<Date> start = std::nullopt,
                                     std::optional<Date> end = std::nullopt);

// province_counts.csv — date,province,count ("LOST" row for lost members)
std::string province_counts_csv(std::span<const mobility::ProvinceCounts> counts,
                                const privacy::PrivacyPolicy& policy);
nlohmann::json province_counts_rows(std::span<const mobility::ProvinceCounts> counts,
                                    const privacy::PrivacyPolicy& policy,
                                    std::optional<Date> date_filter = std::nullopt);

// flows.json — {date_a, date_b, nodes:[{id}], links:[{source,target,value}]}
nlohmann::json flows_doc(const mobility::FlowMatrix& flow, const privacy::PrivacyPolicy& policy);
nlohmann::json flow_links_rows(const mobility::FlowMatrix& flow,
                               const privacy::PrivacyPolicy& policy);

// antenna_counts.csv — cell_id,bucket_start,devices
std::string antenna_csv(const mobility::AntennaCounts& counts,
                        const privacy::PrivacyPolicy& policy);

// drops.csv — date,relative_drop
std::string drops_csv(std::span<const mobility::Drop> drops);

// estimates.json — one entry per group
nlohmann::json estimates_doc(std::span<const mobility::CrossingEstimate> estimates,
                             const privacy::PrivacyPolicy& policy);

// lang_counts.csv — group,tweets,users (fixed group order)
std::string lang_counts_csv(const social::ActivityCounts& counts,
                            const privacy::PrivacyPolicy& policy);
nlohmann::json lang_counts_rows(const social::ActivityCounts& counts,
                                const privacy::PrivacyPolicy& policy);

// daily_lang_counts.csv — date,group,tweets,users
std::string daily_lang_counts_csv(const social::ActivityCounts& counts,
                                  const privacy::PrivacyPolicy& policy);
nlohmann::json daily_lang_counts_rows(const social::ActivityCounts& counts,
                                      const privacy::PrivacyPolicy& policy);

// dest_matrix.csv — group,destination,users (all nine cells)
std::string dest_matrix_csv(const social::DestinationMatrix& matrix,
                            const privacy::PrivacyPolicy& policy);

// venn.json — [{dimension, regions:[{set:[...],count}]}]
nlohmann::json venn_doc(const social::VennCounts& lang, const social::VennCounts& dest,
                        const privacy::PrivacyPolicy& policy);

// social_summary.json — user-set sizes plus the exclusion counters from
// geofiltering, und resolution, and group mapping.
nlohmann::json social_summary_doc(const social::DestinationMatrix& matrix,
                                  const social::GeofilterStats& geo,
                                  const social::UndResolution& und,
                                  const social::ActivityCounts& activity,
                                  const privacy::PrivacyPolicy& policy);

// sentiment_weekly.csv — language,iso_week,mean,variance,n
// (buckets below k are fully masked)
using SentimentBuckets = std::map<std::pair<std::string, std::string>, sentiment::BucketStats>;
std::string sentiment_weekly_csv(const SentimentBuckets& buckets,
                                 const privacy::PrivacyPolicy& policy);
nlohmann::json sentiment_weekly_rows(const SentimentBuckets& buckets,
                                     const privacy::PrivacyPolicy& policy,
                                     const std::optional<std::string>& language_filter =
                                         std::nullopt);

// extreme_words.csv — language,total_words,extreme_count,fraction
std::string extreme_words_csv(const std::map<std::string, sentiment::ExtremeStats>& stats,
                              const privacy::PrivacyPolicy& policy);

}  // namespace bflux::artifacts
