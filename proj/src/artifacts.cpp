#include "borderflux/artifacts.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdio>

namespace bflux::artifacts {

using nlohmann::json;
using privacy::count_cell;
using privacy::count_cell_str;
using privacy::PrivacyPolicy;

std::string format_double(double v) {
  char buf[40];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string group_timeseries_csv(const mobility::GroupSeries& gs, const PrivacyPolicy& policy) {
  std::string out = "date,visa_border,visa_other,novisa_border,novisa_other,lost_cumulative\n";
  for (std::size_t i = 0; i < gs.counts.size(); ++i) {
    out += format_date(gs.horizon.start + static_cast<int>(i));
    for (std::size_t b = 0; b < 5; ++b) {
      out += ',';
      out += count_cell_str(gs.counts[i][b], policy);
    }
    out += '\n';
  }
  return out;
}

json group_timeseries_rows(const mobility::GroupSeries& gs, const PrivacyPolicy& policy,
                           std::optional<Date> start, std::optional<Date> end) {
  static const std::array<const char*, 5> columns{"visa_border", "visa_other", "novisa_border",
                                                  "novisa_other", "lost_cumulative"};
  json rows = json::array();
  for (std::size_t i = 0; i < gs.counts.size(); ++i) {
    Date d = gs.horizon.start + static_cast<int>(i);
    if (start && d < *start) continue;
    if (end && d > *end) continue;
    json row = json::object();
    row["date"] = format_date(d);
    for (std::size_t b = 0; b < 5; ++b) row[columns[b]] = count_cell(gs.counts[i][b], policy);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string province_counts_csv(std::span<const mobility::ProvinceCounts> counts,
                                const PrivacyPolicy& policy) {
  std::string out = "date,province,count\n";
  for (const auto& pc : counts) {
    const std::string date = format_date(pc.date);
    for (const auto& [province, n] : pc.counts) {
      out += date;
      out += ',';
      out += province;
      out += ',';
      out += count_cell_str(n, policy);
      out += '\n';
    }
    out += date;
    out += ",";
    out += mobility::kLostToken;
    out += ',';
    out += count_cell_str(pc.lost, policy);
    out += '\n';
  }
  return out;
}

json province_counts_rows(std::span<const mobility::ProvinceCounts> counts,
                          const PrivacyPolicy& policy, std::optional<Date> date_filter) {
  json rows = json::array();
  for (const auto& pc : counts) {
    if (date_filter && pc.date != *date_filter) continue;
    const std::string date = format_date(pc.date);
    for (const auto& [province, n] : pc.counts) {
      rows.push_back({{"date", date}, {"province", province}, {"count", count_cell(n, policy)}});
    }
    rows.push_back(
        {{"date", date}, {"province", mobility::kLostToken}, {"count", count_cell(pc.lost, policy)}});
  }
  return rows;
}

json flow_links_rows(const mobility::FlowMatrix& flow, const PrivacyPolicy& policy) {
  json links = json::array();
  for (const auto& [origin, dest, n] : flow.links) {
    links.push_back({{"source", "a:" + origin},
                     {"target", "b:" + dest},
                     {"value", count_cell(n, policy)}});
  }
  return links;
}

json flows_doc(const mobility::FlowMatrix& flow, const PrivacyPolicy& policy) {
  json doc;
  doc["date_a"] = format_date(flow.date_a);
  doc["date_b"] = format_date(flow.date_b);
  json nodes = json::array();
  std::vector<std::string> origin_names, dest_names;
  for (const auto& [origin, dest, n] : flow.links) {
    if (origin_names.empty() || origin_names.back() != origin) origin_names.push_back(origin);
    dest_names.push_back(dest);
  }
  std::sort(origin_names.begin(), origin_names.end());
  origin_names.erase(std::unique(origin_names.begin(), origin_names.end()), origin_names.end());
  std::sort(dest_names.begin(), dest_names.end());
  dest_names.erase(std::unique(dest_names.begin(), dest_names.end()), dest_names.end());
  for (const auto& name : origin_names) nodes.push_back({{"id", "a:" + name}});
  for (const auto& name : dest_names) nodes.push_back({{"id", "b:" + name}});
  doc["nodes"] = std::move(nodes);
  doc["links"] = flow_links_rows(flow, policy);
  return doc;
}

std::string antenna_csv(const mobility::AntennaCounts& counts, const PrivacyPolicy& policy) {
  std::string out = "cell_id,bucket_start,devices\n";
  for (const auto& [cell, bucket_ts, devices] : counts.rows) {
    out += cell;
    out += ',';
    out += format_utc_timestamp(bucket_ts);
    out += ',';
    out += count_cell_str(devices, policy);
    out += '\n';
  }
  return out;
}

std::string drops_csv(std::span<const mobility::Drop> drops) {
  std::string out = "date,relative_drop\n";
  for (const auto& drop : drops) {
    out += format_date(drop.date);
    out += ',';
    out += format_double(drop.relative);
    out += '\n';
  }
  return out;
}

json estimates_doc(std::span<const mobility::CrossingEstimate> estimates,
                   const PrivacyPolicy& policy) {
  json doc = json::array();
  for (const auto& est : estimates) {
    json entry;
    entry["group"] = to_string(est.group);
    if (!privacy::publishable(static_cast<std::uint64_t>(est.lost_at_border), policy)) {
      entry["suppressed"] = privacy::suppression_marker(policy);
    } else {
      entry["lost_at_border"] = est.lost_at_border;
      entry["share"] = est.share;
      entry["churn_floor"] = est.churn_floor;
      entry["low"] = est.low;
      entry["high"] = est.high;
    }
    doc.push_back(std::move(entry));
  }
  return doc;
}

namespace {

constexpr std::array<LangGroup, 3> kGroupOrder{LangGroup::Visa, LangGroup::NoVisa,
                                               LangGroup::Turkish};
constexpr std::array<Destination, 3> kDestOrder{Destination::Europe, Destination::Turkey,
                                                Destination::Other};

std::uint64_t lookup(const std::map<LangGroup, std::uint64_t>& m, LangGroup g) {
  auto it = m.find(g);
  return it == m.end() ? 0 : it->second;
}

}  // namespace

std::string lang_counts_csv(const social::ActivityCounts& counts, const PrivacyPolicy& policy) {
  std::string out = "group,tweets,users\n";
  for (LangGroup g : kGroupOrder) {
    out += to_string(g);
    out += ',';
    out += count_cell_str(lookup(counts.tweets, g), policy);
    out += ',';
    out += count_cell_str(lookup(counts.users, g), policy);
    out += '\n';
  }
  return out;
}

json lang_counts_rows(const social::ActivityCounts& counts, const PrivacyPolicy& policy) {
  json rows = json::array();
  for (LangGroup g : kGroupOrder) {
    rows.push_back({{"group", to_string(g)},
                    {"tweets", count_cell(lookup(counts.tweets, g), policy)},
                    {"users", count_cell(lookup(counts.users, g), policy)}});
  }
  return rows;
}

std::string daily_lang_counts_csv(const social::ActivityCounts& counts,
                                  const PrivacyPolicy& policy) {
  std::string out = "date,group,tweets,users\n";
  for (const auto& [key, tweets] : counts.daily_tweets) {
    auto users_it = counts.daily_users.find(key);
    std::uint64_t users = users_it == counts.daily_users.end() ? 0 : users_it->second;
    out += format_date(key.first);
    out += ',';
    out += to_string(key.second);
    out += ',';
    out += count_cell_str(tweets, policy);
    out += ',';
    out += count_cell_str(users, policy);
    out += '\n';
  }
  return out;
}

json daily_lang_counts_rows(const social::ActivityCounts& counts, const PrivacyPolicy& policy) {
  json rows = json::array();
  for (const auto& [key, tweets] : counts.daily_tweets) {
    auto users_it = counts.daily_users.find(key);
    std::uint64_t users = users_it == counts.daily_users.end() ? 0 : users_it->second;
    rows.push_back({{"date", format_date(key.first)},
                    {"group", to_string(key.second)},
                    {"tweets", count_cell(tweets, policy)},
                    {"users", count_cell(users, policy)}});
  }
  return rows;
}

std::string dest_matrix_csv(const social::DestinationMatrix& matrix,
                            const PrivacyPolicy& policy) {
  std::string out = "group,destination,users\n";
  for (LangGroup g : kGroupOrder) {
    for (Destination d : kDestOrder) {
      auto it = matrix.users.find({g, d});
      std::uint64_t n = it == matrix.users.end() ? 0 : it->second;
      out += to_string(g);
      out += ',';
      out += to_string(d);
      out += ',';
      out += count_cell_str(n, policy);
      out += '\n';
    }
  }
  return out;
}

json venn_doc(const social::VennCounts& lang, const social::VennCounts& dest,
              const PrivacyPolicy& policy) {
  json doc = json::array();
  json lang_regions = json::array();
  for (unsigned mask = 1; mask < 8; ++mask) {
    lang_regions.push_back({{"set", social::mask_names_lang(mask)},
                            {"count", count_cell(lang.regions[mask], policy)}});
  }
  doc.push_back({{"dimension", "language"}, {"regions", std::move(lang_regions)}});
  json dest_regions = json::array();
  for (unsigned mask = 1; mask < 8; ++mask) {
    dest_regions.push_back({{"set", social::mask_names_dest(mask)},
                            {"count", count_cell(dest.regions[mask], policy)}});
  }
  doc.push_back({{"dimension", "destination"}, {"regions", std::move(dest_regions)}});
  return doc;
}

json social_summary_doc(const social::DestinationMatrix& matrix,
                        const social::GeofilterStats& geo, const social::UndResolution& und,
                        const social::ActivityCounts& activity, const PrivacyPolicy& policy) {
  json doc;
  doc["border_users"] = count_cell(matrix.border_users, policy);
  doc["present_users"] = count_cell(matrix.present_users, policy);
  doc["disappeared_users"] = count_cell(matrix.disappeared_users, policy);
  doc["geofilter"] = {{"kept", count_cell(geo.kept, policy)},
                      {"no_location", count_cell(geo.no_location, policy)},
                      {"outside_bbox", count_cell(geo.outside_bbox, policy)},
                      {"outside_territory", count_cell(geo.outside_territory, policy)}};
  doc["und"] = {{"total", count_cell(und.und_total, policy)},
                {"resolved", count_cell(und.resolved, policy)},
                {"unresolved_tweets", count_cell(und.unresolved_tweets, policy)},
                {"all_und_users", count_cell(und.all_und_users, policy)}};
  doc["skipped"] = {{"unresolved_lang", count_cell(activity.skipped_unresolved, policy)},
                    {"unassigned_lang", count_cell(activity.skipped_unassigned, policy)}};
  return doc;
}

std::string sentiment_weekly_csv(const SentimentBuckets& buckets, const PrivacyPolicy& policy) {
  std::string out = "language,iso_week,mean,variance,n\n";
  const std::string marker = privacy::suppression_marker(policy);
  for (const auto& [key, stats] : buckets) {
    out += key.first;
    out += ',';
    out += key.second;
    out += ',';
    if (privacy::publishable(stats.n, policy)) {
      out += format_double(stats.mean());
      out += ',';
      out += format_double(stats.variance());
      out += ',';
      out += std::to_string(stats.n);
    } else {
      // Means over tiny buckets leak; the whole row is masked.
      out += marker;
      out += ',';
      out += marker;
      out += ',';
      out += marker;
    }
    out += '\n';
  }
  return out;
}

json sentiment_weekly_rows(const SentimentBuckets& buckets, const PrivacyPolicy& policy,
                           const std::optional<std::string>& language_filter) {
  json rows = json::array();
  const std::string marker = privacy::suppression_marker(policy);
  for (const auto& [key, stats] : buckets) {
    if (language_filter && key.first != *language_filter) continue;
    json row;
    row["language"] = key.first;
    row["iso_week"] = key.second;
    if (privacy::publishable(stats.n, policy)) {
      row["mean"] = stats.mean();
      row["variance"] = stats.variance();
      row["n"] = stats.n;
    } else {
      row["mean"] = marker;
      row["variance"] = marker;
      row["n"] = marker;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string extreme_words_csv(const std::map<std::string, sentiment::ExtremeStats>& stats,
                              const PrivacyPolicy& policy) {
  std::string out = "language,total_words,extreme_count,fraction\n";
  const std::string marker = privacy::suppression_marker(policy);
  for (const auto& [lang, s] : stats) {
    out += lang;
    out += ',';
    bool total_ok = privacy::publishable(s.total_tokens, policy);
    bool extreme_ok = privacy::publishable(s.extreme_tokens, policy);
    out += count_cell_str(s.total_tokens, policy);
    out += ',';
    out += count_cell_str(s.extreme_tokens, policy);
    out += ',';
    if (total_ok && extreme_ok) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.4g", s.fraction());
      out += buf;
    } else {
      out += marker;
    }
    out += '\n';
  }
  return out;
}

}  // namespace bflux::artifacts
