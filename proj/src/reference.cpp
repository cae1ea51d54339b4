#include "borderflux/reference.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>

#include "borderflux/csv.hpp"
#include "borderflux/error.hpp"

namespace bflux::ref {

ingest::XdrParseResult parse_xdr_serial(std::string_view input,
                                        const ingest::ParseLimits& limits) {
  ingest::XdrParseResult result;
  bool header_seen = false;
  std::vector<int> layout;  // column index of subscriber_id, ts, cell_id, kind(-1)
  csv::for_each_line(input, [&](std::size_t idx, std::string_view line) {
    ++result.stats.total_lines;
    if (!header_seen) {
      auto header = csv::split_line(line);
      int sub = -1, ts = -1, cell = -1, kind = -1;
      for (int i = 0; i < static_cast<int>(header.size()); ++i) {
        if (header[static_cast<std::size_t>(i)] == "subscriber_id") sub = i;
        if (header[static_cast<std::size_t>(i)] == "ts") ts = i;
        if (header[static_cast<std::size_t>(i)] == "cell_id") cell = i;
        if (header[static_cast<std::size_t>(i)] == "kind") kind = i;
      }
      if (sub < 0 || ts < 0 || cell < 0) throw DataError("reference parser: bad header");
      layout = {sub, ts, cell, kind, static_cast<int>(header.size())};
      header_seen = true;
      ++result.stats.filtered;
      return;
    }
    if (line.empty()) {
      ++result.stats.filtered;
      return;
    }
    auto fields = csv::split_line(line);
    auto fail = [&](const char* field, const char* reason) {
      ++result.stats.malformed;
      result.stats.diagnostics.push_back({idx + 1, field, reason});
    };
    if (static_cast<int>(fields.size()) != layout[4]) {
      fail("columns", "column count mismatch");
      return;
    }
    std::int64_t ts = 0;
    const std::string& raw_ts = fields[static_cast<std::size_t>(layout[1])];
    auto [p, ec] = std::from_chars(raw_ts.data(), raw_ts.data() + raw_ts.size(), ts);
    if (ec != std::errc{} || p != raw_ts.data() + raw_ts.size()) {
      fail("ts", "not an integer");
      return;
    }
    const std::string& sub = fields[static_cast<std::size_t>(layout[0])];
    const std::string& cell = fields[static_cast<std::size_t>(layout[2])];
    if (sub.empty()) {
      fail("subscriber_id", "empty");
      return;
    }
    if (cell.empty()) {
      fail("cell_id", "empty");
      return;
    }
    EventKind kind = EventKind::Data;
    if (layout[3] >= 0) {
      auto k = parse_event_kind(fields[static_cast<std::size_t>(layout[3])]);
      if (!k) {
        fail("kind", "unknown kind");
        return;
      }
      kind = *k;
    }
    if ((limits.ts_min && ts < *limits.ts_min) || (limits.ts_max && ts > *limits.ts_max)) {
      ++result.stats.filtered;
      return;
    }
    result.batch.events.push_back(Event{ts, result.batch.subscribers.intern(sub),
                                        result.batch.cells.intern(cell), kind});
  });
  result.stats.emitted = result.batch.events.size();
  return result;
}

std::uint16_t daily_placement(std::span<const Event> day_events,
                              std::span<const std::uint16_t> cell_region) {
  std::map<std::uint16_t, std::size_t> counts;
  for (const Event& e : day_events) ++counts[cell_region[e.cell]];
  std::size_t best = 0;
  for (const auto& [region, n] : counts) best = std::max(best, n);
  // Walk events backwards: the first one whose region holds the max count
  // is the chronologically last event among the tied regions.
  for (std::size_t i = day_events.size(); i-- > 0;) {
    std::uint16_t region = cell_region[day_events[i].cell];
    if (counts[region] == best) return region;
  }
  return cell_region[day_events.front().cell];
}

std::optional<mobility::PlacementSeries> build_series(std::span<const Event> events,
                                                      std::span<const std::uint16_t> cell_region,
                                                      Horizon horizon, UtcOffset tz) {
  std::map<Date, std::vector<Event>> by_day;
  for (const Event& e : events) {
    Date d = local_date_of(e.ts, tz);
    if (horizon.contains(d)) by_day[d].push_back(e);
  }
  if (by_day.empty()) return std::nullopt;
  mobility::PlacementSeries s;
  s.first_obs = by_day.begin()->first;
  s.last_obs = by_day.rbegin()->first;
  std::uint16_t last_province = 0;
  for (Date d = s.first_obs; d <= s.last_obs; ++d) {
    auto it = by_day.find(d);
    if (it != by_day.end()) {
      last_province = daily_placement(it->second, cell_region);
      s.province.push_back(last_province);
      s.carried.push_back(0);
    } else {
      s.province.push_back(last_province);
      s.carried.push_back(1);
    }
  }
  if (s.last_obs < horizon.end) {
    s.lost = true;
    s.lost_date = s.last_obs + 1;
  }
  return s;
}

mobility::SeriesSet build_series_all(const EventBatch& batch,
                                     std::span<const std::uint16_t> cell_region,
                                     std::span<const std::uint32_t> members,
                                     std::span<const MobilityClass> member_class,
                                     const SubscriberTable& subscribers, Horizon horizon,
                                     UtcOffset tz) {
  mobility::SeriesSet set;
  set.horizon = horizon;
  set.tz = tz;
  std::map<std::uint32_t, std::size_t> slot_of;  // batch subscriber -> member slot
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (auto batch_sub = batch.subscribers.find(subscribers.rows[members[j]].id)) {
      slot_of[*batch_sub] = j;
    }
  }
  std::vector<std::vector<Event>> grouped(members.size());
  for (const Event& e : batch.events) {
    auto it = slot_of.find(e.subscriber);
    if (it != slot_of.end()) grouped[it->second].push_back(e);
  }
  for (std::size_t j = 0; j < members.size(); ++j) {
    auto& events = grouped[j];
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.ts < b.ts; });
    auto s = build_series(events, cell_region, horizon, tz);
    if (s) {
      s->member_row = members[j];
      s->cls = member_class[j];
      set.series.push_back(std::move(*s));
    } else {
      ++set.excluded_no_events;
    }
  }
  return set;
}

mobility::GroupSeries group_timeseries(const mobility::SeriesSet& set,
                                       const std::vector<bool>& border_region, bool backfill) {
  mobility::GroupSeries out;
  out.horizon = set.horizon;
  out.cohort_size = set.series.size();
  out.counts.assign(static_cast<std::size_t>(set.horizon.num_days()), {0, 0, 0, 0, 0});
  for (Date d = set.horizon.start; d <= set.horizon.end; ++d) {
    auto& day = out.counts[static_cast<std::size_t>(d - set.horizon.start)];
    for (const auto& s : set.series) {
      std::uint16_t p = mobility::placement_at(s, d, backfill);
      if (p == mobility::kLost) {
        ++day[4];
      } else if (p == mobility::kUnplaced) {
        continue;
      } else {
        bool border = border_region[p];
        if (s.cls == MobilityClass::Visa) ++day[border ? 0 : 1];
        else ++day[border ? 2 : 3];
      }
    }
  }
  return out;
}

mobility::ProvinceCounts province_counts(const mobility::SeriesSet& set,
                                         std::span<const std::string> region_names, Date date,
                                         bool backfill) {
  mobility::ProvinceCounts out;
  out.date = date;
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : set.series) {
    std::uint16_t p = mobility::placement_at(s, date, backfill);
    if (p == mobility::kLost) ++out.lost;
    else if (p == mobility::kUnplaced) ++out.unplaced;
    else ++counts[region_names[p]];
  }
  for (const auto& [name, n] : counts) out.counts.emplace_back(name, n);
  return out;
}

mobility::FlowMatrix flow_matrix(const mobility::SeriesSet& set,
                                 std::span<const std::string> region_names, Date date_a,
                                 Date date_b, bool backfill) {
  mobility::FlowMatrix out;
  out.date_a = date_a;
  out.date_b = date_b;
  std::map<std::pair<std::string, std::string>, std::uint64_t> cells;
  auto name_of = [&](std::uint16_t r) {
    return r == mobility::kLost ? std::string(mobility::kLostToken) : region_names[r];
  };
  for (const auto& s : set.series) {
    std::uint16_t a = mobility::placement_at(s, date_a, backfill);
    std::uint16_t b = mobility::placement_at(s, date_b, backfill);
    if (a == mobility::kUnplaced || b == mobility::kUnplaced) continue;
    ++cells[{name_of(a), name_of(b)}];
    ++out.total;
  }
  for (const auto& [key, n] : cells) out.links.emplace_back(key.first, key.second, n);
  return out;
}

mobility::AntennaCounts antenna_counts(const EventBatch& batch, std::int64_t bucket_seconds) {
  mobility::AntennaCounts out;
  out.bucket_seconds = bucket_seconds;
  std::map<std::pair<std::string, std::int64_t>, std::set<std::uint32_t>> cells;
  for (const Event& e : batch.events) {
    std::int64_t b =
        e.ts >= 0 ? e.ts / bucket_seconds : (e.ts - bucket_seconds + 1) / bucket_seconds;
    cells[{batch.cells.token(e.cell), b * bucket_seconds}].insert(e.subscriber);
  }
  for (const auto& [key, devices] : cells) {
    out.rows.emplace_back(key.first, key.second, devices.size());
  }
  return out;
}

std::vector<std::uint32_t> select_border_cohort(const EventBatch& batch,
                                                const ingest::LinkedRefs& links,
                                                const CellRegistry& registry,
                                                std::span<const std::string> border_provinces,
                                                Date window_start, Date window_end, UtcOffset tz) {
  std::set<std::string> border(border_provinces.begin(), border_provinces.end());
  std::set<std::uint32_t> rows;
  for (const Event& e : batch.events) {
    const std::string& province = registry.provinces[links.cell_province[e.cell]];
    if (!border.contains(province)) continue;
    Date d = local_date_of(e.ts, tz);
    if (d < window_start || d > window_end) continue;
    if (links.subscriber_row[e.subscriber] >= 0) {
      rows.insert(static_cast<std::uint32_t>(links.subscriber_row[e.subscriber]));
    }
  }
  return {rows.begin(), rows.end()};
}

std::vector<sentiment::Score> score_texts(std::span<const std::string> texts,
                                          const sentiment::Lexicon& lexicon) {
  std::vector<sentiment::Score> out;
  out.reserve(texts.size());
  for (const auto& text : texts) out.push_back(sentiment::score_text(text, lexicon));
  return out;
}

}  // namespace bflux::ref
