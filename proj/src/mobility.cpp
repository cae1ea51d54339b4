#include "borderflux/mobility.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "borderflux/error.hpp"

namespace bflux::mobility {

namespace {

struct DayTally {
  // Small per-day accumulator: (region, count, sequence of last event).
  struct Entry {
    std::uint16_t region;
    std::uint32_t count;
    std::uint32_t last_seq;
  };
  std::vector<Entry> entries;
  std::uint32_t seq = 0;

  void clear() {
    entries.clear();
    seq = 0;
  }

  void add(std::uint16_t region) {
    for (auto& e : entries) {
      if (e.region == region) {
        ++e.count;
        e.last_seq = seq++;
        return;
      }
    }
    entries.push_back({region, 1, seq++});
  }

  std::uint16_t resolve() const {
    std::uint32_t best_count = 0;
    for (const auto& e : entries) best_count = std::max(best_count, e.count);
    std::uint16_t winner = entries.front().region;
    std::uint32_t winner_seq = 0;
    bool found = false;
    for (const auto& e : entries) {
      if (e.count == best_count && (!found || e.last_seq > winner_seq)) {
        winner = e.region;
        winner_seq = e.last_seq;
        found = true;
      }
    }
    return winner;
  }
};

}  // namespace

std::uint16_t daily_placement(std::span<const Event> day_events,
                              std::span<const std::uint16_t> cell_region) {
  DayTally tally;
  for (const Event& e : day_events) tally.add(cell_region[e.cell]);
  return tally.resolve();
}

std::optional<PlacementSeries> build_series(std::span<const Event> events,
                                            std::span<const std::uint16_t> cell_region,
                                            Horizon horizon, UtcOffset tz) {
  // Observed (date, province) pairs in date order.
  std::vector<std::pair<Date, std::uint16_t>> observed;
  DayTally tally;
  Date current{};
  bool open = false;
  for (const Event& e : events) {
    Date d = local_date_of(e.ts, tz);
    if (!horizon.contains(d)) continue;
    if (!open || d != current) {
      if (open) observed.emplace_back(current, tally.resolve());
      tally.clear();
      current = d;
      open = true;
    }
    tally.add(cell_region[e.cell]);
  }
  if (open) observed.emplace_back(current, tally.resolve());
  if (observed.empty()) return std::nullopt;

  PlacementSeries s;
  s.first_obs = observed.front().first;
  s.last_obs = observed.back().first;
  auto span_days = static_cast<std::size_t>(s.last_obs - s.first_obs + 1);
  s.province.resize(span_days);
  s.carried.assign(span_days, 1);
  for (const auto& [d, prov] : observed) {
    auto off = static_cast<std::size_t>(d - s.first_obs);
    s.province[off] = prov;
    s.carried[off] = 0;
  }
  std::uint16_t last = s.province[0];
  for (std::size_t i = 1; i < span_days; ++i) {
    if (s.carried[i]) {
      s.province[i] = last;
    } else {
      last = s.province[i];
    }
  }
  if (s.last_obs < horizon.end) {
    s.lost = true;
    s.lost_date = s.last_obs + 1;
  }
  return s;
}

SeriesSet build_series_all(const EventBatch& batch, std::span<const std::uint16_t> cell_region,
                           std::span<const std::uint32_t> members,
                           std::span<const MobilityClass> member_class,
                           const SubscriberTable& subscribers, Horizon horizon, UtcOffset tz) {
  SeriesSet set;
  set.horizon = horizon;
  set.tz = tz;

  // Member slot for each batch subscriber index.
  std::vector<std::int32_t> slot_of(batch.subscribers.size(), -1);
  for (std::size_t j = 0; j < members.size(); ++j) {
    if (auto b = batch.subscribers.find(subscribers.rows[members[j]].id)) {
      slot_of[*b] = static_cast<std::int32_t>(j);
    }
  }

  const std::int64_t ts_min = local_midnight_utc(horizon.start, tz);
  const std::int64_t ts_max = local_midnight_utc(horizon.end + 1, tz) - 1;

  // Group in-horizon cohort events by member, preserving file order.
  std::vector<std::uint32_t> counts(members.size() + 1, 0);
  for (const Event& e : batch.events) {
    if (e.ts < ts_min || e.ts > ts_max) continue;
    std::int32_t slot = slot_of[e.subscriber];
    if (slot >= 0) ++counts[static_cast<std::size_t>(slot) + 1];
  }
  for (std::size_t j = 1; j < counts.size(); ++j) counts[j] += counts[j - 1];
  std::vector<Event> grouped(counts.back());
  {
    std::vector<std::uint32_t> cursor(counts.begin(), counts.end() - 1);
    for (const Event& e : batch.events) {
      if (e.ts < ts_min || e.ts > ts_max) continue;
      std::int32_t slot = slot_of[e.subscriber];
      if (slot >= 0) grouped[cursor[static_cast<std::size_t>(slot)]++] = e;
    }
  }

  std::vector<std::optional<PlacementSeries>> built(members.size());
#pragma omp parallel for schedule(dynamic, 64)
  for (std::size_t j = 0; j < members.size(); ++j) {
    auto begin = grouped.begin() + counts[j];
    auto end = grouped.begin() + counts[j + 1];
    if (begin == end) continue;
    // File order within equal timestamps is already in place; a stable
    // sort by ts keeps it as the tie order.
    std::stable_sort(begin, end, [](const Event& a, const Event& b) { return a.ts < b.ts; });
    auto s = build_series(std::span<const Event>(&*begin, static_cast<std::size_t>(end - begin)),
                          cell_region, horizon, tz);
    if (s) {
      s->member_row = members[j];
      s->cls = member_class[j];
      built[j] = std::move(s);
    }
  }

  for (std::size_t j = 0; j < members.size(); ++j) {
    if (built[j]) {
      set.series.push_back(std::move(*built[j]));
    } else {
      ++set.excluded_no_events;
    }
  }
  return set;
}

std::uint16_t placement_at(const PlacementSeries& s, Date d, bool backfill) {
  if (s.lost && d >= s.lost_date) return kLost;
  if (d < s.first_obs) return backfill ? s.province.front() : kUnplaced;
  if (d > s.last_obs) return s.province.back();  // unreachable for well-formed series
  return s.province_on(d);
}

std::vector<std::pair<Date, std::uint64_t>> GroupSeries::alive_series() const {
  std::vector<std::pair<Date, std::uint64_t>> out;
  out.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const auto& c = counts[i];
    out.emplace_back(horizon.start + static_cast<int>(i), c[0] + c[1] + c[2] + c[3]);
  }
  return out;
}

GroupSeries group_timeseries(const SeriesSet& set, const std::vector<bool>& border_region,
                             bool backfill) {
  GroupSeries out;
  out.horizon = set.horizon;
  out.cohort_size = set.series.size();
  const auto days = static_cast<std::size_t>(set.horizon.num_days());
  out.counts.assign(days, {0, 0, 0, 0, 0});

  auto bucket_of = [&](MobilityClass cls, std::uint16_t region) -> std::size_t {
    bool border = border_region[region];
    if (cls == MobilityClass::Visa) return border ? 0 : 1;
    return border ? 2 : 3;
  };

#pragma omp parallel
  {
    // Difference arrays keep range adds O(1); integer merges are
    // order-independent, so the result is thread-count invariant.
    std::vector<std::array<std::int64_t, 5>> diff(days + 1, {0, 0, 0, 0, 0});
#pragma omp for nowait
    for (std::size_t i = 0; i < set.series.size(); ++i) {
      const PlacementSeries& s = set.series[i];
      auto first_off = static_cast<std::size_t>(s.first_obs - set.horizon.start);
      auto last_off = static_cast<std::size_t>(s.last_obs - set.horizon.start);
      if (backfill && first_off > 0) {
        std::size_t b = bucket_of(s.cls, s.province.front());
        ++diff[0][b];
        --diff[first_off][b];
      }
      std::size_t run_start = first_off;
      std::size_t run_bucket = bucket_of(s.cls, s.province[0]);
      for (std::size_t d = 1; d <= last_off - first_off; ++d) {
        std::size_t b = bucket_of(s.cls, s.province[d]);
        if (b != run_bucket) {
          ++diff[run_start][run_bucket];
          --diff[first_off + d][run_bucket];
          run_start = first_off + d;
          run_bucket = b;
        }
      }
      ++diff[run_start][run_bucket];
      --diff[last_off + 1][run_bucket];
      if (s.lost) {
        auto lost_off = static_cast<std::size_t>(s.lost_date - set.horizon.start);
        ++diff[lost_off][4];
        --diff[days][4];
      }
    }
#pragma omp critical
    {
      std::array<std::int64_t, 5> acc{0, 0, 0, 0, 0};
      for (std::size_t d = 0; d < days; ++d) {
        for (std::size_t b = 0; b < 5; ++b) {
          acc[b] += diff[d][b];
          out.counts[d][b] += static_cast<std::uint64_t>(acc[b]);
        }
      }
    }
  }
  return out;
}

ProvinceCounts province_counts(const SeriesSet& set, std::span<const std::string> region_names,
                               Date date, bool backfill) {
  ProvinceCounts out;
  out.date = date;
  std::vector<std::uint64_t> by_region(region_names.size(), 0);
  for (const PlacementSeries& s : set.series) {
    std::uint16_t p = placement_at(s, date, backfill);
    if (p == kLost) {
      ++out.lost;
    } else if (p == kUnplaced) {
      ++out.unplaced;
    } else {
      ++by_region[p];
    }
  }
  for (std::size_t r = 0; r < by_region.size(); ++r) {
    if (by_region[r] > 0) out.counts.emplace_back(region_names[r], by_region[r]);
  }
  std::sort(out.counts.begin(), out.counts.end());
  return out;
}

FlowMatrix flow_matrix(const SeriesSet& set, std::span<const std::string> region_names,
                       Date date_a, Date date_b, bool backfill) {
  if (!(date_a < date_b)) throw ConfigError("flow matrix requires date_a < date_b");
  if (!set.horizon.contains(date_a) || !set.horizon.contains(date_b)) {
    throw ConfigError("flow matrix dates must lie within the horizon");
  }
  FlowMatrix out;
  out.date_a = date_a;
  out.date_b = date_b;
  std::map<std::pair<std::uint16_t, std::uint16_t>, std::uint64_t> cells;
  for (const PlacementSeries& s : set.series) {
    std::uint16_t origin = placement_at(s, date_a, backfill);
    std::uint16_t dest = placement_at(s, date_b, backfill);
    if (origin == kUnplaced || dest == kUnplaced) continue;
    ++cells[{origin, dest}];
    ++out.total;
  }
  auto name_of = [&](std::uint16_t r) -> std::string {
    return r == kLost ? std::string(kLostToken) : region_names[r];
  };
  for (const auto& [key, count] : cells) {
    out.links.emplace_back(name_of(key.first), name_of(key.second), count);
  }
  std::sort(out.links.begin(), out.links.end());
  return out;
}

AntennaCounts antenna_counts(const EventBatch& batch, std::int64_t bucket_seconds) {
  if (bucket_seconds < 60) throw ConfigError("antenna bucket must be at least one minute");
  AntennaCounts out;
  out.bucket_seconds = bucket_seconds;

  // Rank cells by token so output order is registry-independent.
  std::vector<std::uint32_t> order(batch.cells.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return batch.cells.token(a) < batch.cells.token(b);
  });
  std::vector<std::uint32_t> rank(batch.cells.size());
  for (std::uint32_t i = 0; i < order.size(); ++i) rank[order[i]] = i;

  struct Key {
    std::uint32_t cell_rank;
    std::int64_t bucket;
    std::uint32_t device;
  };
  std::vector<Key> keys;
  keys.reserve(batch.events.size());
  for (const Event& e : batch.events) {
    std::int64_t b = e.ts >= 0 ? e.ts / bucket_seconds : (e.ts - bucket_seconds + 1) / bucket_seconds;
    keys.push_back({rank[e.cell], b, e.subscriber});
  }
  std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
    if (a.cell_rank != b.cell_rank) return a.cell_rank < b.cell_rank;
    if (a.bucket != b.bucket) return a.bucket < b.bucket;
    return a.device < b.device;
  });

  std::size_t i = 0;
  while (i < keys.size()) {
    std::uint32_t cell = keys[i].cell_rank;
    std::int64_t bucket = keys[i].bucket;
    std::uint64_t devices = 0;
    std::uint32_t prev_device = 0;
    bool have_prev = false;
    while (i < keys.size() && keys[i].cell_rank == cell && keys[i].bucket == bucket) {
      if (!have_prev || keys[i].device != prev_device) {
        ++devices;
        prev_device = keys[i].device;
        have_prev = true;
      }
      ++i;
    }
    out.rows.emplace_back(batch.cells.token(order[cell]), bucket * bucket_seconds, devices);
  }
  return out;
}

std::vector<Drop> detect_drops(std::span<const std::pair<Date, std::uint64_t>> series,
                               std::optional<double> theta, std::optional<int> top_n) {
  std::vector<Drop> drops;
  for (std::size_t i = 1; i < series.size(); ++i) {
    const auto prev = static_cast<double>(series[i - 1].second);
    const auto cur = static_cast<double>(series[i].second);
    double rel = (prev - cur) / std::max(prev, 1.0);
    if (rel > 0) drops.push_back({series[i].first, rel});
  }
  std::sort(drops.begin(), drops.end(), [](const Drop& a, const Drop& b) {
    if (a.relative != b.relative) return a.relative > b.relative;
    return a.date < b.date;
  });
  if (theta) {
    std::erase_if(drops, [&](const Drop& d) { return d.relative < *theta; });
  } else if (top_n) {
    if (*top_n >= 0 && drops.size() > static_cast<std::size_t>(*top_n)) {
      drops.resize(static_cast<std::size_t>(*top_n));
    }
  }
  return drops;
}

CrossingEstimate estimate_crossings(std::int64_t lost_at_border, double share,
                                    double churn_floor) {
  if (lost_at_border < 0) throw DataError("lost_at_border must be non-negative");
  if (!(share > 0.0 && share <= 1.0)) throw ConfigError("share must be in (0, 1]");
  if (!(churn_floor > 0.0 && churn_floor <= 1.0)) {
    throw ConfigError("churn_floor must be in (0, 1]");
  }
  CrossingEstimate est;
  est.lost_at_border = lost_at_border;
  est.share = share;
  est.churn_floor = churn_floor;
  est.low = std::llround(static_cast<double>(lost_at_border) * churn_floor / share);
  est.high = std::llround(static_cast<double>(lost_at_border) / share);
  return est;
}

std::map<MobilityClass, std::uint64_t> lost_at_border_by_class(
    const SeriesSet& set, const std::vector<bool>& border_region) {
  std::map<MobilityClass, std::uint64_t> out;
  out[MobilityClass::Visa] = 0;
  out[MobilityClass::NoVisa] = 0;
  for (const PlacementSeries& s : set.series) {
    if (s.lost && border_region[s.province.back()]) ++out[s.cls];
  }
  return out;
}

}  // namespace bflux::mobility
