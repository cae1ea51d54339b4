#include "borderflux/cohort.hpp"

#include <algorithm>
#include <map>

#include "borderflux/csv.hpp"
#include "borderflux/error.hpp"

namespace bflux::cohort {

std::vector<std::uint32_t> select_border_cohort(const EventBatch& batch,
                                                const ingest::LinkedRefs& links,
                                                const CellRegistry& registry,
                                                const CohortSpec& spec) {
  std::vector<bool> border_province(registry.provinces.size(), false);
  for (const auto& code : spec.border_provinces) {
    if (auto idx = registry.province_index(code)) border_province[*idx] = true;
  }

  std::vector<char> seen(batch.subscribers.size(), 0);
#pragma omp parallel
  {
    std::vector<char> local(batch.subscribers.size(), 0);
#pragma omp for nowait
    for (std::size_t i = 0; i < batch.events.size(); ++i) {
      const Event& e = batch.events[i];
      if (!border_province[links.cell_province[e.cell]]) continue;
      Date d = local_date_of(e.ts, spec.tz);
      if (d < spec.window_start || d > spec.window_end) continue;
      local[e.subscriber] = 1;
    }
#pragma omp critical
    for (std::size_t s = 0; s < local.size(); ++s) {
      if (local[s]) seen[s] = 1;
    }
  }

  std::vector<std::uint32_t> rows;
  for (std::uint32_t s = 0; s < seen.size(); ++s) {
    if (!seen[s]) continue;
    std::int32_t row = links.subscriber_row[s];
    if (row >= 0) rows.push_back(static_cast<std::uint32_t>(row));
  }
  std::sort(rows.begin(), rows.end());
  return rows;
}

std::vector<std::string> top_k_nationalities(std::span<const std::uint32_t> candidates,
                                             const SubscriberTable& subscribers, int k) {
  std::map<std::string, std::size_t> counts;
  for (std::uint32_t row : candidates) ++counts[subscribers.rows[row].nationality];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (k < 0) k = 0;
  if (static_cast<std::size_t>(k) < ranked.size()) ranked.resize(static_cast<std::size_t>(k));
  std::vector<std::string> out;
  out.reserve(ranked.size());
  for (auto& [code, n] : ranked) out.push_back(code);
  std::sort(out.begin(), out.end());
  return out;
}

MobilityClass assign_visa_class(std::string_view nationality, const VisaPolicy& policy) {
  return policy.lookup(nationality);
}

Cohort build(const EventBatch& batch, const ingest::LinkedRefs& links,
             const CellRegistry& registry, const SubscriberTable& subscribers,
             const VisaPolicy& policy, const CohortSpec& spec) {
  Cohort cohort;
  auto present = select_border_cohort(batch, links, registry, spec);

  std::vector<std::uint32_t> foreign;
  foreign.reserve(present.size());
  for (std::uint32_t row : present) {
    if (subscribers.rows[row].nationality == spec.home_nationality) {
      ++cohort.excluded_home_nationality;
    } else {
      foreign.push_back(row);
    }
  }

  cohort.nationalities = top_k_nationalities(foreign, subscribers, spec.top_k);

  for (std::uint32_t row : foreign) {
    const auto& nat = subscribers.rows[row].nationality;
    if (!std::binary_search(cohort.nationalities.begin(), cohort.nationalities.end(), nat)) {
      continue;
    }
    MobilityClass cls = assign_visa_class(nat, policy);
    if (cls == MobilityClass::Unknown) {
      ++cohort.excluded_unknown_policy;
      continue;
    }
    cohort.members.push_back(row);
    cohort.member_class.push_back(cls);
  }
  return cohort;
}

std::string to_csv(const Cohort& cohort, const SubscriberTable& subscribers) {
  std::string out = "subscriber_id,class,nationality\n";
  for (std::size_t i = 0; i < cohort.members.size(); ++i) {
    const auto& row = subscribers.rows[cohort.members[i]];
    out += csv::escape(row.id);
    out += ',';
    out += to_string(cohort.member_class[i]);
    out += ',';
    out += row.nationality;
    out += '\n';
  }
  return out;
}

Cohort from_csv(std::string_view text, const SubscriberTable& subscribers) {
  Cohort cohort;
  bool first = true;
  std::map<std::string, bool> nationality_seen;
  csv::for_each_line(text, [&](std::size_t idx, std::string_view line) {
    if (line.empty()) return;
    auto fields = csv::split_line(line);
    if (first) {
      if (fields.size() != 3 || fields[0] != "subscriber_id") {
        throw DataError("cohort csv: unexpected header");
      }
      first = false;
      return;
    }
    if (fields.size() != 3) throw DataError("cohort csv: bad row at line " + std::to_string(idx + 1));
    auto row = subscribers.find(fields[0]);
    if (!row) throw DataError("cohort csv: unknown subscriber " + fields[0]);
    auto cls = parse_mobility_class(fields[1]);
    if (!cls) throw DataError("cohort csv: unknown class " + fields[1]);
    cohort.members.push_back(*row);
    cohort.member_class.push_back(*cls);
    nationality_seen[fields[2]] = true;
  });
  for (auto& [nat, _] : nationality_seen) cohort.nationalities.push_back(nat);

  // Keep members sorted by table row for deterministic downstream order.
  std::vector<std::size_t> order(cohort.members.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return cohort.members[a] < cohort.members[b];
  });
  Cohort sorted;
  sorted.nationalities = cohort.nationalities;
  sorted.members.reserve(order.size());
  sorted.member_class.reserve(order.size());
  for (std::size_t i : order) {
    sorted.members.push_back(cohort.members[i]);
    sorted.member_class.push_back(cohort.member_class[i]);
  }
  return sorted;
}

}  // namespace bflux::cohort
