#pragma once

#include <span>
#include <string>
#include <vector>

#include "borderflux/ingest.hpp"
#include "borderflux/types.hpp"

namespace bflux::cohort {

struct CohortSpec {
  std::vector<std::string> border_provinces{"Edirne", "Kırklareli"};
  Date window_start = make_date(2020, 2, 25);
  Date window_end = make_date(2020, 3, 25);
  int top_k = 20;
  UtcOffset tz{};
  // Nationality excluded from the mobile cohort; it appears only as a
  // Twitter language group.
  std::string home_nationality = "TUR";
};

struct Cohort {
  std::vector<std::uint32_t> members;       // subscriber-table rows, ascending
  std::vector<MobilityClass> member_class;  // parallel to members
  std::vector<std::string> nationalities;   // selected set, ascending
  std::size_t excluded_home_nationality = 0;
  std::size_t excluded_unknown_policy = 0;

  std::size_t size() const { return members.size(); }
};

// Subscribers (table rows) with at least one event whose cell province is
// a border province and whose local date falls in the window. Raw events,
// not daily placements, drive the presence test.
std::vector<std::uint32_t> select_border_cohort(const EventBatch& batch,
                                                const ingest::LinkedRefs& links,
                                                const CellRegistry& registry,
                                                const CohortSpec& spec);

// The k nationalities with the most candidate subscribers; ties at the
// boundary break by ascending alpha-3 code.
std::vector<std::string> top_k_nationalities(std::span<const std::uint32_t> candidates,
                                             const SubscriberTable& subscribers, int k);

MobilityClass assign_visa_class(std::string_view nationality, const VisaPolicy& policy);

Cohort build(const EventBatch& batch, const ingest::LinkedRefs& links,
             const CellRegistry& registry, const SubscriberTable& subscribers,
             const VisaPolicy& policy, const CohortSpec& spec);

// Audit format: subscriber_id,class,nationality.
std::string to_csv(const Cohort& cohort, const SubscriberTable& subscribers);
Cohort from_csv(std::string_view text, const SubscriberTable& subscribers);

}  // namespace bflux::cohort
