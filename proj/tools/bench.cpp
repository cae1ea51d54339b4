// Kernel benchmark: optimized (OpenMP) paths against the serial reference
// implementations, on a freshly generated synthetic world. Each kernel's
// results are asserted equal between the two routes before timing is
// reported.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <CLI11.hpp>

#include "borderflux/cohort.hpp"
#include "borderflux/ingest.hpp"
#include "borderflux/mobility.hpp"
#include "borderflux/reference.hpp"
#include "borderflux/rng.hpp"
#include "borderflux/sentiment.hpp"
#include "borderflux/synth.hpp"

namespace fs = std::filesystem;
using namespace bflux;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct Row {
  std::string kernel;
  double serial_ms;
  double parallel_ms;
  bool equal;
};

void print_rows(const std::vector<Row>& rows) {
  std::printf("\n%-24s %12s %12s %9s %7s\n", "kernel", "serial (ms)", "omp (ms)", "speedup",
              "equal");
  for (const auto& r : rows) {
    std::printf("%-24s %12.1f %12.1f %8.2fx %7s\n", r.kernel.c_str(), r.serial_ms,
                r.parallel_ms, r.serial_ms / std::max(r.parallel_ms, 0.001),
                r.equal ? "yes" : "NO");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"borderflux-bench: serial reference vs OpenMP kernels"};
  int subscribers = 20000;
  int days = 60;
  double events_per_day = 4.0;
  std::uint64_t seed = 7;
  int threads = 0;
  app.add_option("--subscribers", subscribers, "synthetic subscribers");
  app.add_option("--days", days, "horizon length in days");
  app.add_option("--events-per-day", events_per_day, "mean events per subscriber-day");
  app.add_option("--seed", seed, "world seed");
  app.add_option("--threads", threads, "OpenMP threads (0 = default)");
  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
  std::printf("threads: %d\n", omp_get_max_threads());
#else
  std::printf("threads: 1 (built without OpenMP)\n");
#endif

  synth::SynthConfig cfg;
  cfg.seed = seed;
  cfg.horizon = {make_date(2020, 2, 25), make_date(2020, 2, 25) + (days - 1)};
  cfg.provinces = {{"EDI", 8}, {"KLR", 4}, {"IST", 20}, {"ANK", 12}, {"IZM", 8}};
  cfg.groups = {
      {"SYR", MobilityClass::Visa, subscribers / 2, "IST", events_per_day, 0},
      {"AFG", MobilityClass::Visa, subscribers / 4, "ANK", events_per_day, 0},
      {"GRC", MobilityClass::NoVisa, subscribers / 4, "EDI", events_per_day, 0},
  };
  cfg.injections = {
      {synth::InjectKind::Surge, cfg.horizon.start + 3, {"SYR"}, subscribers / 4, "EDI"},
      {synth::InjectKind::Disappear, cfg.horizon.start + days / 2, {"SYR"}, subscribers / 8, ""},
  };
  cfg.manifest_itineraries = false;

  fs::path dir = fs::temp_directory_path() / ("bflux_bench_" + std::to_string(seed));
  fs::create_directories(dir);
  std::printf("generating world (%d subscribers, %d days) ...\n", subscribers, days);
  synth::generate_world(cfg, dir.string());

  std::string xdr_text = ingest::read_file((dir / "xdr.csv").string());
  std::printf("xdr.csv: %.1f MB\n", static_cast<double>(xdr_text.size()) / 1e6);

  std::vector<Row> rows;

  // parse
  auto t0 = std::chrono::steady_clock::now();
  auto serial_parse = ref::parse_xdr_serial(xdr_text);
  double serial_parse_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto parallel_parse = ingest::parse_xdr(xdr_text);
  double parallel_parse_ms = ms_since(t0);
  bool parse_equal = serial_parse.batch.events.size() == parallel_parse.batch.events.size();
  for (std::size_t i = 0; parse_equal && i < serial_parse.batch.events.size(); i += 997) {
    parse_equal = serial_parse.batch.materialize(i) == parallel_parse.batch.materialize(i);
  }
  rows.push_back({"parse_xdr", serial_parse_ms, parallel_parse_ms, parse_equal});

  auto registry = ingest::parse_cells_csv(ingest::read_file((dir / "cells.csv").string()));
  auto subs = ingest::parse_subscribers_csv(ingest::read_file((dir / "subscribers.csv").string()));
  auto visa = ingest::parse_visa_policy_csv(ingest::read_file((dir / "visa_policy.csv").string()));
  auto links = ingest::link_refs(parallel_parse.batch, registry, subs);

  cohort::CohortSpec spec;
  spec.border_provinces = {"EDI", "KLR"};
  spec.window_start = cfg.horizon.start;
  spec.window_end = cfg.horizon.end;
  spec.top_k = 20;
  auto members = cohort::build(parallel_parse.batch, links, registry, subs, visa, spec);
  std::printf("cohort: %zu members\n", members.size());

  // build_series_all
  t0 = std::chrono::steady_clock::now();
  auto serial_series =
      ref::build_series_all(parallel_parse.batch, links.cell_province, members.members,
                            members.member_class, subs, cfg.horizon, cfg.tz);
  double serial_series_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto parallel_series =
      mobility::build_series_all(parallel_parse.batch, links.cell_province, members.members,
                                 members.member_class, subs, cfg.horizon, cfg.tz);
  double parallel_series_ms = ms_since(t0);
  bool series_equal = serial_series.series.size() == parallel_series.series.size();
  for (std::size_t i = 0; series_equal && i < serial_series.series.size(); ++i) {
    const auto& a = serial_series.series[i];
    const auto& b = parallel_series.series[i];
    series_equal = a.member_row == b.member_row && a.first_obs == b.first_obs &&
                   a.last_obs == b.last_obs && a.province == b.province && a.lost == b.lost;
  }
  rows.push_back({"build_series_all", serial_series_ms, parallel_series_ms, series_equal});

  // group_timeseries
  std::vector<bool> border(registry.provinces.size(), false);
  for (const auto& code : spec.border_provinces) {
    if (auto idx = registry.province_index(code)) border[*idx] = true;
  }
  t0 = std::chrono::steady_clock::now();
  auto serial_groups = ref::group_timeseries(serial_series, border, true);
  double serial_groups_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto parallel_groups = mobility::group_timeseries(parallel_series, border, true);
  double parallel_groups_ms = ms_since(t0);
  rows.push_back({"group_timeseries", serial_groups_ms, parallel_groups_ms,
                  serial_groups.counts == parallel_groups.counts});

  // antenna_counts
  t0 = std::chrono::steady_clock::now();
  auto serial_antenna = ref::antenna_counts(parallel_parse.batch, 3600);
  double serial_antenna_ms = ms_since(t0);
  t0 = std::chrono::steady_clock::now();
  auto parallel_antenna = mobility::antenna_counts(parallel_parse.batch, 3600);
  double parallel_antenna_ms = ms_since(t0);
  rows.push_back({"antenna_counts", serial_antenna_ms, parallel_antenna_ms,
                  serial_antenna.rows == parallel_antenna.rows});

  // sentiment scoring on synthetic texts
  {
    sentiment::Lexicon lexicon = sentiment::parse_lexicon_csv(
        "token,kind,value\nlove,term,3\nhate,term,-4\ngreat,term,5\nawful,term,-5\n"
        "good,term,2\nvery,booster,1\nslightly,booster,-1\nnot,negator,\n");
    Rng rng(seed);
    static const char* words[] = {"love", "hate",  "very", "not",  "good",    "great",
                                  "road", "night", "open", "gate", "crossing"};
    std::vector<std::string> texts(static_cast<std::size_t>(subscribers) * 10);
    for (auto& text : texts) {
      int n = 4 + static_cast<int>(rng.below(10));
      for (int w = 0; w < n; ++w) {
        text += words[rng.below(std::size(words))];
        text += ' ';
      }
    }
    t0 = std::chrono::steady_clock::now();
    auto serial_scores = ref::score_texts(texts, lexicon);
    double serial_scores_ms = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto parallel_scores = sentiment::score_texts(texts, lexicon);
    double parallel_scores_ms = ms_since(t0);
    rows.push_back(
        {"score_texts", serial_scores_ms, parallel_scores_ms, serial_scores == parallel_scores});
  }

  print_rows(rows);
  fs::remove_all(dir);
  for (const auto& r : rows) {
    if (!r.equal) {
      std::fprintf(stderr, "MISMATCH in %s\n", r.kernel.c_str());
      return 1;
    }
  }
  return 0;
}
