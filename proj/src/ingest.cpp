#include "borderflux/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

#include <nlohmann/json.hpp>

#include "borderflux/csv.hpp"
#include "borderflux/error.hpp"

namespace bflux::ingest {

using nlohmann::json;

namespace {

constexpr std::size_t kMinChunkBytes = 1 << 20;

int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

// Splits text into chunks at line boundaries. Every chunk ends right
// after a '\n' except possibly the last.
std::vector<std::string_view> split_chunks(std::string_view text, int want) {
  std::vector<std::string_view> chunks;
  if (text.empty()) return chunks;
  std::size_t target = std::max(kMinChunkBytes, text.size() / std::max(want, 1) + 1);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t stop = start + target;
    if (stop >= text.size()) {
      chunks.push_back(text.substr(start));
      break;
    }
    std::size_t nl = text.find('\n', stop);
    if (nl == std::string_view::npos) {
      chunks.push_back(text.substr(start));
      break;
    }
    chunks.push_back(text.substr(start, nl + 1 - start));
    start = nl + 1;
  }
  return chunks;
}

bool parse_i64(std::string_view s, std::int64_t& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

bool parse_f64(std::string_view s, double& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

// Per-chunk result with chunk-local interning. Merging chunk pools in
// chunk order reproduces global first-appearance order, and the compact
// event form keeps the transient footprint flat for very large inputs.
struct ChunkResult {
  EventBatch partial;
  std::vector<Diagnostic> diagnostics;  // line numbers relative to chunk start
  std::size_t lines = 0;
  std::size_t malformed = 0;
  std::size_t filtered = 0;
};

struct CsvLayout {
  int subscriber = -1;
  int ts = -1;
  int cell = -1;
  int kind = -1;  // optional
  int columns = 0;
};

CsvLayout parse_xdr_header(std::string_view header_line) {
  auto fields = csv::split_line(csv::strip_cr(header_line));
  CsvLayout layout;
  layout.columns = static_cast<int>(fields.size());
  for (int i = 0; i < layout.columns; ++i) {
    const std::string& f = fields[static_cast<std::size_t>(i)];
    if (f == "subscriber_id") layout.subscriber = i;
    else if (f == "ts") layout.ts = i;
    else if (f == "cell_id") layout.cell = i;
    else if (f == "kind") layout.kind = i;
  }
  if (layout.subscriber < 0 || layout.ts < 0 || layout.cell < 0) {
    throw DataError("xDR CSV header must contain subscriber_id, ts and cell_id");
  }
  return layout;
}

bool within(const ParseLimits& lim, std::int64_t ts) {
  if (lim.ts_min && ts < *lim.ts_min) return false;
  if (lim.ts_max && ts > *lim.ts_max) return false;
  return true;
}

void parse_csv_chunk(std::string_view chunk, const CsvLayout& layout, const ParseLimits& lim,
                     ChunkResult& out) {
  std::vector<std::string_view> fields;
  csv::for_each_line(chunk, [&](std::size_t rel, std::string_view line) {
    ++out.lines;
    if (line.empty()) {
      ++out.filtered;
      return;
    }
    if (line.find('"') != std::string_view::npos) {
      // Quoted fields are legal but rare; take the slow path.
      auto owned = csv::split_line(line);
      std::string bad_field;
      std::int64_t ts = 0;
      EventKind kind = EventKind::Data;
      if (static_cast<int>(owned.size()) != layout.columns) {
        bad_field = "columns";
      } else {
        if (!parse_i64(owned[static_cast<std::size_t>(layout.ts)], ts)) bad_field = "ts";
        if (owned[static_cast<std::size_t>(layout.subscriber)].empty()) bad_field = "subscriber_id";
        if (owned[static_cast<std::size_t>(layout.cell)].empty()) bad_field = "cell_id";
        if (layout.kind >= 0) {
          auto k = parse_event_kind(owned[static_cast<std::size_t>(layout.kind)]);
          if (!k) bad_field = "kind";
          else kind = *k;
        }
      }
      if (!bad_field.empty()) {
        ++out.malformed;
        out.diagnostics.push_back({rel, bad_field, "malformed field"});
        return;
      }
      if (!within(lim, ts)) {
        ++out.filtered;
        return;
      }
      out.partial.events.push_back(Event{
          ts, out.partial.subscribers.intern(owned[static_cast<std::size_t>(layout.subscriber)]),
          out.partial.cells.intern(owned[static_cast<std::size_t>(layout.cell)]), kind});
      return;
    }
    csv::split_line_fast(line, fields);
    if (static_cast<int>(fields.size()) != layout.columns) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "columns",
                                 "expected " + std::to_string(layout.columns) + " fields, got " +
                                     std::to_string(fields.size())});
      return;
    }
    std::string_view sub = fields[static_cast<std::size_t>(layout.subscriber)];
    std::string_view cell = fields[static_cast<std::size_t>(layout.cell)];
    std::int64_t ts = 0;
    if (!parse_i64(fields[static_cast<std::size_t>(layout.ts)], ts)) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "ts", "not an epoch-seconds integer"});
      return;
    }
    if (sub.empty()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "subscriber_id", "empty"});
      return;
    }
    if (cell.empty()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "cell_id", "empty"});
      return;
    }
    EventKind kind = EventKind::Data;
    if (layout.kind >= 0) {
      auto k = parse_event_kind(fields[static_cast<std::size_t>(layout.kind)]);
      if (!k) {
        ++out.malformed;
        out.diagnostics.push_back({rel, "kind", "unknown event kind"});
        return;
      }
      kind = *k;
    }
    if (!within(lim, ts)) {
      ++out.filtered;
      return;
    }
    out.partial.events.push_back(
        Event{ts, out.partial.subscribers.intern(sub), out.partial.cells.intern(cell), kind});
  });
}

void parse_ndjson_xdr_chunk(std::string_view chunk, const ParseLimits& lim, ChunkResult& out) {
  csv::for_each_line(chunk, [&](std::size_t rel, std::string_view line) {
    ++out.lines;
    if (line.empty()) {
      ++out.filtered;
      return;
    }
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "json", "invalid JSON object"});
      return;
    }
    if (!j.contains("subscriber_id") || !j["subscriber_id"].is_string() ||
        j["subscriber_id"].get_ref<const std::string&>().empty()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "subscriber_id", "missing or empty"});
      return;
    }
    if (!j.contains("cell_id") || !j["cell_id"].is_string() ||
        j["cell_id"].get_ref<const std::string&>().empty()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "cell_id", "missing or empty"});
      return;
    }
    if (!j.contains("ts") || !j["ts"].is_number_integer()) {
      ++out.malformed;
      out.diagnostics.push_back({rel, "ts", "missing or not an integer"});
      return;
    }
    std::int64_t ts = j["ts"].get<std::int64_t>();
    EventKind kind = EventKind::Data;
    if (j.contains("kind")) {
      if (!j["kind"].is_string()) {
        ++out.malformed;
        out.diagnostics.push_back({rel, "kind", "not a string"});
        return;
      }
      auto k = parse_event_kind(j["kind"].get_ref<const std::string&>());
      if (!k) {
        ++out.malformed;
        out.diagnostics.push_back({rel, "kind", "unknown event kind"});
        return;
      }
      kind = *k;
    }
    if (!within(lim, ts)) {
      ++out.filtered;
      return;
    }
    out.partial.events.push_back(
        Event{ts, out.partial.subscribers.intern(j["subscriber_id"].get_ref<const std::string&>()),
              out.partial.cells.intern(j["cell_id"].get_ref<const std::string&>()), kind});
  });
}

void enforce_error_budget(const ParseStats& stats, const ParseLimits& lim, const char* what) {
  if (stats.total_lines == 0) return;
  double rate = static_cast<double>(stats.malformed) / static_cast<double>(stats.total_lines);
  if (rate > lim.max_error_rate) {
    throw DataError(std::string(what) + ": malformed-line rate " + std::to_string(rate) +
                    " exceeds budget " + std::to_string(lim.max_error_rate) + " (" +
                    std::to_string(stats.malformed) + "/" + std::to_string(stats.total_lines) +
                    " lines)");
  }
}

}  // namespace

XdrParseResult parse_xdr(std::string_view input, XdrEncoding encoding, const ParseLimits& limits) {
  XdrParseResult result;
  std::size_t first_content = input.find_first_not_of(" \t\r\n");
  if (first_content == std::string_view::npos) return result;
  if (encoding == XdrEncoding::Auto) {
    encoding = input[first_content] == '{' ? XdrEncoding::Ndjson : XdrEncoding::Csv;
  }

  std::string_view body = input;
  std::size_t header_lines = 0;
  CsvLayout layout;
  if (encoding == XdrEncoding::Csv) {
    std::size_t nl = input.find('\n');
    std::string_view header = nl == std::string_view::npos ? input : input.substr(0, nl);
    layout = parse_xdr_header(header);
    body = nl == std::string_view::npos ? std::string_view{} : input.substr(nl + 1);
    header_lines = 1;
  }

  auto chunks = split_chunks(body, worker_count() * 4);
  std::vector<ChunkResult> partials(chunks.size());

#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (encoding == XdrEncoding::Csv) {
      parse_csv_chunk(chunks[i], layout, limits, partials[i]);
    } else {
      parse_ndjson_xdr_chunk(chunks[i], limits, partials[i]);
    }
  }

  // Merge in chunk order: emission stays in file order, chunk-local pool
  // indices are remapped into the global pools (preserving global
  // first-appearance order), and line numbers become absolute (1-based,
  // counting the header).
  std::size_t total_events = 0;
  for (const auto& p : partials) total_events += p.partial.events.size();
  result.batch.events.reserve(total_events);
  std::size_t line_base = header_lines;
  for (auto& p : partials) {
    std::vector<std::uint32_t> sub_map(p.partial.subscribers.size());
    for (std::uint32_t i = 0; i < p.partial.subscribers.size(); ++i) {
      sub_map[i] = result.batch.subscribers.intern(p.partial.subscribers.token(i));
    }
    std::vector<std::uint32_t> cell_map(p.partial.cells.size());
    for (std::uint32_t i = 0; i < p.partial.cells.size(); ++i) {
      cell_map[i] = result.batch.cells.intern(p.partial.cells.token(i));
    }
    for (const Event& ev : p.partial.events) {
      result.batch.events.push_back(
          Event{ev.ts, sub_map[ev.subscriber], cell_map[ev.cell], ev.kind});
    }
    p.partial = EventBatch{};  // release the chunk as soon as it is merged
    for (auto& d : p.diagnostics) {
      d.line += line_base + 1;  // relative index is 0-based
      result.stats.diagnostics.push_back(std::move(d));
    }
    result.stats.total_lines += p.lines;
    result.stats.malformed += p.malformed;
    result.stats.filtered += p.filtered;
    line_base += p.lines;
  }
  result.stats.total_lines += header_lines;
  result.stats.filtered += header_lines;  // header is a consumed, non-record line
  result.stats.emitted = result.batch.events.size();
  enforce_error_budget(result.stats, limits, "xdr parse");
  return result;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

XdrParseResult parse_xdr_file(const std::string& path, XdrEncoding encoding,
                              const ParseLimits& limits) {
  std::string text = read_file(path);
  return parse_xdr(text, encoding, limits);
}

std::string to_canonical_csv(const EventBatch& batch) {
  std::string out = "subscriber_id,ts,cell_id,kind\n";
  for (const Event& e : batch.events) {
    out += csv::escape(batch.subscribers.token(e.subscriber));
    out += ',';
    out += std::to_string(e.ts);
    out += ',';
    out += csv::escape(batch.cells.token(e.cell));
    out += ',';
    out += to_string(e.kind);
    out += '\n';
  }
  return out;
}

TweetParseResult parse_tweets(std::string_view ndjson, const ParseLimits& limits) {
  TweetParseResult result;
  csv::for_each_line(ndjson, [&](std::size_t idx, std::string_view line) {
    ++result.stats.total_lines;
    if (line.empty()) {
      ++result.stats.filtered;
      return;
    }
    auto reject = [&](const char* field, const char* reason) {
      ++result.stats.malformed;
      result.stats.diagnostics.push_back({idx + 1, field, reason});
    };
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      reject("json", "invalid JSON object");
      return;
    }
    Tweet t;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get_ref<const std::string&>().empty()) {
      reject("id", "missing or empty");
      return;
    }
    if (!j.contains("user") || !j["user"].is_string() ||
        j["user"].get_ref<const std::string&>().empty()) {
      reject("user", "missing or empty");
      return;
    }
    if (!j.contains("ts") || !j["ts"].is_number_integer()) {
      reject("ts", "missing or not an integer");
      return;
    }
    if (!j.contains("lang") || !j["lang"].is_string()) {
      reject("lang", "missing");
      return;
    }
    t.id = j["id"].get<std::string>();
    t.user = j["user"].get<std::string>();
    t.ts = j["ts"].get<std::int64_t>();
    t.lang = normalize_lang(j["lang"].get_ref<const std::string&>());
    if (t.lang.empty()) {
      reject("lang", "empty");
      return;
    }
    bool has_lat = j.contains("lat") && j["lat"].is_number();
    bool has_lon = j.contains("lon") && j["lon"].is_number();
    if (has_lat != has_lon) {
      reject("lat/lon", "coordinates must come as a pair");
      return;
    }
    if (has_lat) {
      t.lat = j["lat"].get<double>();
      t.lon = j["lon"].get<double>();
      if (t.lat < -90 || t.lat > 90 || t.lon < -180 || t.lon > 180) {
        reject("lat/lon", "out of WGS-84 range");
        return;
      }
      t.has_coord = true;
    }
    if (j.contains("country") && j["country"].is_string()) {
      t.country = normalize_country(j["country"].get_ref<const std::string&>());
    }
    if (j.contains("text") && j["text"].is_string()) {
      t.text = j["text"].get<std::string>();
    }
    if (limits.ts_min && t.ts < *limits.ts_min) {
      ++result.stats.filtered;
      return;
    }
    if (limits.ts_max && t.ts > *limits.ts_max) {
      ++result.stats.filtered;
      return;
    }
    result.tweets.push_back(std::move(t));
  });
  result.stats.emitted = result.tweets.size();
  enforce_error_budget(result.stats, limits, "tweet parse");
  return result;
}

TweetParseResult parse_tweets_file(const std::string& path, const ParseLimits& limits) {
  std::string text = read_file(path);
  return parse_tweets(text, limits);
}

std::string to_canonical_ndjson(const std::vector<Tweet>& tweets) {
  std::string out;
  for (const Tweet& t : tweets) {
    json j;
    j["id"] = t.id;
    j["user"] = t.user;
    j["ts"] = t.ts;
    if (t.has_coord) {
      j["lat"] = t.lat;
      j["lon"] = t.lon;
    }
    if (!t.country.empty()) j["country"] = t.country;
    j["lang"] = t.lang;
    if (!t.text.empty()) j["text"] = t.text;
    out += j.dump();
    out += '\n';
  }
  return out;
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return static_cast<int>(i);
    }
    return -1;
  }
};

CsvTable read_csv_table(std::string_view text, const char* what) {
  CsvTable table;
  bool first = true;
  csv::for_each_line(text, [&](std::size_t, std::string_view line) {
    if (line.empty()) return;
    auto fields = csv::split_line(line);
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      table.rows.push_back(std::move(fields));
    }
  });
  if (first) throw DataError(std::string(what) + ": empty file");
  return table;
}

std::uint16_t intern_code(std::vector<std::string>& list, const std::string& code) {
  for (std::size_t i = 0; i < list.size(); ++i) {
    if (list[i] == code) return static_cast<std::uint16_t>(i);
  }
  list.push_back(code);
  return static_cast<std::uint16_t>(list.size() - 1);
}

}  // namespace

CellRegistry parse_cells_csv(std::string_view text) {
  CsvTable table = read_csv_table(text, "cell registry");
  int c_id = table.column("cell_id"), c_prov = table.column("province"),
      c_dist = table.column("district"), c_lat = table.column("lat"), c_lon = table.column("lon");
  if (c_id < 0 || c_prov < 0 || c_lat < 0 || c_lon < 0) {
    throw DataError("cell registry header must contain cell_id,province,district,lat,lon");
  }
  CellRegistry reg;
  for (const auto& row : table.rows) {
    CellRegistry::Cell cell;
    cell.id = row[static_cast<std::size_t>(c_id)];
    if (cell.id.empty()) throw DataError("cell registry: empty cell_id");
    const std::string& prov = row[static_cast<std::size_t>(c_prov)];
    if (prov.empty()) throw DataError("cell registry: empty province for cell " + cell.id);
    cell.province = intern_code(reg.provinces, prov);
    if (c_dist >= 0 && !row[static_cast<std::size_t>(c_dist)].empty()) {
      cell.district = intern_code(reg.districts, row[static_cast<std::size_t>(c_dist)]);
    }
    if (!parse_f64(row[static_cast<std::size_t>(c_lat)], cell.lat) ||
        !parse_f64(row[static_cast<std::size_t>(c_lon)], cell.lon)) {
      throw DataError("cell registry: bad coordinates for cell " + cell.id);
    }
    if (cell.lat < -90 || cell.lat > 90 || cell.lon < -180 || cell.lon > 180) {
      throw DataError("cell registry: coordinates out of range for cell " + cell.id);
    }
    auto idx = static_cast<std::uint32_t>(reg.cells.size());
    if (!reg.by_id.emplace(cell.id, idx).second) {
      throw DataError("cell registry: duplicate cell_id " + cell.id);
    }
    reg.cells.push_back(std::move(cell));
  }
  return reg;
}

SubscriberTable parse_subscribers_csv(std::string_view text) {
  CsvTable table = read_csv_table(text, "subscriber table");
  int c_id = table.column("subscriber_id"), c_nat = table.column("nationality");
  if (c_id < 0 || c_nat < 0) {
    throw DataError("subscriber table header must contain subscriber_id,nationality");
  }
  SubscriberTable subs;
  for (const auto& row : table.rows) {
    SubscriberTable::Row r;
    r.id = row[static_cast<std::size_t>(c_id)];
    r.nationality = normalize_country(row[static_cast<std::size_t>(c_nat)]);
    if (r.id.empty()) throw DataError("subscriber table: empty subscriber_id");
    auto idx = static_cast<std::uint32_t>(subs.rows.size());
    if (!subs.by_id.emplace(r.id, idx).second) {
      throw DataError("subscriber table: duplicate subscriber_id " + r.id);
    }
    subs.rows.push_back(std::move(r));
  }
  return subs;
}

namespace {

template <class Enum, class ParseFn>
std::map<std::string, Enum> parse_policy(std::string_view text, const char* what,
                                         const char* key_col, const char* val_col,
                                         ParseFn parse_fn, bool upper_key) {
  CsvTable table = read_csv_table(text, what);
  int c_key = table.column(key_col), c_val = table.column(val_col);
  if (c_key < 0 || c_val < 0) {
    throw DataError(std::string(what) + ": header must contain " + key_col + "," + val_col);
  }
  std::map<std::string, Enum> out;
  for (const auto& row : table.rows) {
    std::string key = upper_key ? normalize_country(row[static_cast<std::size_t>(c_key)])
                                : normalize_lang(row[static_cast<std::size_t>(c_key)]);
    auto val = parse_fn(row[static_cast<std::size_t>(c_val)]);
    if (!val) {
      throw DataError(std::string(what) + ": unknown value '" +
                      row[static_cast<std::size_t>(c_val)] + "' for key " + key);
    }
    if (!out.emplace(key, *val).second) {
      throw DataError(std::string(what) + ": duplicate key " + key);
    }
  }
  return out;
}

}  // namespace

VisaPolicy parse_visa_policy_csv(std::string_view text) {
  VisaPolicy p;
  p.by_nationality = parse_policy<MobilityClass>(text, "visa policy", "nationality", "class",
                                                 parse_mobility_class, true);
  return p;
}

LanguageGroupPolicy parse_lang_group_policy_csv(std::string_view text) {
  LanguageGroupPolicy p;
  p.by_lang =
      parse_policy<LangGroup>(text, "language group policy", "lang", "group", parse_lang_group,
                              false);
  return p;
}

DestinationPolicy parse_destination_policy_csv(std::string_view text) {
  DestinationPolicy p;
  p.by_country = parse_policy<Destination>(text, "destination policy", "country", "dest",
                                           parse_destination, true);
  return p;
}

ReferenceTables parse_reference_tables(const std::string& cells_path,
                                       const std::string& subscribers_path,
                                       const std::string& visa_path,
                                       const std::string& lang_groups_path,
                                       const std::string& destinations_path) {
  ReferenceTables t;
  t.cells = parse_cells_csv(read_file(cells_path));
  t.subscribers = parse_subscribers_csv(read_file(subscribers_path));
  t.visa = parse_visa_policy_csv(read_file(visa_path));
  t.lang_groups = parse_lang_group_policy_csv(read_file(lang_groups_path));
  t.destinations = parse_destination_policy_csv(read_file(destinations_path));
  return t;
}

RefReport validate_refs(const EventBatch& batch, const CellRegistry& registry,
                        const SubscriberTable& subscribers) {
  RefReport report;
  for (const auto& token : batch.cells.tokens()) {
    if (!registry.find(token)) report.unknown_cells.push_back(token);
  }
  std::vector<bool> sub_unknown(batch.subscribers.size(), false);
  for (std::uint32_t i = 0; i < batch.subscribers.size(); ++i) {
    const auto& token = batch.subscribers.token(i);
    if (!subscribers.find(token)) {
      sub_unknown[i] = true;
      report.unknown_subscribers.push_back(token);
    }
  }
  for (const Event& e : batch.events) {
    if (sub_unknown[e.subscriber]) ++report.unknown_subscriber_events;
  }
  std::sort(report.unknown_cells.begin(), report.unknown_cells.end());
  std::sort(report.unknown_subscribers.begin(), report.unknown_subscribers.end());
  return report;
}

LinkedRefs link_refs(const EventBatch& batch, const CellRegistry& registry,
                     const SubscriberTable& subscribers) {
  LinkedRefs links;
  links.cell_province.resize(batch.cells.size());
  links.cell_district.resize(batch.cells.size());
  for (std::uint32_t i = 0; i < batch.cells.size(); ++i) {
    auto idx = registry.find(batch.cells.token(i));
    if (!idx) {
      throw DataError("unknown cell_id in events: " + batch.cells.token(i));
    }
    links.cell_province[i] = registry.cells[*idx].province;
    links.cell_district[i] = registry.cells[*idx].district;
  }
  links.subscriber_row.resize(batch.subscribers.size());
  for (std::uint32_t i = 0; i < batch.subscribers.size(); ++i) {
    auto row = subscribers.find(batch.subscribers.token(i));
    links.subscriber_row[i] = row ? static_cast<std::int32_t>(*row) : -1;
  }
  return links;
}

}  // namespace bflux::ingest
