#include "borderflux/privacy.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "borderflux/csv.hpp"
#include "borderflux/digest.hpp"
#include "borderflux/error.hpp"
#include "borderflux/time.hpp"

namespace bflux::privacy {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(SpatialFloor f) {
  return f == SpatialFloor::Province ? "province" : "district";
}

std::optional<SpatialFloor> parse_spatial_floor(std::string_view s) {
  if (s == "province") return SpatialFloor::Province;
  if (s == "district") return SpatialFloor::District;
  return std::nullopt;
}

std::string suppression_marker(const PrivacyPolicy& policy) {
  return "<" + std::to_string(policy.k);
}

std::string pseudonymize(std::string_view raw_id, std::string_view key) {
  if (key.empty()) throw ConfigError("pseudonymization key is empty");
  auto mac = hmac_sha256(key, raw_id);
  return to_hex(mac.data(), 16);
}

SuppressedTable suppress(const CountTable& table, const PrivacyPolicy& policy) {
  SuppressedTable out;
  out.key_columns = table.key_columns;
  out.value_column = table.value_column;
  out.rows.reserve(table.rows.size());
  for (const auto& row : table.rows) {
    SuppressedTable::Row r;
    r.keys = row.keys;
    if (publishable(row.value, policy)) {
      r.value = row.value;
      out.published_total += row.value;
    } else {
      r.value = std::nullopt;
      out.partial = true;
    }
    out.rows.push_back(std::move(r));
  }
  return out;
}

json count_cell(std::uint64_t v, const PrivacyPolicy& policy) {
  if (publishable(v, policy)) return v;
  return suppression_marker(policy);
}

std::string count_cell_str(std::uint64_t v, const PrivacyPolicy& policy) {
  if (publishable(v, policy)) return std::to_string(v);
  return suppression_marker(policy);
}

PublishedStore::PublishedStore(std::string dir) : dir_(std::move(dir)) {
  fs::path p = fs::path(dir_) / "policy.json";
  std::ifstream in(p);
  if (!in) throw DataError("store is missing policy.json: " + p.string());
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw DataError("policy.json is not valid JSON");
  policy_.k = doc.at("k").get<std::uint32_t>();
  auto floor = parse_spatial_floor(doc.at("spatial_floor").get<std::string>());
  if (!floor) throw DataError("policy.json has an unknown spatial_floor");
  policy_.spatial_floor = *floor;
}

bool PublishedStore::has_artifact(const std::string& name) const {
  return fs::exists(fs::path(dir_) / name);
}

std::string PublishedStore::read_artifact(const std::string& name) const {
  fs::path p = fs::path(dir_) / name;
  std::ifstream in(p, std::ios::binary);
  if (!in) throw QueryError("ARTIFACT_MISSING");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string>& whitelisted_templates() {
  static const std::vector<std::string> templates{
      "group_timeseries", "flow_matrix", "province_counts", "lang_counts", "sentiment_weekly"};
  return templates;
}

namespace {

enum class CellType { Text, Count, Real };

json parse_cell(const std::string& raw, CellType type) {
  if (type == CellType::Text) return raw;
  if (!raw.empty() && raw[0] == '<') return raw;  // suppression marker
  if (type == CellType::Count) {
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
    if (ec == std::errc{} && p == raw.data() + raw.size()) return v;
    return raw;
  }
  double d = 0;
  auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), d);
  if (ec == std::errc{} && p == raw.data() + raw.size()) return d;
  return raw;
}

json rows_from_csv(const std::string& text,
                   const std::vector<std::pair<std::string, CellType>>& schema) {
  json rows = json::array();
  bool first = true;
  csv::for_each_line(text, [&](std::size_t, std::string_view line) {
    if (line.empty()) return;
    auto fields = csv::split_line(line);
    if (first) {
      if (fields.size() != schema.size()) throw DataError("artifact header mismatch");
      for (std::size_t i = 0; i < schema.size(); ++i) {
        if (fields[i] != schema[i].first) {
          throw DataError("artifact column mismatch: expected " + schema[i].first + ", got " +
                          fields[i]);
        }
      }
      first = false;
      return;
    }
    json row = json::object();
    for (std::size_t i = 0; i < schema.size() && i < fields.size(); ++i) {
      row[schema[i].first] = parse_cell(fields[i], schema[i].second);
    }
    rows.push_back(std::move(row));
  });
  return rows;
}

const json* params_of(const json& request) {
  if (!request.contains("params")) return nullptr;
  const json& p = request["params"];
  if (p.is_null()) return nullptr;
  if (!p.is_object()) throw QueryError("BAD_PARAMS");
  return &p;
}

void reject_unknown_params(const json* params, const std::set<std::string>& allowed) {
  if (!params) return;
  for (auto it = params->begin(); it != params->end(); ++it) {
    if (!allowed.contains(it.key())) throw QueryError("BAD_PARAMS");
  }
}

std::optional<std::string> opt_date_param(const json* params, const char* key) {
  if (!params || !params->contains(key)) return std::nullopt;
  const json& v = (*params)[key];
  if (!v.is_string() || !parse_date(v.get<std::string>())) throw QueryError("BAD_PARAMS");
  return v.get<std::string>();
}

std::optional<std::string> opt_string_param(const json* params, const char* key) {
  if (!params || !params->contains(key)) return std::nullopt;
  const json& v = (*params)[key];
  if (!v.is_string()) throw QueryError("BAD_PARAMS");
  return v.get<std::string>();
}

json answer_group_timeseries(const json* params, const PublishedStore& store) {
  reject_unknown_params(params, {"start", "end"});
  auto start = opt_date_param(params, "start");
  auto end = opt_date_param(params, "end");
  static const std::vector<std::pair<std::string, CellType>> schema{
      {"date", CellType::Text},          {"visa_border", CellType::Count},
      {"visa_other", CellType::Count},   {"novisa_border", CellType::Count},
      {"novisa_other", CellType::Count}, {"lost_cumulative", CellType::Count}};
  json rows = rows_from_csv(store.read_artifact("group_timeseries.csv"), schema);
  json out = json::array();
  for (auto& row : rows) {
    const std::string& d = row["date"].get_ref<const std::string&>();
    if (start && d < *start) continue;
    if (end && d > *end) continue;
    out.push_back(std::move(row));
  }
  return out;
}

json answer_flow_matrix(const json* params, const PublishedStore& store) {
  reject_unknown_params(params, {});
  json doc = json::parse(store.read_artifact("flows.json"));
  return doc.at("links");
}

json answer_province_counts(const json* params, const PublishedStore& store) {
  reject_unknown_params(params, {"date", "granularity"});
  auto granularity = opt_string_param(params, "granularity");
  if (granularity) {
    auto floor = parse_spatial_floor(*granularity);
    if (!floor) throw QueryError("BAD_PARAMS");
    if (*floor == SpatialFloor::District &&
        store.policy().spatial_floor == SpatialFloor::Province) {
      throw QueryError("GRANULARITY_DENIED");
    }
  }
  auto date = opt_date_param(params, "date");
  static const std::vector<std::pair<std::string, CellType>> schema{
      {"date", CellType::Text}, {"province", CellType::Text}, {"count", CellType::Count}};
  json rows = rows_from_csv(store.read_artifact("province_counts.csv"), schema);
  json out = json::array();
  for (auto& row : rows) {
    if (date && row["date"].get_ref<const std::string&>() != *date) continue;
    out.push_back(std::move(row));
  }
  return out;
}

json answer_lang_counts(const json* params, const PublishedStore& store) {
  reject_unknown_params(params, {"granularity"});
  auto granularity = opt_string_param(params, "granularity");
  bool daily = false;
  if (granularity) {
    if (*granularity == "daily") daily = true;
    else if (*granularity != "total") throw QueryError("BAD_PARAMS");
  }
  if (daily) {
    static const std::vector<std::pair<std::string, CellType>> schema{
        {"date", CellType::Text},
        {"group", CellType::Text},
        {"tweets", CellType::Count},
        {"users", CellType::Count}};
    return rows_from_csv(store.read_artifact("daily_lang_counts.csv"), schema);
  }
  static const std::vector<std::pair<std::string, CellType>> schema{
      {"group", CellType::Text}, {"tweets", CellType::Count}, {"users", CellType::Count}};
  return rows_from_csv(store.read_artifact("lang_counts.csv"), schema);
}

json answer_sentiment_weekly(const json* params, const PublishedStore& store) {
  reject_unknown_params(params, {"language"});
  auto language = opt_string_param(params, "language");
  static const std::vector<std::pair<std::string, CellType>> schema{
      {"language", CellType::Text},
      {"iso_week", CellType::Text},
      {"mean", CellType::Real},
      {"variance", CellType::Real},
      {"n", CellType::Count}};
  json rows = rows_from_csv(store.read_artifact("sentiment_weekly.csv"), schema);
  json out = json::array();
  for (auto& row : rows) {
    if (language && row["language"].get_ref<const std::string&>() != *language) continue;
    out.push_back(std::move(row));
  }
  return out;
}

}  // namespace

json answer_query(const json& request, const PublishedStore& store) {
  if (!request.is_object() || !request.contains("template") ||
      !request["template"].is_string()) {
    throw QueryError("TEMPLATE_NOT_ALLOWED");
  }
  const std::string tmpl = request["template"].get<std::string>();
  const auto& allowed = whitelisted_templates();
  if (std::find(allowed.begin(), allowed.end(), tmpl) == allowed.end()) {
    throw QueryError("TEMPLATE_NOT_ALLOWED");
  }
  const json* params = params_of(request);
  json data;
  if (tmpl == "group_timeseries") data = answer_group_timeseries(params, store);
  else if (tmpl == "flow_matrix") data = answer_flow_matrix(params, store);
  else if (tmpl == "province_counts") data = answer_province_counts(params, store);
  else if (tmpl == "lang_counts") data = answer_lang_counts(params, store);
  else data = answer_sentiment_weekly(params, store);

  json response;
  response["policy"] = {{"k", store.policy().k},
                        {"spatial_floor", to_string(store.policy().spatial_floor)}};
  response["data"] = std::move(data);
  return response;
}

namespace {

struct Violation {
  std::vector<std::string>* out;
  const PrivacyPolicy* policy;

  void check(const std::string& file, const std::string& where, const json& cell) const {
    if (cell.is_string()) return;  // marker
    if (!cell.is_number_unsigned() && !cell.is_number_integer()) {
      out->push_back(file + ": " + where + ": non-numeric count cell");
      return;
    }
    auto v = cell.get<std::uint64_t>();
    if (v > 0 && v < policy->k) {
      out->push_back(file + ": " + where + ": count " + std::to_string(v) +
                     " below k=" + std::to_string(policy->k));
    }
  }
};

void scan_csv_counts(const fs::path& path, const std::vector<int>& count_columns,
                     const PrivacyPolicy& policy, std::vector<std::string>& out) {
  std::ifstream in(path);
  if (!in) return;
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  bool first = true;
  const std::string fname = path.filename().string();
  csv::for_each_line(text, [&](std::size_t idx, std::string_view line) {
    if (line.empty()) return;
    if (first) {
      first = false;
      return;
    }
    auto fields = csv::split_line(line);
    for (int col : count_columns) {
      if (static_cast<std::size_t>(col) >= fields.size()) continue;
      const std::string& raw = fields[static_cast<std::size_t>(col)];
      if (!raw.empty() && raw[0] == '<') continue;
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
      if (ec != std::errc{} || p != raw.data() + raw.size()) {
        out.push_back(fname + ":" + std::to_string(idx + 1) + ": unparseable count '" + raw +
                      "'");
        continue;
      }
      if (v > 0 && v < policy.k) {
        out.push_back(fname + ":" + std::to_string(idx + 1) + ": count " + std::to_string(v) +
                      " below k=" + std::to_string(policy.k));
      }
    }
  });
}

json load_json_file(const fs::path& path) {
  std::ifstream in(path);
  json doc = json::parse(in, nullptr, false);
  if (doc.is_discarded()) throw DataError("invalid JSON artifact: " + path.string());
  return doc;
}

}  // namespace

std::vector<std::string> scan_outputs(const std::string& dir, const PrivacyPolicy& policy) {
  std::vector<std::string> violations;
  Violation v{&violations, &policy};

  // Files with no aggregate count cells (audit trail, ratios,
  // operational metadata) are listed so unexpected files stand out.
  static const std::set<std::string> no_count_files{
      "cohort.csv", "drops.csv", "ingest_report.json", "run_manifest.json", "policy.json"};

  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (no_count_files.contains(name)) continue;
    if (name == "group_timeseries.csv") {
      scan_csv_counts(entry.path(), {1, 2, 3, 4, 5}, policy, violations);
    } else if (name == "province_counts.csv") {
      scan_csv_counts(entry.path(), {2}, policy, violations);
    } else if (name == "antenna_counts.csv") {
      scan_csv_counts(entry.path(), {2}, policy, violations);
    } else if (name == "lang_counts.csv") {
      scan_csv_counts(entry.path(), {1, 2}, policy, violations);
    } else if (name == "daily_lang_counts.csv") {
      scan_csv_counts(entry.path(), {2, 3}, policy, violations);
    } else if (name == "dest_matrix.csv") {
      scan_csv_counts(entry.path(), {2}, policy, violations);
    } else if (name == "sentiment_weekly.csv") {
      scan_csv_counts(entry.path(), {4}, policy, violations);
    } else if (name == "extreme_words.csv") {
      scan_csv_counts(entry.path(), {1, 2}, policy, violations);
    } else if (name == "flows.json") {
      json doc = load_json_file(entry.path());
      for (const auto& link : doc.at("links")) {
        v.check(name, link.at("source").get<std::string>() + "->" +
                          link.at("target").get<std::string>(),
                link.at("value"));
      }
    } else if (name == "venn.json") {
      json doc = load_json_file(entry.path());
      for (const auto& dim : doc) {
        for (const auto& region : dim.at("regions")) {
          v.check(name, dim.at("dimension").get<std::string>(), region.at("count"));
        }
      }
    } else if (name == "estimates.json") {
      json doc = load_json_file(entry.path());
      for (const auto& est : doc) {
        if (est.contains("lost_at_border")) v.check(name, "lost_at_border", est["lost_at_border"]);
      }
    } else if (name == "social_summary.json") {
      json doc = load_json_file(entry.path());
      // Every numeric leaf is a count cell.
      std::function<void(const json&, const std::string&)> walk =
          [&](const json& node, const std::string& where) {
            if (node.is_object()) {
              for (auto it = node.begin(); it != node.end(); ++it) {
                walk(it.value(), where + "." + it.key());
              }
            } else if (node.is_number()) {
              v.check(name, where, node);
            }
          };
      walk(doc, "");
    } else {
      violations.push_back(name + ": unexpected artifact (not covered by the privacy scan)");
    }
  }
  std::sort(violations.begin(), violations.end());
  return violations;
}

}  // namespace bflux::privacy
