#include "borderflux/time.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>

namespace bflux {

namespace {

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
  return q;
}

bool parse_int(std::string_view s, int& out) {
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

}  // namespace

Date make_date(int year, unsigned month, unsigned day) {
  using namespace std::chrono;
  sys_days sd{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
  return Date{static_cast<std::int32_t>(sd.time_since_epoch().count())};
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
      !parse_int(text.substr(8, 2), d)) {
    return std::nullopt;
  }
  using namespace std::chrono;
  year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                     std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{static_cast<std::int32_t>(sys_days{ymd}.time_since_epoch().count())};
}

std::string format_date(Date d) {
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{d.days}}};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<UtcOffset> parse_utc_offset(std::string_view text) {
  if (text == "Z" || text == "z") return UtcOffset{0};
  if (text.size() != 6 || (text[0] != '+' && text[0] != '-') || text[3] != ':') {
    return std::nullopt;
  }
  int h = 0, m = 0;
  if (!parse_int(text.substr(1, 2), h) || !parse_int(text.substr(4, 2), m)) return std::nullopt;
  if (h > 14 || m > 59) return std::nullopt;
  std::int32_t s = h * 3600 + m * 60;
  return UtcOffset{text[0] == '-' ? -s : s};
}

std::string format_utc_offset(UtcOffset off) {
  char buf[16];
  std::int32_t s = off.seconds;
  char sign = s < 0 ? '-' : '+';
  if (s < 0) s = -s;
  std::snprintf(buf, sizeof(buf), "%c%02d:%02d", sign, s / 3600, (s % 3600) / 60);
  return buf;
}

Date local_date_of(std::int64_t ts_utc, UtcOffset off) {
  return Date{static_cast<std::int32_t>(floor_div(ts_utc + off.seconds, 86400))};
}

std::int64_t local_midnight_utc(Date d, UtcOffset off) {
  return static_cast<std::int64_t>(d.days) * 86400 - off.seconds;
}

IsoWeek iso_week_of(Date d) {
  // Day 0 (1970-01-01) was a Thursday; index days of week Monday = 0.
  auto dow_mon0 = [](std::int32_t days) {
    return static_cast<int>(((days % 7) + 7 + 3) % 7);
  };
  std::int32_t thursday = d.days - dow_mon0(d.days) + 3;
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{thursday}}};
  int year = static_cast<int>(ymd.year());
  std::int32_t jan1 =
      static_cast<std::int32_t>(sys_days{std::chrono::year{year} / January / 1}.time_since_epoch().count());
  int week = (thursday - jan1) / 7 + 1;
  return IsoWeek{year, week};
}

std::string format_iso_week(IsoWeek w) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-W%02d", w.year, w.week);
  return buf;
}

std::string format_utc_timestamp(std::int64_t ts) {
  std::int64_t day = floor_div(ts, 86400);
  std::int64_t sec = ts - day * 86400;
  using namespace std::chrono;
  year_month_day ymd{sys_days{days{static_cast<std::int32_t>(day)}}};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(sec / 3600), static_cast<int>((sec % 3600) / 60),
                static_cast<int>(sec % 60));
  return buf;
}

}  // namespace bflux
