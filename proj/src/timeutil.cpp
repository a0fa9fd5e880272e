#include "transitnet/timeutil.hpp"

#include "transitnet/common.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>

namespace transitnet {

namespace {

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) return false;
  for (std::size_t i = pos; i < pos + len; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
  }
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
  return ec == std::errc{};
}

std::optional<Day> make_day(int y, int m, int d) {
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
  // 2015-03-11T08:00:00-03:00
  int y, mo, d, h, mi, s;
  if (text.size() < 20) return std::nullopt;
  if (!read_int(text, 0, 4, y) || text[4] != '-' || !read_int(text, 5, 2, mo) ||
      text[7] != '-' || !read_int(text, 8, 2, d) || (text[10] != 'T' && text[10] != ' ') ||
      !read_int(text, 11, 2, h) || text[13] != ':' || !read_int(text, 14, 2, mi) ||
      text[16] != ':' || !read_int(text, 17, 2, s)) {
    return std::nullopt;
  }
  if (h > 23 || mi > 59 || s > 59) return std::nullopt;
  auto day = make_day(y, mo, d);
  if (!day) return std::nullopt;

  int offset = 0;
  const std::string_view tz = text.substr(19);
  if (tz == "Z") {
    offset = 0;
  } else if (tz.size() == 6 && (tz[0] == '+' || tz[0] == '-') && tz[3] == ':') {
    int oh, om;
    if (!read_int(tz, 1, 2, oh) || !read_int(tz, 4, 2, om) || oh > 14 || om > 59) {
      return std::nullopt;
    }
    offset = (oh * 60 + om) * (tz[0] == '-' ? -1 : 1);
  } else {
    return std::nullopt;  // explicit offset required
  }
  const std::int64_t local = static_cast<std::int64_t>(day->time_since_epoch().count()) * 86400 +
                             h * 3600 + mi * 60 + s;
  return Timestamp{local - static_cast<std::int64_t>(offset) * 60, offset};
}

std::string format_iso8601(const Timestamp& ts) {
  using namespace std::chrono;
  const std::int64_t local = ts.epoch + static_cast<std::int64_t>(ts.offset_minutes) * 60;
  std::int64_t days = local / 86400;
  std::int64_t secs = local % 86400;
  if (secs < 0) {
    secs += 86400;
    days -= 1;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  const int off = ts.offset_minutes;
  const int aoff = off < 0 ? -off : off;
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}{}{:02}:{:02}", int(ymd.year()),
                     unsigned(ymd.month()), unsigned(ymd.day()), secs / 3600, (secs / 60) % 60,
                     secs % 60, off < 0 ? '-' : '+', aoff / 60, aoff % 60);
}

Day local_day(const Timestamp& ts) {
  std::int64_t local = ts.epoch + static_cast<std::int64_t>(ts.offset_minutes) * 60;
  std::int64_t days = local / 86400;
  if (local % 86400 < 0) days -= 1;
  return Day{std::chrono::days{days}};
}

std::optional<Day> parse_date(std::string_view text) {
  int y, m, d;
  if (text.size() != 10 || !read_int(text, 0, 4, y) || text[4] != '-' ||
      !read_int(text, 5, 2, m) || text[7] != '-' || !read_int(text, 8, 2, d)) {
    return std::nullopt;
  }
  return make_day(y, m, d);
}

std::string format_date(Day day) {
  const std::chrono::year_month_day ymd{day};
  return fmt::format("{:04}-{:02}-{:02}", int(ymd.year()), unsigned(ymd.month()),
                     unsigned(ymd.day()));
}

const char* to_string(DayClass c) {
  switch (c) {
    case DayClass::weekday: return "weekday";
    case DayClass::saturday: return "saturday";
    case DayClass::sunday_holiday: return "sunday_holiday";
  }
  return "?";
}

std::optional<DayClass> parse_day_class(std::string_view text) {
  if (text == "weekday") return DayClass::weekday;
  if (text == "saturday") return DayClass::saturday;
  if (text == "sunday_holiday" || text == "sunday") return DayClass::sunday_holiday;
  return std::nullopt;
}

Calendar Calendar::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw_config("cannot open calendar file " + path);
  std::set<Day> days;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto d = parse_date(line);
    if (!d) throw_config(fmt::format("{}:{}: bad date '{}'", path, lineno, line));
    days.insert(*d);
  }
  return Calendar(std::move(days));
}

DayClass Calendar::classify(Day day) const {
  if (holidays_.contains(day)) return DayClass::sunday_holiday;
  const std::chrono::weekday wd{day};
  if (wd == std::chrono::Sunday) return DayClass::sunday_holiday;
  if (wd == std::chrono::Saturday) return DayClass::saturday;
  return DayClass::weekday;
}

}  // namespace transitnet
