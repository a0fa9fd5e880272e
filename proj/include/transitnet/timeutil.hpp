#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>

namespace transitnet {

// An instant plus the UTC offset it was recorded in. The offset is kept so the
// local calendar day is recoverable and so records round-trip byte-exactly.
struct Timestamp {
  std::int64_t epoch = 0;           // seconds since 1970-01-01T00:00:00Z
  std::int32_t offset_minutes = 0;  // local = UTC + offset

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
  friend auto operator<=>(const Timestamp& a, const Timestamp& b) {
    return a.epoch <=> b.epoch;
  }
};

using Day = std::chrono::sys_days;

// Accepts YYYY-MM-DDTHH:MM:SS followed by Z or +HH:MM / -HH:MM.
std::optional<Timestamp> parse_iso8601(std::string_view text);
std::string format_iso8601(const Timestamp& ts);

Day local_day(const Timestamp& ts);
std::optional<Day> parse_date(std::string_view text);
std::string format_date(Day day);

enum class DayClass { weekday = 0, saturday = 1, sunday_holiday = 2 };

const char* to_string(DayClass c);
std::optional<DayClass> parse_day_class(std::string_view text);

// Holidays are grouped with Sundays.
class Calendar {
 public:
  Calendar() = default;
  explicit Calendar(std::set<Day> holidays) : holidays_(std::move(holidays)) {}

  // One YYYY-MM-DD per line; blank lines and '#' comments ignored.
  static Calendar load(const std::string& path);

  DayClass classify(Day day) const;
  const std::set<Day>& holidays() const { return holidays_; }

 private:
  std::set<Day> holidays_;
};

}  // namespace transitnet
