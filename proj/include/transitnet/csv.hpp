#pragma once

#include <fmt/format.h>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace transitnet::csv {

// Whole-file CSV reader. Fields are views into the loaded buffer and stay
// valid for the lifetime of the reader. Quoted fields are supported as long as
// they do not span lines.
class Reader {
 public:
  explicit Reader(const std::string& path);

  const std::vector<std::string>& header() const { return header_; }
  const std::string& path() const { return path_; }

  // Throws a data error unless the header equals `expected` exactly.
  void require_header(const std::vector<std::string>& expected) const;

  // Advances to the next non-empty row. Returns false at end of file.
  bool next();
  const std::vector<std::string_view>& fields() const { return fields_; }
  std::size_t line_number() const { return line_; }
  std::string_view raw_line() const { return raw_; }

 private:
  std::string path_;
  std::string buffer_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
  std::string_view raw_;
  std::vector<std::string> header_;
  std::vector<std::string_view> fields_;
  std::vector<std::string> unquoted_;
};

std::optional<double> to_double(std::string_view s);
std::optional<long long> to_int(std::string_view s);

// Buffered writer; the file is written on flush() or destruction.
class Writer {
 public:
  Writer(std::string path, const std::vector<std::string>& header);
  ~Writer();
  Writer(const Writer&) = delete;
  Writer& operator=(const Writer&) = delete;

  template <typename... Args>
  void row(fmt::format_string<Args...> f, Args&&... args) {
    fmt::format_to(std::back_inserter(buf_), f, std::forward<Args>(args)...);
    buf_.push_back('\n');
    if (buf_.size() > (1u << 22)) spill();
  }

  void flush();

 private:
  void spill();

  std::string path_;
  fmt::memory_buffer buf_;
  std::FILE* file_ = nullptr;
};

// Shortest representation that parses back to the same double.
std::string fmt_double(double v);

}  // namespace transitnet::csv
