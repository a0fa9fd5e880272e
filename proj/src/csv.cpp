#include "transitnet/csv.hpp"

#include "transitnet/common.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace transitnet::csv {

namespace {

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_artifact("missing file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace

Reader::Reader(const std::string& path) : path_(path), buffer_(read_all(path)) {
  if (!next()) throw_data(path + ": empty file (header expected)");
  for (auto f : fields_) header_.emplace_back(f);
}

void Reader::require_header(const std::vector<std::string>& expected) const {
  if (header_ != expected) {
    std::string want, got;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    for (const auto& h : header_) got += (got.empty() ? "" : ",") + h;
    throw_data(fmt::format("{}: malformed header: expected '{}', got '{}'", path_, want, got));
  }
}

bool Reader::next() {
  while (pos_ < buffer_.size()) {
    std::size_t end = buffer_.find('\n', pos_);
    if (end == std::string::npos) end = buffer_.size();
    std::string_view line(buffer_.data() + pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;

    raw_ = line;
    fields_.clear();
    unquoted_.clear();
    if (line.find('"') == std::string_view::npos) {
      std::size_t start = 0;
      while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
          fields_.push_back(line.substr(start));
          break;
        }
        fields_.push_back(line.substr(start, comma - start));
        start = comma + 1;
      }
      return true;
    }

    // Slow path: quoted fields. Unescaped copies are kept in unquoted_, which
    // is reserved up front so the views stay valid.
    unquoted_.reserve(line.size() + 1);
    std::size_t i = 0;
    while (true) {
      std::string cur;
      if (i < line.size() && line[i] == '"') {
        ++i;
        while (i < line.size()) {
          if (line[i] == '"') {
            if (i + 1 < line.size() && line[i + 1] == '"') {
              cur.push_back('"');
              i += 2;
              continue;
            }
            ++i;
            break;
          }
          cur.push_back(line[i++]);
        }
        while (i < line.size() && line[i] != ',') cur.push_back(line[i++]);
      } else {
        while (i < line.size() && line[i] != ',') cur.push_back(line[i++]);
      }
      unquoted_.push_back(std::move(cur));
      if (i >= line.size()) break;
      ++i;  // comma
      if (i == line.size()) {
        unquoted_.emplace_back();
        break;
      }
    }
    for (const auto& s : unquoted_) fields_.emplace_back(s);
    return true;
  }
  return false;
}

std::optional<double> to_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

Writer::Writer(std::string path, const std::vector<std::string>& header) : path_(std::move(path)) {
  file_ = std::fopen(path_.c_str(), "wb");
  if (!file_) throw_artifact("cannot write " + path_);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) buf_.push_back(',');
    buf_.append(header[i]);
  }
  buf_.push_back('\n');
}

Writer::~Writer() {
  try {
    flush();
  } catch (...) {
  }
}

void Writer::spill() {
  if (!file_) return;
  if (buf_.size() && std::fwrite(buf_.data(), 1, buf_.size(), file_) != buf_.size()) {
    throw_artifact("short write to " + path_);
  }
  buf_.clear();
}

void Writer::flush() {
  if (!file_) return;
  spill();
  std::fclose(file_);
  file_ = nullptr;
}

std::string fmt_double(double v) { return fmt::format("{}", v); }

}  // namespace transitnet::csv
