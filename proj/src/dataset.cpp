#include "fpca/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fpca/errors.hpp"

namespace fpca {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, pos - start)));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_number(const std::string& field, std::size_t line, const char* what) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  if (!field.empty() && *begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, v);
  if (field.empty() || res.ec != std::errc() || res.ptr != end) {
    throw ParseError(std::string("malformed ") + what + " '" + field + "'", line);
  }
  if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what, line);
  return v;
}

}  // namespace

std::size_t SparseDataset::num_points() const noexcept {
  std::size_t total = 0;
  for (const auto& s : subjects) total += s.size();
  return total;
}

void SparseDataset::validate() const {
  if (!(std::isfinite(time_min) && std::isfinite(time_max) && time_max > time_min))
    throw DataError("invalid time rescale");
  std::unordered_set<std::string> ids;
  for (const auto& s : subjects) {
    if (!ids.insert(s.id).second) throw DataError("duplicate subject id '" + s.id + "'");
    if (s.times.empty()) throw DataError("subject '" + s.id + "' has no measurements");
    if (s.times.size() != s.values.size())
      throw DataError("subject '" + s.id + "' has mismatched times and values");
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (!std::isfinite(s.values[j])) throw DataError("non-finite value in '" + s.id + "'");
      if (!(s.times[j] >= 0.0 && s.times[j] <= 1.0))
        throw DomainError("time outside [0, 1] in '" + s.id + "'");
    }
  }
}

SparseDataset parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  SparseDataset data;
  std::unordered_map<std::string, std::size_t> index;

  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_row(line);
    if (!header_seen) {
      if (fields.size() != 3 || fields[0] != "subject_id" || fields[1] != "t" || fields[2] != "y")
        throw ParseError("expected header 'subject_id,t,y'", line_no);
      header_seen = true;
      continue;
    }
    if (fields.size() != 3) {
      throw ParseError("expected 3 fields, got " + std::to_string(fields.size()), line_no);
    }
    if (fields[0].empty()) throw ParseError("empty subject_id", line_no);
    const double t = parse_number(fields[1], line_no, "time");
    const double y = parse_number(fields[2], line_no, "value");
    auto [it, inserted] = index.emplace(fields[0], data.subjects.size());
    if (inserted) data.subjects.push_back(Subject{fields[0], {}, {}});
    Subject& s = data.subjects[it->second];
    s.times.push_back(t);
    s.values.push_back(y);
  }
  if (!header_seen) throw EmptyError("empty input");
  if (data.subjects.empty()) throw EmptyError("no data rows");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : data.subjects) {
    for (double t : s.times) {
      lo = std::min(lo, t);
      hi = std::max(hi, t);
    }
  }
  if (lo >= 0.0 && hi <= 1.0) {
    data.time_min = 0.0;
    data.time_max = 1.0;
  } else {
    if (!(hi > lo)) throw DataError("all measurement times are equal");
    data.time_min = lo;
    data.time_max = hi;
    for (auto& s : data.subjects) {
      for (double& t : s.times) t = std::clamp((t - lo) / (hi - lo), 0.0, 1.0);
    }
  }
  return data;
}

SparseDataset load_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

std::string format_csv(const SparseDataset& data) {
  std::string out = "subject_id,t,y\n";
  char buf[64];
  for (const auto& s : data.subjects) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      out += s.id;
      std::snprintf(buf, sizeof buf, ",%.17g", data.to_original(s.times[j]));
      out += buf;
      std::snprintf(buf, sizeof buf, ",%.17g\n", s.values[j]);
      out += buf;
    }
  }
  return out;
}

void save_csv(const SparseDataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << format_csv(data);
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace fpca
