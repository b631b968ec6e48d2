#pragma once

// Long-format result records, replica summaries and their CSV form.
// Floating point is written as the shortest decimal that reads back to the
// same double, so a written table parses back bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <tuple>
#include <vector>

#include "dssep/error.hpp"

namespace dssep::harness {

struct Record {
  std::string experiment;
  long replica = 0;
  double t = 0.0;
  std::string observable;
  std::string testfn;
  double value = 0.0;

  bool operator==(const Record& o) const = default;
};

struct Summary {
  std::string experiment;
  double t = 0.0;
  std::string observable;
  std::string testfn;
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t count = 0;
};

inline std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw DomainError("cannot parse number '" + s + "'");
  return v;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

class ResultTable {
 public:
  static constexpr const char* header = "experiment,replica,t,observable,testfn,value";

  void add(Record r) { records_.push_back(std::move(r)); }
  void append(const ResultTable& o) { records_.insert(records_.end(), o.records_.begin(), o.records_.end()); }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool operator==(const ResultTable& o) const { return records_ == o.records_; }

  // Records matching an observable (and test function, if given) at time t.
  std::vector<double> values(const std::string& observable, double t, const std::string& testfn = "") const {
    std::vector<double> out;
    for (const auto& r : records_)
      if (r.observable == observable && r.t == t && (testfn.empty() || r.testfn == testfn)) out.push_back(r.value);
    return out;
  }

  // Mean, standard error and count per (experiment, t, observable, testfn),
  // with the sum taken in replica order.
  std::vector<Summary> summarize() const {
    using Key = std::tuple<std::string, double, std::string, std::string>;
    std::map<Key, std::vector<std::pair<long, double>>> groups;
    for (const auto& r : records_) groups[{r.experiment, r.t, r.observable, r.testfn}].push_back({r.replica, r.value});
    std::vector<Summary> out;
    for (auto& [key, vals] : groups) {
      std::stable_sort(vals.begin(), vals.end(), [](auto& a, auto& b) { return a.first < b.first; });
      Summary s{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), 0.0, 0.0, vals.size()};
      double sum = 0.0;
      for (const auto& v : vals) sum += v.second;
      s.mean = sum / static_cast<double>(vals.size());
      if (vals.size() > 1) {
        double ss = 0.0;
        for (const auto& v : vals) ss += (v.second - s.mean) * (v.second - s.mean);
        s.stderr_ = std::sqrt(ss / static_cast<double>(vals.size() - 1) / static_cast<double>(vals.size()));
      }
      out.push_back(std::move(s));
    }
    return out;
  }

  void write_csv(std::ostream& out) const {
    out << header << '\n';
    for (const auto& r : records_)
      out << detail::csv_field(r.experiment) << ',' << r.replica << ',' << format_double(r.t) << ','
          << detail::csv_field(r.observable) << ',' << detail::csv_field(r.testfn) << ',' << format_double(r.value)
          << '\n';
  }

  static ResultTable read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != header) throw DomainError("missing or unexpected CSV header");
    ResultTable t;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto f = detail::csv_split(line);
      if (f.size() != 6) throw DomainError("line " + std::to_string(lineno) + ": expected 6 fields");
      try {
        t.add({f[0], std::stol(f[1]), parse_double(f[2]), f[3], f[4], parse_double(f[5])});
      } catch (const std::exception& e) {
        throw DomainError("line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    return t;
  }

 private:
  std::vector<Record> records_;
};

inline void write_summary_csv(std::ostream& out, const std::vector<Summary>& rows) {
  out << "experiment,t,observable,testfn,mean,stderr,count\n";
  for (const auto& s : rows)
    out << detail::csv_field(s.experiment) << ',' << format_double(s.t) << ',' << detail::csv_field(s.observable)
        << ',' << detail::csv_field(s.testfn) << ',' << format_double(s.mean) << ',' << format_double(s.stderr_)
        << ',' << s.count << '\n';
}

}  // namespace dssep::harness
