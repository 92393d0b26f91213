#include "sico/signal_csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace sico {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

void save_signal_csv(const SampleSet& set, const std::string& path) {
  set.validate();
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);

  f << "window_id,channel";
  for (int t = 0; t < set.length; ++t) f << ",t" << t;
  if (set.labeled()) f << ",label";
  f << '\n';

  for (std::size_t i = 0; i < set.size(); ++i) {
    const double* row = set.features.row(i);
    for (int c = 0; c < set.channels; ++c) {
      f << i << ',' << c;
      for (int t = 0; t < set.length; ++t) {
        f << ',' << fmt_double(row[c * set.length + t]);
      }
      if (set.labeled()) f << ',' << set.labels[i];
      f << '\n';
    }
  }
  if (!f) throw InputError("write failed: " + path);
}

SampleSet load_signal_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open signal CSV: " + path);

  std::string line;
  if (!std::getline(f, line)) throw FormatError(path + ": empty file");
  const auto header = split_csv(line);
  if (header.size() < 3 || header[0] != "window_id" || header[1] != "channel") {
    throw FormatError(path + ": bad header");
  }
  bool labeled = header.back() == "label";
  const std::size_t length = header.size() - 2 - (labeled ? 1 : 0);
  if (length == 0) throw FormatError(path + ": no sample columns");
  for (std::size_t t = 0; t < length; ++t) {
    if (header[2 + t] != "t" + std::to_string(t)) {
      throw FormatError(path + ": expected column t" + std::to_string(t));
    }
  }

  struct Window {
    std::map<long, std::vector<double>> channels;
    int label = -1;
  };
  std::map<long, Window> windows;
  long max_channel = -1;
  int line_no = 1;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw FormatError(path + " line " + std::to_string(line_no) +
                        ": wrong field count");
    }
    auto parse_long_cell = [&](const std::string& s) {
      long v = 0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError(path + " line " + std::to_string(line_no) +
                          ": bad integer '" + s + "'");
      }
      return v;
    };
    const long wid = parse_long_cell(cells[0]);
    const long ch = parse_long_cell(cells[1]);
    if (wid < 0 || ch < 0) {
      throw FormatError(path + " line " + std::to_string(line_no) +
                        ": negative id");
    }
    max_channel = std::max(max_channel, ch);
    std::vector<double> values(length);
    for (std::size_t t = 0; t < length; ++t) {
      const std::string& s = cells[2 + t];
      auto res = std::from_chars(s.data(), s.data() + s.size(), values[t]);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw FormatError(path + " line " + std::to_string(line_no) +
                          ": bad number '" + s + "'");
      }
    }
    Window& w = windows[wid];
    if (!w.channels.emplace(ch, std::move(values)).second) {
      throw FormatError(path + " line " + std::to_string(line_no) +
                        ": duplicate (window, channel)");
    }
    if (labeled) {
      const long lbl = parse_long_cell(cells.back());
      if (w.label >= 0 && w.label != lbl) {
        throw FormatError(path + " line " + std::to_string(line_no) +
                          ": conflicting labels for window " + std::to_string(wid));
      }
      w.label = static_cast<int>(lbl);
    }
  }
  if (windows.empty()) throw FormatError(path + ": no data rows");

  const int channels = static_cast<int>(max_channel + 1);
  SampleSet set;
  set.channels = channels;
  set.length = static_cast<int>(length);
  set.name = path;
  set.features = Matrix(windows.size(), channels * length);
  if (labeled) set.labels.resize(windows.size());

  std::size_t row = 0;
  int max_label = 0;
  for (const auto& [wid, w] : windows) {
    if (w.channels.size() != static_cast<std::size_t>(channels)) {
      throw FormatError(path + ": window " + std::to_string(wid) +
                        " is missing channels");
    }
    double* dst = set.features.row(row);
    for (const auto& [ch, values] : w.channels) {
      for (std::size_t t = 0; t < length; ++t) {
        dst[static_cast<std::size_t>(ch) * length + t] = values[t];
      }
    }
    if (labeled) {
      set.labels[row] = w.label;
      max_label = std::max(max_label, w.label);
    }
    ++row;
  }
  set.class_count = labeled ? std::max(2, max_label + 1) : 0;
  set.validate();
  return set;
}

}  // namespace sico
