#ifndef COASTLINE_CORRELATION_HPP
#define COASTLINE_CORRELATION_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "coastline/error.hpp"
#include "coastline/numeric.hpp"

namespace coastline {

/// One anonymized source seen in a window. An empty category means untagged.
struct SourceEntry {
  std::string id;
  std::uint64_t count = 1;
  std::string category;

  bool operator==(const SourceEntry&) const = default;
};

/// One collection window: start time plus its sources, sorted by id and unique.
class SourceWindow {
 public:
  SourceWindow() = default;

  /// Sorts entries and merges repeated ids by summing their counts.
  SourceWindow(std::int64_t t_start, std::vector<SourceEntry> entries) : t_start_(t_start) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const SourceEntry& a, const SourceEntry& b) { return a.id < b.id; });
    for (auto& e : entries) {
      if (e.id.empty()) fail(ErrorCode::parse_error, "source id must be non-empty");
      if (e.count < 1) fail(ErrorCode::parse_error, "packet count must be >= 1 for " + e.id);
      if (!entries_.empty() && entries_.back().id == e.id) {
        entries_.back().count += e.count;
        if (entries_.back().category.empty()) entries_.back().category = std::move(e.category);
      } else {
        entries_.push_back(std::move(e));
      }
    }
  }

  std::int64_t t_start() const { return t_start_; }
  std::span<const SourceEntry> entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  bool operator==(const SourceWindow&) const = default;

 private:
  /// Entries already sorted and unique.
  struct Presorted {};
  SourceWindow(Presorted, std::int64_t t, std::vector<SourceEntry> entries)
      : t_start_(t), entries_(std::move(entries)) {}

  template <typename Keep>
  friend SourceWindow filter_window(const SourceWindow& w, Keep&& keep);
  friend struct SynthAccess;

  std::int64_t t_start_ = 0;
  std::vector<SourceEntry> entries_;
};

template <typename Keep>
SourceWindow filter_window(const SourceWindow& w, Keep&& keep) {
  std::vector<SourceEntry> kept;
  for (const auto& e : w.entries()) {
    if (keep(e)) kept.push_back(e);
  }
  return SourceWindow(SourceWindow::Presorted{}, w.t_start(), std::move(kept));
}

/// Sources with 2^i <= d < 2^(i+1) packets.
inline SourceWindow filter_degree(const SourceWindow& w, unsigned i) {
  if (i >= 64) return filter_window(w, [](const SourceEntry&) { return false; });
  const std::uint64_t lo = std::uint64_t{1} << i;
  const std::uint64_t hi = i == 63 ? std::numeric_limits<std::uint64_t>::max() : (std::uint64_t{1} << (i + 1));
  return filter_window(w, [&](const SourceEntry& e) { return e.count >= lo && (i == 63 || e.count < hi); });
}

enum class Category { total, benign, malicious, unknown };

inline std::optional<Category> parse_category(std::string_view s) {
  if (s == "total") return Category::total;
  if (s == "benign") return Category::benign;
  if (s == "malicious") return Category::malicious;
  if (s == "unknown") return Category::unknown;
  return std::nullopt;
}

constexpr std::string_view to_string(Category c) {
  switch (c) {
    case Category::total: return "total";
    case Category::benign: return "benign";
    case Category::malicious: return "malicious";
    case Category::unknown: return "unknown";
  }
  return "total";
}

/// `total` keeps everything; other tags keep exact matches only.
inline SourceWindow filter_category(const SourceWindow& w, Category tag) {
  if (tag == Category::total) return w;
  const std::string_view want = to_string(tag);
  return filter_window(w, [&](const SourceEntry& e) { return e.category == want; });
}

/// Fraction of the reference window's sources seen at each lag.
struct CorrelationSeries {
  std::vector<std::int64_t> lags;
  std::vector<double> values;
  std::size_t ref_count = 0;
};

inline std::size_t intersection_size(const SourceWindow& a, const SourceWindow& b) {
  std::size_t count = 0;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  while (ia != a.entries().end() && ib != b.entries().end()) {
    const int c = ia->id.compare(ib->id);
    if (c == 0) {
      ++count;
      ++ia;
      ++ib;
    } else if (c < 0) {
      ++ia;
    } else {
      ++ib;
    }
  }
  return count;
}

/// |S_ref ∩ S_w| / |S_ref| for every window w, keyed by w.t_start - ref_t.
inline CorrelationSeries self_correlation(std::span<const SourceWindow> windows, std::int64_t ref_t) {
  const auto ref = std::find_if(windows.begin(), windows.end(),
                                [&](const SourceWindow& w) { return w.t_start() == ref_t; });
  if (ref == windows.end()) fail(ErrorCode::degenerate_reference, "no window starts at the reference time");
  if (ref->empty()) fail(ErrorCode::degenerate_reference, "reference window has no sources");
  CorrelationSeries out;
  out.ref_count = ref->size();
  out.lags.resize(windows.size());
  out.values.resize(windows.size());
  const double denom = static_cast<double>(ref->size());
  parallel_for(windows.size(), [&](std::size_t k) {
    out.lags[k] = windows[k].t_start() - ref_t;
    out.values[k] = static_cast<double>(intersection_size(*ref, windows[k])) / denom;
  });
  return out;
}

/// Mean of the single-reference series over every non-empty reference window.
/// `ref_count` of the result is the number of references averaged.
inline CorrelationSeries mean_self_correlation(std::span<const SourceWindow> windows) {
  std::map<std::int64_t, std::pair<double, std::size_t>> acc;
  std::size_t refs = 0;
  for (const auto& w : windows) {
    if (w.empty()) continue;
    const auto s = self_correlation(windows, w.t_start());
    for (std::size_t k = 0; k < s.lags.size(); ++k) {
      auto& slot = acc[s.lags[k]];
      slot.first += s.values[k];
      slot.second += 1;
    }
    ++refs;
  }
  if (refs == 0) fail(ErrorCode::degenerate_reference, "no non-empty reference window");
  CorrelationSeries out;
  out.ref_count = refs;
  for (const auto& [lag, slot] : acc) {
    out.lags.push_back(lag);
    out.values.push_back(slot.first / static_cast<double>(slot.second));
  }
  return out;
}

// Ingestion.

enum class WindowFormat { jsonl, csv };

namespace detail {

/// Streams one JSONL window so repeated source ids can be merged rather than
/// collapsed by the object model.
class WindowSax : public nlohmann::json_sax<nlohmann::json> {
 public:
  std::optional<std::int64_t> t;
  bool saw_sources = false;
  std::vector<SourceEntry> entries;
  std::map<std::string, std::string> categories;
  std::string error;

  bool null() override { return scalar("null"); }
  bool boolean(bool) override { return scalar("boolean"); }
  bool number_integer(number_integer_t v) override {
    if (at_top("t")) return t = v, true;
    if (in("sources")) {
      if (v < 1) return reject("packet count must be >= 1");
      entries.push_back({inner_key_, static_cast<std::uint64_t>(v), {}});
      return true;
    }
    return scalar("integer");
  }
  bool number_unsigned(number_unsigned_t v) override {
    if (at_top("t")) {
      if (v > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) return reject("t out of range");
      return t = static_cast<std::int64_t>(v), true;
    }
    if (in("sources")) {
      if (v < 1) return reject("packet count must be >= 1");
      entries.push_back({inner_key_, v, {}});
      return true;
    }
    return scalar("integer");
  }
  bool number_float(number_float_t, const string_t&) override { return scalar("float"); }
  bool string(string_t& s) override {
    if (in("categories")) {
      categories[inner_key_] = s;
      return true;
    }
    return scalar("string");
  }
  bool binary(binary_t&) override { return reject("binary values not supported"); }
  bool start_object(std::size_t) override {
    ++depth_;
    if (depth_ == 3 && (section_ == "sources" || section_ == "categories")) {
      return reject(section_ + " values must be scalars");
    }
    if (depth_ == 2) {
      section_ = top_key_;
      if (section_ == "sources") saw_sources = true;
      if (section_ == "t") return reject("t must be an integer");
    }
    return true;
  }
  bool key(string_t& k) override {
    if (depth_ == 1) top_key_ = k;
    if (depth_ == 2) inner_key_ = k;
    return true;
  }
  bool end_object() override {
    if (--depth_ == 1) section_.clear();
    return true;
  }
  bool start_array(std::size_t) override {
    if (depth_ == 0) return reject("window must be a JSON object");
    if (depth_ == 1 && (top_key_ == "sources" || top_key_ == "categories" || top_key_ == "t")) {
      return reject(top_key_ + " must not be an array");
    }
    if (depth_ == 2 && (section_ == "sources" || section_ == "categories")) {
      return reject(section_ + " values must be scalars");
    }
    ++depth_;
    ++array_depth_;
    return true;
  }
  bool end_array() override {
    --depth_;
    --array_depth_;
    return true;
  }
  bool parse_error(std::size_t, const std::string&, const nlohmann::detail::exception& ex) override {
    return reject(ex.what());
  }

 private:
  bool at_top(std::string_view k) const { return depth_ == 1 && top_key_ == k; }
  bool in(std::string_view s) const { return depth_ == 2 && array_depth_ == 0 && section_ == s; }
  bool scalar(std::string_view kind) {
    if (depth_ == 0) return reject("window must be a JSON object");
    if (at_top("t")) return reject("t must be an integer");
    if (in("sources")) return reject("packet count must be a positive integer");
    if (in("categories")) return reject("category must be a string");
    (void)kind;
    return true;
  }
  bool reject(std::string msg) {
    if (error.empty()) error = std::move(msg);
    return false;
  }

  int depth_ = 0;
  int array_depth_ = 0;
  std::string top_key_;
  std::string inner_key_;
  std::string section_;
};

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string at_line(std::size_t line) { return "line " + std::to_string(line) + ": "; }

inline SourceWindow window_from_sax(WindowSax& sax, std::size_t line) {
  if (!sax.t) fail(ErrorCode::parse_error, at_line(line) + "missing integer field t");
  if (!sax.saw_sources) fail(ErrorCode::parse_error, at_line(line) + "missing object field sources");
  for (auto& e : sax.entries) {
    if (auto it = sax.categories.find(e.id); it != sax.categories.end()) e.category = it->second;
  }
  try {
    return SourceWindow(*sax.t, std::move(sax.entries));
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, at_line(line) + e.what());
  }
}

}  // namespace detail

/// Reads windows; output is sorted by t_start and repeated ids within a
/// window are merged by summing counts.
inline std::vector<SourceWindow> ingest_windows(std::istream& in, WindowFormat format) {
  std::vector<SourceWindow> windows;
  std::string raw;
  std::size_t line_no = 0;

  if (format == WindowFormat::jsonl) {
    while (std::getline(in, raw)) {
      ++line_no;
      if (detail::trim(raw).empty()) continue;
      detail::WindowSax sax;
      const bool ok = nlohmann::json::sax_parse(raw, &sax);
      if (!ok || !sax.error.empty()) {
        fail(ErrorCode::parse_error, detail::at_line(line_no) + (sax.error.empty() ? "malformed JSON" : sax.error));
      }
      windows.push_back(detail::window_from_sax(sax, line_no));
    }
  } else {
    std::optional<std::int64_t> current;
    std::vector<SourceEntry> pending;
    std::vector<std::int64_t> closed;
    auto flush = [&] {
      if (current) {
        windows.emplace_back(*current, std::move(pending));
        closed.push_back(*current);
      }
      pending.clear();
    };
    bool first = true;
    while (std::getline(in, raw)) {
      ++line_no;
      const auto line = detail::trim(raw);
      if (line.empty()) continue;
      const auto fields = detail::split_csv(line);
      if (first && !fields.empty() && fields[0] == "t") {
        first = false;
        continue;
      }
      first = false;
      if (fields.size() < 3 || fields.size() > 4) {
        fail(ErrorCode::parse_error, detail::at_line(line_no) + "expected t,source_id,count[,category]");
      }
      const auto t = detail::parse_int<std::int64_t>(fields[0]);
      const auto count = detail::parse_int<std::uint64_t>(fields[2]);
      if (!t) fail(ErrorCode::parse_error, detail::at_line(line_no) + "bad t");
      if (!count || *count < 1) fail(ErrorCode::parse_error, detail::at_line(line_no) + "bad packet count");
      if (fields[1].empty()) fail(ErrorCode::parse_error, detail::at_line(line_no) + "empty source id");
      if (!current || *current != *t) {
        flush();
        if (std::find(closed.begin(), closed.end(), *t) != closed.end()) {
          fail(ErrorCode::duplicate_window, detail::at_line(line_no) + "window t=" + std::to_string(*t) + " repeats");
        }
        current = *t;
      }
      pending.push_back({std::string(fields[1]), *count, fields.size() == 4 ? std::string(fields[3]) : ""});
    }
    flush();
  }

  std::stable_sort(windows.begin(), windows.end(),
                   [](const SourceWindow& a, const SourceWindow& b) { return a.t_start() < b.t_start(); });
  for (std::size_t i = 1; i < windows.size(); ++i) {
    if (windows[i].t_start() == windows[i - 1].t_start()) {
      fail(ErrorCode::duplicate_window, "window t=" + std::to_string(windows[i].t_start()) + " repeats");
    }
  }
  return windows;
}

inline void write_windows(std::ostream& out, std::span<const SourceWindow> windows, WindowFormat format) {
  if (format == WindowFormat::jsonl) {
    for (const auto& w : windows) {
      nlohmann::json sources = nlohmann::json::object();
      nlohmann::json categories = nlohmann::json::object();
      for (const auto& e : w.entries()) {
        sources[e.id] = e.count;
        if (!e.category.empty()) categories[e.id] = e.category;
      }
      nlohmann::json line = {{"t", w.t_start()}, {"sources", std::move(sources)}};
      if (!categories.empty()) line["categories"] = std::move(categories);
      out << line.dump() << '\n';
    }
    return;
  }
  out << "t,source_id,count,category\n";
  for (const auto& w : windows) {
    for (const auto& e : w.entries()) {
      if (e.id.find_first_of(",\n") != std::string::npos || e.category.find_first_of(",\n") != std::string::npos) {
        fail(ErrorCode::io_error, "source id or category not representable in CSV: " + e.id);
      }
      out << w.t_start() << ',' << e.id << ',' << e.count << ',' << e.category << '\n';
    }
  }
}

// Synthetic windows.

/// Reference window at t = 0 holds every source; the window at lag t keeps
/// each source independently with probability β / (β + |t|^α).
struct SynthSpec {
  std::size_t n_sources = 1000;
  double alpha_mc = 0.5;
  double beta_mc = 1.0;
  std::int64_t window_spacing = 1;
  std::size_t n_windows = 11;
  std::string id_prefix = "s";
  std::uint64_t packets = 1;
  std::string category;
};

struct SynthAccess {
  static SourceWindow make(std::int64_t t, std::vector<SourceEntry> sorted) {
    return SourceWindow(SourceWindow::Presorted{}, t, std::move(sorted));
  }
};

/// Window lags are k * spacing for k in [-h, n_windows - 1 - h], h = (n_windows - 1) / 2.
inline std::vector<std::int64_t> synth_lags(const SynthSpec& spec) {
  const auto n = static_cast<std::int64_t>(spec.n_windows);
  const std::int64_t h = (n - 1) / 2;
  std::vector<std::int64_t> lags;
  for (std::int64_t k = -h; k <= n - 1 - h; ++k) lags.push_back(k * spec.window_spacing);
  return lags;
}

inline std::vector<SourceWindow> synth_windows(const SynthSpec& spec, std::uint64_t seed) {
  if (spec.n_sources == 0 || spec.n_windows == 0 || spec.window_spacing <= 0 || spec.packets == 0) {
    fail(ErrorCode::domain_error, "synthetic spec needs positive sizes");
  }
  if (!(spec.alpha_mc > 0.0) || !(spec.beta_mc > 0.0)) fail(ErrorCode::domain_error, "synthetic alpha/beta must be > 0");

  // Zero-padded ids keep lexicographic order equal to index order.
  std::size_t width = 1;
  for (std::size_t v = spec.n_sources - 1; v >= 10; v /= 10) ++width;
  std::vector<std::string> ids(spec.n_sources);
  for (std::size_t i = 0; i < spec.n_sources; ++i) {
    char digits[24];
    const auto end = std::to_chars(digits, digits + sizeof digits, i).ptr;
    const auto len = static_cast<std::size_t>(end - digits);
    std::string id = spec.id_prefix;
    id.append(width - len, '0');
    id.append(digits, len);
    ids[i] = std::move(id);
  }

  const auto lags = synth_lags(spec);
  std::vector<SourceWindow> windows(lags.size());
  parallel_for(lags.size(), [&](std::size_t k) {
    const double t = static_cast<double>(std::abs(lags[k]));
    const double keep = lags[k] == 0 ? 1.0 : spec.beta_mc / (spec.beta_mc + std::pow(t, spec.alpha_mc));
    auto engine = make_engine(seed, k);
    std::vector<SourceEntry> entries;
    entries.reserve(static_cast<std::size_t>(keep * static_cast<double>(spec.n_sources) * 1.1) + 16);
    for (std::size_t i = 0; i < spec.n_sources; ++i) {
      if (lags[k] == 0 || open_unit(engine()) < keep) entries.push_back({ids[i], spec.packets, spec.category});
    }
    windows[k] = SynthAccess::make(lags[k], std::move(entries));
  });
  return windows;
}

/// Union of window sets by t_start. Ids shared across sets merge by count.
inline std::vector<SourceWindow> merge_window_sets(std::span<const std::vector<SourceWindow>> sets) {
  std::map<std::int64_t, std::vector<SourceEntry>> by_t;
  for (const auto& set : sets) {
    for (const auto& w : set) {
      auto& bucket = by_t[w.t_start()];
      bucket.insert(bucket.end(), w.entries().begin(), w.entries().end());
    }
  }
  std::vector<SourceWindow> out;
  for (auto& [t, entries] : by_t) out.emplace_back(t, std::move(entries));
  return out;
}

}  // namespace coastline

#endif  // COASTLINE_CORRELATION_HPP
