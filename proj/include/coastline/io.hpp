#ifndef COASTLINE_IO_HPP
#define COASTLINE_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "coastline/correlation.hpp"
#include "coastline/distributions.hpp"
#include "coastline/fit.hpp"
#include "coastline/geometry.hpp"
#include "coastline/inverse.hpp"

namespace coastline {

/// 17 significant digits, enough to round-trip any double.
inline std::string fmt_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

/// Reads a numeric CSV with the given header; returns one vector per column.
inline std::vector<std::vector<double>> read_numeric_csv(std::istream& in, const std::vector<std::string>& header) {
  std::vector<std::vector<double>> cols(header.size());
  std::string raw;
  std::size_t line_no = 0;
  bool seen_header = false;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto fields = split_csv(line);
    if (!seen_header) {
      seen_header = true;
      bool match = fields.size() == header.size();
      for (std::size_t i = 0; match && i < header.size(); ++i) match = fields[i] == header[i];
      if (match) continue;
    }
    if (fields.size() != header.size()) {
      fail(ErrorCode::parse_error, at_line(line_no) + "expected " + std::to_string(header.size()) + " columns");
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
      const std::string field(fields[i]);
      char* end = nullptr;
      const double v = std::strtod(field.c_str(), &end);
      if (field.empty() || end != field.c_str() + field.size()) {
        fail(ErrorCode::parse_error, at_line(line_no) + "bad number '" + field + "'");
      }
      cols[i].push_back(v);
    }
  }
  return cols;
}

}  // namespace detail

// PdfGrid: `x,p`.

inline void write_pdf_csv(std::ostream& out, const PdfGrid& g) {
  out << "x,p\n";
  for (std::size_t i = 0; i < g.size(); ++i) out << fmt_real(g.xs()[i]) << ',' << fmt_real(g.ps()[i]) << '\n';
}

inline PdfGrid read_pdf_csv(std::istream& in) {
  auto cols = detail::read_numeric_csv(in, {"x", "p"});
  try {
    return PdfGrid(std::move(cols[0]), std::move(cols[1]));
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, std::string("pdf csv: ") + e.what());
  }
}

// Coastline: `x,f,slope`.

inline void write_coastline_csv(std::ostream& out, const TabulatedCoastline& c) {
  out << "x,f,slope\n";
  for (std::size_t i = 0; i < c.size(); ++i) {
    out << fmt_real(c.xs()[i]) << ',' << fmt_real(c.fs()[i]) << ',' << fmt_real(c.slopes()[i]) << '\n';
  }
}

inline TabulatedCoastline read_coastline_csv(std::istream& in) {
  auto cols = detail::read_numeric_csv(in, {"x", "f", "slope"});
  try {
    return TabulatedCoastline(std::move(cols[0]), std::move(cols[1]), std::move(cols[2]));
  } catch (const Error& e) {
    fail(ErrorCode::parse_error, std::string("coastline csv: ") + e.what());
  }
}

// CorrelationSeries: `lag_seconds,correlation`.

inline void write_series_csv(std::ostream& out, const CorrelationSeries& s) {
  out << "lag_seconds,correlation\n";
  for (std::size_t i = 0; i < s.lags.size(); ++i) out << s.lags[i] << ',' << fmt_real(s.values[i]) << '\n';
}

inline CorrelationSeries read_series_csv(std::istream& in) {
  auto cols = detail::read_numeric_csv(in, {"lag_seconds", "correlation"});
  CorrelationSeries s;
  for (std::size_t i = 0; i < cols[0].size(); ++i) {
    const double lag = cols[0][i];
    if (lag != std::round(lag)) fail(ErrorCode::parse_error, "lag_seconds must be integral");
    s.lags.push_back(static_cast<std::int64_t>(lag));
    s.values.push_back(cols[1][i]);
  }
  return s;
}

// Round-trip report: `x,p_original,p_regenerated,residual`, residual = regenerated - original.

inline void write_roundtrip_csv(std::ostream& out, const PdfGrid& original, const PdfGrid& regenerated) {
  if (original.size() != regenerated.size()) fail(ErrorCode::alignment, "round-trip grids differ");
  out << "x,p_original,p_regenerated,residual\n";
  for (std::size_t i = 0; i < original.size(); ++i) {
    const double a = original.ps()[i];
    const double b = regenerated.ps()[i];
    out << fmt_real(original.xs()[i]) << ',' << fmt_real(a) << ',' << fmt_real(b) << ',' << fmt_real(b - a) << '\n';
  }
}

// SegmentPlan: JSON lines `{lo, hi, flip, f1}`.

inline void write_plan_jsonl(std::ostream& out, const SegmentPlan& plan) {
  for (const auto& s : plan.segments) {
    out << nlohmann::json{{"lo", s.lo}, {"hi", s.hi}, {"flip", s.flip}, {"f1", s.f1}}.dump() << '\n';
  }
}

inline SegmentPlan read_plan_jsonl(std::istream& in) {
  SegmentPlan plan;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (detail::trim(raw).empty()) continue;
    try {
      const auto j = nlohmann::json::parse(raw);
      plan.segments.push_back({j.at("lo").get<double>(), j.at("hi").get<double>(), j.at("flip").get<bool>(),
                               j.value("f1", 0.0)});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::parse_error, detail::at_line(line_no) + e.what());
    }
  }
  return plan;
}

// FitResult: `{alpha, beta, amplitude, residual_l2, t_half}`.

inline nlohmann::json to_json(const FitResult& f) {
  return {{"alpha", f.alpha_mc}, {"beta", f.beta_mc}, {"amplitude", f.amplitude},
          {"residual_l2", f.residual_l2}, {"t_half", f.t_half}};
}

inline FitResult fit_from_json(const nlohmann::json& j) {
  try {
    return {j.at("alpha").get<double>(), j.at("beta").get<double>(), j.at("amplitude").get<double>(),
            j.at("residual_l2").get<double>(), j.at("t_half").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::parse_error, e.what());
  }
}

inline void write_report_csv(std::ostream& out, std::span<const ReportRow> rows) {
  out << "label,alpha,beta,t_half\n";
  for (const auto& r : rows) {
    out << r.label << ',' << fmt_real(r.alpha_mc) << ',' << fmt_real(r.beta_mc) << ',' << fmt_real(r.t_half) << '\n';
  }
}

/// Writes through a sibling temp file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::io_error, "cannot open " + tmp.string());
    try {
      body(out);
    } catch (...) {
      out.close();
      std::filesystem::remove(tmp);
      throw;
    }
    out.flush();
    if (!out) fail(ErrorCode::io_error, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    fail(ErrorCode::io_error, "cannot rename into " + path.string() + ": " + ec.message());
  }
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::io_error, "cannot open " + path.string());
  return in;
}

}  // namespace coastline

#endif  // COASTLINE_IO_HPP
