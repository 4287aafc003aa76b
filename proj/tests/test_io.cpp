#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "coastline/io.hpp"
#include "support.hpp"

using namespace coastline;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::usage;
}

std::vector<double> to_vec(std::span<const double> s) { return {s.begin(), s.end()}; }

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coastline_io_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  return dir;
}

}  // namespace

TEST(FmtReal, RoundTripsExactly) {
  gen::for_all(61, 500, [](gen::Gen& g) {
    const double v = g.uniform(-1.0, 1.0) * std::pow(10.0, g.uniform(-300.0, 300.0));
    EXPECT_EQ(std::stod(fmt_real(v)), v);
  });
}

TEST(PdfCsv, RoundTrip) {
  gen::for_all(62, 30, [](gen::Gen& g) {
    const std::size_t n = static_cast<std::size_t>(g.integer(2, 200));
    const auto xs = g.grid(-3.0, 4.0, n);
    std::vector<double> ps(n);
    for (auto& p : ps) p = g.uniform(0.0, 2.0);
    std::stringstream buf;
    write_pdf_csv(buf, PdfGrid(xs, ps));
    const auto back = read_pdf_csv(buf);
    EXPECT_EQ(to_vec(back.xs()), xs);
    EXPECT_EQ(to_vec(back.ps()), ps);
  });
}

TEST(PdfCsv, HeaderIsOptional) {
  std::stringstream buf("0,1\n1,2\n");
  const auto g = read_pdf_csv(buf);
  EXPECT_EQ(to_vec(g.ps()), (std::vector<double>{1.0, 2.0}));
}

TEST(PdfCsv, BadInputIsParseError) {
  std::stringstream bad_number("x,p\n0,1\n1,abc\n");
  try {
    read_pdf_csv(bad_number);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  std::stringstream short_row("x,p\n0,1\n1\n");
  EXPECT_EQ(code_of([&] { read_pdf_csv(short_row); }), ErrorCode::parse_error);
  std::stringstream unsorted("x,p\n1,1\n0,1\n");
  EXPECT_EQ(code_of([&] { read_pdf_csv(unsorted); }), ErrorCode::parse_error);
}

TEST(CoastlineCsv, RoundTrip) {
  const TabulatedCoastline c({-1.0, 0.0, 0.5}, {0.1, -0.2, 1.0 / 3.0}, {0.0, 1e-300, -7.25});
  std::stringstream buf;
  write_coastline_csv(buf, c);
  EXPECT_EQ(buf.str().substr(0, 10), "x,f,slope\n");
  const auto back = read_coastline_csv(buf);
  EXPECT_EQ(to_vec(back.xs()), to_vec(c.xs()));
  EXPECT_EQ(to_vec(back.fs()), to_vec(c.fs()));
  EXPECT_EQ(to_vec(back.slopes()), to_vec(c.slopes()));
}

TEST(SeriesCsv, RoundTripAndIntegralLags) {
  const CorrelationSeries s{{-60, 0, 60}, {0.25, 1.0, 0.5}, 3};
  std::stringstream buf;
  write_series_csv(buf, s);
  const auto back = read_series_csv(buf);
  EXPECT_EQ(back.lags, s.lags);
  EXPECT_EQ(back.values, s.values);
  std::stringstream frac("lag_seconds,correlation\n1.5,0.2\n");
  EXPECT_EQ(code_of([&] { read_series_csv(frac); }), ErrorCode::parse_error);
}

TEST(RoundtripCsv, ResidualColumn) {
  const PdfGrid a({0.0, 1.0}, {1.0, 1.0});
  const PdfGrid b({0.0, 1.0}, {0.75, 1.25});
  std::stringstream buf;
  write_roundtrip_csv(buf, a, b);
  EXPECT_EQ(buf.str(), "x,p_original,p_regenerated,residual\n0,1,0.75,-0.25\n1,1,1.25,0.25\n");
  EXPECT_EQ(code_of([&] { write_roundtrip_csv(buf, a, PdfGrid({0.0, 1.0, 2.0}, {1.0, 1.0, 1.0})); }),
            ErrorCode::alignment);
}

TEST(PlanJsonl, RoundTrip) {
  const SegmentPlan plan{{{-5.0, 0.5, false, 0.0}, {0.5, 5.0, true, -0.125}}};
  std::stringstream buf;
  write_plan_jsonl(buf, plan);
  const auto back = read_plan_jsonl(buf);
  EXPECT_EQ(back.segments, plan.segments);
  std::stringstream broken("{\"lo\":0,\"hi\":1,\"flip\":false}\n{\"lo\":\n");
  try {
    read_plan_jsonl(broken);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
  }
}

TEST(FitJson, RoundTrip) {
  const FitResult f{0.74, 1.5, 1.0, 0.01, std::pow(1.5, 1.0 / 0.74)};
  const auto back = fit_from_json(nlohmann::json::parse(to_json(f).dump()));
  EXPECT_EQ(back.alpha_mc, f.alpha_mc);
  EXPECT_EQ(back.beta_mc, f.beta_mc);
  EXPECT_EQ(back.amplitude, f.amplitude);
  EXPECT_EQ(back.residual_l2, f.residual_l2);
  EXPECT_EQ(back.t_half, f.t_half);
  EXPECT_EQ(code_of([] { fit_from_json(nlohmann::json{{"alpha", 1.0}}); }), ErrorCode::parse_error);
}

TEST(ReportCsv, Format) {
  const std::vector<ReportRow> rows{{"noon", 0.3, 1.0, 1.0}};
  std::stringstream buf;
  write_report_csv(buf, rows);
  EXPECT_EQ(buf.str(), "label,alpha,beta,t_half\nnoon,0.29999999999999999,1,1\n");
}

TEST(WriteFileAtomic, WritesAndLeavesNoTempFiles) {
  const auto dir = scratch("atomic");
  const auto target = dir / "nested" / "out.csv";
  write_file_atomic(target, [](std::ostream& o) { o << "first\n"; });
  write_file_atomic(target, [](std::ostream& o) { o << "second\n"; });
  std::ifstream in(target);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "second");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(target.parent_path())) {
    ++files;
    EXPECT_EQ(e.path().filename(), "out.csv");
  }
  EXPECT_EQ(files, 1u);
  fs::remove_all(dir);
}

TEST(WriteFileAtomic, FailedBodyKeepsOldContent) {
  const auto dir = scratch("atomic_fail");
  const auto target = dir / "out.csv";
  write_file_atomic(target, [](std::ostream& o) { o << "kept\n"; });
  EXPECT_THROW(write_file_atomic(target,
                                 [](std::ostream& o) {
                                   o << "partial";
                                   fail(ErrorCode::degenerate_input, "boom");
                                 }),
               Error);
  std::ifstream in(target);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "kept");
  EXPECT_EQ(std::distance(fs::directory_iterator(dir), fs::directory_iterator{}), 1);
  fs::remove_all(dir);
}

TEST(OpenInput, MissingFileIsIoError) {
  EXPECT_EQ(code_of([] { open_input("/nonexistent/definitely/missing.csv"); }), ErrorCode::io_error);
}
