#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "coastline/cli.hpp"

using namespace coastline;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int status = cli::run(args, out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("coastline_cli_" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files[e.path().filename().string()] = slurp(e.path());
  return files;
}

}  // namespace

TEST(Cli, ForwardFlatIsCauchy) {
  const auto r = run_cli({"forward", "--coastline", "flat", "--range", "-5:5:0.01"});
  ASSERT_EQ(r.status, 0) << r.err;
  std::istringstream in(r.out);
  const auto g = read_pdf_csv(in);
  ASSERT_EQ(g.size(), 1001u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.xs()[i];
    EXPECT_NEAR(g.ps()[i], 1.0 / (std::numbers::pi * (1.0 + x * x)), 1e-12);
  }
}

TEST(Cli, RoundtripCauchyFindsPi) {
  const auto r = run_cli({"roundtrip", "--pdf", "cauchy", "--y0", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j.at("kappa").get<double>(), std::numbers::pi, 0.02);
  EXPECT_LT(j.at("l2").get<double>(), 1e-3);
  EXPECT_EQ(j.at("nodes").get<int>(), 1000);
}

TEST(Cli, InverseWritesThreeFiles) {
  const auto dir = scratch("inverse");
  const auto r = run_cli({"inverse", "--pdf", "cauchy", "--kappa", "3.14159", "--out", dir.string()});
  ASSERT_EQ(r.status, 0) << r.err;
  const auto files = snapshot(dir);
  EXPECT_EQ(files.size(), 3u);
  std::istringstream in(files.at("coastline.csv"));
  const auto c = read_coastline_csv(in);
  for (double f : c.fs()) EXPECT_LT(std::abs(f), 1e-3);
}

TEST(Cli, FitOnEmptyFileIsInsufficientData) {
  const auto dir = scratch("fit_empty");
  std::ofstream(dir / "empty.csv").close();
  const auto r = run_cli({"fit", "--in", (dir / "empty.csv").string()});
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(r.err.rfind("error: insufficient_data:", 0), 0u) << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST(Cli, UsageErrors) {
  for (const auto& args : std::vector<std::vector<std::string>>{
           {},
           {"forward", "--coastline", "flat", "--bogus"},
           {"nosuch"},
           {"forward", "--coastline", "wiggly", "--range", "0:1:0.1"},
           {"forward", "--coastline", "flat", "--range", "1:0:0.1"},
           {"coastlines", "--figure", "fig1"},
           {"correlate", "--in", "x", "--format", "xml"}}) {
    const auto r = run_cli(args);
    EXPECT_EQ(r.status, 2) << r.err;
    EXPECT_EQ(r.err.rfind("error: usage:", 0), 0u) << r.err;
  }
}

TEST(Cli, MissingFileIsIoError) {
  const auto r = run_cli({"fit", "--in", "/nonexistent/series.csv"});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(r.err.rfind("error: io_error:", 0), 0u) << r.err;
}

TEST(Cli, ListsBuiltinCoastlines) {
  const auto r = run_cli({"coastlines"});
  ASSERT_EQ(r.status, 0);
  EXPECT_EQ(r.out, "flat\nline45\nline135\nsemicircle\n");
}

TEST(Cli, SampleIsSeededAndPrefixStable) {
  const auto a = run_cli({"sample", "--coastline", "semicircle", "--n", "100", "--seed", "9"});
  const auto b = run_cli({"sample", "--coastline", "semicircle", "--n", "100", "--seed", "9"});
  const auto c = run_cli({"sample", "--coastline", "semicircle", "--n", "50", "--seed", "9"});
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.out.substr(0, c.out.size()), c.out);
  EXPECT_EQ(std::count(a.out.begin(), a.out.end(), '\n'), 101);
}

TEST(Cli, SynthCorrelateFitPipelineLeavesInputsAlone) {
  const auto dir = scratch("pipeline");
  ASSERT_EQ(run_cli({"synth", "--n", "100000", "--alpha", "0.5", "--seed", "3", "--out", dir.string()}).status, 0);
  const auto windows = dir / "windows.jsonl";
  const auto before = slurp(windows);
  const auto corr = run_cli({"correlate", "--in", windows.string(), "--ref", "0", "--out", dir.string()});
  ASSERT_EQ(corr.status, 0) << corr.err;
  EXPECT_EQ(slurp(windows), before);
  const auto series_before = slurp(dir / "series.csv");
  const auto fit = run_cli({"fit", "--in", (dir / "series.csv").string()});
  ASSERT_EQ(fit.status, 0) << fit.err;
  EXPECT_EQ(slurp(dir / "series.csv"), series_before);
  const auto f = fit_from_json(nlohmann::json::parse(fit.out));
  EXPECT_NEAR(f.alpha_mc, 0.5, 0.05);
}

TEST(Cli, CsvWindowsMatchJsonl) {
  const auto dir = scratch("formats");
  ASSERT_EQ(run_cli({"synth", "--n", "2000", "--seed", "4", "--out", dir.string()}).status, 0);
  ASSERT_EQ(run_cli({"synth", "--n", "2000", "--seed", "4", "--format", "csv", "--out", dir.string()}).status, 0);
  const auto a = run_cli({"correlate", "--in", (dir / "windows.jsonl").string()});
  const auto b = run_cli({"correlate", "--in", (dir / "windows.csv").string(), "--format", "csv"});
  ASSERT_EQ(a.status, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
}

TEST(Cli, FigureOutputsAreReproducible) {
  for (const char* figure : {"fig1", "fig4"}) {
    const auto a = scratch(std::string(figure) + "_a");
    const auto b = scratch(std::string(figure) + "_b");
    ASSERT_EQ(run_cli({"coastlines", "--figure", figure, "--n", "5000", "--seed", "7", "--out", a.string()}).status, 0);
    ASSERT_EQ(run_cli({"coastlines", "--figure", figure, "--n", "5000", "--seed", "7", "--out", b.string()}).status, 0);
    const auto sa = snapshot(a);
    EXPECT_FALSE(sa.empty());
    EXPECT_EQ(sa, snapshot(b)) << figure;
  }
}

TEST(Cli, Fig1DependsOnSeed) {
  const auto a = scratch("seed_a");
  const auto b = scratch("seed_b");
  ASSERT_EQ(run_cli({"coastlines", "--figure", "fig1", "--n", "5000", "--seed", "1", "--out", a.string()}).status, 0);
  ASSERT_EQ(run_cli({"coastlines", "--figure", "fig1", "--n", "5000", "--seed", "2", "--out", b.string()}).status, 0);
  EXPECT_NE(slurp(a / "fig1_corr_total.csv"), slurp(b / "fig1_corr_total.csv"));
}

TEST(Cli, AppBFigureHasPdfAndCoastlinePerCase) {
  const auto dir = scratch("appB");
  ASSERT_EQ(run_cli({"coastlines", "--figure", "appB", "--out", dir.string()}).status, 0);
  int pdfs = 0, coasts = 0;
  for (const auto& [name, body] : snapshot(dir)) {
    if (name.ends_with("_pdf.csv")) ++pdfs;
    if (name.ends_with("_coastline.csv")) ++coasts;
  }
  EXPECT_EQ(pdfs, 6);
  EXPECT_EQ(coasts, 6);
  EXPECT_TRUE(fs::exists(dir / "appB_summary.csv"));
}

TEST(Cli, Fig4HasOneCoastlinePerCategory) {
  const auto dir = scratch("fig4");
  ASSERT_EQ(run_cli({"coastlines", "--figure", "fig4", "--out", dir.string()}).status, 0);
  for (const char* label : {"total", "noon", "midnight", "unknown", "malicious", "benign"}) {
    EXPECT_TRUE(fs::exists(dir / ("fig4_" + std::string(label) + "_coastline.csv"))) << label;
  }
}

TEST(Cli, Fig2RecoversBandHalfLives) {
  // t_half for band i is 1 + i seconds; compare each band's mean over seeds to the truth within 3 sd.
  constexpr int kSeeds = 4;
  std::vector<std::vector<double>> per_band(6);
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto dir = scratch("fig2_" + std::to_string(seed));
    ASSERT_EQ(run_cli({"coastlines", "--figure", "fig2", "--seed", std::to_string(seed), "--out", dir.string()}).status,
              0);
    for (std::size_t i = 0; i < per_band.size(); ++i) {
      const auto f = fit_from_json(nlohmann::json::parse(slurp(dir / ("fig2_fit_band" + std::to_string(i) + ".json"))));
      per_band[i].push_back(f.t_half);
    }
  }
  for (std::size_t i = 0; i < per_band.size(); ++i) {
    double mean = 0.0, var = 0.0;
    for (double t : per_band[i]) mean += t / kSeeds;
    for (double t : per_band[i]) var += (t - mean) * (t - mean) / (kSeeds - 1);
    const double truth = 1.0 + static_cast<double>(i);
    EXPECT_LE(std::abs(mean - truth), 3.0 * std::sqrt(var) + 0.02 * truth) << "band " << i << " mean " << mean;
  }
}
