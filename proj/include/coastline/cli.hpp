#ifndef COASTLINE_CLI_HPP
#define COASTLINE_CLI_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coastline/correlation.hpp"
#include "coastline/distributions.hpp"
#include "coastline/error.hpp"
#include "coastline/fit.hpp"
#include "coastline/geometry.hpp"
#include "coastline/inverse.hpp"
#include "coastline/io.hpp"
#include "coastline/numeric.hpp"

namespace coastline::cli {

namespace fs = std::filesystem;

inline constexpr std::size_t kDefaultGridNodes = 1000;
inline constexpr std::size_t kDefaultKappaSteps = 200;

struct Range {
  double lo;
  double hi;
  double step;
};

/// `lo:hi:step`
inline Range parse_range(const std::string& text) {
  std::array<double, 3> v{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto next = i < 2 ? text.find(':', pos) : std::string::npos;
    if (i < 2 && next == std::string::npos) fail(ErrorCode::usage, "range must be lo:hi:step, got '" + text + "'");
    const std::string field = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    char* end = nullptr;
    v[i] = std::strtod(field.c_str(), &end);
    if (field.empty() || end != field.c_str() + field.size()) {
      fail(ErrorCode::usage, "range must be lo:hi:step, got '" + text + "'");
    }
    pos = next + 1;
  }
  range_grid(v[0], v[1], v[2]);  // validates
  return {v[0], v[1], v[2]};
}

/// `auto` or a positive real.
inline std::optional<double> parse_kappa(const std::string& text) {
  if (text == "auto") return std::nullopt;
  char* end = nullptr;
  const double k = std::strtod(text.c_str(), &end);
  if (text.empty() || end != text.c_str() + text.size() || !(k > 0.0) || !std::isfinite(k)) {
    fail(ErrorCode::usage, "kappa must be 'auto' or a positive real, got '" + text + "'");
  }
  return k;
}

inline WindowFormat parse_format(const std::string& text) {
  if (text == "jsonl") return WindowFormat::jsonl;
  if (text == "csv") return WindowFormat::csv;
  fail(ErrorCode::usage, "format must be jsonl or csv, got '" + text + "'");
}

inline constexpr std::string_view kNamedPdfs[] = {"cauchy", "gaussian", "modcauchy", "arcsine",
                                                   "flat",   "line45",   "line135",   "semicircle"};

/// Where named pdfs live by default: arcsine and semicircle densities blow
/// up at |x| = 1, so they stop at 0.9.
inline std::vector<double> default_grid(const std::string& name) {
  if (name == "arcsine" || name == "semicircle") return linspace(-0.9, 0.9, kDefaultGridNodes);
  return linspace(-5.0, 5.0, kDefaultGridNodes);
}

struct PdfOptions {
  std::string source;
  std::optional<Range> range;
  double y0 = 1.0;
  double alpha = 0.75;
  double beta = 1.0;
};

inline Coastline load_coastline(const std::string& source) {
  if (auto c = builtin_coastline(source)) return *c;
  if (!fs::exists(source)) fail(ErrorCode::usage, "unknown coastline '" + source + "' (not a builtin or a file)");
  auto in = open_input(source);
  return read_coastline_csv(in);
}

/// Named densities are tabulated on --range (or their default grid); builtin
/// coastline names stand for their forward density seen from --y0.
inline PdfGrid load_pdf(const PdfOptions& o) {
  const bool named = std::find(std::begin(kNamedPdfs), std::end(kNamedPdfs), o.source) != std::end(kNamedPdfs);
  if (!named) {
    if (!fs::exists(o.source)) fail(ErrorCode::usage, "unknown pdf '" + o.source + "' (not a name or a file)");
    auto in = open_input(o.source);
    return read_pdf_csv(in);
  }
  const auto xs = o.range ? range_grid(o.range->lo, o.range->hi, o.range->step) : default_grid(o.source);
  if (o.source == "cauchy") return tabulate(StandardCauchy{}, xs);
  if (o.source == "gaussian") return tabulate(make_gaussian(0.0, 1.0), xs);
  if (o.source == "arcsine") return tabulate(Arcsine{}, xs);
  if (o.source == "modcauchy") {
    return tabulate(ModCauchy(ModCauchyParams(o.beta, o.alpha, Interval{xs.front(), xs.back()})), xs);
  }
  const Coastline c = *builtin_coastline(o.source);
  return forward_density(c, o.y0, natural_bounds(c, o.y0), xs);
}

/// Sends each named output to --out/<name>, or the primary one to stdout.
class Sink {
 public:
  Sink(std::optional<fs::path> dir, std::ostream& out) : dir_(std::move(dir)), out_(out) {}

  void emit(const std::string& name, const std::function<void(std::ostream&)>& body, bool primary) {
    if (dir_) {
      write_file_atomic(*dir_ / name, body);
    } else if (primary) {
      body(out_);
    }
  }

 private:
  std::optional<fs::path> dir_;
  std::ostream& out_;
};

inline AzimuthalBounds bounds_for(const Coastline& c, double y0) {
  if (const auto* t = std::get_if<TabulatedCoastline>(&c)) {
    const auto report = check_coastline_condition(c, y0, t->xs());
    if (!report.ok) fail(ErrorCode::geometry, "coastline condition fails: " + std::string(to_string(report.reason)));
    return *report.bounds;
  }
  return natural_bounds(c, y0);
}

inline nlohmann::json plan_json(const SegmentPlan& plan) {
  auto arr = nlohmann::json::array();
  for (const auto& s : plan.segments) arr.push_back({{"lo", s.lo}, {"hi", s.hi}, {"flip", s.flip}, {"f1", s.f1}});
  return arr;
}

// Figure pipelines.

struct FigureOptions {
  std::optional<fs::path> input;
  WindowFormat format = WindowFormat::jsonl;
  std::uint64_t seed = 0;
  std::size_t n_sources = 20000;
  double y0 = 1.0;
  std::size_t k_steps = kDefaultKappaSteps;
};

/// Exponents quoted for the observed categories, β = 1.
inline const std::vector<std::pair<std::string, double>>& fixture_alphas() {
  static const std::vector<std::pair<std::string, double>> v{{"total", 0.45},   {"noon", 0.3},
                                                              {"midnight", 0.25}, {"unknown", 0.52},
                                                              {"malicious", 0.74}, {"benign", 0.34}};
  return v;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return make_engine(seed, 0xF16'0000'0000ULL + index)();
}

inline std::vector<SourceWindow> load_windows(const fs::path& path, WindowFormat format) {
  auto in = open_input(path);
  return ingest_windows(in, format);
}

inline CorrelationSeries correlate_for_figure(std::span<const SourceWindow> windows, bool synthetic) {
  // Synthetic windows are thinned copies of the t = 0 window, so that is the
  // only reference with a known model; real input uses the mean.
  return synthetic ? self_correlation(windows, 0) : mean_self_correlation(windows);
}

inline void write_fit_outputs(const fs::path& dir, const std::string& prefix, const std::vector<std::string>& labels,
                              const std::vector<CorrelationSeries>& series) {
  std::vector<FitResult> fits;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    write_file_atomic(dir / (prefix + "corr_" + labels[i] + ".csv"),
                      [&](std::ostream& o) { write_series_csv(o, series[i]); });
    fits.push_back(fit_modcauchy(series[i], true));
    write_file_atomic(dir / (prefix + "fit_" + labels[i] + ".json"),
                      [&](std::ostream& o) { o << to_json(fits.back()).dump(2) << '\n'; });
  }
  const auto rows = t_half_report(fits, labels);
  write_file_atomic(dir / (prefix + "thalf.csv"), [&](std::ostream& o) { write_report_csv(o, rows); });
}

inline void figure_fig1(const fs::path& dir, const FigureOptions& o) {
  std::vector<SourceWindow> windows;
  const bool synthetic = !o.input;
  if (synthetic) {
    std::vector<std::vector<SourceWindow>> sets;
    const std::pair<const char*, double> groups[] = {{"benign", 0.34}, {"malicious", 0.74}, {"unknown", 0.52}};
    for (std::size_t i = 0; i < std::size(groups); ++i) {
      SynthSpec spec;
      spec.n_sources = o.n_sources;
      spec.alpha_mc = groups[i].second;
      spec.n_windows = 21;
      spec.id_prefix = std::string(groups[i].first) + "-";
      spec.category = groups[i].first;
      sets.push_back(synth_windows(spec, derive_seed(o.seed, i)));
    }
    windows = merge_window_sets(sets);
  } else {
    windows = load_windows(*o.input, o.format);
  }
  std::vector<std::string> labels;
  std::vector<CorrelationSeries> series;
  for (auto cat : {Category::total, Category::benign, Category::malicious, Category::unknown}) {
    std::vector<SourceWindow> filtered;
    for (const auto& w : windows) filtered.push_back(filter_category(w, cat));
    labels.emplace_back(to_string(cat));
    series.push_back(correlate_for_figure(filtered, synthetic));
  }
  write_fit_outputs(dir, "fig1_", labels, series);
}

/// Synthetic bands i = 0..5 share α = 0.45 with t_half = 1 + i.
inline void figure_fig2(const fs::path& dir, const FigureOptions& o) {
  std::vector<SourceWindow> windows;
  const bool synthetic = !o.input;
  unsigned max_band = 20;
  if (synthetic) {
    max_band = 5;
    std::vector<std::vector<SourceWindow>> sets;
    for (unsigned i = 0; i <= max_band; ++i) {
      SynthSpec spec;
      spec.n_sources = o.n_sources;
      spec.alpha_mc = 0.45;
      spec.beta_mc = std::pow(1.0 + i, spec.alpha_mc);
      spec.n_windows = 21;
      spec.packets = std::uint64_t{1} << i;
      spec.id_prefix = "d" + std::to_string(i) + "-";
      sets.push_back(synth_windows(spec, derive_seed(o.seed, i)));
    }
    windows = merge_window_sets(sets);
  } else {
    windows = load_windows(*o.input, o.format);
  }
  std::vector<std::string> labels;
  std::vector<CorrelationSeries> series;
  for (unsigned i = 0; i <= max_band; ++i) {
    std::vector<SourceWindow> band;
    bool any = false;
    for (const auto& w : windows) {
      band.push_back(filter_degree(w, i));
      any = any || !band.back().empty();
    }
    if (!any) continue;
    labels.push_back("band" + std::to_string(i));
    series.push_back(correlate_for_figure(band, synthetic));
  }
  if (labels.empty()) fail(ErrorCode::insufficient_data, "no degree band has sources");
  write_fit_outputs(dir, "fig2_", labels, series);
}

inline void write_roundtrip_outputs(const fs::path& dir, const std::string& stem, const PdfGrid& pdf,
                                    const RoundTrip& rt, bool pdf_pair) {
  if (pdf_pair) {
    write_file_atomic(dir / (stem + "_pdf.csv"), [&](std::ostream& o) { write_roundtrip_csv(o, pdf, rt.regenerated); });
  }
  write_file_atomic(dir / (stem + "_coastline.csv"), [&](std::ostream& o) { write_coastline_csv(o, rt.coastline); });
}

inline void figure_fig4(const fs::path& dir, const FigureOptions& o) {
  const auto xs = linspace(-5.0, 5.0, kDefaultGridNodes);
  std::ostringstream summary;
  summary << "label,alpha,beta,kappa,l2\n";
  for (const auto& [label, alpha] : fixture_alphas()) {
    const ModCauchyParams params(1.0, alpha, Interval{xs.front(), xs.back()});
    const PdfGrid pdf = tabulate(ModCauchy(params), xs);
    const RoundTrip rt = roundtrip(pdf, o.y0, std::nullopt, o.k_steps);
    write_roundtrip_outputs(dir, "fig4_" + label, pdf, rt, false);
    summary << label << ',' << fmt_real(alpha) << ',' << fmt_real(1.0) << ',' << fmt_real(rt.kappa) << ','
            << fmt_real(rt.l2) << '\n';
  }
  write_file_atomic(dir / "fig4_summary.csv", [&](std::ostream& out) { out << summary.str(); });
}

inline void figure_appb(const fs::path& dir, const FigureOptions& o) {
  std::ostringstream summary;
  summary << "label,kappa,l2\n";
  for (const char* name : {"gaussian", "cauchy", "modcauchy", "semicircle", "line45", "line135"}) {
    PdfOptions po;
    po.source = name;
    po.y0 = o.y0;
    const PdfGrid pdf = load_pdf(po);
    const RoundTrip rt = roundtrip(pdf, o.y0, std::nullopt, o.k_steps);
    write_roundtrip_outputs(dir, std::string("appB_") + name, pdf, rt, true);
    summary << name << ',' << fmt_real(rt.kappa) << ',' << fmt_real(rt.l2) << '\n';
  }
  write_file_atomic(dir / "appB_summary.csv", [&](std::ostream& out) { out << summary.str(); });
}

inline void figure_pipeline(const std::string& kind, const fs::path& out_dir, const FigureOptions& o) {
  if (kind == "fig1") return figure_fig1(out_dir, o);
  if (kind == "fig2") return figure_fig2(out_dir, o);
  if (kind == "fig4") return figure_fig4(out_dir, o);
  if (kind == "appB") return figure_appb(out_dir, o);
  fail(ErrorCode::usage, "figure must be fig1, fig2, fig4 or appB, got '" + kind + "'");
}

// Entry point.

/// Parses `args` (without the program name), runs one subcommand and returns
/// the exit status. Failures print `error: <code>: <message>` on `err`.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Lighthouse coastlines, generalized Cauchy densities and source self-correlation fits", "coastline"};
  app.require_subcommand(1, 1);

  double y0 = 1.0;
  std::string kappa_text = "auto";
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::string pdf_source;
  std::string coastline_source;
  std::string range_text;
  std::string format_text = "jsonl";
  std::string out_dir;
  std::string input;
  std::size_t k_steps = kDefaultKappaSteps;
  double alpha = 0.75;
  double beta = 1.0;

  auto add_out = [&](CLI::App* sub) { sub->add_option("--out", out_dir, "Output directory (default: stdout)"); };
  auto add_pdf = [&](CLI::App* sub) {
    sub->add_option("--pdf", pdf_source, "Named pdf or x,p CSV path")->required();
    sub->add_option("--range", range_text, "Grid lo:hi:step for named pdfs");
    sub->add_option("--y0", y0, "Lighthouse height");
    sub->add_option("--alpha", alpha, "modcauchy exponent");
    sub->add_option("--beta", beta, "modcauchy scale");
  };

  auto* forward = app.add_subcommand("forward", "Generalized Cauchy density of a coastline on a grid");
  forward->add_option("--coastline", coastline_source, "Builtin name or x,f,slope CSV path")->required();
  forward->add_option("--y0", y0, "Lighthouse height");
  forward->add_option("--range", range_text, "Grid lo:hi:step");
  add_out(forward);

  auto* inverse = app.add_subcommand("inverse", "Coastline from a pdf by the sine-squared heuristic");
  add_pdf(inverse);
  inverse->add_option("--kappa", kappa_text, "Heuristic constant or 'auto'");
  inverse->add_option("--k-steps", k_steps, "Kappa grid size for 'auto'");
  add_out(inverse);

  auto* rt = app.add_subcommand("roundtrip", "pdf -> coastline -> regenerated pdf, with L2 report");
  add_pdf(rt);
  rt->add_option("--kappa", kappa_text, "Heuristic constant or 'auto'");
  rt->add_option("--k-steps", k_steps, "Kappa grid size for 'auto'");
  add_out(rt);

  auto* sample = app.add_subcommand("sample", "Monte Carlo landing abscissae");
  sample->add_option("--coastline", coastline_source, "Builtin name or x,f,slope CSV path")->required();
  sample->add_option("--y0", y0, "Lighthouse height");
  sample->add_option("--n", n, "Number of flashes")->required();
  sample->add_option("--seed", seed, "RNG seed");
  add_out(sample);

  std::optional<std::int64_t> ref;
  std::string category_text;
  std::optional<unsigned> degree;
  auto* correlate = app.add_subcommand("correlate", "Self-correlation series from window data");
  correlate->add_option("--in", input, "Window file")->required();
  correlate->add_option("--format", format_text, "jsonl|csv");
  correlate->add_option("--ref", ref, "Reference window start (default: mean over all references)");
  correlate->add_option("--category", category_text, "total|benign|malicious|unknown");
  correlate->add_option("--degree", degree, "Degree band i: 2^i <= packets < 2^(i+1)");
  add_out(correlate);

  bool free_amplitude = false;
  auto* fit = app.add_subcommand("fit", "Modified Cauchy fit of a lag_seconds,correlation CSV");
  fit->add_option("--in", input, "Series CSV")->required();
  fit->add_flag("--free-amplitude", free_amplitude, "Fit the amplitude instead of fixing it to 1");
  add_out(fit);

  SynthSpec synth_spec;
  auto* synth = app.add_subcommand("synth", "Synthetic windows with modified Cauchy retention");
  synth->add_option("--n", synth_spec.n_sources, "Number of sources");
  synth->add_option("--alpha", synth_spec.alpha_mc, "Retention exponent");
  synth->add_option("--beta", synth_spec.beta_mc, "Retention scale");
  synth->add_option("--windows", synth_spec.n_windows, "Number of windows");
  synth->add_option("--spacing", synth_spec.window_spacing, "Seconds between windows");
  synth->add_option("--packets", synth_spec.packets, "Packets per source");
  synth->add_option("--category", synth_spec.category, "Category tag");
  synth->add_option("--prefix", synth_spec.id_prefix, "Source id prefix");
  synth->add_option("--seed", seed, "RNG seed");
  synth->add_option("--format", format_text, "jsonl|csv");
  add_out(synth);

  std::string figure;
  auto* coastlines = app.add_subcommand("coastlines", "List builtin coastlines, or run a figure pipeline");
  coastlines->add_option("--figure", figure, "fig1|fig2|fig4|appB");
  coastlines->add_option("--in", input, "Window file for fig1/fig2 (default: synthetic)");
  coastlines->add_option("--format", format_text, "jsonl|csv");
  coastlines->add_option("--seed", seed, "RNG seed for synthetic inputs");
  coastlines->add_option("--n", n, "Sources per synthetic group");
  coastlines->add_option("--y0", y0, "Lighthouse height");
  coastlines->add_option("--k-steps", k_steps, "Kappa grid size");
  add_out(coastlines);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::Success& e) {
    // --help on the app or a subcommand
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    std::string msg = e.what();
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    err << "error: " << to_string(ErrorCode::usage) << ": " << msg << '\n';
    return 2;
  }

  try {
    std::optional<fs::path> dir;
    if (!out_dir.empty()) dir = fs::path(out_dir);
    Sink sink(dir, out);
    std::optional<Range> range;
    if (!range_text.empty()) range = parse_range(range_text);
    PdfOptions po{pdf_source, range, y0, alpha, beta};

    if (*forward) {
      const Coastline c = load_coastline(coastline_source);
      std::vector<double> xs;
      if (range) {
        xs = range_grid(range->lo, range->hi, range->step);
      } else if (const auto* t = std::get_if<TabulatedCoastline>(&c)) {
        xs.assign(t->xs().begin(), t->xs().end());
      } else {
        fail(ErrorCode::usage, "forward needs --range for builtin coastlines");
      }
      const PdfGrid g = forward_density(c, y0, bounds_for(c, y0), xs);
      sink.emit("forward.csv", [&](std::ostream& o) { write_pdf_csv(o, g); }, true);
    } else if (*inverse) {
      const PdfGrid pdf = load_pdf(po);
      const SegmentPlan plan = plan_segments(pdf, y0);
      const auto kappa = parse_kappa(kappa_text);
      const double chosen = kappa ? *kappa : select_kappa(pdf, y0, plan, k_steps).kappa;
      const TabulatedCoastline c = run_plan(pdf, plan, y0, chosen);
      sink.emit("coastline.csv", [&](std::ostream& o) { write_coastline_csv(o, c); }, true);
      sink.emit("plan.jsonl", [&](std::ostream& o) { write_plan_jsonl(o, plan); }, false);
      sink.emit("summary.json", [&](std::ostream& o) {
        o << nlohmann::json{{"kappa", chosen}, {"segments", plan_json(plan)}}.dump(2) << '\n';
      }, false);
    } else if (*rt) {
      const PdfGrid pdf = load_pdf(po);
      const RoundTrip r = roundtrip(pdf, y0, parse_kappa(kappa_text), k_steps);
      const nlohmann::json report{{"pdf", pdf_source}, {"y0", y0}, {"kappa", r.kappa}, {"l2", r.l2},
                                  {"nodes", pdf.size()}, {"segments", plan_json(r.plan)}};
      sink.emit("roundtrip.csv", [&](std::ostream& o) { write_roundtrip_csv(o, pdf, r.regenerated); }, false);
      sink.emit("coastline.csv", [&](std::ostream& o) { write_coastline_csv(o, r.coastline); }, false);
      sink.emit("plan.jsonl", [&](std::ostream& o) { write_plan_jsonl(o, r.plan); }, false);
      sink.emit("summary.json", [&](std::ostream& o) { o << report.dump(2) << '\n'; }, false);
      out << report.dump() << '\n';
    } else if (*sample) {
      const Coastline c = load_coastline(coastline_source);
      const auto hits = sample_hits(c, y0, bounds_for(c, y0), n, seed);
      sink.emit("samples.csv", [&](std::ostream& o) {
        o << "x\n";
        for (double x : hits) o << fmt_real(x) << '\n';
      }, true);
    } else if (*correlate) {
      auto windows = load_windows(input, parse_format(format_text));
      if (!category_text.empty()) {
        const auto cat = parse_category(category_text);
        if (!cat) fail(ErrorCode::usage, "category must be total, benign, malicious or unknown");
        for (auto& w : windows) w = filter_category(w, *cat);
      }
      if (degree) {
        for (auto& w : windows) w = filter_degree(w, *degree);
      }
      const CorrelationSeries s = ref ? self_correlation(windows, *ref) : mean_self_correlation(windows);
      sink.emit("series.csv", [&](std::ostream& o) { write_series_csv(o, s); }, true);
    } else if (*fit) {
      auto in = open_input(input);
      const CorrelationSeries s = read_series_csv(in);
      const FitResult f = fit_modcauchy(s, !free_amplitude);
      sink.emit("fit.json", [&](std::ostream& o) { o << to_json(f).dump(2) << '\n'; }, true);
    } else if (*synth) {
      const WindowFormat format = parse_format(format_text);
      const auto windows = synth_windows(synth_spec, seed);
      sink.emit(format == WindowFormat::jsonl ? "windows.jsonl" : "windows.csv",
                [&](std::ostream& o) { write_windows(o, windows, format); }, true);
    } else if (*coastlines) {
      if (figure.empty()) {
        for (auto name : kBuiltinCoastlines) out << name << '\n';
      } else {
        if (!dir) fail(ErrorCode::usage, "--figure needs --out");
        FigureOptions fo;
        if (!input.empty()) fo.input = fs::path(input);
        fo.format = parse_format(format_text);
        fo.seed = seed;
        if (n > 0) fo.n_sources = n;
        fo.y0 = y0;
        fo.k_steps = k_steps;
        figure_pipeline(figure, *dir, fo);
      }
    }
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return e.code() == ErrorCode::usage ? 2 : 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << to_string(ErrorCode::io_error) << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace coastline::cli

#endif  // COASTLINE_CLI_HPP
