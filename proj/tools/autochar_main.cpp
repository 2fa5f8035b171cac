#include "autochar/bandgap.hpp"
#include "autochar/benchmark.hpp"
#include "autochar/color_calibrate.hpp"
#include "autochar/composition_map.hpp"
#include "autochar/csv.hpp"
#include "autochar/cube_io.hpp"
#include "autochar/error.hpp"
#include "autochar/parallel.hpp"
#include "autochar/stability.hpp"
#include "autochar/synth.hpp"
#include "autochar/vision_segment.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace autochar;

namespace {

// Bad configuration or missing input; exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  fs::path out = "autochar_out";
  std::string cube, frames, labels, gcode, pump, chart, chart_image, expert,
      composition;
  std::vector<double> plate;
  std::optional<double> droplet_interval;
  double gamma = 0.5;
  double boundary = 0.0;
  double theta_min = 100.0;
  double theta_max = 10000.0;
  std::uint64_t seed = 1;
  std::string preset = "batch200";
  std::string channels = "xyz";
  bool plots = false;
};

void require(const std::string &value, const char *what) {
  if (value.empty())
    throw UsageError(std::string("missing ") + what + " path (set --" + what +
                     " or the config key)");
}

fs::path existing(const std::string &value, const char *what) {
  require(value, what);
  if (!fs::exists(value))
    throw UsageError(std::string(what) + " path does not exist: " + value);
  return value;
}

fs::path existing_cube(const std::string &value) {
  require(value, "cube");
  fs::path p(value);
  fs::path json = p;
  if (p.extension() == ".f32" || p.extension() != ".json")
    json = p.extension() == ".f32" ? fs::path(p).replace_extension(".json")
                                   : fs::path(p.string() + ".json");
  if (!fs::exists(p) && !fs::exists(json))
    throw UsageError("cube path does not exist: " + value);
  return p;
}

SegmentationConfig seg_config(const RunConfig &rc) {
  SegmentationConfig cfg;
  cfg.theta_min = rc.theta_min;
  cfg.theta_max = rc.theta_max;
  cfg.validate();
  return cfg;
}

PlateCalibration plate(const RunConfig &rc) {
  if (rc.plate.size() != 6)
    throw UsageError("--plate needs 6 affine coefficients (px -> mm)");
  return PlateCalibration({rc.plate[0], rc.plate[1], rc.plate[2], rc.plate[3],
                           rc.plate[4], rc.plate[5]});
}

// Composition from --composition, or computed when gcode/pump/plate are set.
std::optional<CompositionMap> composition_for(const RunConfig &rc,
                                              const std::vector<SampleRegion> &regions) {
  if (!rc.composition.empty())
    return load_composition_map(existing(rc.composition, "composition"));
  if (rc.gcode.empty() || rc.pump.empty() || rc.plate.empty())
    return std::nullopt;
  const auto path = parse_gcode(read_text_file(existing(rc.gcode, "gcode")));
  const auto trace = load_pump_trace(existing(rc.pump, "pump"));
  return build_composition_map(regions, path, trace, plate(rc), rc.droplet_interval);
}

void print_regions(const std::vector<SampleRegion> &regions) {
  std::cout << "segmented " << regions.size() << " regions\n";
}

int cmd_synth(const RunConfig &rc) {
  PrintJobOptions opt;
  opt.seed = rc.seed;
  if (rc.preset == "batch200") {
    // 10 x 20 serpentine defaults
  } else if (rc.preset == "small") {
    opt.rows = 4;
    opt.cols = 5;
    opt.wavelength_step_nm = 10.0;
  } else {
    throw UsageError("unknown preset '" + rc.preset + "' (batch200, small)");
  }
  const PrintJob job = serpentine_job(opt);
  fs::create_directories(rc.out);
  save_cube(synth_cube(job.scene), rc.out / "cube.json");
  const LabelMap labels = planted_labels(job.scene);
  save_label_png(labels, rc.out / "labels_planted.png");
  save_composition_map(job.planted, rc.out / "composition_planted.csv");
  write_text_file(rc.out / "path.gcode", job.gcode);
  save_pump_trace(job.pump, rc.out / "pump.csv");
  const SynthFrames frames = synth_frames(job.scene);
  save_frames(frames.frames, rc.out / "frames");
  const SynthChart chart = synth_chart();
  save_chart_csv(chart.chart, rc.out / "chart.csv");
  save_frame_png(chart.image, rc.out / "chart.png");
  save_expert_records(synth_expert_records(job), rc.out / "expert.csv");

  CsvWriter planted({"region_id", "e_g_ev", "i_c_px_hr"});
  for (std::size_t i = 0; i < job.scene.disks.size(); ++i)
    planted.row({std::to_string(i + 1), format_double(job.scene.disks[i].e_g),
                 format_double(frames.planted_i_c[i])});
  planted.save(rc.out / "planted.csv");

  const auto &c = job.calibration.coefficients();
  std::ostringstream toml;
  auto q = [](const fs::path &p) { return "\"" + p.generic_string() + "\""; };
  toml << "# generated by autochar synth --preset " << rc.preset << "\n"
       << "out = " << q(rc.out) << "\n"
       << "cube = " << q(rc.out / "cube.json") << "\n"
       << "frames = " << q(rc.out / "frames") << "\n"
       << "gcode = " << q(rc.out / "path.gcode") << "\n"
       << "pump = " << q(rc.out / "pump.csv") << "\n"
       << "chart = " << q(rc.out / "chart.csv") << "\n"
       << "chart-image = " << q(rc.out / "chart.png") << "\n"
       << "expert = " << q(rc.out / "expert.csv") << "\n"
       << "plate = [" << format_double(c[0]) << ", " << format_double(c[1]) << ", "
       << format_double(c[2]) << ", " << format_double(c[3]) << ", "
       << format_double(c[4]) << ", " << format_double(c[5]) << "]\n";
  write_text_file(rc.out / "autochar.toml", toml.str());
  std::cout << "wrote " << job.scene.disks.size() << "-region synthetic run to "
            << rc.out.string() << "\n";
  return 0;
}

Segmentation segmentation_for_cube(const RunConfig &rc, const HyperCube &cube) {
  if (!rc.labels.empty()) {
    Segmentation s;
    s.labels = load_label_png(existing(rc.labels, "labels"));
    if (s.labels.width != cube.width() || s.labels.height != cube.height())
      throw DomainError("label map size differs from the cube");
    s.regions = regions_from_labels(s.labels);
    return s;
  }
  return segment(cube, seg_config(rc));
}

int cmd_segment(const RunConfig &rc) {
  Segmentation seg;
  if (!rc.cube.empty()) {
    seg = segment(load_cube(existing_cube(rc.cube)), seg_config(rc));
  } else if (!rc.frames.empty()) {
    const auto frames = load_frames(existing(rc.frames, "frames"));
    seg = segment(frames.frames().front(), seg_config(rc));
  } else {
    throw UsageError("missing cube path (set --cube or --frames)");
  }
  fs::create_directories(rc.out);
  save_label_png(seg.labels, rc.out / "labels.png");
  save_region_table(seg.regions, rc.out / "regions.csv");
  print_regions(seg.regions);
  return 0;
}

int cmd_compose(const RunConfig &rc) {
  existing(rc.gcode, "gcode");
  existing(rc.pump, "pump");
  plate(rc);
  std::vector<SampleRegion> regions;
  if (!rc.labels.empty())
    regions = regions_from_labels(load_label_png(existing(rc.labels, "labels")));
  else
    regions = segmentation_for_cube(rc, load_cube(existing_cube(rc.cube))).regions;
  const auto map = composition_for(rc, regions);
  fs::create_directories(rc.out);
  save_composition_map(*map, rc.out / "composition.csv");
  std::cout << "mapped " << map->size() << " regions to compositions\n";
  return 0;
}

int cmd_bandgap(const RunConfig &rc) {
  BandGapConfig cfg;
  cfg.gamma = rc.gamma;
  const HyperCube cube = load_cube(existing_cube(rc.cube));
  const Segmentation seg = segmentation_for_cube(rc, cube);
  const auto comp = composition_for(rc, seg.regions);
  const auto t0 = std::chrono::steady_clock::now();
  const auto records = extract_bandgaps(cube, seg.regions, comp ? &*comp : nullptr, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  fs::create_directories(rc.out);
  save_bandgap_csv(records, rc.out / "bandgap.csv");
  if (rc.plots) {
    fs::create_directories(rc.out / "fits");
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::vector<std::vector<float>> spectra;
      for (const auto &p : seg.regions[i].pixels)
        spectra.push_back(cube.spectrum(p.x, p.y));
      const auto curve = tauc_transform(cube.wavelengths(), median_spectrum(spectra), cfg.gamma);
      write_text_file(rc.out / "fits" / ("region_" + std::to_string(records[i].region_id) + ".svg"),
                      bandgap_fit_svg(curve, records[i].result,
                                      "region " + std::to_string(records[i].region_id)));
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "extracted %zu band gaps in %.3f s (%.1f samples/minute, %zu threads)\n",
                records.size(), secs, secs > 0 ? records.size() * 60.0 / secs : 0.0,
                worker_count());
  std::cout << buf;
  return 0;
}

int cmd_degrade(const RunConfig &rc) {
  const FrameSequence frames = load_frames(existing(rc.frames, "frames"));
  LabelMap labels;
  if (!rc.labels.empty())
    labels = load_label_png(existing(rc.labels, "labels"));
  else
    labels = segment(frames.frames().front(), seg_config(rc)).labels;
  const auto regions = regions_from_labels(labels);

  std::optional<TpsModel> model;
  if (rc.channels == "xyz") {
    const auto chart = load_chart(existing(rc.chart, "chart"),
                                  existing(rc.chart_image, "chart-image"));
    model = fit_tps(chart);
  } else if (rc.channels != "rgb") {
    throw UsageError("--channels must be xyz or rgb");
  }
  const auto series = extract_series(frames, labels, model ? &*model : nullptr);
  const auto comp = composition_for(rc, regions);
  const auto results = assess_stability(series, comp ? &*comp : nullptr, rc.boundary);
  fs::create_directories(rc.out);
  save_stability_csv(results, rc.out / "stability.csv");
  save_series_strip(series, rc.out / "stability_strip.png");
  std::size_t degraded = 0;
  for (const auto &r : results)
    degraded += r.degraded;
  std::cout << degraded << " of " << results.size() << " regions above boundary "
            << format_double(rc.boundary) << " px*hr\n";
  return 0;
}

int cmd_bench(const RunConfig &rc) {
  const auto records = load_expert_records(existing(rc.expert, "expert"));
  const auto report = run_benchmark(records);
  save_report(report, records, rc.out / "report");
  std::cout << "band-gap accuracy @0.02 eV: " << format_double(report.accuracy_at_tol)
            << "\nPR-AUC: " << format_double(report.pr_auc)
            << "\nbest boundary: " << format_double(report.sweep.best_boundary)
            << " px*hr (accuracy " << format_double(report.sweep.best_accuracy) << ")\n";
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"autochar: batch characterization of printed material libraries"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML run configuration");
  app.allow_config_extras(CLI::config_extras_mode::error);

  RunConfig rc;
  std::string out = rc.out.string();
  app.add_option("--out", out, "output directory");
  app.add_option("--cube", rc.cube, "hyperspectral cube (.json/.f32 or stem)");
  app.add_option("--frames", rc.frames, "directory of frame_<seconds>.png");
  app.add_option("--labels", rc.labels, "label map PNG (skips segmentation)");
  app.add_option("--gcode", rc.gcode, "printer G-code");
  app.add_option("--pump", rc.pump, "pump trace CSV");
  app.add_option("--plate", rc.plate, "px -> mm affine: a b c d e f")->expected(6);
  app.add_option("--droplet-interval", rc.droplet_interval, "seconds per deposit");
  app.add_option("--composition", rc.composition, "precomputed composition CSV");
  app.add_option("--chart", rc.chart, "colour chart CSV");
  app.add_option("--chart-image", rc.chart_image, "colour chart reference image");
  app.add_option("--channels", rc.channels, "xyz (calibrated) or rgb")
      ->check(CLI::IsMember({"xyz", "rgb"}));
  app.add_option("--expert", rc.expert, "expert records CSV");
  app.add_option("--gamma", rc.gamma, "Tauc exponent 0.5 (direct) or 2")
      ->check(CLI::IsMember({0.5, 2.0}));
  app.add_option("--boundary", rc.boundary, "I_c decision boundary (px*hr)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--theta-min", rc.theta_min, "minimum region size (px)");
  app.add_option("--theta-max", rc.theta_max, "maximum region size (px)");
  app.add_option("--seed", rc.seed, "synthetic fixture seed");
  app.add_option("--preset", rc.preset, "synthetic preset: batch200 or small");
  app.add_flag("--plots", rc.plots, "write per-region fit SVGs");

  auto *synth = app.add_subcommand("synth", "write a synthetic run with planted truth");
  auto *seg = app.add_subcommand("segment", "segment deposits into labelled regions");
  auto *comp = app.add_subcommand("compose", "map regions to compositions");
  auto *bg = app.add_subcommand("bandgap", "extract band gaps per region");
  auto *deg = app.add_subcommand("degrade", "instability index per region");
  auto *bench = app.add_subcommand("bench", "score against expert records");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e);
  } catch (const CLI::ParseError &e) {
    app.exit(e);
    return 2;
  }
  rc.out = out;

  try {
    if (*synth) return cmd_synth(rc);
    if (*seg) return cmd_segment(rc);
    if (*comp) return cmd_compose(rc);
    if (*bg) return cmd_bandgap(rc);
    if (*deg) return cmd_degrade(rc);
    if (*bench) return cmd_bench(rc);
  } catch (const UsageError &e) {
    std::cerr << "autochar: " << e.what() << "\n";
    return 2;
  } catch (const UnmatchedRegionsError &e) {
    std::cerr << "autochar: " << e.what() << "\n";
    return 1;
  } catch (const Error &e) {
    std::cerr << "autochar: " << e.what() << "\n";
    return 1;
  } catch (const std::exception &e) {
    std::cerr << "autochar: unexpected failure: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
