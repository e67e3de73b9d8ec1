// risloc: command-line front end for single estimates and Monte Carlo sweeps.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "risloc/config.hpp"
#include "risloc/errors.hpp"
#include "risloc/harness.hpp"

#ifndef RISLOC_VERSION
#define RISLOC_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace risloc;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;
  std::vector<std::string> variants;
  bool noiseless = false;
  bool no_pattern = false;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, Common& c, bool sweep) {
  cmd->add_option("--config", c.config, "JSON experiment config (defaults apply when omitted)");
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "seed base");
  cmd->add_option("--variant", c.variants, "GS-FF, GS-NF, GS-NF-fine or noAP (repeatable)");
  cmd->add_flag("--noiseless", c.noiseless, "skip the noise draw");
  cmd->add_flag("--no-antenna-pattern", c.no_pattern, "generate snapshots with the pattern set to 1");
  if (sweep) {
    cmd->add_option("--runs", c.runs, "Monte Carlo runs per point");
    cmd->add_option("--threads", c.threads, "worker threads");
  }
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed_base = *c.seed;
  if (c.runs) cfg.runs = *c.runs;
  if (c.threads) cfg.threads = *c.threads;
  if (c.noiseless) cfg.noiseless = true;
  if (c.no_pattern) cfg.use_pattern = false;
  if (!c.variants.empty()) {
    cfg.variants.clear();
    for (const std::string& n : c.variants) {
      const auto v = parse_variant(n);
      if (!v) throw ConfigError("unknown variant " + n);
      cfg.variants.push_back(*v);
    }
  }
  cfg.validate();
  return cfg;
}

fs::path out_dir(const Common& c) {
  fs::path d(c.out);
  fs::create_directories(d);
  return d;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

Vec3 to_vec3(const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); }

EstimatorConfig estimator_for(const ExperimentConfig& cfg, Variant v) {
  EstimatorConfig ec = cfg.estimator;
  ec.grid_variant = v == Variant::FarField        ? GridVariant::FarField
                    : v == Variant::NearFieldFine ? GridVariant::NearFieldFine
                                                  : GridVariant::NearField;
  return ec;
}

void report(const EstimateTrace& trace, const Vec3* truth_p, const Vec3* truth_v) {
  for (const StageRecord& r : trace.stages) {
    std::cout << stage_name(r.stage) << "  p = [" << r.p.transpose() << "]  v = [" << r.v.transpose()
              << "]  cost " << r.cost;
    if (truth_p) std::cout << "  |dp| " << (r.p - *truth_p).norm() << "  |dv| " << (r.v - *truth_v).norm();
    if (r.failed) std::cout << "  FAILED: " << r.error;
    std::cout << '\n';
  }
}

int cmd_single(const Common& c, const std::vector<double>& p, const std::vector<double>& v,
               const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const ExperimentConfig cfg = resolve(c);
  const Variant variant = cfg.variants.size() == 1 ? cfg.variants.front() : Variant::NearField;
  const Vec3 truth_p = to_vec3(p);
  const Vec3 truth_v = to_vec3(v);
  if (!(truth_p.x() > 0.0)) throw GeometryError("single: position must lie in front of the surface (x > 0)");

  const std::uint64_t cb_seed = derive_seed(cfg.seed_base, 0, 0, SeedStream::Codebook);
  const std::uint64_t noise_seed = derive_seed(cfg.seed_base, 0, 0, SeedStream::Noise);
  const Codebook cb = random_codebook(cfg.layout.size(), cfg.scenario.samples,
                                      cfg.scenario.reflection_set, cb_seed);
  const bool pattern = cfg.use_pattern && variant != Variant::NoPattern;
  Snapshot snap = generate_snapshot(truth_p, truth_v, cfg.layout, cb, cfg.scenario, noise_seed,
                                    {pattern, cfg.noiseless});
  snap.codebook_seed = cb_seed;
  snap.scenario_hash = config_hash(cfg);

  const SteeringModel model(cfg.layout, cb, cfg.scenario);
  const EstimateTrace trace = estimate(snap.y, model, estimator_for(cfg, variant));

  const fs::path dir = out_dir(c);
  write_file_atomic(dir / "snapshot.txt", render([&](std::ostream& os) { write_snapshot(os, snap); }));
  write_file_atomic(dir / "trace.txt", render([&](std::ostream& os) { write_trace(os, trace); }));
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file_atomic(dir / "manifest.txt", render([&](std::ostream& os) {
                      write_manifest(os, {snap.scenario_hash, cfg.seed_base, command, RISLOC_VERSION,
                                          elapsed, utc_now(), 1, trace.any_failed() ? 1 : 0});
                    }));
  std::cout << variant_name(variant) << "  mean SNR " << snap.mean_snr_db() << " dB\n";
  report(trace, &truth_p, &truth_v);
  return 0;
}

int cmd_estimate(const Common& c, const std::string& snapshot_path) {
  const ExperimentConfig cfg = resolve(c);
  const Variant variant = cfg.variants.size() == 1 ? cfg.variants.front() : Variant::NearField;
  std::ifstream f(snapshot_path);
  if (!f) throw ConfigError("cannot read snapshot " + snapshot_path);
  const Snapshot snap = read_snapshot(f);
  if (snap.y.size() != cfg.scenario.samples)
    throw ConfigError("snapshot length does not match config sample count");
  const Codebook cb = random_codebook(cfg.layout.size(), cfg.scenario.samples,
                                      cfg.scenario.reflection_set, snap.codebook_seed);
  const SteeringModel model(cfg.layout, cb, cfg.scenario);
  const EstimateTrace trace = estimate(snap.y, model, estimator_for(cfg, variant));
  write_file_atomic(out_dir(c) / "trace.txt", render([&](std::ostream& os) { write_trace(os, trace); }));
  report(trace, &snap.truth_p, &snap.truth_v);
  return 0;
}

int cmd_sweep(const Common& c, bool line, const std::string& command) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = utc_now();
  const ExperimentConfig cfg = resolve(c);
  const fs::path dir = out_dir(c);
  const std::vector<PointResult> res =
      line ? line_sweep(cfg, 0.0, cfg.aoi.z, cfg.line_x) : aoi_sweep(cfg);
  const std::string table = render([&](std::ostream& os) {
    if (line)
      write_line_table(os, res);
    else
      write_aoi_table(os, res);
  });
  write_file_atomic(dir / (line ? "line_sweep.csv" : "aoi_sweep.csv"), table);
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const int skipped = skipped_trials(res);
  write_file_atomic(dir / "manifest.txt", render([&](std::ostream& os) {
                      write_manifest(os, {config_hash(cfg), cfg.seed_base, command, RISLOC_VERSION,
                                          elapsed, started, total_trials(res), skipped});
                    }));
  std::cout << res.size() << " points, " << total_trials(res) << " trials, " << skipped
            << " skipped, " << elapsed << " s\n";
  return 0;
}

int cmd_layout(const Common& c) {
  const ExperimentConfig cfg = resolve(c);
  write_file_atomic(out_dir(c) / "layout.txt", render([&](std::ostream& os) { write_layout(os, cfg.layout); }));
  std::cout << "cells " << cfg.layout.size() << "  aperture " << aperture(cfg.layout) << " m  d_F "
            << fraunhofer_distance(cfg.layout, cfg.scenario.wavelength()) << " m\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Near-field RIS localisation: single estimates and Monte Carlo sweeps"};
  app.set_version_flag("--version", RISLOC_VERSION);
  app.require_subcommand(1);

  std::string command;
  for (int i = 0; i < argc; ++i) command += (i ? " " : "") + std::string(argv[i]);

  Common single_opts, est_opts, aoi_opts, line_opts, layout_opts, config_opts;
  std::vector<double> p{2.0, 0.0, -0.5};
  std::vector<double> v{1.0 / std::sqrt(6.0), -1.0 / std::sqrt(6.0), 2.0 / std::sqrt(6.0)};
  std::string snapshot_path;

  auto* single = app.add_subcommand("single", "simulate one snapshot and estimate it");
  add_common(single, single_opts, false);
  single->add_option("--p", p, "true position, m")->expected(3);
  single->add_option("--v", v, "true velocity, m/s")->expected(3);

  auto* est = app.add_subcommand("estimate", "estimate from a snapshot file");
  add_common(est, est_opts, false);
  est->add_option("--snapshot", snapshot_path, "snapshot file")->required();

  auto* aoi = app.add_subcommand("sweep-aoi", "RMS errors and SNR over the AOI grid");
  add_common(aoi, aoi_opts, true);
  auto* line = app.add_subcommand("sweep-line", "stage-wise RMS errors along y = 0");
  add_common(line, line_opts, true);
  auto* layout = app.add_subcommand("layout", "export the cell layout");
  add_common(layout, layout_opts, false);
  auto* config = app.add_subcommand("config", "print the effective config as JSON");
  add_common(config, config_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*single) return cmd_single(single_opts, p, v, command);
    if (*est) return cmd_estimate(est_opts, snapshot_path);
    if (*aoi) return cmd_sweep(aoi_opts, false, command);
    if (*line) return cmd_sweep(line_opts, true, command);
    if (*layout) return cmd_layout(layout_opts);
    if (*config) {
      std::cout << config_to_json(resolve(config_opts));
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const GeometryError& e) {
    std::cerr << "geometry error: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return 4;
}
