#include "risloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <ostream>
#include <thread>

#include "risloc/errors.hpp"

namespace risloc {

std::string_view variant_name(Variant v) {
  switch (v) {
    case Variant::FarField: return "GS-FF";
    case Variant::NearField: return "GS-NF";
    case Variant::NearFieldFine: return "GS-NF-fine";
    case Variant::NoPattern: return "noAP";
  }
  return "?";
}

std::optional<Variant> parse_variant(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "gs-ff" || s == "ff") return Variant::FarField;
  if (s == "gs-nf" || s == "nf") return Variant::NearField;
  if (s == "gs-nf-fine" || s == "nf-fine") return Variant::NearFieldFine;
  if (s == "noap" || s == "6d-noap") return Variant::NoPattern;
  return std::nullopt;
}

Eigen::Index Aoi::nx() const {
  return static_cast<Eigen::Index>(std::floor((x_max - x_min) / step + 1e-9)) + 1;
}

Eigen::Index Aoi::ny() const {
  return static_cast<Eigen::Index>(std::floor((y_max - y_min) / step + 1e-9)) + 1;
}

std::vector<Vec3> Aoi::points() const {
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(nx() * ny()));
  for (Eigen::Index iy = 0; iy < ny(); ++iy)
    for (Eigen::Index ix = 0; ix < nx(); ++ix)
      out.emplace_back(x_min + static_cast<double>(ix) * step,
                       y_min + static_cast<double>(iy) * step, z);
  return out;
}

void ExperimentConfig::validate() const {
  try {
    scenario.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (runs < 1) throw ConfigError("experiment: runs must be >= 1");
  if (threads < 1) throw ConfigError("experiment: threads must be >= 1");
  if (!(aoi.step > 0.0)) throw ConfigError("experiment: AOI step must be > 0");
  if (aoi.x_max < aoi.x_min || aoi.y_max < aoi.y_min) throw ConfigError("experiment: empty AOI");
  if (!(aoi.x_min > 0.0)) throw ConfigError("experiment: AOI must lie at x > 0");
  if (variants.empty()) throw ConfigError("experiment: no variants selected");
  for (double x : line_x)
    if (!(x > 0.0)) throw ConfigError("experiment: line points must have x > 0");
  if (estimator.refine_max_iter < 1) throw ConfigError("estimator: refine_max_iter must be >= 1");
  try {
    estimator.coarse.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (layout.size() < 1) throw ConfigError("experiment: empty layout");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed_base, std::uint64_t point, std::uint64_t run,
                          SeedStream stream) {
  std::uint64_t h = splitmix64(seed_base);
  h = splitmix64(h ^ point);
  h = splitmix64(h ^ run);
  return splitmix64(h ^ static_cast<std::uint64_t>(stream));
}

const StageError* TrialResult::find(Stage s) const {
  for (const StageError& e : stages)
    if (e.stage == s) return &e;
  return nullptr;
}

const StageSummary* VariantSummary::find(Stage s) const {
  for (const StageSummary& e : stages)
    if (e.stage == s) return &e;
  return nullptr;
}

const VariantSummary* PointResult::find(Variant v) const {
  for (const VariantSummary& s : variants)
    if (s.variant == v) return &s;
  return nullptr;
}

double rms(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("rms: empty input");
  double acc = 0.0;
  for (double x : values) acc += x * x;
  return std::sqrt(acc / static_cast<double>(values.size()));
}

namespace {

struct Job {
  std::size_t point;
  std::size_t run;
  Vec3 truth_p;
};

bool needs_pattern_snapshot(std::span<const Variant> vs) {
  return std::any_of(vs.begin(), vs.end(), [](Variant v) { return v != Variant::NoPattern; });
}

bool has(std::span<const Variant> vs, Variant v) {
  return std::find(vs.begin(), vs.end(), v) != vs.end();
}

TrialResult summarise(const EstimateTrace& trace, Variant variant, std::size_t run,
                      const Snapshot& snap) {
  TrialResult t;
  t.variant = variant;
  t.run = run;
  t.mean_snr_db = snap.mean_snr_db();
  for (const StageRecord& r : trace.stages) {
    t.stages.push_back({r.stage, r.p, r.v, r.cost, (r.p - snap.truth_p).norm(),
                        (r.v - snap.truth_v).norm()});
    if (r.failed && !t.skipped) {
      t.skipped = true;
      t.error = std::string(stage_name(r.stage)) + ": " + r.error;
    }
  }
  return t;
}

// Runs a batch of trials. Coarse grid searches of every snapshot in the
// batch share one candidate scan.
std::vector<std::vector<TrialResult>> run_jobs(const ExperimentConfig& config,
                                               std::span<const Job> jobs,
                                               std::span<const Variant> variants) {
  const Scenario& s = config.scenario;
  const std::size_t n = jobs.size();
  std::vector<std::unique_ptr<SteeringModel>> models(n);
  std::vector<Snapshot> with_pattern(n), without_pattern(n);
  const bool want_pattern = needs_pattern_snapshot(variants);
  const bool want_plain = has(variants, Variant::NoPattern);
  const bool want_nf = has(variants, Variant::NearField) || has(variants, Variant::NearFieldFine);
  const bool want_ff = has(variants, Variant::FarField);

  for (std::size_t i = 0; i < n; ++i) {
    const Job& j = jobs[i];
    const std::uint64_t cb_seed = derive_seed(config.seed_base, j.point, j.run, SeedStream::Codebook);
    const Codebook cb = random_codebook(config.layout.size(), s.samples, s.reflection_set, cb_seed);
    const std::uint64_t noise_seed = derive_seed(config.seed_base, j.point, j.run, SeedStream::Noise);
    SnapshotOptions opts{config.use_pattern, config.noiseless};
    if (want_pattern) {
      with_pattern[i] = generate_snapshot(j.truth_p, config.truth_v, config.layout, cb, s, noise_seed, opts);
      with_pattern[i].codebook_seed = cb_seed;
    }
    if (want_plain) {
      opts.use_pattern = false;
      without_pattern[i] = generate_snapshot(j.truth_p, config.truth_v, config.layout, cb, s, noise_seed, opts);
      without_pattern[i].codebook_seed = cb_seed;
    }
    models[i] = std::make_unique<SteeringModel>(config.layout, cb, s);
  }

  std::vector<GridQuery> nf_queries, ff_queries;
  for (std::size_t i = 0; i < n; ++i) {
    if (want_nf) nf_queries.push_back({&with_pattern[i].y, models[i].get()});
    if (want_plain) nf_queries.push_back({&without_pattern[i].y, models[i].get()});
    if (want_ff) ff_queries.push_back({&with_pattern[i].y, models[i].get()});
  }
  const std::vector<GridResult> nf = nf_grid_search(nf_queries, config.estimator.coarse);
  const std::vector<GridResult> ff = ff_grid_search(ff_queries, config.estimator.coarse);

  std::vector<std::vector<TrialResult>> out(n);
  std::size_t inf = 0, iff = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const GridResult* nf_pattern = want_nf ? &nf[inf++] : nullptr;
    const GridResult* nf_plain = want_plain ? &nf[inf++] : nullptr;
    const GridResult* ff_pattern = want_ff ? &ff[iff++] : nullptr;
    for (Variant v : variants) {
      EstimatorConfig ec = config.estimator;
      const Snapshot* snap = &with_pattern[i];
      const GridResult* coarse = nf_pattern;
      switch (v) {
        case Variant::FarField:
          ec.grid_variant = GridVariant::FarField;
          coarse = ff_pattern;
          break;
        case Variant::NearField: ec.grid_variant = GridVariant::NearField; break;
        case Variant::NearFieldFine: ec.grid_variant = GridVariant::NearFieldFine; break;
        case Variant::NoPattern:
          ec.grid_variant = GridVariant::NearField;
          snap = &without_pattern[i];
          coarse = nf_plain;
          break;
      }
      const EstimateTrace trace = estimate_from_grid(snap->y, *models[i], ec, *coarse);
      out[i].push_back(summarise(trace, v, jobs[i].run, *snap));
    }
  }
  return out;
}

VariantSummary aggregate(Variant v, std::size_t k, const std::vector<std::vector<TrialResult>>& trials) {
  VariantSummary s;
  s.variant = v;
  s.runs = static_cast<int>(trials.size());
  std::vector<const TrialResult*> kept;
  double snr_lin = 0.0;
  for (const auto& run : trials) {
    const TrialResult& t = run[k];
    snr_lin += std::pow(10.0, t.mean_snr_db / 10.0);
    if (t.skipped)
      ++s.skipped;
    else
      kept.push_back(&t);
  }
  s.mean_snr_db = 10.0 * std::log10(snr_lin / static_cast<double>(trials.size()));
  const std::vector<StageError>& layout = trials.front()[k].stages;
  for (std::size_t st = 0; st < layout.size(); ++st) {
    StageSummary out{layout[st].stage, std::numeric_limits<double>::quiet_NaN(),
                     std::numeric_limits<double>::quiet_NaN()};
    if (!kept.empty()) {
      std::vector<double> pe, ve;
      for (const TrialResult* t : kept) {
        pe.push_back(t->stages[st].position_error);
        ve.push_back(t->stages[st].velocity_error);
      }
      out.rmspe = rms(pe);
      out.rmsve = rms(ve);
    }
    s.stages.push_back(out);
  }
  return s;
}

constexpr std::size_t kChunkRuns = 32;

}  // namespace

std::vector<TrialResult> run_trial_variants(const ExperimentConfig& config, const Vec3& truth_p,
                                            std::size_t point_index, std::size_t run_index,
                                            std::span<const Variant> variants) {
  const Job job{point_index, run_index, truth_p};
  return run_jobs(config, std::span<const Job>(&job, 1), variants).front();
}

TrialResult run_trial(const ExperimentConfig& config, const Vec3& truth_p, std::size_t point_index,
                      std::size_t run_index, Variant variant) {
  return run_trial_variants(config, truth_p, point_index, run_index,
                            std::span<const Variant>(&variant, 1))
      .front();
}

std::vector<PointResult> run_points(const ExperimentConfig& config, std::span<const Vec3> points) {
  config.validate();
  const std::size_t runs = static_cast<std::size_t>(config.runs);

  std::vector<std::vector<Job>> chunks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (std::size_t r0 = 0; r0 < runs; r0 += kChunkRuns) {
      std::vector<Job> c;
      for (std::size_t r = r0; r < std::min(runs, r0 + kChunkRuns); ++r) c.push_back({p, r, points[p]});
      chunks.push_back(std::move(c));
    }
  }

  std::vector<PointResult> out(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    out[p].truth_p = points[p];
    out[p].trials.resize(runs);
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      const std::size_t c = next.fetch_add(1);
      if (c >= chunks.size() || failed.load()) return;
      try {
        auto res = run_jobs(config, chunks[c], config.variants);
        for (std::size_t i = 0; i < chunks[c].size(); ++i)
          out[chunks[c][i].point].trials[chunks[c][i].run] = std::move(res[i]);
      } catch (...) {
        if (!failed.exchange(true)) failure = std::current_exception();
        return;
      }
    }
  };
  const std::size_t nthreads =
      std::min<std::size_t>(static_cast<std::size_t>(config.threads), std::max<std::size_t>(chunks.size(), 1));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (PointResult& pr : out)
    for (std::size_t k = 0; k < config.variants.size(); ++k)
      pr.variants.push_back(aggregate(config.variants[k], k, pr.trials));
  return out;
}

std::vector<PointResult> aoi_sweep(const ExperimentConfig& config) {
  const std::vector<Vec3> pts = config.aoi.points();
  return run_points(config, pts);
}

std::vector<PointResult> line_sweep(const ExperimentConfig& config, double y_fixed, double z_fixed,
                                    std::span<const double> x_points) {
  std::vector<Vec3> pts;
  for (double x : x_points) {
    if (!(x > 0.0)) throw ConfigError("line_sweep: x points must be > 0");
    pts.emplace_back(x, y_fixed, z_fixed);
  }
  return run_points(config, pts);
}

std::string_view curve_label(Variant v, Stage s) {
  switch (v) {
    case Variant::FarField: return s == Stage::GridSearch ? "GS-FF" : "";
    case Variant::NearField:
      if (s == Stage::GridSearch) return "GS-NF";
      if (s == Stage::Refinement) return "CF";
      if (s == Stage::Descent) return "6D";
      return "";
    case Variant::NearFieldFine: return s == Stage::FineGridSearch ? "GS-NF-fine" : "";
    case Variant::NoPattern: return s == Stage::Descent ? "6D-noAP" : "";
  }
  return "";
}

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", x);
  return buf;
}

}  // namespace

void write_aoi_table(std::ostream& os, std::span<const PointResult> points) {
  os << "x,y,variant,RMSPE_m,RMSVE_mps,mean_SNR_dB\n";
  for (const PointResult& p : points)
    for (const VariantSummary& v : p.variants)
      os << fmt(p.truth_p.x()) << ',' << fmt(p.truth_p.y()) << ',' << variant_name(v.variant) << ','
         << fmt(v.final().rmspe) << ',' << fmt(v.final().rmsve) << ',' << fmt(v.mean_snr_db) << '\n';
}

void write_line_table(std::ostream& os, std::span<const PointResult> points) {
  os << "d_r,variant,stage,RMSPE_m,RMSVE_mps,curve\n";
  for (const PointResult& p : points)
    for (const VariantSummary& v : p.variants)
      for (const StageSummary& s : v.stages)
        os << fmt(p.truth_p.norm()) << ',' << variant_name(v.variant) << ',' << stage_name(s.stage)
           << ',' << fmt(s.rmspe) << ',' << fmt(s.rmsve) << ',' << curve_label(v.variant, s.stage)
           << '\n';
}

int skipped_trials(std::span<const PointResult> points) {
  int n = 0;
  for (const PointResult& p : points)
    for (const VariantSummary& v : p.variants) n += v.skipped;
  return n;
}

int total_trials(std::span<const PointResult> points) {
  int n = 0;
  for (const PointResult& p : points)
    for (const VariantSummary& v : p.variants) n += v.runs;
  return n;
}

void write_manifest(std::ostream& os, const RunManifest& m) {
  os << "config_hash " << m.config_hash << '\n'
     << "seed_base " << m.seed_base << '\n'
     << "command " << m.command << '\n'
     << "tool_version " << m.tool_version << '\n'
     << "started_utc " << m.started_utc << '\n'
     << "elapsed_s " << fmt(m.elapsed_s) << '\n'
     << "trials " << m.trials << '\n'
     << "skipped " << m.skipped << '\n';
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + tmp.string());
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace risloc
