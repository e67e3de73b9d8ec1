#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "risloc/channel.hpp"
#include "risloc/estimator.hpp"
#include "risloc/geometry.hpp"

namespace risloc {

/// Estimation pipelines compared by the experiments. The first three differ
/// in their grid-search initialisation; NoPattern runs the near-field
/// pipeline on a snapshot generated with the antenna pattern forced to 1.
enum class Variant { FarField, NearField, NearFieldFine, NoPattern };

inline constexpr Variant kAllVariants[] = {Variant::FarField, Variant::NearField,
                                           Variant::NearFieldFine, Variant::NoPattern};

/// "GS-FF", "GS-NF", "GS-NF-fine", "noAP".
std::string_view variant_name(Variant v);
/// Case-insensitive; also accepts "ff", "nf", "nf-fine", "6d-noap".
std::optional<Variant> parse_variant(std::string_view name);

struct Aoi {
  double x_min = 0.1;
  double x_max = 3.1;
  double y_min = -1.5;
  double y_max = 1.5;
  double step = 0.1;
  double z = -0.5;

  Eigen::Index nx() const;
  Eigen::Index ny() const;
  /// Row-major: y outer, x inner.
  std::vector<Vec3> points() const;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::reference();
  /// `layout` is built from `layout_spec` by the config loader.
  CompositeSpec layout_spec{};
  RisLayout layout = default_composite_ris();
  EstimatorConfig estimator{};
  Aoi aoi{};
  Vec3 truth_v = Vec3(1.0, -1.0, 2.0) / std::sqrt(6.0);
  int runs = 25;
  std::uint64_t seed_base = 1;
  std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  bool noiseless = false;
  /// false disables the pattern for every variant.
  bool use_pattern = true;
  int threads = 1;
  /// Line sweep abscissae; the line runs at y = 0 and z = aoi.z.
  std::vector<double> line_x{0.5, 0.75, 1.0, 1.25, 1.5, 2.0, 2.5, 3.0};

  /// Throws ConfigError.
  void validate() const;
};

/// Seed streams of one (point, run) pair.
enum class SeedStream : std::uint64_t { Codebook = 0, Noise = 1 };

/// splitmix64 chained over (seed_base, point, run, stream).
std::uint64_t derive_seed(std::uint64_t seed_base, std::uint64_t point, std::uint64_t run,
                          SeedStream stream);

struct StageError {
  Stage stage = Stage::GridSearch;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double cost = 0.0;
  double position_error = 0.0;
  double velocity_error = 0.0;
};

struct TrialResult {
  Variant variant = Variant::NearField;
  std::size_t run = 0;
  std::vector<StageError> stages;
  double mean_snr_db = 0.0;
  /// A refinement or descent stage raised; excluded from aggregation.
  bool skipped = false;
  std::string error;

  double position_error() const { return stages.back().position_error; }
  double velocity_error() const { return stages.back().velocity_error; }
  const StageError* find(Stage s) const;
};

/// One trial. Codebook and noise depend only on (seed_base, point_index,
/// run_index), so every variant of a trial sees the same draws.
TrialResult run_trial(const ExperimentConfig& config, const Vec3& truth_p,
                      std::size_t point_index, std::size_t run_index, Variant variant);

/// All requested variants of one trial; equal to calling run_trial per
/// variant.
std::vector<TrialResult> run_trial_variants(const ExperimentConfig& config, const Vec3& truth_p,
                                            std::size_t point_index, std::size_t run_index,
                                            std::span<const Variant> variants);

/// sqrt(mean(x^2)). Throws EmptyInput.
double rms(std::span<const double> values);

struct StageSummary {
  Stage stage = Stage::GridSearch;
  double rmspe = 0.0;
  double rmsve = 0.0;
};

struct VariantSummary {
  Variant variant = Variant::NearField;
  std::vector<StageSummary> stages;
  double mean_snr_db = 0.0;
  int runs = 0;
  int skipped = 0;

  const StageSummary& final() const { return stages.back(); }
  const StageSummary* find(Stage s) const;
};

struct PointResult {
  Vec3 truth_p = Vec3::Zero();
  std::vector<VariantSummary> variants;
  /// trials[run][k] belongs to variants[k].
  std::vector<std::vector<TrialResult>> trials;

  const VariantSummary* find(Variant v) const;
};

/// Runs every configured variant for `config.runs` trials at each point.
/// Output order follows `points`; results do not depend on thread count.
std::vector<PointResult> run_points(const ExperimentConfig& config, std::span<const Vec3> points);

/// Every AOI point, in row-major order.
std::vector<PointResult> aoi_sweep(const ExperimentConfig& config);

/// Points (x, y_fixed, z_fixed) for each x in `x_points`.
std::vector<PointResult> line_sweep(const ExperimentConfig& config, double y_fixed, double z_fixed,
                                    std::span<const double> x_points);

/// Labels of the distance-plot curves: GS-stage rows of GS-FF and GS-NF,
/// the GS-fine row of GS-NF-fine, CF and 6D rows of GS-NF and the 6D row of
/// noAP ("GS-FF", "GS-NF", "GS-NF-fine", "CF", "6D", "6D-noAP"). Empty for
/// any other pair.
std::string_view curve_label(Variant v, Stage s);

/// x,y,variant,RMSPE_m,RMSVE_mps,mean_SNR_dB using final-stage errors.
void write_aoi_table(std::ostream& os, std::span<const PointResult> points);
/// d_r,variant,stage,RMSPE_m,RMSVE_mps,curve.
void write_line_table(std::ostream& os, std::span<const PointResult> points);

int skipped_trials(std::span<const PointResult> points);
int total_trials(std::span<const PointResult> points);

struct RunManifest {
  std::string config_hash;
  std::uint64_t seed_base = 0;
  std::string command;
  std::string tool_version;
  double elapsed_s = 0.0;
  std::string started_utc;
  int trials = 0;
  int skipped = 0;
};

void write_manifest(std::ostream& os, const RunManifest& m);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace risloc
