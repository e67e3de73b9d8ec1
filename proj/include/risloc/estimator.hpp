#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "risloc/grid_search.hpp"
#include "risloc/projection.hpp"
#include "risloc/refine.hpp"
#include "risloc/steering.hpp"

namespace risloc {

enum class GridVariant { FarField, NearField, NearFieldFine };

enum class Stage { GridSearch, FineGridSearch, Refinement, Descent };

/// "GS", "GS-fine", "CF", "6D".
std::string_view stage_name(Stage stage);
std::optional<Stage> parse_stage(std::string_view name);

struct EstimatorConfig {
  GridVariant grid_variant = GridVariant::NearField;
  bool refine = true;
  bool descend = true;
  GridSpec coarse = GridSpec::coarse();
  FineGridShape fine{};
  int refine_max_iter = 10;
  DescentOptions descent{};
};

struct StageRecord {
  Stage stage = Stage::GridSearch;
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  double cost = 0.0;
  int iterations = 0;
  bool failed = false;
  std::string error;
};

struct EstimateTrace {
  std::vector<StageRecord> stages;

  const StageRecord& final() const { return stages.back(); }
  const StageRecord* find(Stage stage) const;
  bool any_failed() const;
};

/// Runs grid search (far-field, near-field, or near-field plus fine grid)
/// with v = 0, then the closed-form refinement loop and the 6D descent, as
/// enabled in `config`. A refinement or descent stage that throws records
/// its input estimate with `failed` set and the pipeline continues.
EstimateTrace estimate(const Eigen::VectorXcd& y, const SteeringModel& model,
                       const EstimatorConfig& config);

/// As `estimate`, but starting from an already computed coarse grid result
/// (near-field or far-field as selected by config.grid_variant).
EstimateTrace estimate_from_grid(const Eigen::VectorXcd& y, const SteeringModel& model,
                                 const EstimatorConfig& config, const GridResult& coarse);

/// One row per stage: stage px py pz vx vy vz cost iterations failed.
void write_trace(std::ostream& os, const EstimateTrace& trace);
EstimateTrace read_trace(std::istream& is);

}  // namespace risloc
