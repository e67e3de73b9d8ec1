#include "risloc/estimator.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace risloc {

std::string_view stage_name(Stage stage) {
  switch (stage) {
    case Stage::GridSearch: return "GS";
    case Stage::FineGridSearch: return "GS-fine";
    case Stage::Refinement: return "CF";
    case Stage::Descent: return "6D";
  }
  return "?";
}

std::optional<Stage> parse_stage(std::string_view name) {
  for (Stage s : {Stage::GridSearch, Stage::FineGridSearch, Stage::Refinement, Stage::Descent})
    if (stage_name(s) == name) return s;
  return std::nullopt;
}

const StageRecord* EstimateTrace::find(Stage stage) const {
  for (const StageRecord& r : stages)
    if (r.stage == stage) return &r;
  return nullptr;
}

bool EstimateTrace::any_failed() const {
  for (const StageRecord& r : stages)
    if (r.failed) return true;
  return false;
}

EstimateTrace estimate_from_grid(const Eigen::VectorXcd& y, const SteeringModel& model,
                                 const EstimatorConfig& config, const GridResult& coarse) {
  EstimateTrace trace;
  trace.stages.push_back({Stage::GridSearch, coarse.position, Vec3::Zero(), coarse.cost, 1, false, {}});

  if (config.grid_variant == GridVariant::NearFieldFine) {
    const GridResult fine = nf_fine_grid_search(y, model, coarse.coord, config.fine);
    trace.stages.push_back({Stage::FineGridSearch, fine.position, Vec3::Zero(), fine.cost, 1, false, {}});
  }

  auto run_stage = [&](Stage stage, auto&& body) {
    const StageRecord prev = trace.stages.back();
    StageRecord rec{stage, prev.p, prev.v, prev.cost, 0, false, {}};
    try {
      body(rec);
    } catch (const std::exception& e) {
      rec = StageRecord{stage, prev.p, prev.v, prev.cost, 0, true, e.what()};
    }
    trace.stages.push_back(rec);
  };

  if (config.refine) {
    run_stage(Stage::Refinement, [&](StageRecord& rec) {
      const RefineResult r = refine_loop(y, model, rec.p, rec.v, config.refine_max_iter);
      rec.p = r.p;
      rec.v = r.v;
      rec.cost = r.cost;
      rec.iterations = r.iterations;
    });
  }
  if (config.descend) {
    run_stage(Stage::Descent, [&](StageRecord& rec) {
      const DescentResult r = gradient_descent_6d(y, model, rec.p, rec.v, config.descent);
      rec.p = r.p;
      rec.v = r.v;
      rec.cost = r.cost;
      rec.iterations = r.iterations;
    });
  }
  return trace;
}

EstimateTrace estimate(const Eigen::VectorXcd& y, const SteeringModel& model,
                       const EstimatorConfig& config) {
  const GridResult coarse = config.grid_variant == GridVariant::FarField
                                ? ff_grid_search(y, model, config.coarse)
                                : nf_grid_search(y, model, config.coarse);
  return estimate_from_grid(y, model, config, coarse);
}

void write_trace(std::ostream& os, const EstimateTrace& trace) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "# stage px py pz vx vy vz cost iterations failed\n";
  for (const StageRecord& r : trace.stages) {
    os << stage_name(r.stage) << ' ' << r.p.x() << ' ' << r.p.y() << ' ' << r.p.z() << ' '
       << r.v.x() << ' ' << r.v.y() << ' ' << r.v.z() << ' ' << r.cost << ' ' << r.iterations
       << ' ' << (r.failed ? 1 : 0) << '\n';
  }
  os.flags(flags);
  os.precision(prec);
}

EstimateTrace read_trace(std::istream& is) {
  EstimateTrace trace;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line.front() == '#') continue;
    std::istringstream ls(line);
    std::string name;
    StageRecord r;
    int failed = 0;
    if (!(ls >> name >> r.p.x() >> r.p.y() >> r.p.z() >> r.v.x() >> r.v.y() >> r.v.z() >>
          r.cost >> r.iterations >> failed))
      throw std::runtime_error("read_trace: malformed row: " + line);
    const auto stage = parse_stage(name);
    if (!stage) throw std::runtime_error("read_trace: unknown stage " + name);
    r.stage = *stage;
    r.failed = failed != 0;
    trace.stages.push_back(r);
  }
  return trace;
}

}  // namespace risloc
