#include "risloc/grid_search.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <sstream>

#include "risloc/projection.hpp"

namespace risloc {

Axis Axis::colon(double start, double step, double stop) {
  if (!(step > 0.0)) throw std::invalid_argument("Axis: step must be > 0");
  if (stop < start) throw std::invalid_argument("Axis: empty range");
  Axis a;
  a.origin = start;
  a.step = step;
  a.first = 0;
  a.last = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  return a;
}

Axis Axis::centered(double center, double half_width, double step) {
  if (!(step > 0.0) || half_width < 0.0) throw std::invalid_argument("Axis: bad centred axis");
  Axis a;
  a.origin = center;
  a.step = step;
  const long k = std::lround(half_width / step);
  a.first = -k;
  a.last = k;
  return a;
}

SphericalCoord GridSpec::node(Eigen::Index linear) const {
  const Eigen::Index nr = range_m.size();
  const Eigen::Index ne = elevation_deg.size();
  const Eigen::Index ir = linear % nr;
  const Eigen::Index ie = (linear / nr) % ne;
  const Eigen::Index ia = linear / (nr * ne);
  return {azimuth_deg[ia] * kDegree, elevation_deg[ie] * kDegree, range_m[ir]};
}

void GridSpec::validate() const {
  for (const Axis* a : {&azimuth_deg, &elevation_deg, &range_m}) {
    if (!(a->step > 0.0) || a->size() < 1) throw std::invalid_argument("GridSpec: empty axis or non-positive step");
  }
}

GridSpec GridSpec::coarse() {
  return {Axis::colon(-70.0, 1.0, 70.0), Axis::colon(-70.0, 1.0, 70.0), Axis::colon(0.1, 0.2, 4.0)};
}

GridSpec GridSpec::fine_around(const SphericalCoord& c, const FineGridShape& s) {
  return {Axis::centered(c.azimuth / kDegree, s.azimuth_half_deg, s.azimuth_step_deg),
          Axis::centered(c.elevation / kDegree, s.elevation_half_deg, s.elevation_step_deg),
          Axis::centered(c.range, s.range_half_m, s.range_step_m)};
}

double ff_nominal_range(const GridSpec& grid) {
  return 0.5 * (grid.range_m[0] + grid.range_m[grid.range_m.size() - 1]);
}

Eigen::VectorXd ff_phase(const SteeringModel& model, const Vec3& direction) {
  return model.wavenumber() * (model.cells().transpose() * direction.normalized());
}

namespace {

constexpr Eigen::Index kBlock = 2048;

// Fills `cycles` (M x nb) with the total per-cell propagation phase of
// candidates [n0, n0 + nb) measured in cycles, and marks usable candidates.
using CycleFill =
    std::function<void(Eigen::Index n0, Eigen::Index nb, Eigen::Ref<Eigen::MatrixXd> cycles,
                       std::vector<char>& valid)>;

struct QueryState {
  Eigen::VectorXd yr;
  Eigen::VectorXd yi;
  double energy = 0.0;
  // L x M signs when the codebook is antipodal, else [Re G^T; Im G^T].
  Eigen::MatrixXd lhs;
  bool antipodal = false;
  double best = std::numeric_limits<double>::infinity();
  Eigen::Index best_index = -1;
};

QueryState make_state(const GridQuery& q) {
  QueryState s;
  s.yr = q.y->real();
  s.yi = q.y->imag();
  s.energy = q.y->squaredNorm();
  if (q.model->antipodal_signs()) {
    s.antipodal = true;
    s.lhs = *q.model->antipodal_signs();
  } else {
    const Eigen::MatrixXcd& g = q.model->codebook();
    const Eigen::Index l = g.cols();
    s.lhs.resize(2 * l, g.rows());
    s.lhs.topRows(l) = g.real().transpose();
    s.lhs.bottomRows(l) = g.imag().transpose();
  }
  return s;
}

void check_shared_geometry(std::span<const GridQuery> queries) {
  const SteeringModel& ref = *queries.front().model;
  for (const GridQuery& q : queries) {
    if (q.y == nullptr || q.model == nullptr) throw std::invalid_argument("grid search: null query");
    if (q.y->size() != q.model->samples())
      throw std::invalid_argument("grid search: snapshot length does not match model");
    if (q.model == &ref) continue;
    if (q.model->wavelength() != ref.wavelength() || q.model->cells() != ref.cells() ||
        q.model->bs_distances() != ref.bs_distances())
      throw std::invalid_argument("grid search: batched models must share surface geometry");
  }
}

// re[i] = cos(2 pi c[i]), im[i] = -sin(2 pi c[i]). The argument is reduced to
// x = pi (c - rint(c)) in [-pi/2, pi/2], expanded as truncated Taylor series
// (error below 1e-7) and doubled. Written as a flat loop so it vectorises.
void unit_phasors(const double* c, Eigen::Index n, double* re, double* im) {
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = std::numbers::pi * (c[i] - std::rint(c[i]));
    const double x2 = x * x;
    const double sn =
        x * (1.0 + x2 * (-1.0 / 6 + x2 * (1.0 / 120 + x2 * (-1.0 / 5040 + x2 * (1.0 / 362880 + x2 * (-1.0 / 39916800))))));
    const double cs =
        1.0 + x2 * (-0.5 + x2 * (1.0 / 24 + x2 * (-1.0 / 720 + x2 * (1.0 / 40320 + x2 * (-1.0 / 3628800 + x2 * (1.0 / 479001600))))));
    re[i] = cs * cs - sn * sn;
    im[i] = -2.0 * sn * cs;
  }
}

// Scores every candidate against every query and keeps the running
// minimum. The winner is re-scored with the exact model by the callers.
void scan(std::vector<QueryState>& states, Eigen::Index cells, Eigen::Index count,
          const CycleFill& fill) {
  Eigen::MatrixXd cycles(cells, kBlock);
  Eigen::MatrixXd phasors(cells, 2 * kBlock);
  Eigen::MatrixXd prod;
  Eigen::MatrixXd hr, hi;
  Eigen::VectorXd sr, si, en;
  std::vector<char> valid(kBlock);
  for (Eigen::Index n0 = 0; n0 < count; n0 += kBlock) {
    const Eigen::Index nb = std::min(kBlock, count - n0);
    std::fill(valid.begin(), valid.end(), char{1});
    auto cyc = cycles.leftCols(nb);
    fill(n0, nb, cyc, valid);

    unit_phasors(cyc.data(), cells * nb, phasors.data(), phasors.data() + cells * nb);
    const auto block = phasors.leftCols(2 * nb);

    for (QueryState& s : states) {
      prod.noalias() = s.lhs * block;
      const Eigen::Index l = s.yr.size();
      if (s.antipodal) {
        hr = prod.leftCols(nb);
        hi = prod.middleCols(nb, nb);
      } else {
        hr = prod.topLeftCorner(l, nb) - prod.bottomRightCorner(l, nb);
        hi = prod.topRightCorner(l, nb) + prod.bottomLeftCorner(l, nb);
      }
      sr.noalias() = hr.transpose() * s.yr;
      sr.noalias() += hi.transpose() * s.yi;
      si.noalias() = hr.transpose() * s.yi;
      si.noalias() -= hi.transpose() * s.yr;
      en = (hr.colwise().squaredNorm() + hi.colwise().squaredNorm()).transpose();
      for (Eigen::Index j = 0; j < nb; ++j) {
        if (!valid[static_cast<std::size_t>(j)] || !(en(j) > 0.0)) continue;
        const double cost = s.energy - (sr(j) * sr(j) + si(j) * si(j)) / en(j);
        if (cost < s.best) {
          s.best = cost;
          s.best_index = n0 + j;
        }
      }
    }
  }
}

// Near-field cycles for arbitrary candidate positions, computed in place.
void nf_cycles(const SteeringModel& model, const Eigen::Ref<const Eigen::Matrix3Xd>& pos,
               Eigen::Ref<Eigen::MatrixXd> cycles) {
  const Eigen::Matrix3Xd& q = model.cells();
  const Eigen::VectorXd& bs = model.bs_distances();
  const double inv_lambda = 1.0 / model.wavelength();
  cycles.noalias() = -2.0 * (q.transpose() * pos);
  for (Eigen::Index j = 0; j < pos.cols(); ++j) {
    const double p_sq = pos.col(j).squaredNorm();
    const double r = std::sqrt(p_sq);
    auto col = cycles.col(j).array();
    col = ((col + p_sq + model.cell_squared_norms().array()).max(0.0).sqrt() - r + bs.array()) * inv_lambda;
  }
}

struct AxisTrig {
  Eigen::VectorXd cos_az, sin_az, cos_el, sin_el;
};

AxisTrig axis_trig(const GridSpec& grid) {
  AxisTrig t;
  const Eigen::Index na = grid.azimuth_deg.size(), ne = grid.elevation_deg.size();
  t.cos_az.resize(na);
  t.sin_az.resize(na);
  t.cos_el.resize(ne);
  t.sin_el.resize(ne);
  for (Eigen::Index i = 0; i < na; ++i) {
    t.cos_az(i) = std::cos(grid.azimuth_deg[i] * kDegree);
    t.sin_az(i) = std::sin(grid.azimuth_deg[i] * kDegree);
  }
  for (Eigen::Index i = 0; i < ne; ++i) {
    t.cos_el(i) = std::cos(grid.elevation_deg[i] * kDegree);
    t.sin_el(i) = std::sin(grid.elevation_deg[i] * kDegree);
  }
  return t;
}

CycleFill nf_fill(const SteeringModel& model, const GridSpec& grid) {
  return [&model, &grid, trig = axis_trig(grid)](Eigen::Index n0, Eigen::Index nb,
                                                 Eigen::Ref<Eigen::MatrixXd> cycles,
                                                 std::vector<char>& valid) {
    const Eigen::Index nr = grid.range_m.size(), ne = grid.elevation_deg.size();
    Eigen::Matrix3Xd pos(3, nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Eigen::Index n = n0 + j;
      const Eigen::Index ir = n % nr, ie = (n / nr) % ne, ia = n / (nr * ne);
      double r = grid.range_m[ir];
      if (!(r > 0.0)) {
        valid[static_cast<std::size_t>(j)] = 0;
        r = 1.0;
      }
      pos.col(j) << r * trig.cos_el(ie) * trig.cos_az(ia), r * trig.cos_el(ie) * trig.sin_az(ia),
          r * trig.sin_el(ie);
    }
    nf_cycles(model, pos, cycles);
  };
}

GridResult finish(const GridQuery& q, const QueryState& s, const SphericalCoord& coord) {
  if (s.best_index < 0) throw ZeroModelError("grid search: no candidate with a non-zero model");
  GridResult r;
  r.coord = coord;
  r.position = spherical_to_cartesian(coord);
  r.cost = projection_cost(*q.y, steering_vector(*q.model, r.position, Vec3::Zero()));
  r.index = s.best_index;
  return r;
}

}  // namespace

std::vector<GridResult> nf_grid_search(std::span<const GridQuery> queries, const GridSpec& grid) {
  if (queries.empty()) return {};
  grid.validate();
  check_shared_geometry(queries);
  const SteeringModel& ref = *queries.front().model;

  std::vector<QueryState> states;
  states.reserve(queries.size());
  for (const GridQuery& q : queries) states.push_back(make_state(q));
  scan(states, ref.cell_count(), grid.size(), nf_fill(ref, grid));

  std::vector<GridResult> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i)
    out.push_back(finish(queries[i], states[i], grid.node(std::max<Eigen::Index>(states[i].best_index, 0))));
  return out;
}

GridResult nf_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                          const GridSpec& grid) {
  const GridQuery q{&y, &model};
  return nf_grid_search(std::span<const GridQuery>(&q, 1), grid).front();
}

GridResult nf_fine_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                               const SphericalCoord& coarse, const FineGridShape& shape) {
  const GridSpec fine = GridSpec::fine_around(coarse, shape);
  GridResult centre;
  centre.coord = coarse;
  centre.position = spherical_to_cartesian(coarse);
  centre.cost = projection_cost(y, steering_vector(model, centre.position, Vec3::Zero()));
  centre.index = ((-fine.azimuth_deg.first) * fine.elevation_deg.size() - fine.elevation_deg.first) *
                     fine.range_m.size() -
                 fine.range_m.first;

  const GridQuery q{&y, &model};
  std::vector<QueryState> states{make_state(q)};
  scan(states, model.cell_count(), fine.size(), nf_fill(model, fine));
  if (states[0].best_index < 0 || states[0].best_index == centre.index) return centre;
  GridResult best = finish(q, states[0], fine.node(states[0].best_index));
  return best.cost < centre.cost ? best : centre;
}

std::vector<GridResult> ff_grid_search(std::span<const GridQuery> queries, const GridSpec& grid) {
  if (queries.empty()) return {};
  grid.validate();
  check_shared_geometry(queries);
  const SteeringModel& ref = *queries.front().model;

  // Stage 1: direction only. Candidates are (az, el) pairs, az-major.
  GridSpec directions = grid;
  directions.range_m = Axis::colon(ff_nominal_range(grid), 1.0, ff_nominal_range(grid));
  const AxisTrig trig = axis_trig(directions);
  const Eigen::Index ne = directions.elevation_deg.size();
  CycleFill ff_fill = [&](Eigen::Index n0, Eigen::Index nb, Eigen::Ref<Eigen::MatrixXd> cycles,
                          std::vector<char>&) {
    Eigen::Matrix3Xd dirs(3, nb);
    for (Eigen::Index j = 0; j < nb; ++j) {
      const Eigen::Index ie = (n0 + j) % ne, ia = (n0 + j) / ne;
      dirs.col(j) << trig.cos_el(ie) * trig.cos_az(ia), trig.cos_el(ie) * trig.sin_az(ia),
          trig.sin_el(ie);
    }
    cycles.noalias() = -(ref.cells().transpose() * dirs);
    cycles.colwise() += ref.bs_distances();
    cycles *= 1.0 / ref.wavelength();
  };

  std::vector<QueryState> states;
  states.reserve(queries.size());
  for (const GridQuery& q : queries) states.push_back(make_state(q));
  scan(states, ref.cell_count(), directions.size(), ff_fill);

  // Stage 2: near-field range line search along the estimated direction.
  std::vector<GridResult> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    if (states[i].best_index < 0) throw ZeroModelError("ff_grid_search: no usable direction");
    GridSpec line = grid;
    line.azimuth_deg = Axis::colon(grid.azimuth_deg[states[i].best_index / ne], 1.0,
                                   grid.azimuth_deg[states[i].best_index / ne]);
    line.elevation_deg = Axis::colon(grid.elevation_deg[states[i].best_index % ne], 1.0,
                                     grid.elevation_deg[states[i].best_index % ne]);
    std::vector<QueryState> ls{make_state(queries[i])};
    scan(ls, ref.cell_count(), line.size(), nf_fill(ref, line));
    GridResult r = finish(queries[i], ls[0], line.node(std::max<Eigen::Index>(ls[0].best_index, 0)));
    // Index into the full 3D grid, for cross-checks against the NF search.
    r.index = states[i].best_index * grid.range_m.size() + ls[0].best_index;
    out.push_back(r);
  }
  return out;
}

GridResult ff_grid_search(const Eigen::VectorXcd& y, const SteeringModel& model,
                          const GridSpec& grid) {
  const GridQuery q{&y, &model};
  return ff_grid_search(std::span<const GridQuery>(&q, 1), grid).front();
}

}  // namespace risloc
