#include "risloc/config.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "risloc/errors.hpp"

namespace risloc {

namespace {

using nlohmann::json;

// Reads keys from one JSON object and rejects whatever was left unread.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw ConfigError(name_ + "." + key + ": wrong type");
    }
  }

  void get_db(const char* key, double& linear) {
    double db = linear_to_db(linear);
    get(key, db);
    linear = db_to_linear(db);
  }

  void get_vec3(const char* key, Vec3& out) {
    std::vector<double> v{out.x(), out.y(), out.z()};
    get(key, v);
    if (v.size() != 3) throw ConfigError(name_ + "." + key + ": expected 3 numbers");
    out = Vec3(v[0], v[1], v[2]);
  }

  void get_axis(const char* key, Axis& axis) {
    std::vector<double> v{axis[0], axis.step, axis[axis.size() - 1]};
    get(key, v);
    if (v.size() != 3) throw ConfigError(name_ + "." + key + ": expected [start, step, stop]");
    try {
      axis = Axis::colon(v[0], v[1], v[2]);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(name_ + "." + key + ": " + e.what());
    }
  }

  std::optional<Section> sub(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) return std::nullopt;
    return Section(*it, name_.empty() ? key : name_ + "." + key);
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key()))
        throw ConfigError("unknown key " + (name_.empty() ? "" : name_ + ".") + it.key());
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::vector<double> reflection_phases_deg(const Scenario& s) {
  std::vector<double> out;
  for (const Complex& g : s.reflection_set) out.push_back(std::arg(g) / kDegree);
  return out;
}

json axis_json(const Axis& a) { return json::array({a[0], a.step, a[a.size() - 1]}); }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json to_json(const ExperimentConfig& c) {
  const Scenario& s = c.scenario;
  json j;
  j["f_hz"] = s.frequency_hz;
  j["p_tx_dbm"] = linear_to_db(s.tx_power_w * 1e3);
  j["g_bs_db"] = linear_to_db(s.gain_bs);
  j["g_ue_db"] = linear_to_db(s.gain_ue);
  j["n_f_db"] = linear_to_db(s.noise_figure);
  j["t_k"] = s.temperature_k;
  j["b_hz"] = s.bandwidth_hz;
  j["p_bs_m"] = vec_json(s.bs_position);
  j["t_s"] = s.sampling_time_s;
  j["l"] = s.samples;
  j["reflection_phases_deg"] = reflection_phases_deg(s);

  j["layout"] = {{"rings", c.layout_spec.rings},
                 {"spacing_m", c.layout_spec.spacing},
                 {"cell_dy_m", c.layout_spec.cell_dy},
                 {"cell_dz_m", c.layout_spec.cell_dz},
                 {"tile_pitch_m", c.layout_spec.tile_pitch}};

  const GridSpec& g = c.estimator.coarse;
  j["grid"] = {{"azimuth_deg", axis_json(g.azimuth_deg)},
               {"elevation_deg", axis_json(g.elevation_deg)},
               {"range_m", axis_json(g.range_m)}};
  const FineGridShape& f = c.estimator.fine;
  j["fine_grid"] = {{"azimuth_half_deg", f.azimuth_half_deg},
                    {"azimuth_step_deg", f.azimuth_step_deg},
                    {"elevation_half_deg", f.elevation_half_deg},
                    {"elevation_step_deg", f.elevation_step_deg},
                    {"range_half_m", f.range_half_m},
                    {"range_step_m", f.range_step_m}};
  const DescentOptions& d = c.estimator.descent;
  j["estimator"] = {{"refine", c.estimator.refine},
                    {"descend", c.estimator.descend},
                    {"refine_max_iter", c.estimator.refine_max_iter},
                    {"descent_max_iter", d.max_iterations},
                    {"descent_relative_tol", d.relative_tolerance},
                    {"descent_gradient_tol", d.gradient_tolerance},
                    {"armijo_shrink", d.shrink},
                    {"armijo_c", d.sufficient_decrease}};

  std::vector<std::string> variants;
  for (Variant v : c.variants) variants.emplace_back(variant_name(v));
  j["experiment"] = {{"runs", c.runs},
                     {"seed_base", c.seed_base},
                     {"variants", variants},
                     {"noiseless", c.noiseless},
                     {"antenna_pattern", c.use_pattern},
                     {"threads", c.threads},
                     {"truth_v_mps", vec_json(c.truth_v)},
                     {"line_x_m", c.line_x},
                     {"aoi",
                      {{"x_m", {c.aoi.x_min, c.aoi.x_max}},
                       {"y_m", {c.aoi.y_min, c.aoi.y_max}},
                       {"step_m", c.aoi.step},
                       {"z_m", c.aoi.z}}}};
  return j;
}

void read_range(Section& sec, const char* key, double& lo, double& hi) {
  std::vector<double> v{lo, hi};
  sec.get(key, v);
  if (v.size() != 2) throw ConfigError(std::string("aoi.") + key + ": expected [min, max]");
  lo = v[0];
  hi = v[1];
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }

  ExperimentConfig c;
  Section top(root, "");
  Scenario& s = c.scenario;
  top.get("f_hz", s.frequency_hz);
  double p_dbm = linear_to_db(s.tx_power_w * 1e3);
  top.get("p_tx_dbm", p_dbm);
  s.tx_power_w = db_to_linear(p_dbm) * 1e-3;
  top.get_db("g_bs_db", s.gain_bs);
  top.get_db("g_ue_db", s.gain_ue);
  top.get_db("n_f_db", s.noise_figure);
  top.get("t_k", s.temperature_k);
  top.get("b_hz", s.bandwidth_hz);
  top.get_vec3("p_bs_m", s.bs_position);
  top.get("t_s", s.sampling_time_s);
  top.get("l", s.samples);
  std::vector<double> phases = reflection_phases_deg(s);
  top.get("reflection_phases_deg", phases);
  s.reflection_set = reflection_set_from_degrees(phases);

  if (auto sec = top.sub("layout")) {
    sec->get("rings", c.layout_spec.rings);
    sec->get("spacing_m", c.layout_spec.spacing);
    sec->get("cell_dy_m", c.layout_spec.cell_dy);
    sec->get("cell_dz_m", c.layout_spec.cell_dz);
    sec->get("tile_pitch_m", c.layout_spec.tile_pitch);
    sec->finish();
  }
  if (auto sec = top.sub("grid")) {
    sec->get_axis("azimuth_deg", c.estimator.coarse.azimuth_deg);
    sec->get_axis("elevation_deg", c.estimator.coarse.elevation_deg);
    sec->get_axis("range_m", c.estimator.coarse.range_m);
    sec->finish();
  }
  if (auto sec = top.sub("fine_grid")) {
    FineGridShape& f = c.estimator.fine;
    sec->get("azimuth_half_deg", f.azimuth_half_deg);
    sec->get("azimuth_step_deg", f.azimuth_step_deg);
    sec->get("elevation_half_deg", f.elevation_half_deg);
    sec->get("elevation_step_deg", f.elevation_step_deg);
    sec->get("range_half_m", f.range_half_m);
    sec->get("range_step_m", f.range_step_m);
    sec->finish();
    if (!(f.azimuth_step_deg > 0 && f.elevation_step_deg > 0 && f.range_step_m > 0))
      throw ConfigError("fine_grid: steps must be > 0");
  }
  if (auto sec = top.sub("estimator")) {
    DescentOptions& d = c.estimator.descent;
    sec->get("refine", c.estimator.refine);
    sec->get("descend", c.estimator.descend);
    sec->get("refine_max_iter", c.estimator.refine_max_iter);
    sec->get("descent_max_iter", d.max_iterations);
    sec->get("descent_relative_tol", d.relative_tolerance);
    sec->get("descent_gradient_tol", d.gradient_tolerance);
    sec->get("armijo_shrink", d.shrink);
    sec->get("armijo_c", d.sufficient_decrease);
    sec->finish();
    if (!(d.shrink > 0.0 && d.shrink < 1.0)) throw ConfigError("estimator.armijo_shrink must lie in (0, 1)");
  }
  if (auto sec = top.sub("experiment")) {
    sec->get("runs", c.runs);
    sec->get("seed_base", c.seed_base);
    std::vector<std::string> names;
    for (Variant v : c.variants) names.emplace_back(variant_name(v));
    sec->get("variants", names);
    c.variants.clear();
    for (const std::string& n : names) {
      const auto v = parse_variant(n);
      if (!v) throw ConfigError("experiment.variants: unknown variant " + n);
      c.variants.push_back(*v);
    }
    sec->get("noiseless", c.noiseless);
    sec->get("antenna_pattern", c.use_pattern);
    sec->get("threads", c.threads);
    sec->get_vec3("truth_v_mps", c.truth_v);
    sec->get("line_x_m", c.line_x);
    if (auto aoi = sec->sub("aoi")) {
      read_range(*aoi, "x_m", c.aoi.x_min, c.aoi.x_max);
      read_range(*aoi, "y_m", c.aoi.y_min, c.aoi.y_max);
      aoi->get("step_m", c.aoi.step);
      aoi->get("z_m", c.aoi.z);
      aoi->finish();
    }
    sec->finish();
  }
  top.finish();

  try {
    c.layout = build_composite_ris(c.layout_spec);
  } catch (const GeometryError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("layout: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& config) { return to_json(config).dump(2) + "\n"; }

std::string config_hash(const ExperimentConfig& config) {
  const std::string canon = to_json(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace risloc
