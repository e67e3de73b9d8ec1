#include "risloc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>

namespace risloc {

namespace {

double clamp_cosine(double c, const char* what) {
  constexpr double slack = 1e-9;
  if (c > 1.0 + slack || c < -1.0 - slack || !std::isfinite(c)) {
    std::ostringstream msg;
    msg << "combined_pattern: " << what << " cosine out of range (" << c << ")";
    throw GeometryError(msg.str());
  }
  return std::clamp(c, -1.0, 1.0);
}

// cos(alpha)^(G/2 - 1) for a rotation-symmetric pattern; no radiation
// behind the antenna.
double pattern_power(double c, double gain) {
  if (c <= 0.0) return 0.0;
  return std::pow(c, gain / 2.0 - 1.0);
}

void require_front(const Vec3& x, const char* what) {
  if (!(x.x() > 0.0)) {
    std::ostringstream msg;
    msg << what << " must lie in front of the RIS (x > 0), got x = " << x.x();
    throw GeometryError(msg.str());
  }
}

}  // namespace

double Scenario::wavenumber() const { return 2.0 * std::numbers::pi / wavelength(); }

void Scenario::validate() const {
  auto need = [](bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(std::string("Scenario: ") + msg);
  };
  need(frequency_hz > 0.0, "frequency must be > 0");
  need(tx_power_w > 0.0, "transmit power must be > 0");
  need(gain_bs >= 1.0 && gain_ue >= 1.0, "antenna gains must be >= 1 (linear)");
  need(noise_figure >= 1.0, "noise figure must be >= 1 (linear)");
  need(temperature_k > 0.0 && bandwidth_hz > 0.0, "temperature and bandwidth must be > 0");
  need(sampling_time_s > 0.0, "sampling time must be > 0");
  need(samples >= 1, "sample count must be >= 1");
  need(!reflection_set.empty(), "reflection set is empty");
  for (const Complex& g : reflection_set)
    need(std::abs(std::abs(g) - 1.0) < 1e-12, "reflection coefficients must be unit modulus");
  need(speed_of_light > 0.0, "speed of light must be > 0");
}

std::vector<Complex> reflection_set_from_degrees(std::span<const double> phases_deg) {
  std::vector<Complex> set;
  set.reserve(phases_deg.size());
  for (double deg : phases_deg) set.push_back(std::polar(1.0, deg * kDegree));
  return set;
}

Scenario Scenario::reference() {
  Scenario s;
  s.frequency_hz = 23.8e9;
  s.tx_power_w = db_to_linear(20.0) * 1e-3;
  s.gain_bs = db_to_linear(19.0);
  s.gain_ue = db_to_linear(3.2);
  s.noise_figure = db_to_linear(8.0);
  s.temperature_k = 293.0;
  s.bandwidth_hz = 1e6;
  s.bs_position = Vec3(1.0, -3.0, 3.0);
  s.sampling_time_s = 1e-4;
  s.samples = 40;
  const double phases[] = {-15.0, 165.0};
  s.reflection_set = reflection_set_from_degrees(phases);
  return s;
}

Codebook random_codebook(Eigen::Index cells, Eigen::Index samples,
                         std::span<const Complex> set, std::uint64_t seed) {
  if (set.empty()) throw std::invalid_argument("random_codebook: empty reflection set");
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::uint64_t>(set.size());
  Codebook cb;
  cb.gamma.resize(cells, samples);
  for (Eigen::Index l = 0; l < samples; ++l)
    for (Eigen::Index m = 0; m < cells; ++m) cb.gamma(m, l) = set[rng() % n];
  return cb;
}

double noise_power(const Scenario& s) {
  if (!(s.temperature_k > 0.0) || !(s.bandwidth_hz > 0.0) || !(s.noise_figure >= 1.0))
    throw std::invalid_argument("noise_power: need T > 0, B > 0, n_f >= 1");
  return s.boltzmann * s.temperature_k * s.bandwidth_hz * s.noise_figure;
}

double combined_pattern(Eigen::Index m, const Vec3& p, const RisLayout& layout,
                        const Scenario& s) {
  const Vec3& bs = s.bs_position;
  require_front(p, "UE position");
  require_front(bs, "BS position");
  const Vec3 q = layout.cells.col(m);

  const double bs_norm = bs.norm();
  const double bs_cell = (bs - q).norm();
  const double ue_norm = p.norm();
  const double ue_cell = (p - q).norm();
  const double q_sq = q.squaredNorm();
  if (bs_cell == 0.0 || ue_cell == 0.0)
    throw GeometryError("combined_pattern: position coincides with a cell");

  const double cos_bs = clamp_cosine(
      (bs_norm * bs_norm + bs_cell * bs_cell - q_sq) / (2.0 * bs_norm * bs_cell), "BS");
  const double cos_rx = clamp_cosine(bs.x() / bs_cell, "RIS receive");
  const double cos_tx = clamp_cosine(p.x() / ue_cell, "RIS transmit");
  const double cos_ue = clamp_cosine(
      (ue_norm * ue_norm + ue_cell * ue_cell - q_sq) / (2.0 * ue_norm * ue_cell), "UE");

  return pattern_power(cos_bs, s.gain_bs) * cos_rx * cos_tx * pattern_power(cos_ue, s.gain_ue);
}

Eigen::VectorXcd channel_coefficients(const Vec3& p, const Vec3& v, const RisLayout& layout,
                                      const Codebook& codebook, const Scenario& s,
                                      bool use_pattern) {
  const Eigen::Index cells = layout.size();
  const Eigen::Index samples = codebook.samples();
  if (codebook.cells() != cells)
    throw std::invalid_argument("channel_coefficients: codebook/layout size mismatch");

  const double k = s.wavenumber();
  const double prefactor = std::sqrt(s.gain_bs * s.gain_ue) * layout.cell_dy * layout.cell_dz /
                           (4.0 * std::numbers::pi);

  Eigen::VectorXd bs_dist(cells);
  for (Eigen::Index m = 0; m < cells; ++m)
    bs_dist(m) = (s.bs_position - layout.cells.col(m)).norm();

  Eigen::VectorXcd h(samples);
  for (Eigen::Index l = 0; l < samples; ++l) {
    const Vec3 pl = p + v * (static_cast<double>(l) * s.sampling_time_s);
    require_front(pl, "UE position");
    Complex acc(0.0, 0.0);
    for (Eigen::Index m = 0; m < cells; ++m) {
      const double ue_dist = (pl - layout.cells.col(m)).norm();
      const double amp = (use_pattern ? std::sqrt(combined_pattern(m, pl, layout, s)) : 1.0) /
                         (bs_dist(m) * ue_dist);
      acc += codebook.gamma(m, l) * std::polar(amp, -k * (bs_dist(m) + ue_dist));
    }
    h(l) = prefactor * acc;
  }
  return h;
}

Complex channel_coefficient(Eigen::Index ell, const Vec3& p, const Vec3& v,
                            const RisLayout& layout, const Codebook& codebook,
                            const Scenario& s, bool use_pattern) {
  if (ell < 0 || ell >= codebook.samples())
    throw std::out_of_range("channel_coefficient: sample index out of range");
  Codebook one;
  one.gamma = codebook.gamma.col(ell);
  const Vec3 p_ell = p + v * (static_cast<double>(ell) * s.sampling_time_s);
  return channel_coefficients(p_ell, Vec3::Zero(), layout, one, s, use_pattern)(0);
}

double Snapshot::mean_snr_db() const {
  return linear_to_db((snr_db.array() * (std::log(10.0) / 10.0)).exp().mean());
}

Snapshot generate_snapshot(const Vec3& p, const Vec3& v, const RisLayout& layout,
                           const Codebook& codebook, const Scenario& s,
                           std::uint64_t noise_seed, const SnapshotOptions& opts) {
  const Eigen::VectorXcd h = channel_coefficients(p, v, layout, codebook, s, opts.use_pattern);
  const double pn = noise_power(s);
  const double amp = std::sqrt(s.tx_power_w);

  Snapshot snap;
  snap.truth_p = p;
  snap.truth_v = v;
  snap.noise_seed = noise_seed;
  snap.use_pattern = opts.use_pattern;
  snap.y = amp * h;
  snap.snr_db = (h.array().abs2() * s.tx_power_w / pn).log10() * 10.0;

  if (!opts.noiseless) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(pn / 2.0));
    for (Eigen::Index l = 0; l < snap.y.size(); ++l) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      snap.y(l) += Complex(re, im);
    }
  }
  return snap;
}

void write_snapshot(std::ostream& os, const Snapshot& snap) {
  const auto flags = os.flags();
  const auto prec = os.precision();
  os << std::setprecision(12);
  os << "# risloc snapshot v1\n";
  os << "# scenario_hash " << (snap.scenario_hash.empty() ? "-" : snap.scenario_hash) << '\n';
  os << "# codebook_seed " << snap.codebook_seed << '\n';
  os << "# noise_seed " << snap.noise_seed << '\n';
  os << "# use_pattern " << (snap.use_pattern ? 1 : 0) << '\n';
  os << "# truth_p " << snap.truth_p.x() << ' ' << snap.truth_p.y() << ' ' << snap.truth_p.z() << '\n';
  os << "# truth_v " << snap.truth_v.x() << ' ' << snap.truth_v.y() << ' ' << snap.truth_v.z() << '\n';
  os << "# ell re_y im_y snr_db\n";
  for (Eigen::Index l = 0; l < snap.y.size(); ++l)
    os << l << ' ' << snap.y(l).real() << ' ' << snap.y(l).imag() << ' ' << snap.snr_db(l) << '\n';
  os.flags(flags);
  os.precision(prec);
}

Snapshot read_snapshot(std::istream& is) {
  Snapshot snap;
  std::vector<Complex> ys;
  std::vector<double> snrs;
  std::string line;
  bool magic = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    if (line.front() == '#') {
      std::string hash, key;
      ls >> hash >> key;
      if (key == "risloc") magic = true;
      else if (key == "scenario_hash") ls >> snap.scenario_hash;
      else if (key == "codebook_seed") ls >> snap.codebook_seed;
      else if (key == "noise_seed") ls >> snap.noise_seed;
      else if (key == "use_pattern") { int f = 1; ls >> f; snap.use_pattern = f != 0; }
      else if (key == "truth_p") ls >> snap.truth_p.x() >> snap.truth_p.y() >> snap.truth_p.z();
      else if (key == "truth_v") ls >> snap.truth_v.x() >> snap.truth_v.y() >> snap.truth_v.z();
      continue;
    }
    long ell = 0;
    double re = 0, im = 0, snr = 0;
    if (!(ls >> ell >> re >> im >> snr))
      throw std::runtime_error("read_snapshot: malformed row: " + line);
    if (ell != static_cast<long>(ys.size()))
      throw std::runtime_error("read_snapshot: rows out of order at ell = " + std::to_string(ell));
    ys.emplace_back(re, im);
    snrs.push_back(snr);
  }
  if (!magic) throw std::runtime_error("read_snapshot: missing '# risloc snapshot' header");
  snap.y = Eigen::Map<const Eigen::VectorXcd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  snap.snr_db = Eigen::Map<const Eigen::VectorXd>(snrs.data(), static_cast<Eigen::Index>(snrs.size()));
  if (snap.scenario_hash == "-") snap.scenario_hash.clear();
  return snap;
}

}  // namespace risloc
