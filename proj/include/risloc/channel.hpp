#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "risloc/geometry.hpp"

namespace risloc {

using Complex = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }

/// Physical constants and link budget of one BS -> RIS -> UE downlink.
/// All quantities are linear SI; dB values are converted on construction.
struct Scenario {
  double frequency_hz = 23.8e9;
  double tx_power_w = 0.1;
  double gain_bs = 1.0;
  double gain_ue = 1.0;
  double noise_figure = 1.0;
  double temperature_k = 293.0;
  double bandwidth_hz = 1e6;
  Vec3 bs_position = Vec3(1.0, -3.0, 3.0);
  double sampling_time_s = 1e-4;
  int samples = 40;
  std::vector<Complex> reflection_set;
  double speed_of_light = 299792458.0;
  double boltzmann = 1.380649e-23;

  double wavelength() const { return speed_of_light / frequency_hz; }
  double wavenumber() const;

  /// Throws std::invalid_argument on a violated field invariant.
  void validate() const;

  /// 23.8 GHz, 20 dBm, 19 dB / 3.2 dB gains, 8 dB noise figure, 293 K,
  /// 1 MHz, BS at (1, -3, 3) m, T_s = 0.1 ms, L = 40, 1-bit set
  /// {exp(-j15 deg), exp(j165 deg)}.
  static Scenario reference();
};

/// Unit-modulus reflection set from phases in degrees.
std::vector<Complex> reflection_set_from_degrees(std::span<const double> phases_deg);

/// M x L matrix of reflection coefficients gamma_{m,l}.
struct Codebook {
  Eigen::MatrixXcd gamma;

  Eigen::Index cells() const { return gamma.rows(); }
  Eigen::Index samples() const { return gamma.cols(); }
};

/// Each entry drawn independently and uniformly from `set`.
Codebook random_codebook(Eigen::Index cells, Eigen::Index samples,
                         std::span<const Complex> set, std::uint64_t seed);

/// k_B T B n_f.
double noise_power(const Scenario& s);

/// Product of the BS, RIS receive, RIS transmit and UE pattern factors for
/// cell m seen from UE position p. Cosines are formed with the law of
/// cosines; values within 1e-9 outside [-1, 1] are clamped, anything
/// further out is a GeometryError. Both p and the BS must lie in front of
/// the surface (positive x).
double combined_pattern(Eigen::Index m, const Vec3& p, const RisLayout& layout,
                        const Scenario& s);

/// Full propagation model for sample `ell`: UE at p + v * ell * T_s, sum
/// over every cell with spherical-wave phases, per-cell path loss and,
/// unless `use_pattern` is false, the square root of the combined pattern.
Complex channel_coefficient(Eigen::Index ell, const Vec3& p, const Vec3& v,
                            const RisLayout& layout, const Codebook& codebook,
                            const Scenario& s, bool use_pattern = true);

/// All L coefficients at once.
Eigen::VectorXcd channel_coefficients(const Vec3& p, const Vec3& v, const RisLayout& layout,
                                      const Codebook& codebook, const Scenario& s,
                                      bool use_pattern = true);

struct SnapshotOptions {
  bool use_pattern = true;
  /// Skip the noise draw. SNR is still reported against k_B T B n_f.
  bool noiseless = false;
};

struct Snapshot {
  Eigen::VectorXcd y;
  Vec3 truth_p = Vec3::Zero();
  Vec3 truth_v = Vec3::Zero();
  Eigen::VectorXd snr_db;
  std::uint64_t codebook_seed = 0;
  std::uint64_t noise_seed = 0;
  bool use_pattern = true;
  std::string scenario_hash;

  /// 10 log10 of the sample-averaged linear SNR.
  double mean_snr_db() const;
};

/// y_l = h'_l sqrt(P_BS) + n_l with unit pilots and n_l ~ CN(0, P_n)
/// (P_n / 2 per quadrature), reproducible from `noise_seed`.
Snapshot generate_snapshot(const Vec3& p, const Vec3& v, const RisLayout& layout,
                           const Codebook& codebook, const Scenario& s,
                           std::uint64_t noise_seed, const SnapshotOptions& opts = {});

/// Header lines (`# key value...`) followed by `ell re im snr_db` rows,
/// 12 significant digits.
void write_snapshot(std::ostream& os, const Snapshot& snap);
Snapshot read_snapshot(std::istream& is);

}  // namespace risloc
