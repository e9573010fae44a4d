#pragma once

// Ricean-faded, free-space-attenuated channels for the BS -> RIS -> UE link.

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "risbin/rng.hpp"

namespace risbin {

inline constexpr double kSpeedOfLight = 299792458.0;

double db_to_linear(double db);
double dbm_to_watts(double dbm);
double wavelength(double carrier_freq_hz);

struct Geometry {
  Eigen::Vector3d bs_pos{10.0, 5.0, 2.0};
  Eigen::Vector3d ue_pos{8.7, 14.4, 1.6};
  Eigen::Vector3d ris_pos{7.5, 13.0, 2.0};  // surface parallel to the y-z plane
  int bs_antennas = 4;                        // K
  int ris_elements = 16;                      // N
  std::optional<double> element_spacing;      // meters; half a wavelength when unset

  void validate() const;
};

struct ChannelParams {
  double carrier_freq = 5e9;             // Hz
  double ricean_kappa = 1000.0;          // linear (30 dB)
  double noise_power = dbm_to_watts(-100.0);
  double tx_power = dbm_to_watts(40.0);

  void validate() const;
  double snr_scale() const { return tx_power / noise_power; }
};

struct ChannelRealization {
  Eigen::MatrixXcd H;  // N x K, BS -> RIS
  Eigen::VectorXcd g;  // N, RIS -> UE
};

/// Free-space amplitude gain lambda / (4 pi d).
double pathloss(double distance, double carrier_freq);

/// exp(-j 2 pi d_i / lambda) for the exact source-to-element distances d_i.
Eigen::VectorXcd los_phase_vector(const Eigen::Vector3d& source,
                                  const std::vector<Eigen::Vector3d>& elements, double lambda);

/// Element centers on the y-z plane: ceil(sqrt(N)) columns along y, rows
/// along z filled row-major, grid bounding box centered on ris_pos.
std::vector<Eigen::Vector3d> ris_element_positions(const Geometry& geom, double lambda);
/// Uniform linear array along x centered on bs_pos.
std::vector<Eigen::Vector3d> bs_antenna_positions(const Geometry& geom, double lambda);

/// scale * (sqrt(k/(k+1)) los + sqrt(1/(k+1)) w), w ~ CN(0, 1) entrywise.
/// kappa = +inf yields the pure line-of-sight term.
Eigen::MatrixXcd sample_ricean(const Eigen::MatrixXcd& los, double kappa, double scale, Rng& rng);

/// Geometry-dependent quantities computed once; sample() then costs one
/// Gaussian draw per entry.
class ChannelModel {
 public:
  ChannelModel(Geometry geom, ChannelParams params);

  ChannelRealization sample(Rng& rng) const;

  const Geometry& geometry() const { return geom_; }
  const ChannelParams& params() const { return params_; }
  const Eigen::MatrixXcd& los_H() const { return los_h_; }
  const Eigen::VectorXcd& los_g() const { return los_g_; }
  double bs_ris_gain() const { return scale_h_; }
  double ris_ue_gain() const { return scale_g_; }

 private:
  Geometry geom_;
  ChannelParams params_;
  Eigen::MatrixXcd los_h_;
  Eigen::VectorXcd los_g_;
  double scale_h_ = 0.0;
  double scale_g_ = 0.0;
};

/// Fresh IID realization. Rebuilds the geometry each call; prefer
/// ChannelModel::sample in loops.
ChannelRealization sample_channels(const Geometry& geom, const ChannelParams& params, Rng& rng);

}  // namespace risbin
