#include "risbin/channel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "risbin/errors.hpp"

namespace risbin {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double wavelength(double carrier_freq_hz) {
  if (!(carrier_freq_hz > 0.0)) throw DomainError("carrier frequency must be positive");
  return kSpeedOfLight / carrier_freq_hz;
}

void Geometry::validate() const {
  if (bs_antennas < 1) throw ConfigError("K (BS antennas) must be >= 1");
  if (ris_elements < 1) throw ConfigError("N (RIS elements) must be >= 1");
  if (element_spacing && !(*element_spacing > 0.0)) throw ConfigError("element spacing must be positive");
  if ((bs_pos - ris_pos).norm() <= 0.0) throw ConfigError("BS and RIS positions coincide");
  if ((ue_pos - ris_pos).norm() <= 0.0) throw ConfigError("UE and RIS positions coincide");
  if ((bs_pos - ue_pos).norm() <= 0.0) throw ConfigError("BS and UE positions coincide");
}

void ChannelParams::validate() const {
  if (!(carrier_freq > 0.0)) throw ConfigError("carrier frequency must be positive");
  if (!(ricean_kappa >= 0.0)) throw ConfigError("Ricean factor must be non-negative");
  if (!(noise_power > 0.0)) throw ConfigError("noise power must be positive");
  if (!(tx_power > 0.0)) throw ConfigError("transmit power must be positive");
}

double pathloss(double distance, double carrier_freq) {
  if (!(distance > 0.0)) throw DomainError("pathloss distance must be positive");
  return wavelength(carrier_freq) / (4.0 * std::numbers::pi * distance);
}

Eigen::VectorXcd los_phase_vector(const Eigen::Vector3d& source, const std::vector<Eigen::Vector3d>& elements,
                                  double lambda) {
  if (!(lambda > 0.0)) throw DomainError("wavelength must be positive");
  Eigen::VectorXcd out(static_cast<Eigen::Index>(elements.size()));
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const double d = (elements[i] - source).norm();
    if (!(d > 0.0)) throw ConfigError("element " + std::to_string(i) + " coincides with the source");
    out(static_cast<Eigen::Index>(i)) = std::polar(1.0, -2.0 * std::numbers::pi * d / lambda);
  }
  return out;
}

std::vector<Eigen::Vector3d> ris_element_positions(const Geometry& geom, double lambda) {
  const int n = geom.ris_elements;
  const double spacing = geom.element_spacing.value_or(lambda / 2.0);
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  const int rows = (n + cols - 1) / cols;
  std::vector<Eigen::Vector3d> pos;
  pos.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int r = i / cols;
    const int c = i % cols;
    pos.push_back(geom.ris_pos + Eigen::Vector3d(0.0, (c - (cols - 1) / 2.0) * spacing,
                                                 (r - (rows - 1) / 2.0) * spacing));
  }
  return pos;
}

std::vector<Eigen::Vector3d> bs_antenna_positions(const Geometry& geom, double lambda) {
  const int k = geom.bs_antennas;
  const double spacing = lambda / 2.0;
  std::vector<Eigen::Vector3d> pos;
  pos.reserve(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) {
    pos.push_back(geom.bs_pos + Eigen::Vector3d((i - (k - 1) / 2.0) * spacing, 0.0, 0.0));
  }
  return pos;
}

Eigen::MatrixXcd sample_ricean(const Eigen::MatrixXcd& los, double kappa, double scale, Rng& rng) {
  if (!(kappa >= 0.0)) throw DomainError("Ricean factor must be non-negative");
  double w_los = 1.0;
  double w_nlos = 0.0;
  if (!std::isinf(kappa)) {
    w_los = std::sqrt(kappa / (kappa + 1.0));
    w_nlos = std::sqrt(1.0 / (kappa + 1.0));
  }
  const double component_sd = std::sqrt(0.5);
  Eigen::MatrixXcd out(los.rows(), los.cols());
  // Row-major draw order so the sequence does not depend on storage layout.
  for (Eigen::Index r = 0; r < los.rows(); ++r) {
    for (Eigen::Index c = 0; c < los.cols(); ++c) {
      const double re = rng.normal() * component_sd;
      const double im = rng.normal() * component_sd;
      out(r, c) = scale * (w_los * los(r, c) + w_nlos * std::complex<double>(re, im));
    }
  }
  return out;
}

ChannelModel::ChannelModel(Geometry geom, ChannelParams params) : geom_(std::move(geom)), params_(params) {
  geom_.validate();
  params_.validate();
  const double lambda = wavelength(params_.carrier_freq);
  const auto elements = ris_element_positions(geom_, lambda);
  const auto antennas = bs_antenna_positions(geom_, lambda);

  los_h_.resize(geom_.ris_elements, geom_.bs_antennas);
  for (int k = 0; k < geom_.bs_antennas; ++k) {
    los_h_.col(k) = los_phase_vector(antennas[static_cast<std::size_t>(k)], elements, lambda);
  }
  los_g_ = los_phase_vector(geom_.ue_pos, elements, lambda);
  scale_h_ = pathloss((geom_.bs_pos - geom_.ris_pos).norm(), params_.carrier_freq);
  scale_g_ = pathloss((geom_.ue_pos - geom_.ris_pos).norm(), params_.carrier_freq);
}

ChannelRealization ChannelModel::sample(Rng& rng) const {
  ChannelRealization r;
  r.H = sample_ricean(los_h_, params_.ricean_kappa, scale_h_, rng);
  r.g = sample_ricean(los_g_, params_.ricean_kappa, scale_g_, rng);
  return r;
}

ChannelRealization sample_channels(const Geometry& geom, const ChannelParams& params, Rng& rng) {
  return ChannelModel(geom, params).sample(rng);
}

}  // namespace risbin
