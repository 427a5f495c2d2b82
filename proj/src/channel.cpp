#include "qoc/channel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "qoc/bessel.hpp"
#include "qoc/error.hpp"

namespace qoc {

void validate(const VehicleLink& link) {
  if (!(link.distance_km > 0.0) || !std::isfinite(link.distance_km))
    throw DomainError(fmt::format("distance must be > 0 km, got {}", link.distance_km));
  if (!(link.speed_kmh >= 0.0) || !std::isfinite(link.speed_kmh))
    throw DomainError(fmt::format("speed must be >= 0 km/h, got {}", link.speed_kmh));
  if (!std::isfinite(link.tx_power_dbm) || !std::isfinite(link.noise_psd_dbm_hz))
    throw DomainError("link power levels must be finite");
}

double ChannelState::power_gain() const {
  return std::pow(10.0, -large_scale_db / 10.0) * std::norm(small_scale);
}

DopplerMode parse_doppler_mode(std::string_view text) {
  if (text == "jakes") return DopplerMode::jakes;
  if (text == "carrier_ratio" || text == "carrier-ratio") return DopplerMode::carrier_ratio;
  throw DomainError(fmt::format("unknown doppler mode '{}'", text));
}

std::string_view to_string(DopplerMode mode) {
  return mode == DopplerMode::jakes ? "jakes" : "carrier_ratio";
}

double path_loss_db(double distance_km) {
  if (!(distance_km > 0.0))
    throw DomainError(fmt::format("distance must be > 0 km, got {}", distance_km));
  return 148.1 + 37.6 * std::log10(distance_km);
}

double sample_shadowing(Rng& rng, double std_db) {
  std::normal_distribution<double> normal(0.0, std_db);
  return normal(rng);
}

double doppler_autocorrelation(double speed_kmh, double interval_s, double carrier_hz,
                               DopplerMode mode) {
  const double speed_ms = speed_kmh / 3.6;
  const double arg = mode == DopplerMode::jakes
                         ? 2.0 * std::numbers::pi * (speed_ms * carrier_hz / kSpeedOfLight) * interval_s
                         : 2.0 * std::numbers::pi * speed_ms * interval_s / carrier_hz;
  return bessel_j0(arg);
}

std::complex<double> sample_complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> normal(0.0, std::sqrt(variance / 2.0));
  const double re = normal(rng);
  const double im = normal(rng);
  return {re, im};
}

FadingProcess::FadingProcess(double rho, std::uint64_t seed)
    : rho_(rho), seed_(seed), rng_(seed) {
  if (!(std::fabs(rho) <= 1.0)) throw DomainError(fmt::format("|rho| must be <= 1, got {}", rho));
  state_ = sample_complex_gaussian(rng_, 1.0);
}

FadingProcess::FadingProcess(double rho, std::complex<double> state, std::uint64_t seed)
    : rho_(rho), state_(state), seed_(seed), rng_(seed) {
  if (!(std::fabs(rho) <= 1.0)) throw DomainError(fmt::format("|rho| must be <= 1, got {}", rho));
}

void FadingProcess::step() {
  const double noise_var = 1.0 - rho_ * rho_;
  const auto e = noise_var > 0.0 ? sample_complex_gaussian(rng_, noise_var)
                                 : std::complex<double>{};
  state_ = rho_ * state_ + e;
}

FadingProcess step_fading(FadingProcess process) {
  process.step();
  return process;
}

double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

double snr_bandwidth_product(const VehicleLink& link, const ChannelState& state) {
  return dbm_to_watts(link.tx_power_dbm) * state.power_gain() /
         dbm_to_watts(link.noise_psd_dbm_hz);
}

double shannon_rate(double bandwidth_hz, double snr_product_hz) {
  if (!(bandwidth_hz > 0.0))
    throw DomainError(fmt::format("bandwidth must be > 0 Hz, got {}", bandwidth_hz));
  return bandwidth_hz * std::log1p(snr_product_hz / bandwidth_hz) / std::numbers::ln2;
}

double shannon_rate_slope(double bandwidth_hz, double snr_product_hz) {
  const double x = snr_product_hz / bandwidth_hz;
  return (std::log1p(x) - x / (1.0 + x)) / std::numbers::ln2;
}

double shannon_rate_ceiling(double snr_product_hz) { return snr_product_hz / std::numbers::ln2; }

double bandwidth_for_rate(double rate_bps, double snr_product_hz) {
  if (rate_bps <= 0.0) return 0.0;
  if (!(snr_product_hz > 0.0) || rate_bps >= shannon_rate_ceiling(snr_product_hz))
    return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  double hi = std::max(1.0, rate_bps);
  while (shannon_rate(hi, snr_product_hz) < rate_bps) {
    lo = hi;
    hi *= 2.0;
    if (!std::isfinite(hi)) return std::numeric_limits<double>::infinity();
  }
  while (hi - lo > 1e-12 * hi) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (shannon_rate(mid, snr_product_hz) < rate_bps)
      lo = mid;
    else
      hi = mid;
  }
  return hi;
}

double transmission_rate(double bandwidth_hz, const VehicleLink& link, const ChannelState& state) {
  return shannon_rate(bandwidth_hz, snr_bandwidth_product(link, state));
}

std::vector<ChannelState> make_channel_snapshot(std::span<const VehicleLink> links,
                                                std::span<const double> shadowing_db,
                                                std::span<const FadingProcess> processes) {
  if (links.size() != processes.size() || links.size() != shadowing_db.size())
    throw DomainError(fmt::format("snapshot inputs disagree in length: {} links, {} shadowing, {} processes",
                                  links.size(), shadowing_db.size(), processes.size()));
  std::vector<ChannelState> out;
  out.reserve(links.size());
  for (std::size_t m = 0; m < links.size(); ++m)
    out.push_back({path_loss_db(links[m].distance_km) + shadowing_db[m], processes[m].state()});
  return out;
}

}  // namespace qoc
