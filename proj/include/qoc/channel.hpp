#pragma once

// Per-vehicle wireless channel: distance path loss, log-normal shadowing,
// AR(1) Rayleigh small-scale fading and the Shannon transmission rate.

#include <complex>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace qoc {

using Rng = std::mt19937_64;

inline constexpr double kSpeedOfLight = 3.0e8;  // m/s
inline constexpr double kShadowingStdDb = 8.0;

struct VehicleLink {
  double distance_km = 0.5;
  double speed_kmh = 0.0;
  double tx_power_dbm = 23.0;
  double noise_psd_dbm_hz = -174.0;

  friend bool operator==(const VehicleLink&, const VehicleLink&) = default;
};

void validate(const VehicleLink& link);

struct ChannelState {
  double large_scale_db = 0.0;         // path loss + shadowing, as attenuation
  std::complex<double> small_scale{1.0, 0.0};

  /// Linear power gain: 10^(-large_scale_db/10) * |small_scale|^2.
  double power_gain() const;

  friend bool operator==(const ChannelState&, const ChannelState&) = default;
};

enum class DopplerMode {
  jakes,          // J0(2*pi*f_d*t), f_d = v*f_c/c
  carrier_ratio,  // J0(2*pi*v*t/f_c) with v in m/s
};

DopplerMode parse_doppler_mode(std::string_view text);
std::string_view to_string(DopplerMode mode);

/// 148.1 + 37.6*log10(d), d in km.
double path_loss_db(double distance_km);

/// One zero-mean normal draw in dB.
double sample_shadowing(Rng& rng, double std_db = kShadowingStdDb);

/// Lag autocorrelation of the small-scale fading over `interval_s`.
double doppler_autocorrelation(double speed_kmh, double interval_s, double carrier_hz,
                               DopplerMode mode = DopplerMode::jakes);

/// Draw from CN(0, variance): real and imaginary parts each N(0, variance/2).
std::complex<double> sample_complex_gaussian(Rng& rng, double variance);

/// First-order autoregressive Rayleigh coefficient h' = rho*h + e,
/// e ~ CN(0, 1 - rho^2). Owns its random stream; advance from one thread.
class FadingProcess {
 public:
  /// Initial state is drawn from the stationary CN(0, 1) law.
  FadingProcess(double rho, std::uint64_t seed);
  FadingProcess(double rho, std::complex<double> state, std::uint64_t seed);

  double rho() const noexcept { return rho_; }
  std::complex<double> state() const noexcept { return state_; }
  std::uint64_t seed() const noexcept { return seed_; }

  void step();

 private:
  double rho_;
  std::complex<double> state_;
  std::uint64_t seed_;
  Rng rng_;
};

/// Returns `process` advanced by one interval.
FadingProcess step_fading(FadingProcess process);

/// S*h/N0 in Hz: the SNR numerator per unit bandwidth of noise.
double snr_bandwidth_product(const VehicleLink& link, const ChannelState& state);

/// B*log2(1 + S*h/(N0*B)) in bits/s.
double transmission_rate(double bandwidth_hz, const VehicleLink& link, const ChannelState& state);

/// Rate for a precomputed snr_bandwidth_product, and its derivative in B.
double shannon_rate(double bandwidth_hz, double snr_product_hz);
double shannon_rate_slope(double bandwidth_hz, double snr_product_hz);

/// Limit of shannon_rate as B -> infinity: snr_product / ln 2.
double shannon_rate_ceiling(double snr_product_hz);

/// Smallest bandwidth reaching `rate_bps`, by bisection to relative 1e-12.
/// Returns +inf when the rate is at or above the ceiling.
double bandwidth_for_rate(double rate_bps, double snr_product_hz);

/// Combine per-episode large-scale terms with current fading coefficients.
std::vector<ChannelState> make_channel_snapshot(std::span<const VehicleLink> links,
                                                std::span<const double> shadowing_db,
                                                std::span<const FadingProcess> processes);

double dbm_to_watts(double dbm);

}  // namespace qoc
