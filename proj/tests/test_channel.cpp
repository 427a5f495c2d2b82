#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "qoc/channel.hpp"
#include "qoc/error.hpp"

using namespace qoc;
using doctest::Approx;

TEST_CASE("path loss") {
  CHECK(path_loss_db(1.0) == Approx(148.1));
  CHECK(path_loss_db(0.1) == Approx(110.5).epsilon(1e-12));
  CHECK(path_loss_db(0.5) == Approx(136.78127216303430).epsilon(1e-13));
  CHECK_THROWS_AS(path_loss_db(0.0), DomainError);
  CHECK_THROWS_AS(path_loss_db(-1.0), DomainError);
}

TEST_CASE("shadowing draws") {
  Rng rng(11);
  std::vector<double> xs(100000);
  for (auto& x : xs) x = sample_shadowing(rng);
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / (xs.size() - 1));
  CHECK(std::abs(mean) < 0.1);
  CHECK(std::abs(sd - 8.0) < 0.3);

  Rng a(5), b(5);
  for (int i = 0; i < 10; ++i) CHECK(sample_shadowing(a) == sample_shadowing(b));
}

TEST_CASE("Doppler autocorrelation") {
  CHECK(doppler_autocorrelation(0.0, 0.05, 2e9) == 1.0);
  CHECK(doppler_autocorrelation(60.0, 0.05, 2e9) == Approx(-0.12218321813177333).epsilon(1e-10));
  const double lit = doppler_autocorrelation(60.0, 0.05, 2e9, DopplerMode::carrier_ratio);
  CHECK(lit == Approx(1.0).epsilon(1e-15));
  CHECK(lit <= 1.0);
  CHECK(parse_doppler_mode("carrier_ratio") == DopplerMode::carrier_ratio);
  CHECK(to_string(DopplerMode::jakes) == "jakes");
  CHECK_THROWS_AS(parse_doppler_mode("bogus"), DomainError);
}

TEST_CASE("AR(1) fading degenerate cases") {
  FadingProcess still(1.0, {0.3, -0.4}, 9);
  for (int i = 0; i < 5; ++i) still.step();
  CHECK(still.state() == std::complex<double>(0.3, -0.4));

  // rho = 0: next state is a fresh draw that ignores the old one.
  FadingProcess a(0.0, {100.0, 0.0}, 3);
  FadingProcess b(0.0, {-5.0, 2.0}, 3);
  a.step();
  b.step();
  CHECK(a.state() == b.state());
  CHECK(std::abs(a.state()) < 10.0);

  const auto c = step_fading(a);
  CHECK(c.state() != a.state());
  CHECK_THROWS_AS(FadingProcess(1.5, 1), DomainError);
}

TEST_CASE("AR(1) fading statistics") {
  for (double rho : {0.9, -0.122, 0.0}) {
    FadingProcess p(rho, 42);
    const int n = 100000;
    std::vector<std::complex<double>> h(n);
    for (int i = 0; i < n; ++i) {
      h[i] = p.state();
      p.step();
    }
    double power = 0.0;
    for (auto v : h) power += std::norm(v);
    power /= n;
    CHECK(std::abs(power - 1.0) < 0.02);

    std::complex<double> lag{0.0, 0.0};
    for (int i = 0; i + 1 < n; ++i) lag += h[i + 1] * std::conj(h[i]);
    const double r = lag.real() / (n - 1) / power;
    CHECK_MESSAGE(std::abs(r - rho) < 0.02, "rho=" << rho << " got " << r);
  }
}

TEST_CASE("Rayleigh magnitude distribution") {
  Rng rng(8);
  std::vector<double> mags(100000);
  for (auto& m : mags) m = std::abs(sample_complex_gaussian(rng, 1.0));
  std::sort(mags.begin(), mags.end());
  double ks = 0.0;
  const double n = static_cast<double>(mags.size());
  for (std::size_t i = 0; i < mags.size(); ++i) {
    const double cdf = 1.0 - std::exp(-mags[i] * mags[i]);
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  CHECK(ks <= 0.02);
}

TEST_CASE("Shannon rate") {
  CHECK(shannon_rate(1e6, 1e6) == Approx(1e6).epsilon(1e-14));
  CHECK(shannon_rate(10e6, 15.0 * 10e6) == Approx(40e6).epsilon(1e-14));
  CHECK_THROWS_AS(shannon_rate(0.0, 1e6), DomainError);
  CHECK_THROWS_AS(shannon_rate(-1.0, 1e6), DomainError);

  VehicleLink link{0.1, 0.0, 23.0, -174.0};
  ChannelState s{path_loss_db(0.1), {1.0, 0.0}};
  CHECK(transmission_rate(10e6, link, s) == Approx(55131230.520052730).epsilon(1e-10));

  const double c = snr_bandwidth_product(link, s);
  const double h = 1.0;
  const double fd = (shannon_rate(5e6 + h, c) - shannon_rate(5e6 - h, c)) / (2 * h);
  CHECK(shannon_rate_slope(5e6, c) == Approx(fd).epsilon(1e-6));
  CHECK(shannon_rate(1e12, c) < shannon_rate_ceiling(c));

  const double target = 30e6;
  const double b = bandwidth_for_rate(target, c);
  CHECK(shannon_rate(b, c) == Approx(target).epsilon(1e-10));
  CHECK(std::isinf(bandwidth_for_rate(shannon_rate_ceiling(c), c)));
  CHECK(bandwidth_for_rate(0.0, c) == 0.0);
}

TEST_CASE("Shannon rate is increasing and concave in bandwidth") {
  Rng rng(3);
  std::uniform_real_distribution<double> u(1e3, 20e6);
  const double c = 4e7;
  int violations = 0;
  for (int k = 0; k < 1000; ++k) {
    const double x = u(rng);
    const double y = u(rng);
    const double lo = std::min(x, y);
    const double hi = std::max(x, y);
    if (lo < hi) CHECK(shannon_rate(lo, c) < shannon_rate(hi, c));
    const double mid = shannon_rate(0.5 * (x + y), c);
    if (0.5 * (shannon_rate(x, c) + shannon_rate(y, c)) - mid > 1e-9 * mid) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("channel snapshot") {
  CHECK(make_channel_snapshot({}, {}, {}).empty());

  std::vector<VehicleLink> links{{0.2, 10.0}, {0.6, 30.0}, {1.0, 50.0}};
  std::vector<double> shadow{1.0, -2.0, 0.5};
  std::vector<FadingProcess> procs;
  for (std::uint64_t s = 0; s < 3; ++s) procs.emplace_back(0.5, s);
  const auto first = make_channel_snapshot(links, shadow, procs);
  const auto second = make_channel_snapshot(links, shadow, procs);
  CHECK(first == second);
  REQUIRE(first.size() == 3);
  for (std::size_t m = 0; m < 3; ++m) {
    CHECK(std::isfinite(first[m].power_gain()));
    CHECK(first[m].large_scale_db == Approx(path_loss_db(links[m].distance_km) + shadow[m]));
  }
  std::vector<double> short_shadow{1.0};
  CHECK_THROWS_AS(make_channel_snapshot(links, short_shadow, procs), DomainError);
}
