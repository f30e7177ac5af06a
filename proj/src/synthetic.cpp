#include "liqvol/synthetic.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <random>

namespace liqvol {

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  if (spec.assets < 1 || spec.days < 2 || spec.minutes_per_day < 2) {
    throw std::invalid_argument("generate_synthetic: need at least one asset, two days and two minutes");
  }
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::student_t_distribution<double> student(5.0);
  const double t_scale = std::sqrt(3.0 / 5.0);  // unit variance for 5 dof

  const int N = spec.assets;
  const int T = spec.minutes_per_day;
  std::vector<double> drift(N), loading(N), base_volume(N), close(N), h(N);
  for (int i = 0; i < N; ++i) {
    drift[i] = 0.0004 + 0.0016 * uniform(rng);
    loading[i] = 0.5 + 0.4 * uniform(rng);
    base_volume[i] = std::exp(13.0 + 2.0 * uniform(rng));
    close[i] = 20.0 * (i + 1) * (1.0 + uniform(rng));
  }
  const double target_var = 0.0009;
  const double ga = 0.08;
  const double gb = 0.88;
  const double gw = target_var * (1.0 - ga - gb);
  std::fill(h.begin(), h.end(), target_var);
  // factor strength follows a DCC-type recursion on the daily factor shock
  double strength = 1.0;

  // regime days arrive in blocks of 10 to 30 days
  SyntheticData out;
  out.jump_regime.assign(static_cast<std::size_t>(spec.days), false);
  for (int d = 0; d < spec.days;) {
    const int len = 10 + static_cast<int>(uniform(rng) * 21.0);
    const bool on = uniform(rng) < spec.jump_regime_share;
    for (int k = d; k < std::min(spec.days, d + len); ++k) out.jump_regime[static_cast<std::size_t>(k)] = on;
    d += len;
  }

  std::vector<double> f(static_cast<std::size_t>(T));
  for (int d = 0; d < spec.days; ++d) {
    const Date date = spec.start + std::chrono::days{d};
    const bool jump = out.jump_regime[static_cast<std::size_t>(d)];
    double factor_sum = 0.0;
    for (auto& x : f) {
      x = student(rng) * t_scale;
      factor_sum += x;
    }
    std::vector<MinuteGrid> day(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      auto& g = day[static_cast<std::size_t>(i)];
      g.symbol = fmt::format("SYN{}", i + 1);
      g.date = date;
      const double s = std::sqrt(h[i] / T);
      const double beta = std::min(0.97, loading[i] * std::sqrt(strength));
      const double idio = std::sqrt(1.0 - beta * beta);
      double day_ret = 1.0;
      for (int k = 0; k < T; ++k) {
        const double z = student(rng) * t_scale;
        const double r = drift[i] / T + s * (beta * f[static_cast<std::size_t>(k)] + idio * z);
        double volume;
        if (jump) {
          volume = base_volume[i] * std::exp(0.8 * normal(rng));
          if (uniform(rng) < 0.15) volume *= 3.0 + 12.0 * uniform(rng);
        } else {
          volume = base_volume[i] * (0.25 + std::abs(r) / s) * std::exp(0.2 * normal(rng));
        }
        close[i] *= 1.0 + r;
        g.returns.push_back(r);
        g.dollar_volume.push_back(volume * close[i] / 100.0);
        g.closes.push_back(close[i]);
        day_ret *= 1.0 + r;
      }
      const double e = day_ret - 1.0 - drift[i];
      h[i] = gw + ga * e * e + gb * h[i];
    }
    const double shock = factor_sum * factor_sum / T;
    strength = std::clamp(0.05 + 0.05 * shock + 0.9 * strength, 0.2, 1.6);
    for (auto& g : day) out.grids.push_back(std::move(g));
  }
  return out;
}

void write_synthetic_csv(const std::filesystem::path& path, const SyntheticSpec& spec) {
  const SyntheticData data = generate_synthetic(spec);
  CalendarSpec cal = CalendarSpec::crypto();
  cal.minutes_per_day = spec.minutes_per_day;
  write_minute_csv(path, data.grids, cal);
}

}  // namespace liqvol
