#include "opinf/signals.hpp"

#include <algorithm>
#include <cmath>

#include "opinf/errors.hpp"

namespace opinf {

double InputSignal::operator()(double t) const {
  switch (kind_) {
    case SignalKind::zero:
      return 0.0;
    case SignalKind::impulse_like:
      if (t < 0.0 || t > width_) return 0.0;
      return amplitude_ * std::sin(M_PI * t / width_);
    case SignalKind::harmonic:
      return amplitude_ * std::sin(omega_ * t + phase_);
    case SignalKind::table: {
      if (t < times_.front() || t > times_.back()) return 0.0;
      auto hi = std::upper_bound(times_.begin(), times_.end(), t);
      if (hi == times_.begin()) return values_.front();
      if (hi == times_.end()) return values_.back();
      const auto i = static_cast<std::size_t>(hi - times_.begin());
      const double t0 = times_[i - 1];
      const double t1 = times_[i];
      const double w = (t - t0) / (t1 - t0);
      return (1.0 - w) * values_[i - 1] + w * values_[i];
    }
  }
  return 0.0;
}

InputSignal InputSignal::zero() { return InputSignal{}; }

InputSignal InputSignal::impulse(double amplitude, double width) {
  if (amplitude <= 0.0 || width <= 0.0) throw Error("impulse amplitude and width must be positive");
  InputSignal s;
  s.kind_ = SignalKind::impulse_like;
  s.amplitude_ = amplitude;
  s.width_ = width;
  return s;
}

InputSignal InputSignal::harmonic(double amplitude, double omega, double phase) {
  if (amplitude <= 0.0 || omega <= 0.0) throw Error("harmonic amplitude and omega must be positive");
  InputSignal s;
  s.kind_ = SignalKind::harmonic;
  s.amplitude_ = amplitude;
  s.omega_ = omega;
  s.phase_ = phase;
  return s;
}

InputSignal InputSignal::table(std::vector<double> times, std::vector<double> values) {
  if (times.empty() || times.size() != values.size()) {
    throw Error("signal table needs matching nonempty times and values");
  }
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (!(times[i] > times[i - 1])) throw Error("signal table times must be strictly increasing");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw Error("signal table values must be finite");
  }
  InputSignal s;
  s.kind_ = SignalKind::table;
  s.times_ = std::move(times);
  s.values_ = std::move(values);
  return s;
}

InputSignal impulse_signal(double amplitude, double width) {
  return InputSignal::impulse(amplitude, width);
}

InputSignal harmonic_signal(double amplitude, double omega, double phase) {
  return InputSignal::harmonic(amplitude, omega, phase);
}

InputSignal table_signal(std::vector<double> times, std::vector<double> values) {
  return InputSignal::table(std::move(times), std::move(values));
}

}  // namespace opinf
