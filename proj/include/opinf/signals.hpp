#pragma once

#include <vector>

namespace opinf {

enum class SignalKind { zero, impulse_like, harmonic, table };

/// Scalar excitation u(t); broadcast across input channels by the integrators.
class InputSignal {
 public:
  InputSignal() = default;

  double operator()(double t) const;
  SignalKind kind() const { return kind_; }

  static InputSignal zero();
  static InputSignal impulse(double amplitude, double width);
  static InputSignal harmonic(double amplitude, double omega, double phase = 0.0);
  static InputSignal table(std::vector<double> times, std::vector<double> values);

 private:
  SignalKind kind_ = SignalKind::zero;
  double amplitude_ = 0.0;
  double width_ = 0.0;
  double omega_ = 0.0;
  double phase_ = 0.0;
  std::vector<double> times_;
  std::vector<double> values_;
};

/// Half-sine pulse: u(t) = amplitude*sin(pi t / width) on [0, width], 0 elsewhere.
InputSignal impulse_signal(double amplitude, double width);

/// u(t) = amplitude*sin(omega t + phase).
InputSignal harmonic_signal(double amplitude, double omega, double phase = 0.0);

/// Piecewise-linear interpolation of (times, values); 0 outside the table.
InputSignal table_signal(std::vector<double> times, std::vector<double> values);

}  // namespace opinf
