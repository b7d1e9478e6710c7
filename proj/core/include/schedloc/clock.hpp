#pragma once

namespace schedloc {

/// Per-node oscillator model C(t) = (1 + skew) t, together with the noise
/// sources the node contributes: timestamp jitter and the resolution error
/// of its generated response delays.
struct ClockParams {
  double skew = 0.0;             // dimensionless, crystal-tolerance scale
  double jitter_var = 0.0;       // s^2
  double delay_err_sigma = 0.0;  // s, std of the delay-generation error

  void validate() const;
};

/// Channel noise common to all links.
struct NoiseParams {
  double channel_var = 0.0;  // s^2

  void validate() const;
};

/// Per-measurement AWGN variance: two timestamp jitters plus two channel
/// crossings.
inline double measurement_variance(const ClockParams& clock, const NoiseParams& noise) {
  return 2.0 * clock.jitter_var + 2.0 * noise.channel_var;
}

}  // namespace schedloc
