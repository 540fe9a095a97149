#pragma once

#include "gem/types.hpp"

namespace gem {

/// Optical depth from a transmitted/reference intensity pair,
/// ln(i_reference / i_transmitted). Absorption gives a positive OD; gain
/// (noise) gives a negative one and is returned unclamped.
double beer_lambert_od(double i_transmitted, double i_reference);

/// Inverse of beer_lambert_od: transmitted intensity for a given OD.
double transmitted_intensity(double od, double i_reference);

/// Ratio between resonant and detuned OD, (delta^2 + gamma^2/4) / (gamma^2/4).
/// Multiplying a detuned OD by this factor recovers the resonant OD.
double resonance_scale_factor(double delta_hz, double gamma_hz);

/// Memory bandwidth |eta| * l of a gradient-broadened line.
double memory_bandwidth(double eta_hz_per_m, double length_m);

/// Gradient needed to realise a target bandwidth over a given length.
double eta_for_bandwidth(double bandwidth_hz, double length_m);

/// Effective Raman optical depth of the gradient-broadened line,
/// 2*pi * (OD_eff / B') * (Omega_c^2 / Delta^2) with B' = B/gamma.
/// Storage efficiency is 1 - exp(-exponent). Warns on stderr when the
/// far-detuned assumption Omega_c << |Delta| is stretched.
double raman_exponent(const EnsembleProfile& ensemble, const TransitionLine& line,
                      const RamanCoupling& coupling, double bandwidth_hz);

/// 1 - exp(-exponent); the single-pass write (or read) efficiency.
double storage_efficiency(double exponent);

/// eps_write * eps_read * exp(-storage_time / tau).
double total_efficiency_estimate(double eps_write, double eps_read, double tau_s,
                                 double storage_time_s);

/// Storage time times bandwidth; the mode-capacity figure of merit.
double delay_bandwidth_product(double tau_s, double bandwidth_hz);

} // namespace gem
