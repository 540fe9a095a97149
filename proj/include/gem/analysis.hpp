#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gem/errors.hpp"

namespace gem {

inline constexpr double k_boltzmann = 1.380649e-23; // J/K, exact

/// Outcome of a damped least-squares fit.
struct FitResult {
    std::vector<std::string> parameter_names;
    std::vector<double> parameters;
    std::vector<std::vector<double>> covariance; // empty when not computable
    double residual_norm = 0.0;                  // sqrt(sum of squared residuals)
    bool converged = false;
    int iterations = 0;
    int excluded_points = 0; // inputs dropped before fitting (e.g. y <= 0)

    double parameter(const std::string& name) const;
    std::string to_key_value() const;
};

using XY = std::pair<double, double>;

/// Lorentzian peak y = A (w/2)^2 / ((x-c)^2 + (w/2)^2) + offset.
/// Parameters: center, fwhm, amplitude, offset.
FitResult fit_lorentzian(const std::vector<XY>& points,
                         const std::optional<std::vector<double>>& initial_guess = std::nullopt);

/// Gaussian y = A exp(-(x-mu)^2 / (2 sigma^2)) + offset.
/// Parameters: mean, sigma, amplitude, offset.
FitResult fit_gaussian(const std::vector<XY>& points,
                       const std::optional<std::vector<double>>& initial_guess = std::nullopt);

/// Exponential decay y = A exp(-t/tau), seeded log-linearly then refined.
/// Non-positive y points are excluded and counted in the result.
/// Parameters: amplitude, tau.
FitResult fit_exponential_decay(const std::vector<XY>& points);

struct TemperatureFit {
    double temperature = 0.0; // K
    double sigma0 = 0.0;      // cloud width at release, m
    bool unphysical = false;  // widths shrank; temperature clamped at 0
};

/// Ballistic-expansion thermometry: least-squares fit of
/// sigma(t)^2 = sigma0^2 + (kB T / m) t^2 to (time, width) samples.
TemperatureFit temperature_from_expansion(const std::vector<XY>& widths, double mass_kg);

/// Raw heterodyne beat record.
struct HeterodyneRecord {
    std::vector<double> samples;
    double sample_rate = 0.0;           // Hz
    double intermediate_frequency = 0.0; // Hz

    void validate() const; // Nyquist: sample_rate > 2 * IF
};

/// Zero-phase (forward-backward) second-order Butterworth low-pass.
std::vector<double> lowpass_zero_phase(const std::vector<double>& samples, double cutoff_hz,
                                       double sample_rate_hz);

/// Demodulate in phase: multiply by cos(2 pi f_IF t + phase), low-pass,
/// scale by 2. Returns the recovered field envelope (not squared).
/// Cutoff defaults to IF/5 when <= 0.
std::vector<double> demodulate(const HeterodyneRecord& record, double phase_rad,
                               double lowpass_cutoff_hz = 0.0);

/// demodulate() followed by squaring; an intensity-proportional envelope.
std::vector<double> demodulate_and_square(const HeterodyneRecord& record, double phase_rad,
                                          double lowpass_cutoff_hz = 0.0);

enum class TraceOrder { average_then_square, square_then_average };

/// Combine demodulated envelopes from repeated traces into one intensity
/// envelope. average_then_square averages the field envelopes first.
std::vector<double> combine_traces(const std::vector<std::vector<double>>& envelopes,
                                   TraceOrder order = TraceOrder::average_then_square);

struct EfficiencyEstimate {
    double efficiency = 0.0;
    double std_dev = 0.0;   // propagated from per-trace standard deviations
    double std_error = 0.0; // same, scaled by 1/sqrt(n) per side
    int n_input = 0;
    int n_echo = 0;
};

/// Ratio of mean integrated echo intensity to mean integrated input
/// intensity over repeated intensity-envelope traces.
EfficiencyEstimate efficiency_from_traces(const std::vector<std::vector<double>>& input_sq,
                                          const std::vector<std::vector<double>>& echo_sq,
                                          double dt_s);

/// Full width at half maximum of a sampled profile (baseline 0), linearly
/// interpolated between samples. Throws if the profile never crosses half max.
double full_width_half_max(const std::vector<double>& x, const std::vector<double>& y);

} // namespace gem
