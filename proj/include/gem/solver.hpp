#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "gem/types.hpp"

namespace gem {

/// Input probe pulse. Times are on the simulation clock; a center_time of 0
/// picks the default 3 * fwhm so the pulse fits inside the window.
struct ProbePulse {
    enum class Shape { gaussian, custom };

    Shape shape = Shape::gaussian;
    double fwhm = 10e-6;        // s, intensity full width at half maximum
    double peak_amplitude = 1.0;
    double center_time = 0.0;   // s; 0 = auto
    double two_photon_offset = 0.0; // Hz, carrier offset from two-photon resonance

    // custom shape: samples of the complex envelope, linearly interpolated,
    // zero outside the sampled range. Times are relative to center_time.
    std::vector<double> sample_times;
    std::vector<std::complex<double>> sample_amplitudes;

    void validate() const;
    double resolved_center() const { return center_time > 0.0 ? center_time : 3.0 * fwhm; }
    std::complex<double> envelope(double t) const; // t on the simulation clock
};

/// Phenomenological spin-coherence decay. storage_rate acts while the
/// coupling field is off, write_read_rate while it is on. The
/// gaussian_quadrature form makes the hold-window decay Gaussian in time,
/// as thermal motion would.
struct DecoherenceModel {
    enum class Form { exponential, gaussian_quadrature };

    double storage_rate = 0.0;    // Hz
    double write_read_rate = 0.0; // Hz
    Form form = Form::exponential;

    void validate() const;
};

struct SimulationGrid {
    int n_z = 256;
    double dt = 0.0;    // s; 0 = auto
    double t_end = 0.0; // s; 0 = auto

    void validate() const;
};

/// Interval, relative to the pulse centre, during which the coupling field
/// is switched off (the storage hold of a delayed-recall run).
struct HoldWindow {
    double begin = 0.0;
    double end = 0.0;
};

/// Full record of one storage/recall run. Times in the output traces are
/// relative to the input pulse centre, so the echo peaks near 2 * t_s.
struct SimulationResult {
    std::vector<double> time;                    // s, relative to pulse centre
    std::vector<std::complex<double>> probe_in;  // boundary field at z = 0
    std::vector<std::complex<double>> probe_out; // transmitted field at z = l

    std::vector<double> spin_times;      // decimated record
    std::vector<double> spin_positions;  // z grid, m
    std::vector<std::vector<std::complex<double>>> spin_field; // [time][z]

    double input_energy = 0.0;
    double leak_energy = 0.0;     // output integrated over the write window
    double echo_energy = 0.0;     // output integrated from the gradient flip on
    double residual_energy = 0.0; // spin energy left at t_end
    double echo_peak_time = 0.0;  // s, relative to pulse centre
    bool echo_found = false;
    double dt = 0.0;
    double switch_time = 0.0;
};

/// Collective Raman coupling constant kappa of the linearized equations,
/// pinned so that the in-band write transmission equals exp(-x) with x the
/// analytic Raman exponent: kappa^2 = 2 pi OD_eff gamma Omega_c^2 / (l Delta^2).
double raman_coupling_constant(const EnsembleProfile& ensemble, const TransitionLine& line,
                               const RamanCoupling& coupling);

/// Spin damping rate (1/s) used as the natural Raman linewidth of the
/// steady-state line scan; chosen so the ungradiented peak Raman OD equals
/// the effective resonant OD.
double natural_raman_rate(const TransitionLine& line, const RamanCoupling& coupling);

/// Integrate the 1D linearized gradient-echo equations through write, hold,
/// gradient flip and read. The read gradient may have the same sign as the
/// write gradient, in which case no echo forms.
SimulationResult run_storage_recall(const EnsembleProfile& ensemble, const TransitionLine& line,
                                    const RamanCoupling& coupling, const ProbePulse& pulse,
                                    const GradientSchedule& schedule,
                                    const DecoherenceModel& decoherence,
                                    const SimulationGrid& grid,
                                    std::optional<HoldWindow> coupling_off = std::nullopt);

/// leak_energy / input_energy.
double leakage_fraction(const SimulationResult& result);

/// echo_energy / input_energy.
double echo_efficiency(const SimulationResult& result);

struct RamanScanPoint {
    double detuning;          // two-photon detuning, Hz
    double absorbed_fraction; // 1 - intensity transmission
    double raman_od;          // -ln(transmission)
};

/// Steady-state weak-probe absorption profile of the gradient-broadened
/// Raman line over [-scan_range/2, +scan_range/2]. eta = 0 gives the
/// unbroadened line.
std::vector<RamanScanPoint> raman_line_scan(const EnsembleProfile& ensemble,
                                            const TransitionLine& line,
                                            const RamanCoupling& coupling, double eta,
                                            double scan_range, int n_points);

struct SweepPoint {
    double storage_time;     // s, = 2 * t_s
    double total_efficiency; // echo_energy / input_energy
};

/// One storage/recall run per switch time, with the coupling field off
/// during the hold between the end of the write and the gradient flip.
/// Runs are independent and may execute on n_threads workers.
std::vector<SweepPoint> sweep_storage_time(const EnsembleProfile& ensemble,
                                           const TransitionLine& line,
                                           const RamanCoupling& coupling,
                                           const ProbePulse& pulse,
                                           const GradientSchedule& schedule,
                                           const DecoherenceModel& decoherence,
                                           const SimulationGrid& grid,
                                           const std::vector<double>& switch_times,
                                           int n_threads = 1);

} // namespace gem
