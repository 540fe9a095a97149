#pragma once

#include <string>

#include "gem/errors.hpp"

namespace gem {

/// Storage medium parameters: optical depth, geometry and thermodynamics of
/// the cold cloud. Lengths in metres, temperature in Kelvin, mass in kg.
struct EnsembleProfile {
    double od_resonant = 300.0;      // peak resonant optical depth
    double length = 5.0e-3;          // medium length along the probe axis
    double sigma_x = 0.3e-3;         // Gaussian cloud standard deviations
    double sigma_y = 0.3e-3;
    double sigma_z = 1.0e-3;
    double temperature = 200e-6;
    double atom_number = 4e9;
    double atomic_mass = 1.443e-25;  // 87Rb
    double mf_usable_fraction = 0.5; // fraction of atoms in the usable Zeeman state

    // Optical depth seen by the memory once the unusable Zeeman population
    // is discounted.
    double effective_od() const { return od_resonant * mf_usable_fraction; }

    void validate() const;
};

/// Optical transition: natural linewidth and the calibrated line-centre
/// correction, both in Hz.
struct TransitionLine {
    double gamma = 6.0e6;
    double center_offset = 0.0;

    void validate() const;
};

/// Two-photon Raman coupling parameters, all in Hz.
struct RamanCoupling {
    double rabi_frequency = 2.0e6;        // coupling-field Rabi frequency
    double one_photon_detuning = -250e6;  // detuning from the excited state
    double two_photon_detuning = 0.0;     // offset from two-photon resonance

    void validate() const;
};

/// Piecewise gradient plan: write gradient until switch_time (measured from
/// the arrival of the pulse centre), then a settle ramp to the read gradient.
struct GradientSchedule {
    enum class SettleModel { linear, exponential };

    double eta_write = 1.0e7;   // Hz/m
    double eta_read = -2.0e7;   // Hz/m, opposite sign for recall
    double switch_time = 30e-6; // s
    double settle_duration = 1.5e-6;
    double settle_tolerance = 0.01;
    SettleModel settle_model = SettleModel::linear;

    void validate() const;
    // Recall additionally needs the read gradient to oppose the write one.
    void validate_for_recall() const;
};

/// Summary figures of a storage/recall run.
struct EfficiencyReport {
    double storage_efficiency = 0.0;
    double recall_efficiency = 0.0;
    double total_efficiency = 0.0;
    double leakage_fraction = 0.0;
    double delay_bandwidth_product = 0.0;

    void validate() const;
};

} // namespace gem
