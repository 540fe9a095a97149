#include "gem/types.hpp"

#include <cmath>

namespace gem {

namespace {

void require(bool ok, const std::string& message) {
    if (!ok) throw ValidationError(message);
}

bool finite(double v) { return std::isfinite(v); }

} // namespace

void EnsembleProfile::validate() const {
    require(finite(od_resonant) && od_resonant >= 0.0, "ensemble.od_resonant must be >= 0");
    require(finite(length) && length > 0.0, "ensemble.length_m must be > 0");
    require(finite(sigma_x) && sigma_x > 0.0, "ensemble.sigma_x_m must be > 0");
    require(finite(sigma_y) && sigma_y > 0.0, "ensemble.sigma_y_m must be > 0");
    require(finite(sigma_z) && sigma_z > 0.0, "ensemble.sigma_z_m must be > 0");
    require(finite(temperature) && temperature >= 0.0, "ensemble.temperature_k must be >= 0");
    require(finite(atom_number) && atom_number >= 0.0, "ensemble.atom_number must be >= 0");
    require(finite(atomic_mass) && atomic_mass > 0.0, "ensemble.atomic_mass_kg must be > 0");
    require(finite(mf_usable_fraction) && mf_usable_fraction >= 0.0 && mf_usable_fraction <= 1.0,
            "ensemble.mf_usable_fraction must be in [0, 1]");
}

void TransitionLine::validate() const {
    require(finite(gamma) && gamma > 0.0, "line.gamma_hz must be > 0");
    require(finite(center_offset), "line.center_offset_hz must be finite");
}

void RamanCoupling::validate() const {
    require(finite(rabi_frequency) && rabi_frequency >= 0.0,
            "coupling.rabi_frequency_hz must be >= 0");
    require(finite(one_photon_detuning), "coupling.one_photon_detuning_hz must be finite");
    require(finite(two_photon_detuning), "coupling.two_photon_detuning_hz must be finite");
}

void GradientSchedule::validate() const {
    require(finite(eta_write) && eta_write != 0.0, "gradient.eta_write_hz_per_m must be nonzero");
    require(finite(eta_read) && eta_read != 0.0, "gradient.eta_read_hz_per_m must be nonzero");
    require(finite(switch_time) && switch_time > 0.0, "gradient.switch_time_s must be > 0");
    require(finite(settle_duration) && settle_duration >= 0.0,
            "gradient.settle_duration_s must be >= 0");
    require(finite(settle_tolerance) && settle_tolerance > 0.0 && settle_tolerance < 1.0,
            "gradient.settle_tolerance must be in (0, 1)");
}

void GradientSchedule::validate_for_recall() const {
    validate();
    require(std::signbit(eta_read) != std::signbit(eta_write),
            "gradient.eta_read_hz_per_m: recall requires the read gradient to "
            "oppose the write gradient (sign flip)");
}

void EfficiencyReport::validate() const {
    auto unit = [](double v, const char* name) {
        require(std::isfinite(v) && v >= 0.0 && v <= 1.0,
                std::string(name) + " must be in [0, 1]");
    };
    unit(storage_efficiency, "report.storage_efficiency");
    unit(recall_efficiency, "report.recall_efficiency");
    unit(total_efficiency, "report.total_efficiency");
    unit(leakage_fraction, "report.leakage_fraction");
    require(finite(delay_bandwidth_product) && delay_bandwidth_product >= 0.0,
            "report.delay_bandwidth_product must be >= 0");
    require(total_efficiency <= storage_efficiency + 1e-12,
            "report.total_efficiency cannot exceed report.storage_efficiency");
}

} // namespace gem
