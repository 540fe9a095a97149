#include "gem/model.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <string>

namespace gem {

double beer_lambert_od(double i_transmitted, double i_reference) {
    if (!(i_transmitted > 0.0) || !std::isfinite(i_transmitted))
        throw ValidationError("beer_lambert_od: transmitted intensity must be > 0, got " +
                              std::to_string(i_transmitted));
    if (!(i_reference > 0.0) || !std::isfinite(i_reference))
        throw ValidationError("beer_lambert_od: reference intensity must be > 0, got " +
                              std::to_string(i_reference));
    return std::log(i_reference / i_transmitted);
}

double transmitted_intensity(double od, double i_reference) {
    if (!(i_reference > 0.0) || !std::isfinite(i_reference))
        throw ValidationError("transmitted_intensity: reference intensity must be > 0");
    return i_reference * std::exp(-od);
}

double resonance_scale_factor(double delta_hz, double gamma_hz) {
    if (!(gamma_hz > 0.0) || !std::isfinite(gamma_hz))
        throw ValidationError("resonance_scale_factor: gamma must be > 0");
    const double q = gamma_hz * gamma_hz / 4.0;
    return (delta_hz * delta_hz + q) / q;
}

double memory_bandwidth(double eta_hz_per_m, double length_m) {
    if (!(length_m > 0.0)) throw ValidationError("memory_bandwidth: length must be > 0");
    return std::abs(eta_hz_per_m) * length_m;
}

double eta_for_bandwidth(double bandwidth_hz, double length_m) {
    if (!(length_m > 0.0)) throw ValidationError("eta_for_bandwidth: length must be > 0");
    if (!(bandwidth_hz >= 0.0)) throw ValidationError("eta_for_bandwidth: bandwidth must be >= 0");
    return bandwidth_hz / length_m;
}

double raman_exponent(const EnsembleProfile& ensemble, const TransitionLine& line,
                      const RamanCoupling& coupling, double bandwidth_hz) {
    ensemble.validate();
    line.validate();
    coupling.validate();
    if (!(bandwidth_hz > 0.0)) throw ValidationError("raman_exponent: bandwidth must be > 0");
    if (coupling.rabi_frequency == 0.0) return 0.0;
    if (coupling.one_photon_detuning == 0.0)
        throw ValidationError("raman_exponent: one-photon detuning must be nonzero");
    const double ratio = coupling.rabi_frequency / std::abs(coupling.one_photon_detuning);
    if (ratio > 0.1)
        std::cerr << "gem: warning: Omega_c/|Delta| = " << ratio
                  << " strains the far-detuned Raman approximation\n";
    const double normalized_bandwidth = bandwidth_hz / line.gamma;
    return 2.0 * std::numbers::pi * (ensemble.effective_od() / normalized_bandwidth) * ratio *
           ratio;
}

double storage_efficiency(double exponent) {
    if (!(exponent >= 0.0) || !std::isfinite(exponent))
        throw ValidationError("storage_efficiency: exponent must be >= 0");
    return -std::expm1(-exponent);
}

double total_efficiency_estimate(double eps_write, double eps_read, double tau_s,
                                 double storage_time_s) {
    auto unit = [](double v, const char* name) {
        if (!(v >= 0.0 && v <= 1.0))
            throw ValidationError(std::string("total_efficiency_estimate: ") + name +
                                  " must be in [0, 1]");
    };
    unit(eps_write, "eps_write");
    unit(eps_read, "eps_read");
    if (!(tau_s > 0.0)) throw ValidationError("total_efficiency_estimate: tau must be > 0");
    if (!(storage_time_s >= 0.0))
        throw ValidationError("total_efficiency_estimate: storage_time must be >= 0");
    return eps_write * eps_read * std::exp(-storage_time_s / tau_s);
}

double delay_bandwidth_product(double tau_s, double bandwidth_hz) {
    if (!(tau_s >= 0.0)) throw ValidationError("delay_bandwidth_product: tau must be >= 0");
    if (!(bandwidth_hz >= 0.0))
        throw ValidationError("delay_bandwidth_product: bandwidth must be >= 0");
    return tau_s * bandwidth_hz;
}

} // namespace gem
