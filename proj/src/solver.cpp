#include "gem/solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numbers>
#include <thread>

#include "gem/model.hpp"

namespace gem {

namespace {

using cd = std::complex<double>;

constexpr double two_pi = 2.0 * std::numbers::pi;
constexpr double ln2 = std::numbers::ln2;

double sqr(double v) { return v * v; }

} // namespace

void ProbePulse::validate() const {
    if (!(fwhm > 0.0)) throw ValidationError("pulse.fwhm_s must be > 0");
    if (!std::isfinite(peak_amplitude)) throw ValidationError("pulse.peak_amplitude must be finite");
    if (!(center_time >= 0.0)) throw ValidationError("pulse.center_time_s must be >= 0");
    if (!std::isfinite(two_photon_offset))
        throw ValidationError("pulse.two_photon_offset_hz must be finite");
    if (shape == Shape::custom) {
        if (sample_times.size() < 2 || sample_times.size() != sample_amplitudes.size())
            throw ValidationError("pulse: custom shape needs matching sample_times_s and "
                                  "sample_amplitudes with >= 2 samples");
        for (std::size_t i = 1; i < sample_times.size(); ++i)
            if (!(sample_times[i] > sample_times[i - 1]))
                throw ValidationError("pulse.sample_times_s must be strictly increasing");
    }
}

std::complex<double> ProbePulse::envelope(double t) const {
    const double rel = t - resolved_center();
    if (shape == Shape::gaussian) {
        const double u = rel / fwhm;
        return peak_amplitude * std::exp(-2.0 * ln2 * u * u);
    }
    if (rel <= sample_times.front() || rel >= sample_times.back()) return 0.0;
    const auto it = std::upper_bound(sample_times.begin(), sample_times.end(), rel);
    const std::size_t j = static_cast<std::size_t>(it - sample_times.begin());
    const double t0 = sample_times[j - 1], t1 = sample_times[j];
    const double u = (rel - t0) / (t1 - t0);
    return sample_amplitudes[j - 1] * (1.0 - u) + sample_amplitudes[j] * u;
}

void DecoherenceModel::validate() const {
    if (!(storage_rate >= 0.0)) throw ValidationError("decoherence.storage_rate_hz must be >= 0");
    if (!(write_read_rate >= 0.0))
        throw ValidationError("decoherence.write_read_rate_hz must be >= 0");
}

void SimulationGrid::validate() const {
    if (n_z < 16) throw ValidationError("grid.n_z must be >= 16");
    if (!(dt >= 0.0)) throw ValidationError("grid.dt_s must be >= 0 (0 = auto)");
    if (!(t_end >= 0.0)) throw ValidationError("grid.t_end_s must be >= 0 (0 = auto)");
}

double raman_coupling_constant(const EnsembleProfile& ensemble, const TransitionLine& line,
                               const RamanCoupling& coupling) {
    if (coupling.rabi_frequency == 0.0) return 0.0;
    if (coupling.one_photon_detuning == 0.0)
        throw ValidationError("coupling.one_photon_detuning_hz must be nonzero for the "
                              "Raman regime");
    const double ratio = coupling.rabi_frequency / coupling.one_photon_detuning;
    return std::sqrt(two_pi * ensemble.effective_od() * line.gamma * ratio * ratio /
                     ensemble.length);
}

double natural_raman_rate(const TransitionLine& line, const RamanCoupling& coupling) {
    if (coupling.rabi_frequency == 0.0) return 0.0;
    if (coupling.one_photon_detuning == 0.0)
        throw ValidationError("coupling.one_photon_detuning_hz must be nonzero for the "
                              "Raman regime");
    const double ratio = coupling.rabi_frequency / coupling.one_photon_detuning;
    return 4.0 * std::numbers::pi * line.gamma * ratio * ratio;
}

SimulationResult run_storage_recall(const EnsembleProfile& ensemble, const TransitionLine& line,
                                    const RamanCoupling& coupling, const ProbePulse& pulse,
                                    const GradientSchedule& schedule,
                                    const DecoherenceModel& decoherence,
                                    const SimulationGrid& grid,
                                    std::optional<HoldWindow> coupling_off) {
    ensemble.validate();
    line.validate();
    coupling.validate();
    pulse.validate();
    schedule.validate();
    decoherence.validate();
    grid.validate();

    const double l = ensemble.length;
    const int nz = grid.n_z;
    const double dz = l / (nz - 1);
    const double kappa = raman_coupling_constant(ensemble, line, coupling);
    const double tc = pulse.resolved_center();
    const double t_flip = tc + schedule.switch_time;

    const double eta_max = std::max(std::abs(schedule.eta_write), std::abs(schedule.eta_read));
    const double band_rate = std::numbers::pi * eta_max * l; // fastest detuning phase, rad/s
    double dt = grid.dt;
    if (dt <= 0.0) dt = std::min(0.05 / band_rate, pulse.fwhm / 200.0);
    if (dt * band_rate > 0.1 * (1.0 + 1e-12)) {
        char msg[160];
        std::snprintf(msg, sizeof msg,
                      "grid.dt_s = %g s cannot resolve the gradient phase; need dt <= %g s",
                      dt, 0.1 / band_rate);
        throw ValidationError(msg);
    }

    const double t_end =
        grid.t_end > 0.0 ? grid.t_end : tc + 2.0 * schedule.switch_time + 5.0 * pulse.fwhm;
    if (!(t_end > tc))
        throw ValidationError("grid.t_end_s must extend past the pulse centre");
    const long n_steps = std::lround(std::ceil(t_end / dt));

    std::optional<std::pair<double, double>> hold;
    if (coupling_off) {
        if (!(coupling_off->end > coupling_off->begin))
            throw ValidationError("coupling-off window must have end > begin");
        hold = std::make_pair(tc + coupling_off->begin, tc + coupling_off->end);
    }

    auto coupling_on = [&](double t) {
        return !(hold && t >= hold->first && t < hold->second);
    };
    auto gamma_at = [&](double t) -> double {
        if (coupling_on(t)) return decoherence.write_read_rate;
        if (decoherence.form == DecoherenceModel::Form::exponential)
            return decoherence.storage_rate;
        return 2.0 * sqr(decoherence.storage_rate) * (t - hold->first);
    };
    auto eta_at = [&](double t) -> double {
        if (t < t_flip) return schedule.eta_write;
        if (schedule.settle_duration <= 0.0) return schedule.eta_read;
        if (schedule.settle_model == GradientSchedule::SettleModel::linear) {
            const double u = (t - t_flip) / schedule.settle_duration;
            if (u >= 1.0) return schedule.eta_read;
            return schedule.eta_write + (schedule.eta_read - schedule.eta_write) * u;
        }
        const double tau = schedule.settle_duration / std::log(1.0 / schedule.settle_tolerance);
        return schedule.eta_read +
               (schedule.eta_write - schedule.eta_read) * std::exp(-(t - t_flip) / tau);
    };

    std::vector<double> z_rel(nz);
    for (int j = 0; j < nz; ++j) z_rel[j] = j * dz - 0.5 * l;

    const cd I(0.0, 1.0);
    const double rot = two_pi * pulse.two_photon_offset;

    // dS/dt = -(Gamma + i 2pi eta (z - z_c) + i 2pi delta_off) S + i kappa E
    // with E(z) = E_in + i kappa cumulative-trapezoid(S).
    auto eval = [&](const std::vector<cd>& s, double t, std::vector<cd>& ds,
                    std::vector<cd>& efield) {
        const double eta = eta_at(t);
        const double gam = gamma_at(t);
        const double kap = coupling_on(t) ? kappa : 0.0;
        const cd ein = pulse.envelope(t);
        efield[0] = ein;
        if (kap != 0.0) {
            const cd w = I * (kap * 0.5 * dz);
            for (int j = 1; j < nz; ++j) efield[j] = efield[j - 1] + w * (s[j - 1] + s[j]);
        } else {
            std::fill(efield.begin() + 1, efield.end(), ein);
        }
        for (int j = 0; j < nz; ++j) {
            const cd damp(gam, two_pi * eta * z_rel[j] + rot);
            ds[j] = -damp * s[j] + I * kap * efield[j];
        }
    };

    auto spin_energy = [&](const std::vector<cd>& s) {
        double e = 0.5 * (std::norm(s.front()) + std::norm(s.back()));
        for (int j = 1; j + 1 < nz; ++j) e += std::norm(s[j]);
        return e * dz;
    };

    SimulationResult result;
    result.dt = dt;
    result.switch_time = schedule.switch_time;
    result.time.reserve(n_steps + 1);
    result.probe_in.reserve(n_steps + 1);
    result.probe_out.reserve(n_steps + 1);
    result.spin_positions.assign(nz, 0.0);
    for (int j = 0; j < nz; ++j) result.spin_positions[j] = j * dz;
    const long spin_stride = std::max<long>(1, n_steps / 160);

    std::vector<cd> s(nz, 0.0), s_tmp(nz), k1(nz), k2(nz), k3(nz), k4(nz), efield(nz),
        e_tmp(nz);

    const double energy_scale = sqr(pulse.peak_amplitude) * pulse.fwhm + 1e-300;
    double injected = 0.0, emitted = 0.0;
    double prev_in = 0.0, prev_out = 0.0;

    for (long step = 0; step <= n_steps; ++step) {
        const double t = step * dt;
        eval(s, t, k1, efield);

        const cd in_now = efield[0];
        const cd out_now = efield[nz - 1];
        result.time.push_back(t - tc);
        result.probe_in.push_back(in_now);
        result.probe_out.push_back(out_now);
        if (step > 0) {
            injected += 0.5 * (prev_in + std::norm(in_now)) * dt;
            emitted += 0.5 * (prev_out + std::norm(out_now)) * dt;
        }
        prev_in = std::norm(in_now);
        prev_out = std::norm(out_now);

        if (step % spin_stride == 0 || step == n_steps) {
            result.spin_times.push_back(t - tc);
            result.spin_field.push_back(s);
        }
        if (step == n_steps) break;

        for (int j = 0; j < nz; ++j) s_tmp[j] = s[j] + 0.5 * dt * k1[j];
        eval(s_tmp, t + 0.5 * dt, k2, e_tmp);
        for (int j = 0; j < nz; ++j) s_tmp[j] = s[j] + 0.5 * dt * k2[j];
        eval(s_tmp, t + 0.5 * dt, k3, e_tmp);
        for (int j = 0; j < nz; ++j) s_tmp[j] = s[j] + dt * k3[j];
        eval(s_tmp, t + dt, k4, e_tmp);
        for (int j = 0; j < nz; ++j)
            s[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);

        if (step % 32 == 0) {
            const double total = spin_energy(s) + emitted;
            if (total > injected * 1.01 + 1e-9 * energy_scale) {
                char msg[192];
                std::snprintf(msg, sizeof msg,
                              "numerical instability at t = %g s: stored+emitted energy "
                              "exceeds injected by %.2f%% (dt = %g s too coarse)",
                              t, 100.0 * (total / std::max(injected, 1e-300) - 1.0), dt);
                throw NumericalError(msg);
            }
        }
    }

    // Energy bookkeeping: input over the whole run, output split at the flip.
    const auto& time = result.time;
    auto integrate_out = [&](double w0, double w1) {
        double acc = 0.0;
        for (std::size_t i = 0; i + 1 < time.size(); ++i) {
            const double a = std::max(time[i], w0);
            const double b = std::min(time[i + 1], w1);
            if (b <= a) continue;
            const double ia = std::norm(result.probe_out[i]);
            const double ib = std::norm(result.probe_out[i + 1]);
            const double fa = ia + (ib - ia) * (a - time[i]) / dt;
            const double fb = ia + (ib - ia) * (b - time[i]) / dt;
            acc += 0.5 * (fa + fb) * (b - a);
        }
        return acc;
    };
    result.input_energy = injected;
    result.leak_energy = integrate_out(time.front(), schedule.switch_time);
    result.echo_energy = integrate_out(schedule.switch_time, time.back());
    result.residual_energy = spin_energy(s);

    double peak_in = 0.0;
    for (const auto& v : result.probe_in) peak_in = std::max(peak_in, std::norm(v));
    double peak_out = 0.0;
    std::size_t peak_idx = 0;
    for (std::size_t i = 0; i < time.size(); ++i) {
        if (time[i] <= schedule.switch_time) continue;
        const double p = std::norm(result.probe_out[i]);
        if (p > peak_out) {
            peak_out = p;
            peak_idx = i;
        }
    }
    if (peak_out > 1e-12 * peak_in) {
        result.echo_found = true;
        result.echo_peak_time = time[peak_idx];
    }
    return result;
}

double leakage_fraction(const SimulationResult& result) {
    if (!(result.input_energy > 0.0))
        throw ValidationError("leakage_fraction: zero input energy");
    return result.leak_energy / result.input_energy;
}

double echo_efficiency(const SimulationResult& result) {
    if (!(result.input_energy > 0.0))
        throw ValidationError("echo_efficiency: zero input energy");
    return result.echo_energy / result.input_energy;
}

std::vector<RamanScanPoint> raman_line_scan(const EnsembleProfile& ensemble,
                                            const TransitionLine& line,
                                            const RamanCoupling& coupling, double eta,
                                            double scan_range, int n_points) {
    ensemble.validate();
    line.validate();
    coupling.validate();
    if (n_points < 8) throw ValidationError("raman_line_scan: n_points must be >= 8");
    if (!(scan_range > 0.0)) throw ValidationError("raman_line_scan: scan_range must be > 0");

    std::vector<RamanScanPoint> profile(n_points);
    const double kappa = raman_coupling_constant(ensemble, line, coupling);
    const double gam = natural_raman_rate(line, coupling);
    const double band = std::abs(eta) * ensemble.length;
    const double k2l = kappa * kappa * ensemble.length;

    for (int i = 0; i < n_points; ++i) {
        const double delta = -0.5 * scan_range + scan_range * i / (n_points - 1);
        double x = 0.0;
        if (kappa != 0.0) {
            if (band == 0.0 || two_pi * band < 1e-9 * gam) {
                x = 2.0 * k2l * gam / (gam * gam + sqr(two_pi * delta));
            } else {
                const double a_hi = two_pi * (0.5 * band - delta) / gam;
                const double a_lo = two_pi * (-0.5 * band - delta) / gam;
                x = kappa * kappa / (std::numbers::pi * std::abs(eta)) *
                    (std::atan(a_hi) - std::atan(a_lo));
            }
        }
        profile[i] = {delta, -std::expm1(-x), x};
    }
    return profile;
}

std::vector<SweepPoint> sweep_storage_time(const EnsembleProfile& ensemble,
                                           const TransitionLine& line,
                                           const RamanCoupling& coupling,
                                           const ProbePulse& pulse,
                                           const GradientSchedule& schedule,
                                           const DecoherenceModel& decoherence,
                                           const SimulationGrid& grid,
                                           const std::vector<double>& switch_times,
                                           int n_threads) {
    if (switch_times.empty())
        throw ValidationError("sweep_storage_time: need at least one switch time");

    std::vector<SweepPoint> points(switch_times.size());
    const double hold_begin = 2.0 * pulse.fwhm; // pulse fully inside the medium

    auto run_one = [&](std::size_t i) {
        const double ts = switch_times[i];
        try {
            GradientSchedule sch = schedule;
            sch.switch_time = ts;
            std::optional<HoldWindow> hold;
            if (ts > hold_begin) hold = HoldWindow{hold_begin, ts};
            const auto result = run_storage_recall(ensemble, line, coupling, pulse, sch,
                                                   decoherence, grid, hold);
            points[i] = {2.0 * ts, echo_efficiency(result)};
        } catch (const ValidationError& e) {
            char msg[64];
            std::snprintf(msg, sizeof msg, "sweep run at t_s = %g s: ", ts);
            throw ValidationError(msg + std::string(e.what()));
        } catch (const std::exception& e) {
            char msg[64];
            std::snprintf(msg, sizeof msg, "sweep run at t_s = %g s: ", ts);
            throw NumericalError(msg + std::string(e.what()));
        }
    };

    if (n_threads <= 1 || switch_times.size() == 1) {
        for (std::size_t i = 0; i < switch_times.size(); ++i) run_one(i);
        return points;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= switch_times.size()) return;
            try {
                run_one(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n = std::min<int>(n_threads, static_cast<int>(switch_times.size()));
    pool.reserve(n);
    for (int i = 0; i < n; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
    return points;
}

} // namespace gem
