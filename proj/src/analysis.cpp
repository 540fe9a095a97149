#include "gem/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <limits>
#include <numbers>
#include <numeric>

namespace gem {

double FitResult::parameter(const std::string& name) const {
    for (std::size_t i = 0; i < parameter_names.size(); ++i)
        if (parameter_names[i] == name) return parameters[i];
    throw ValidationError("fit result has no parameter named \"" + name + "\"");
}

std::string FitResult::to_key_value() const {
    char buf[64];
    std::string out;
    for (std::size_t i = 0; i < parameter_names.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.9g", parameters[i]);
        out += parameter_names[i] + "=" + buf + "\n";
    }
    std::snprintf(buf, sizeof buf, "%.9g", residual_norm);
    out += std::string("residual_norm=") + buf + "\n";
    out += std::string("converged=") + (converged ? "true" : "false") + "\n";
    out += "iterations=" + std::to_string(iterations) + "\n";
    if (excluded_points > 0) out += "excluded_points=" + std::to_string(excluded_points) + "\n";
    return out;
}

namespace {

// Model callback: value at x for parameters p, gradient written to jac.
using ModelFn = std::function<double(const double* p, double x, double* jac)>;

// Solve A x = b in place by Gauss elimination with partial pivoting.
// Returns false when the system is (near) singular.
bool solve_dense(std::vector<std::vector<double>> a, std::vector<double> b,
                 std::vector<double>& x) {
    const int n = static_cast<int>(b.size());
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return false;
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (int r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (int c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    x.assign(n, 0.0);
    for (int r = n - 1; r >= 0; --r) {
        double s = b[r];
        for (int c = r + 1; c < n; ++c) s -= a[r][c] * x[c];
        x[r] = s / a[r][r];
    }
    return true;
}

// Inverse via Gauss-Jordan; empty on singularity. Result symmetrized.
std::vector<std::vector<double>> invert_symmetric(std::vector<std::vector<double>> a) {
    const int n = static_cast<int>(a.size());
    std::vector<std::vector<double>> inv(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) inv[i][i] = 1.0;
    for (int col = 0; col < n; ++col) {
        int pivot = col;
        for (int r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-300) return {};
        std::swap(a[pivot], a[col]);
        std::swap(inv[pivot], inv[col]);
        const double d = a[col][col];
        for (int c = 0; c < n; ++c) {
            a[col][c] /= d;
            inv[col][c] /= d;
        }
        for (int r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = a[r][col];
            if (f == 0.0) continue;
            for (int c = 0; c < n; ++c) {
                a[r][c] -= f * a[col][c];
                inv[r][c] -= f * inv[col][c];
            }
        }
    }
    for (int r = 0; r < n; ++r)
        for (int c = r + 1; c < n; ++c) {
            const double s = 0.5 * (inv[r][c] + inv[c][r]);
            inv[r][c] = inv[c][r] = s;
        }
    return inv;
}

double sum_squared_residuals(const std::vector<double>& xs, const std::vector<double>& ys,
                             const ModelFn& model, const std::vector<double>& p) {
    double ssr = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double r = ys[i] - model(p.data(), xs[i], nullptr);
        ssr += r * r;
    }
    return std::isfinite(ssr) ? ssr : std::numeric_limits<double>::infinity();
}

// Damped least squares with analytic Jacobians. Convergence: relative
// parameter step below 1e-9, at most 200 iterations.
FitResult levenberg_marquardt(const std::vector<double>& xs, const std::vector<double>& ys,
                              std::vector<std::string> names, std::vector<double> p,
                              const ModelFn& model) {
    constexpr int max_iterations = 200;
    constexpr double step_tolerance = 1e-9;

    const int n = static_cast<int>(xs.size());
    const int np = static_cast<int>(p.size());

    FitResult result;
    result.parameter_names = std::move(names);

    double ssr = sum_squared_residuals(xs, ys, model, p);
    double lambda = 1e-3;
    std::vector<double> jac(np), grad(np), step, p_try(np);
    std::vector<std::vector<double>> normal(np, std::vector<double>(np));

    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        for (auto& row : normal) std::fill(row.begin(), row.end(), 0.0);
        std::fill(grad.begin(), grad.end(), 0.0);
        for (int i = 0; i < n; ++i) {
            const double f = model(p.data(), xs[i], jac.data());
            const double r = ys[i] - f;
            for (int a = 0; a < np; ++a) {
                grad[a] += jac[a] * r;
                for (int b = a; b < np; ++b) normal[a][b] += jac[a] * jac[b];
            }
        }
        for (int a = 0; a < np; ++a)
            for (int b = 0; b < a; ++b) normal[a][b] = normal[b][a];

        bool improved = false;
        while (lambda < 1e14) {
            auto damped = normal;
            for (int a = 0; a < np; ++a)
                damped[a][a] += lambda * std::max(normal[a][a], 1e-300);
            if (!solve_dense(damped, grad, step)) {
                lambda *= 10.0;
                continue;
            }
            for (int a = 0; a < np; ++a) p_try[a] = p[a] + step[a];
            const double ssr_try = sum_squared_residuals(xs, ys, model, p_try);
            if (ssr_try <= ssr) {
                double rel_step = 0.0;
                for (int a = 0; a < np; ++a)
                    rel_step = std::max(rel_step,
                                        std::abs(step[a]) / (std::abs(p[a]) + 1e-300));
                p = p_try;
                ssr = ssr_try;
                lambda = std::max(lambda / 3.0, 1e-12);
                improved = true;
                if (rel_step < step_tolerance) result.converged = true;
                break;
            }
            lambda *= 10.0;
        }
        if (!improved) {
            // No downhill step left; accept as converged if the gradient
            // already vanished (perfect seed on noise-free data).
            double gmax = 0.0;
            for (double g : grad) gmax = std::max(gmax, std::abs(g));
            result.converged = gmax <= 1e-8 * std::max(1.0, ssr);
            break;
        }
        if (result.converged) break;
    }

    result.parameters = p;
    result.iterations = iter + 1;
    result.residual_norm = std::sqrt(ssr);

    // Covariance from the undamped normal matrix at the solution.
    for (auto& row : normal) std::fill(row.begin(), row.end(), 0.0);
    for (int i = 0; i < n; ++i) {
        model(p.data(), xs[i], jac.data());
        for (int a = 0; a < np; ++a)
            for (int b = a; b < np; ++b) normal[a][b] += jac[a] * jac[b];
    }
    for (int a = 0; a < np; ++a)
        for (int b = 0; b < a; ++b) normal[a][b] = normal[b][a];
    auto inv = invert_symmetric(normal);
    if (!inv.empty()) {
        const double variance = n > np ? ssr / (n - np) : 0.0;
        for (auto& row : inv)
            for (double& v : row) v *= variance;
        result.covariance = std::move(inv);
    }
    return result;
}

void split_points(const std::vector<XY>& points, std::vector<double>& xs,
                  std::vector<double>& ys) {
    xs.reserve(points.size());
    ys.reserve(points.size());
    for (const auto& [x, y] : points) {
        if (!std::isfinite(x) || !std::isfinite(y))
            throw ValidationError("fit input contains non-finite values");
        xs.push_back(x);
        ys.push_back(y);
    }
}

bool zero_variance(const std::vector<double>& ys) {
    const auto [lo, hi] = std::minmax_element(ys.begin(), ys.end());
    return *hi - *lo == 0.0;
}

// Peak seed shared by the Lorentzian and Gaussian models:
// center, full width, amplitude (signed), offset.
struct PeakSeed {
    double center, width, amplitude, offset;
};

PeakSeed seed_peak(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t n = xs.size();
    const double edge = 0.5 * (ys.front() + ys.back());
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (ys[i] > ys[imax]) imax = i;
        if (ys[i] < ys[imin]) imin = i;
    }
    const bool positive = ys[imax] - edge >= edge - ys[imin];
    const std::size_t iext = positive ? imax : imin;
    const double offset = positive ? ys[imin] : ys[imax];
    const double amplitude = ys[iext] - offset;
    const double half = offset + 0.5 * amplitude;

    auto crossing = [&](bool right) -> double {
        std::size_t i = iext;
        while (true) {
            const std::size_t next = right ? i + 1 : i - 1;
            if ((right && next >= n) || (!right && i == 0)) return xs[iext];
            const bool crossed = positive ? ys[next] < half : ys[next] > half;
            if (crossed) {
                const double t = (half - ys[i]) / (ys[next] - ys[i]);
                return xs[i] + t * (xs[next] - xs[i]);
            }
            i = next;
        }
    };
    double width = std::abs(crossing(true) - crossing(false));
    const auto [xlo, xhi] = std::minmax_element(xs.begin(), xs.end());
    if (width <= 0.0) width = 0.25 * (*xhi - *xlo);
    if (width <= 0.0) width = 1.0;
    return {xs[iext], width, amplitude, offset};
}

FitResult non_converged(std::vector<std::string> names, std::vector<double> params,
                        const std::vector<double>& xs, const std::vector<double>& ys,
                        const ModelFn& model) {
    FitResult r;
    r.parameter_names = std::move(names);
    r.parameters = std::move(params);
    r.residual_norm = std::sqrt(sum_squared_residuals(xs, ys, model, r.parameters));
    return r;
}

} // namespace

FitResult fit_lorentzian(const std::vector<XY>& points,
                         const std::optional<std::vector<double>>& initial_guess) {
    if (points.size() < 5)
        throw ValidationError("fit_lorentzian: need at least 5 points");
    std::vector<double> xs, ys;
    split_points(points, xs, ys);

    ModelFn model = [](const double* p, double x, double* jac) {
        const double c = p[0], w = p[1], a = p[2], off = p[3];
        const double q = 0.25 * w * w;
        const double dx = x - c;
        const double den = dx * dx + q;
        const double u = q / den;
        if (jac) {
            jac[0] = a * q * 2.0 * dx / (den * den);
            jac[1] = a * dx * dx / (den * den) * 0.5 * w;
            jac[2] = u;
            jac[3] = 1.0;
        }
        return a * u + off;
    };

    std::vector<std::string> names{"center", "fwhm", "amplitude", "offset"};
    std::vector<double> p0;
    if (initial_guess) {
        if (initial_guess->size() != 4)
            throw ValidationError("fit_lorentzian: initial guess needs 4 values");
        p0 = *initial_guess;
    } else {
        const auto s = seed_peak(xs, ys);
        p0 = {s.center, s.width, s.amplitude, s.offset};
    }
    if (zero_variance(ys)) return non_converged(std::move(names), std::move(p0), xs, ys, model);

    auto result = levenberg_marquardt(xs, ys, std::move(names), std::move(p0), model);
    result.parameters[1] = std::abs(result.parameters[1]); // width sign is degenerate
    return result;
}

FitResult fit_gaussian(const std::vector<XY>& points,
                       const std::optional<std::vector<double>>& initial_guess) {
    if (points.size() < 5)
        throw ValidationError("fit_gaussian: need at least 5 points");
    std::vector<double> xs, ys;
    split_points(points, xs, ys);

    ModelFn model = [](const double* p, double x, double* jac) {
        const double mu = p[0], sigma = p[1], a = p[2], off = p[3];
        const double s2 = sigma * sigma;
        const double dx = x - mu;
        const double e = std::exp(-dx * dx / (2.0 * s2));
        if (jac) {
            jac[0] = a * e * dx / s2;
            jac[1] = a * e * dx * dx / (s2 * sigma);
            jac[2] = e;
            jac[3] = 1.0;
        }
        return a * e + off;
    };

    std::vector<std::string> names{"mean", "sigma", "amplitude", "offset"};
    std::vector<double> p0;
    if (initial_guess) {
        if (initial_guess->size() != 4)
            throw ValidationError("fit_gaussian: initial guess needs 4 values");
        p0 = *initial_guess;
    } else {
        const auto s = seed_peak(xs, ys);
        p0 = {s.center, s.width / 2.355, s.amplitude, s.offset};
    }
    if (zero_variance(ys)) return non_converged(std::move(names), std::move(p0), xs, ys, model);

    auto result = levenberg_marquardt(xs, ys, std::move(names), std::move(p0), model);
    result.parameters[1] = std::abs(result.parameters[1]);
    return result;
}

FitResult fit_exponential_decay(const std::vector<XY>& points) {
    if (points.size() < 3)
        throw ValidationError("fit_exponential_decay: need at least 3 points");

    std::vector<double> xs, ys;
    int excluded = 0;
    for (const auto& [t, y] : points) {
        if (!std::isfinite(t) || !std::isfinite(y))
            throw ValidationError("fit input contains non-finite values");
        if (y <= 0.0) {
            ++excluded;
            continue;
        }
        xs.push_back(t);
        ys.push_back(y);
    }
    if (excluded > 0)
        std::cerr << "gem: warning: fit_exponential_decay excluded " << excluded
                  << " non-positive point(s)\n";

    ModelFn model = [](const double* p, double t, double* jac) {
        const double a = p[0], tau = p[1];
        const double e = std::exp(-t / tau);
        if (jac) {
            jac[0] = e;
            jac[1] = a * e * t / (tau * tau);
        }
        return a * e;
    };
    std::vector<std::string> names{"amplitude", "tau"};

    const auto [tlo, thi] = xs.empty()
                                ? std::pair<double, double>{0.0, 0.0}
                                : std::pair<double, double>{
                                      *std::min_element(xs.begin(), xs.end()),
                                      *std::max_element(xs.begin(), xs.end())};
    if (xs.size() < 3 || thi - tlo <= 0.0)
        throw ValidationError("fit_exponential_decay: need >= 3 positive points with time spread");

    // Log-linear seed: ln y = ln A - t/tau.
    const std::size_t n = xs.size();
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ln = std::log(ys[i]);
        st += xs[i];
        sl += ln;
        stt += xs[i] * xs[i];
        stl += xs[i] * ln;
    }
    const double det = n * stt - st * st;
    const double slope = (n * stl - st * sl) / det;
    const double intercept = (sl * stt - st * stl) / det;
    const double a0 = std::exp(intercept);

    if (!(slope < 0.0)) {
        // Flat or growing series: tau is unbounded, report without refining.
        FitResult r;
        r.parameter_names = names;
        r.parameters = {a0, std::numeric_limits<double>::infinity()};
        r.excluded_points = excluded;
        r.residual_norm = 0.0;
        double ssr = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = ys[i] - a0;
            ssr += d * d;
        }
        r.residual_norm = std::sqrt(ssr);
        return r;
    }

    auto result =
        levenberg_marquardt(xs, ys, std::move(names), {a0, -1.0 / slope}, model);
    result.excluded_points = excluded;
    return result;
}

TemperatureFit temperature_from_expansion(const std::vector<XY>& widths, double mass_kg) {
    if (widths.size() < 2)
        throw ValidationError("temperature_from_expansion: need at least 2 time points");
    if (!(mass_kg > 0.0))
        throw ValidationError("temperature_from_expansion: mass must be > 0");

    // Linear least squares of sigma^2 against t^2.
    const std::size_t n = widths.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& [t, sigma] : widths) {
        if (!std::isfinite(t) || !std::isfinite(sigma))
            throw ValidationError("temperature_from_expansion: non-finite sample");
        const double x = t * t, y = sigma * sigma;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    if (det <= 0.0)
        throw ValidationError("temperature_from_expansion: times must not be all equal");
    const double slope = (n * sxy - sx * sy) / det;
    const double intercept = (sy * sxx - sx * sxy) / det;

    TemperatureFit fit;
    if (slope < 0.0) {
        std::cerr << "gem: warning: cloud widths shrink with time; "
                     "temperature clamped at 0\n";
        fit.unphysical = true;
        fit.temperature = 0.0;
    } else {
        fit.temperature = slope * mass_kg / k_boltzmann;
    }
    fit.sigma0 = std::sqrt(std::max(intercept, 0.0));
    return fit;
}

void HeterodyneRecord::validate() const {
    if (samples.empty()) throw ValidationError("heterodyne record has no samples");
    if (!(sample_rate > 0.0)) throw ValidationError("heterodyne sample_rate must be > 0");
    if (!(intermediate_frequency > 0.0))
        throw ValidationError("heterodyne intermediate_frequency must be > 0");
    if (!(sample_rate > 2.0 * intermediate_frequency))
        throw ValidationError("heterodyne record violates Nyquist: sample_rate must exceed "
                              "2 x intermediate_frequency");
}

std::vector<double> lowpass_zero_phase(const std::vector<double>& samples, double cutoff_hz,
                                       double sample_rate_hz) {
    if (!(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_rate_hz))
        throw ValidationError("lowpass cutoff must lie in (0, sample_rate/2)");
    const double k = std::tan(std::numbers::pi * cutoff_hz / sample_rate_hz);
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k * k);
    const double b0 = k * k * norm;
    const double b1 = 2.0 * b0;
    const double b2 = b0;
    const double a1 = 2.0 * (k * k - 1.0) * norm;
    const double a2 = (1.0 - std::numbers::sqrt2 * k + k * k) * norm;

    auto one_pass = [&](std::vector<double> x) {
        std::vector<double> y(x.size());
        double x1 = x.front(), x2 = x.front();
        double y1 = x.front(), y2 = x.front(); // steady-state init at first sample
        for (std::size_t i = 0; i < x.size(); ++i) {
            y[i] = b0 * x[i] + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = x[i];
            y2 = y1;
            y1 = y[i];
        }
        return y;
    };

    auto y = one_pass(samples);
    std::reverse(y.begin(), y.end());
    y = one_pass(std::move(y));
    std::reverse(y.begin(), y.end());
    return y;
}

std::vector<double> demodulate(const HeterodyneRecord& record, double phase_rad,
                               double lowpass_cutoff_hz) {
    record.validate();
    const double cutoff =
        lowpass_cutoff_hz > 0.0 ? lowpass_cutoff_hz : record.intermediate_frequency / 5.0;
    if (cutoff >= record.intermediate_frequency)
        throw ValidationError("demodulate: lowpass cutoff must be below the "
                              "intermediate frequency");

    std::vector<double> mixed(record.samples.size());
    const double w = 2.0 * std::numbers::pi * record.intermediate_frequency;
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        const double t = static_cast<double>(i) / record.sample_rate;
        mixed[i] = record.samples[i] * std::cos(w * t + phase_rad);
    }
    auto env = lowpass_zero_phase(mixed, cutoff, record.sample_rate);
    for (double& v : env) v *= 2.0;
    return env;
}

std::vector<double> demodulate_and_square(const HeterodyneRecord& record, double phase_rad,
                                          double lowpass_cutoff_hz) {
    auto env = demodulate(record, phase_rad, lowpass_cutoff_hz);
    for (double& v : env) v *= v;
    return env;
}

std::vector<double> combine_traces(const std::vector<std::vector<double>>& envelopes,
                                   TraceOrder order) {
    if (envelopes.empty()) throw ValidationError("combine_traces: no traces");
    const std::size_t len = envelopes.front().size();
    for (const auto& e : envelopes)
        if (e.size() != len) throw ValidationError("combine_traces: traces differ in length");

    std::vector<double> out(len, 0.0);
    if (order == TraceOrder::average_then_square) {
        for (const auto& e : envelopes)
            for (std::size_t i = 0; i < len; ++i) out[i] += e[i];
        for (double& v : out) {
            v /= static_cast<double>(envelopes.size());
            v *= v;
        }
    } else {
        for (const auto& e : envelopes)
            for (std::size_t i = 0; i < len; ++i) out[i] += e[i] * e[i];
        for (double& v : out) v /= static_cast<double>(envelopes.size());
    }
    return out;
}

namespace {

double trapezoid(const std::vector<double>& y, double dt) {
    if (y.size() < 2) return y.empty() ? 0.0 : y.front() * dt;
    double s = 0.5 * (y.front() + y.back());
    for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dt;
}

struct MeanSd {
    double mean, sd;
};

MeanSd mean_sd(const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / (n - 1.0))};
}

} // namespace

EfficiencyEstimate efficiency_from_traces(const std::vector<std::vector<double>>& input_sq,
                                          const std::vector<std::vector<double>>& echo_sq,
                                          double dt_s) {
    if (input_sq.empty() || echo_sq.empty())
        throw ValidationError("efficiency_from_traces: need at least one trace per side");
    if (!(dt_s > 0.0)) throw ValidationError("efficiency_from_traces: dt must be > 0");

    std::vector<double> in, out;
    for (const auto& t : input_sq) in.push_back(trapezoid(t, dt_s));
    for (const auto& t : echo_sq) out.push_back(trapezoid(t, dt_s));

    const auto [mi, si] = mean_sd(in);
    const auto [me, se] = mean_sd(out);
    if (!(mi > 0.0)) throw ValidationError("efficiency_from_traces: zero input energy");

    EfficiencyEstimate est;
    est.n_input = static_cast<int>(in.size());
    est.n_echo = static_cast<int>(out.size());
    est.efficiency = me / mi;
    const double rel2 = (si / mi) * (si / mi) + (me > 0.0 ? (se / me) * (se / me) : 0.0);
    est.std_dev = est.efficiency * std::sqrt(rel2);
    const double rel2_sem = (si / mi) * (si / mi) / est.n_input +
                            (me > 0.0 ? (se / me) * (se / me) / est.n_echo : 0.0);
    est.std_error = est.efficiency * std::sqrt(rel2_sem);
    return est;
}

double full_width_half_max(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3)
        throw ValidationError("full_width_half_max: need matching x/y with >= 3 samples");
    std::size_t ipk = 0;
    for (std::size_t i = 1; i < y.size(); ++i)
        if (y[i] > y[ipk]) ipk = i;
    const double half = 0.5 * y[ipk];

    auto cross = [&](bool right) -> double {
        std::size_t i = ipk;
        while (true) {
            if (right ? i + 1 >= y.size() : i == 0)
                throw ValidationError("full_width_half_max: profile does not drop to half "
                                      "maximum inside the sampled range");
            const std::size_t next = right ? i + 1 : i - 1;
            if (y[next] < half) {
                const double t = (half - y[i]) / (y[next] - y[i]);
                return x[i] + t * (x[next] - x[i]);
            }
            i = next;
        }
    };
    return std::abs(cross(true) - cross(false));
}

} // namespace gem
