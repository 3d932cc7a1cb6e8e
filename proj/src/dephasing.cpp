#include "zenolock/dephasing.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "zenolock/parallel.hpp"

namespace zenolock {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// SplitMix64 finaliser.
std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Uniform on (0, 1].
double unit_open_closed(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53; }

// Replicas are grouped into a fixed number of chunks so partial sums are
// formed identically for any worker count.
constexpr std::size_t kChunks = 64;

}  // namespace

void EnsembleConfig::validate() const {
    if (atom_count < 1) throw DephasingError("atom_count must be >= 1");
    if (replicas < 1) throw DephasingError("replicas must be >= 1");
    if (!(fwhm > 0.0) || !std::isfinite(fwhm)) throw DephasingError("fwhm must be > 0");
    if (!std::isfinite(center_frequency)) throw DephasingError("center_frequency must be finite");
    for (std::size_t i = 1; i < time_grid.size(); ++i) {
        if (!(time_grid[i] > time_grid[i - 1])) throw DephasingError("time_grid must be strictly increasing");
    }
}

double fwhm_to_sigma(double fwhm) {
    if (!(fwhm > 0.0)) throw DephasingError("fwhm_to_sigma: fwhm must be > 0");
    return fwhm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
}

double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t item) {
    const std::uint64_t key = mix64(mix64(seed) ^ mix64(stream + 0x632be59bd9b4e019ULL));
    const double u1 = unit_open_closed(mix64(key ^ (2 * item)));
    const double u2 = unit_open_closed(mix64(key ^ (2 * item + 1)));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

std::vector<double> sample_frequencies(const EnsembleConfig& config, std::size_t replica) {
    config.validate();
    const double sigma = fwhm_to_sigma(config.fwhm);
    std::vector<double> out(static_cast<std::size_t>(config.atom_count));
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = config.center_frequency + sigma * keyed_normal(config.seed, replica, k);
    }
    return out;
}

double mean_frequency(std::span<const double> freqs) {
    if (freqs.empty()) throw DephasingError("mean_frequency: empty list");
    return std::accumulate(freqs.begin(), freqs.end(), 0.0) / static_cast<double>(freqs.size());
}

double mean_cos_phase(std::span<const double> freqs, double t) {
    if (freqs.empty()) throw DephasingError("mean_cos_phase: empty list");
    if (t < 0.0) throw DephasingError("mean_cos_phase: t must be >= 0");
    double sum = 0.0;
    for (double f : freqs) sum += std::cos(kTwoPi * f * t);
    return sum / static_cast<double>(freqs.size());
}

double envelope_independent(double t, double sigma, double f0) {
    const double x = kTwoPi * t * sigma;
    return std::exp(-0.5 * x * x) * std::cos(kTwoPi * f0 * t);
}

double envelope_locked(double t, double sigma, double f0, int atom_count) {
    return envelope_independent(t, sigma / std::sqrt(static_cast<double>(atom_count)), f0);
}

double allan_deviation(const AllanParams& p) {
    if (!(p.fwhm > 0.0) || !(p.carrier > 0.0) || !(p.atom_count > 0.0) || !(p.cycle_time > 0.0) ||
        !(p.averaging_time > 0.0)) {
        throw DephasingError("allan_deviation: all parameters must be > 0");
    }
    return p.fwhm / (p.carrier * std::sqrt(p.atom_count)) * std::sqrt(p.cycle_time / p.averaging_time);
}

EnsembleCurves simulate_ensemble(const EnsembleConfig& config, unsigned threads) {
    config.validate();
    const std::size_t nt = config.time_grid.size();
    const auto m = static_cast<std::size_t>(config.replicas);
    const double sigma = fwhm_to_sigma(config.fwhm);

    struct Partial {
        std::vector<double> ind_sum, ind_sq, lock_sum, lock_sq;
    };
    const std::size_t chunks = std::min(kChunks, m);
    std::vector<Partial> partials(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
        Partial p{std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0), std::vector<double>(nt, 0.0),
                  std::vector<double>(nt, 0.0)};
        for (std::size_t r = c * m / chunks; r < (c + 1) * m / chunks; ++r) {
            const auto freqs = sample_frequencies(config, r);
            const double fbar = mean_frequency(freqs);
            for (std::size_t j = 0; j < nt; ++j) {
                const double t = config.time_grid[j];
                const double ind = mean_cos_phase(freqs, t);
                const double lock = std::cos(kTwoPi * fbar * t);
                p.ind_sum[j] += ind;
                p.ind_sq[j] += ind * ind;
                p.lock_sum[j] += lock;
                p.lock_sq[j] += lock * lock;
            }
        }
        partials[c] = std::move(p);
    });

    EnsembleCurves out;
    out.times = config.time_grid;
    out.analytic_independent.resize(nt);
    out.analytic_locked.resize(nt);
    out.mc_independent.assign(nt, 0.0);
    out.se_independent.assign(nt, 0.0);
    out.mc_locked.assign(nt, 0.0);
    out.se_locked.assign(nt, 0.0);
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < nt; ++j) {
        double is = 0, iq = 0, ls = 0, lq = 0;
        for (const auto& p : partials) {
            is += p.ind_sum[j];
            iq += p.ind_sq[j];
            ls += p.lock_sum[j];
            lq += p.lock_sq[j];
        }
        auto standard_error = [&](double sum, double sq) {
            if (m < 2) return 0.0;
            const double var = std::max(0.0, (sq - sum * sum / md) / (md - 1.0));
            return std::sqrt(var / md);
        };
        const double t = config.time_grid[j];
        out.analytic_independent[j] = envelope_independent(t, sigma, config.center_frequency);
        out.analytic_locked[j] = envelope_locked(t, sigma, config.center_frequency, config.atom_count);
        out.mc_independent[j] = is / md;
        out.se_independent[j] = standard_error(is, iq);
        out.mc_locked[j] = ls / md;
        out.se_locked[j] = standard_error(ls, lq);
    }
    return out;
}

double fit_efolding_time(std::span<const double> times, std::span<const double> values, double f0, double floor) {
    if (times.size() != values.size()) throw DephasingError("fit_efolding_time: length mismatch");
    // ln envelope = -t^2 / (2 t_e^2): least squares through the origin in t^2.
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const double c = std::cos(kTwoPi * f0 * t);
        if (t <= 0.0 || std::abs(c) < 0.9) continue;
        const double env = values[i] / c;
        if (env < floor) continue;
        const double x = t * t;
        num += x * std::log(env);
        den += x * x;
    }
    if (den == 0.0 || num >= 0.0) throw DephasingError("fit_efolding_time: no usable decaying samples");
    const double slope = num / den;
    return std::sqrt(-1.0 / (2.0 * slope));
}

BandwidthHistograms bandwidth_histogram(const EnsembleConfig& config, int bins, unsigned threads) {
    config.validate();
    if (bins < 1) throw DephasingError("bandwidth_histogram: bins must be >= 1");
    const auto m = static_cast<std::size_t>(config.replicas);
    const auto n = static_cast<std::size_t>(config.atom_count);
    std::vector<double> individual(m * n);
    std::vector<double> means(m);
    parallel_for(m, threads, [&](std::size_t r) {
        const auto freqs = sample_frequencies(config, r);
        std::copy(freqs.begin(), freqs.end(), individual.begin() + static_cast<std::ptrdiff_t>(r * n));
        means[r] = mean_frequency(freqs);
    });

    const auto [lo_it, hi_it] = std::minmax_element(individual.begin(), individual.end());
    double lo = *lo_it, hi = *hi_it;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / bins;

    auto fill = [&](const std::vector<double>& xs) {
        Histogram h;
        h.lower = lo;
        h.bin_width = width;
        h.density.assign(static_cast<std::size_t>(bins), 0.0);
        for (double x : xs) {
            auto k = static_cast<std::ptrdiff_t>(std::floor((x - lo) / width));
            k = std::clamp<std::ptrdiff_t>(k, 0, bins - 1);
            h.density[static_cast<std::size_t>(k)] += 1.0;
        }
        const double total = static_cast<double>(xs.size());
        for (auto& d : h.density) d /= total * width;
        h.sample_mean = std::accumulate(xs.begin(), xs.end(), 0.0) / total;
        double ss = 0.0;
        for (double x : xs) ss += (x - h.sample_mean) * (x - h.sample_mean);
        h.sample_stddev = xs.size() > 1 ? std::sqrt(ss / (total - 1.0)) : 0.0;
        return h;
    };

    BandwidthHistograms out;
    out.individual = fill(individual);
    out.means = fill(means);
    out.stddev_ratio = out.means.sample_stddev > 0.0 ? out.individual.sample_stddev / out.means.sample_stddev : 0.0;
    return out;
}

}  // namespace zenolock
