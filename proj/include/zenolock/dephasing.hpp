// dephasing.hpp - ensemble frequency statistics, mean-phase decoherence and
// the closed-form Allan deviation. Frequencies in Hz, times in seconds.

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace zenolock {

class DephasingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct EnsembleConfig {
    int atom_count = 100;
    double center_frequency = 100.0;  // f0
    double fwhm = 10.0;               // Delta f
    std::uint64_t seed = 1;
    std::vector<double> time_grid;
    int replicas = 10000;

    void validate() const;
};

struct AllanParams {
    double fwhm;
    double carrier;
    double atom_count;
    double cycle_time;
    double averaging_time;
};

/// sigma = fwhm / (2 sqrt(2 ln 2)).
double fwhm_to_sigma(double fwhm);

/// Standard normal variate keyed by (seed, stream, item). Pure function of its
/// arguments, so draws do not depend on evaluation order.
double keyed_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t item);

/// N frequencies of one replica ensemble, drawn from Normal(f0, sigma^2).
std::vector<double> sample_frequencies(const EnsembleConfig& config, std::size_t replica = 0);

double mean_frequency(std::span<const double> freqs);
double mean_cos_phase(std::span<const double> freqs, double t);

double envelope_independent(double t, double sigma, double f0);
double envelope_locked(double t, double sigma, double f0, int atom_count);

double allan_deviation(const AllanParams& p);

/// Mean-cosine curves over `time_grid`: Monte Carlo for independent atoms and for
/// atoms locked to their replica mean, with standard errors and analytic envelopes.
struct EnsembleCurves {
    std::vector<double> times;
    std::vector<double> analytic_independent;
    std::vector<double> analytic_locked;
    std::vector<double> mc_independent;
    std::vector<double> se_independent;
    std::vector<double> mc_locked;
    std::vector<double> se_locked;
};

EnsembleCurves simulate_ensemble(const EnsembleConfig& config, unsigned threads);

/// Time at which a Gaussian-enveloped cosine at f0 falls to e^{-1/2}, fitted
/// from samples taken where |cos(2 pi f0 t)| is near 1 and the envelope exceeds `floor`.
double fit_efolding_time(std::span<const double> times, std::span<const double> values, double f0,
                         double floor = 0.05);

struct Histogram {
    double lower = 0.0;
    double bin_width = 0.0;
    std::vector<double> density;  // normalised: sum(density) * bin_width == 1
    double sample_mean = 0.0;
    double sample_stddev = 0.0;

    double bin_center(std::size_t k) const { return lower + (static_cast<double>(k) + 0.5) * bin_width; }
};

struct BandwidthHistograms {
    Histogram individual;  // all N*M atom frequencies
    Histogram means;       // M replica means
    double stddev_ratio = 0.0;
};

/// Both histograms share one binning spanning the sampled range.
BandwidthHistograms bandwidth_histogram(const EnsembleConfig& config, int bins, unsigned threads);

}  // namespace zenolock
