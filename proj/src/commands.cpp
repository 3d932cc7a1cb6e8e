#include "zenolock/commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

#include "zenolock/dephasing.hpp"
#include "zenolock/parallel.hpp"
#include "zenolock/readout.hpp"
#include "zenolock/zeno_multilevel.hpp"

namespace zenolock {

namespace {

std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_double(xs[i]);
    return out;
}

// Reads settings and records the resolved value of each one.
class Settings {
public:
    Settings(ConfigSection& section, KeyValues& resolved) : section_(section), resolved_(resolved) {}

    double number(const std::string& key, double fallback) {
        const double v = section_.get_double(key, fallback);
        resolved_.emplace_back(key, format_double(v));
        return v;
    }
    double positive(const std::string& key, double fallback) {
        const double v = number(key, fallback);
        if (!(v > 0.0)) fail(key, "must be positive");
        return v;
    }
    int integer(const std::string& key, int fallback, int minimum) {
        const int v = section_.get_int(key, fallback);
        resolved_.emplace_back(key, std::to_string(v));
        if (v < minimum) fail(key, "must be at least " + std::to_string(minimum));
        return v;
    }
    std::uint64_t seed(const std::string& key, std::uint64_t fallback, const std::optional<std::uint64_t>& override) {
        std::uint64_t v = section_.get_uint64(key, fallback);
        if (override) v = *override;
        resolved_.emplace_back(key, std::to_string(v));
        return v;
    }
    std::vector<double> list(const std::string& key, const std::vector<double>& fallback) {
        auto v = section_.get_list(key, fallback);
        resolved_.emplace_back(key, join(v));
        if (v.empty()) fail(key, "must not be empty");
        return v;
    }
    std::vector<double> positive_list(const std::string& key, const std::vector<double>& fallback) {
        auto v = list(key, fallback);
        for (double x : v) {
            if (!(x > 0.0)) fail(key, "entries must be positive");
        }
        return v;
    }
    std::string choice(const std::string& key, const std::string& fallback, const std::vector<std::string>& allowed) {
        auto v = section_.get_string(key, fallback);
        resolved_.emplace_back(key, v);
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) fail(key, "unsupported value '" + v + "'");
        return v;
    }
    void finish() const { section_.reject_unused(); }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const { section_.fail(key, what); }

private:
    ConfigSection& section_;
    KeyValues& resolved_;
};

std::string config_hash(const KeyValues& resolved) {
    std::string text;
    for (const auto& [k, v] : resolved) text += k + "=" + v + "\n";
    return fnv1a_hex(text);
}

void stamp(TraceRecord& record, const CommandOutput& out) {
    record.metadata.insert(record.metadata.begin(), {{"config_hash", config_hash(out.resolved)},
                                                     {"seed", std::to_string(out.seed)}});
}

std::string flag(bool b) { return b ? "true" : "false"; }

// Evenly spaced indices into [0, n), always keeping the first and last.
std::vector<std::size_t> sample_indices(std::size_t n, std::size_t samples) {
    std::vector<std::size_t> idx;
    if (n == 0) return idx;
    if (samples < 2 || n <= samples) {
        for (std::size_t i = 0; i < n; ++i) idx.push_back(i);
        return idx;
    }
    for (std::size_t k = 0; k < samples; ++k) {
        const std::size_t i = (k * (n - 1)) / (samples - 1);
        if (idx.empty() || idx.back() != i) idx.push_back(i);
    }
    return idx;
}

std::vector<double> broadcast(const std::vector<double>& values, std::size_t count, Settings& s, const char* key) {
    if (values.size() == count) return values;
    if (values.size() == 1) return std::vector<double>(count, values.front());
    s.fail(key, "needs one entry or one per cycle period");
}

TraceRecord survival_record(const std::string& name, const SurvivalTrace& trace, std::size_t samples) {
    TraceRecord r;
    r.name = name;
    r.columns = {"t", "p_success", "p_error_cycle", "analytic_product", "analytic_exponential"};
    for (std::size_t i : sample_indices(trace.times.size(), samples)) {
        r.add_row({trace.times[i], trace.p_success[i], trace.p_error_per_cycle[i], trace.analytic_p_s[i],
                   trace.analytic_p_s_exp[i]});
    }
    return r;
}

double max_relative_deviation(const SurvivalTrace& trace) {
    double worst = 0.0;
    for (std::size_t i = 0; i < trace.times.size(); ++i) {
        worst = std::max(worst, std::abs(trace.p_success[i] / trace.analytic_p_s_exp[i] - 1.0));
    }
    return worst;
}

PlotSpec survival_plot(const std::string& title, const std::vector<TraceRecord>& records) {
    PlotSpec plot{title, "t", "P_S", {}};
    for (const auto& r : records) {
        const auto t = r.column(0);
        plot.series.push_back({r.name + " numeric", t, r.column(1), false});
        plot.series.push_back({r.name + " exp form", t, r.column(4), true});
    }
    return plot;
}

}  // namespace

CommandOutput cmd_dephasing(ConfigSection section, const RunOptions& options) {
    CommandOutput out;
    Settings s(section, out.resolved);
    EnsembleConfig config;
    config.atom_count = s.integer("atom_count", 100, 1);
    config.center_frequency = s.positive("center_frequency", 100.0);
    config.fwhm = s.positive("fwhm", 10.0);
    config.replicas = s.integer("replicas", 10000, 2);
    config.seed = s.seed("seed", 1, options.seed);
    const double t_end = s.positive("t_end", 0.5);
    const double t_step = s.positive("t_step", 0.0025);
    const int hist_atoms = s.integer("histogram_atom_count", 9, 1);
    const int bins = s.integer("histogram_bins", 60, 2);
    s.finish();
    out.seed = config.seed;

    const auto steps = static_cast<long>(std::floor(t_end / t_step + 1e-9));
    for (long k = 0; k <= steps; ++k) config.time_grid.push_back(static_cast<double>(k) * t_step);
    try {
        config.validate();
    } catch (const DephasingError& e) {
        throw ConfigError(options.config_path.string() + ": [dephasing] " + e.what());
    }

    const auto curves = simulate_ensemble(config, options.threads);
    TraceRecord c;
    c.name = "dephasing_curves";
    c.columns = {"t", "analytic_independent", "analytic_locked", "mc_independent", "se_independent", "mc_locked",
                 "se_locked"};
    int outside = 0;
    for (std::size_t j = 0; j < curves.times.size(); ++j) {
        c.add_row({curves.times[j], curves.analytic_independent[j], curves.analytic_locked[j], curves.mc_independent[j],
                   curves.se_independent[j], curves.mc_locked[j], curves.se_locked[j]});
        if (std::abs(curves.mc_independent[j] - curves.analytic_independent[j]) > 3.0 * curves.se_independent[j] + 1e-12)
            ++outside;
        if (std::abs(curves.mc_locked[j] - curves.analytic_locked[j]) > 3.0 * curves.se_locked[j] + 1e-12) ++outside;
    }

    auto hist_config = config;
    hist_config.atom_count = hist_atoms;
    const auto hist = bandwidth_histogram(hist_config, bins, options.threads);
    TraceRecord h;
    h.name = "bandwidth_histogram";
    h.columns = {"frequency", "individual_density", "mean_density"};
    for (std::size_t k = 0; k < hist.individual.density.size(); ++k) {
        h.add_row({hist.individual.bin_center(k), hist.individual.density[k], hist.means.density[k]});
    }

    const double f0 = config.center_frequency;
    auto efold = [&](const std::vector<double>& v) {
        try {
            return fit_efolding_time(curves.times, v, f0);
        } catch (const DephasingError&) {
            return std::numeric_limits<double>::quiet_NaN();
        }
    };
    const double te_ind = efold(curves.analytic_independent);
    const double te_lock = efold(curves.analytic_locked);
    const double mc_ind = efold(curves.mc_independent);
    const double mc_lock = efold(curves.mc_locked);
    out.results = {{"efold_independent", format_double(te_ind)},
                   {"efold_locked", format_double(te_lock)},
                   {"efold_ratio", format_double(te_lock / te_ind)},
                   {"mc_efold_ratio", format_double(mc_lock / mc_ind)},
                   {"points_outside_3se", std::to_string(outside)},
                   {"histogram_stddev_ratio", format_double(hist.stddev_ratio)}};

    out.plots.push_back({c.name,
                         {"Mean cosine of the ensemble phase", "t (s)", "<cos phase>",
                          {{"independent (analytic)", curves.times, curves.analytic_independent, true},
                           {"independent (MC)", curves.times, curves.mc_independent, false},
                           {"locked (analytic)", curves.times, curves.analytic_locked, true},
                           {"locked (MC)", curves.times, curves.mc_locked, false}}}});
    out.plots.push_back({h.name,
                         {"Frequency distribution", "f (Hz)", "density",
                          {{"individual atoms", h.column(0), h.column(1), false},
                           {"replica means", h.column(0), h.column(2), false}}}});
    stamp(c, out);
    stamp(h, out);
    out.records = {std::move(c), std::move(h)};
    return out;
}

CommandOutput cmd_zeno2(ConfigSection section, const RunOptions& options) {
    CommandOutput out;
    Settings s(section, out.resolved);
    const double delta = s.number("half_difference", 2.0);
    const double offset = s.number("common_offset", 0.0);
    const double omega = s.number("cavity_frequency", 10.0);
    const int n = s.integer("photon_number", 12, 1);
    const int cutoff = s.integer("fock_cutoff", n + 3, n + 2);
    const double fraction = s.positive("measure_fraction", 0.005);
    const auto periods = s.positive_list("cycle_periods", {0.001, 0.05});
    const auto finals = broadcast(s.positive_list("final_times", {575.0, 11.5}), periods.size(), s, "final_times");
    const int samples = s.integer("samples", 400, 2);
    s.finish();
    if (fraction >= 1.0) s.fail("measure_fraction", "must be below 1");

    std::vector<SurvivalTrace> traces(periods.size());
    std::vector<TwoLevelConfig> configs(periods.size());
    for (std::size_t k = 0; k < periods.size(); ++k) {
        configs[k] = TwoLevelConfig::with_schedule(delta, periods[k], finals[k], n, fraction);
        configs[k].common_offset = offset;
        configs[k].cavity_frequency = omega;
        configs[k].fock_cutoff = cutoff;
        try {
            configs[k].validate();
        } catch (const ProtocolError& e) {
            throw ConfigError(options.config_path.string() + ": [zeno2] " + e.what());
        }
    }
    parallel_for(periods.size(), options.threads, [&](std::size_t k) { traces[k] = run_protocol(configs[k]); });

    PlotSpec plot;
    for (std::size_t k = 0; k < periods.size(); ++k) {
        const auto& t = traces[k];
        auto r = survival_record("zeno2_" + std::to_string(k), t, static_cast<std::size_t>(samples));
        r.metadata = {{"cycle_period", format_double(periods[k])},
                      {"free_interval", format_double(configs[k].free_interval)},
                      {"measure_interval", format_double(configs[k].measure_interval)},
                      {"coupling", format_double(configs[k].coupling)},
                      {"out_of_regime", flag(t.out_of_regime)},
                      {"valid", flag(t.valid)},
                      {"max_truncation_population", format_double(t.max_truncation_population)}};
        stamp(r, out);
        const std::string p = "curve" + std::to_string(k) + ".";
        out.results.emplace_back(p + "cycle_period", format_double(periods[k]));
        out.results.emplace_back(p + "final_p_success", format_double(t.p_success.back()));
        out.results.emplace_back(p + "final_analytic_exponential", format_double(t.analytic_p_s_exp.back()));
        out.results.emplace_back(p + "max_relative_deviation", format_double(max_relative_deviation(t)));
        out.results.emplace_back(p + "out_of_regime", flag(t.out_of_regime));
        out.results.emplace_back(p + "valid", flag(t.valid));
        out.out_of_regime |= t.out_of_regime;
        out.invalid |= !t.valid;
        out.records.push_back(std::move(r));
    }
    out.plots.push_back({"zeno2", survival_plot("Two-level survival probability", out.records)});
    return out;
}

CommandOutput cmd_zeno4(ConfigSection section, const RunOptions& options) {
    CommandOutput out;
    Settings s(section, out.resolved);
    const double d1 = s.number("delta1", 2.0);
    const double d2 = s.number("delta2", 2.0);
    const int n = s.integer("photon_number", 8, 1);
    const int cutoff = s.integer("fock_cutoff", n + 2, n + 2);
    const double fraction = s.positive("measure_fraction", 0.005);
    const auto periods = s.positive_list("cycle_periods", {0.01});
    const auto finals = broadcast(s.positive_list("final_times", {57.5}), periods.size(), s, "final_times");
    const int samples = s.integer("samples", 400, 2);
    s.finish();
    if (fraction >= 1.0) s.fail("measure_fraction", "must be below 1");

    std::vector<FourLevelConfig> configs(periods.size());
    std::vector<FourLevelTrace> traces(periods.size());
    for (std::size_t k = 0; k < periods.size(); ++k) {
        configs[k] = FourLevelConfig::symmetric(d1, d2, periods[k], finals[k], n, fraction);
        configs[k].fock_cutoff1 = configs[k].fock_cutoff2 = cutoff;
        try {
            configs[k].validate();
        } catch (const ProtocolError& e) {
            throw ConfigError(options.config_path.string() + ": [zeno4] " + e.what());
        }
    }
    parallel_for(periods.size(), options.threads, [&](std::size_t k) { traces[k] = run_four_level_protocol(configs[k]); });

    // Two-level atoms with this splitting decay at the same closed-form rate.
    const double equivalent = std::sqrt((d1 * d1 + d2 * d2) / 2.0);
    for (std::size_t k = 0; k < periods.size(); ++k) {
        const auto& t = traces[k].survival;
        auto r = survival_record("zeno4_" + std::to_string(k), t, static_cast<std::size_t>(samples));
        r.metadata = {{"cycle_period", format_double(periods[k])},
                      {"measure_interval", format_double(configs[k].measure_interval)},
                      {"coupling", format_double(configs[k].coupling)},
                      {"two_level_equivalent_delta", format_double(equivalent)},
                      {"out_of_regime", flag(t.out_of_regime)},
                      {"valid", flag(t.valid)},
                      {"max_cross_population", format_double(traces[k].max_cross_population)},
                      {"manifold2_residual_cosine", format_double(traces[k].manifold2_residual_cosine)}};
        stamp(r, out);
        double worst_two_level = 0.0;
        for (std::size_t i = 0; i < t.times.size(); ++i) {
            const double two = ps_analytic(equivalent, configs[k].free_interval, configs[k].measure_interval, t.times[i])
                                   .exponential;
            worst_two_level = std::max(worst_two_level, std::abs(t.p_success[i] / two - 1.0));
        }
        const std::string p = "curve" + std::to_string(k) + ".";
        out.results.emplace_back(p + "cycle_period", format_double(periods[k]));
        out.results.emplace_back(p + "final_p_success", format_double(t.p_success.back()));
        out.results.emplace_back(p + "max_relative_deviation", format_double(max_relative_deviation(t)));
        out.results.emplace_back(p + "max_deviation_from_two_level", format_double(worst_two_level));
        out.results.emplace_back(p + "max_cross_population", format_double(traces[k].max_cross_population));
        out.results.emplace_back(p + "out_of_regime", flag(t.out_of_regime));
        out.results.emplace_back(p + "valid", flag(t.valid));
        out.out_of_regime |= t.out_of_regime;
        out.invalid |= !t.valid;
        out.records.push_back(std::move(r));
    }
    out.plots.push_back({"zeno4", survival_plot("Four-level survival probability", out.records)});
    return out;
}

CommandOutput cmd_readout(ConfigSection section, const RunOptions& options) {
    CommandOutput out;
    Settings s(section, out.resolved);
    ReadoutConfig base;
    base.coupling = s.number("coupling", 2.0);
    base.detuning = s.number("detuning", 10.0);
    base.drive = s.number("drive", 1.0);
    FourLevelAtom levels;
    levels.g1 = s.number("g1", 0.0);
    levels.g2 = s.number("g2", 0.0);
    levels.e1 = s.number("e1", 120.0);
    levels.e2 = s.number("e2", 110.0);
    base.atom_a = base.atom_b = levels;
    base.emission_cutoff = s.integer("emission_cutoff", 2, 1);
    const double t_end = s.positive("t_end", 12.0);
    const int points = s.integer("points", 1201, 3);
    base.fit_window = s.number("fit_window", 0.0);
    const auto phases = s.list("clock_phases", {0.0, std::numbers::pi});
    const auto model_name = s.choice("model", "full", {"full", "effective"});
    s.finish();
    base.readout_times = ReadoutConfig::uniform_grid(t_end, static_cast<std::size_t>(points));
    try {
        base.validate();
        if (base.clock_frequency() == 0.0) throw ReadoutError("clock frequency is zero");
    } catch (const ReadoutError& e) {
        throw ConfigError(options.config_path.string() + ": [readout] " + e.what());
    }
    const auto model = model_name == "full" ? EmissionModel::Full : EmissionModel::Effective;

    std::vector<std::optional<ReadoutRun>> runs(phases.size());
    parallel_for(phases.size(), options.threads, [&](std::size_t k) {
        auto c = base;
        c.elapsed_time = phases[k] / c.clock_frequency();
        runs[k] = run_readout(c, model);
    });

    PlotSpec plot{"Emitted field quadrature", "t_r", "<a + a^dagger>", {}};
    for (std::size_t k = 0; k < phases.size(); ++k) {
        const auto& run = *runs[k];
        const auto& trace = run.trace;
        TraceRecord r;
        r.name = "readout_" + std::to_string(k);
        r.columns = {"t_r", "quadrature"};
        for (std::size_t i = 0; i < trace.times.size(); ++i) r.add_row({trace.times[i], trace.quadrature[i]});
        const std::string fit = trace.has_fit() ? "ok" : "degenerate";
        r.metadata = {{"clock_phase", format_double(phases[k])},
                      {"elapsed_time", format_double(phases[k] / base.clock_frequency())},
                      {"model", model_name},
                      {"fit", fit},
                      {"fitted_phase", format_double(trace.fitted_phase)},
                      {"fitted_frequency", format_double(trace.fitted_frequency)},
                      {"fit_window", format_double(trace.fit_window)}};
        stamp(r, out);
        const std::string p = "trace" + std::to_string(k) + ".";
        out.results.emplace_back(p + "clock_phase", format_double(phases[k]));
        out.results.emplace_back(p + "fit", fit);
        out.results.emplace_back(p + "fitted_phase", format_double(trace.fitted_phase));
        out.results.emplace_back(p + "fitted_frequency", format_double(trace.fitted_frequency));
        out.results.emplace_back(p + "postselection_probability", format_double(run.selected.probability));
        plot.series.push_back({"phase " + format_double(phases[k]), trace.times, trace.quadrature, k % 2 == 0});
        out.records.push_back(std::move(r));
    }
    if (runs.front()->trace.has_fit()) {
        auto c = base;
        c.elapsed_time = phases.front() / c.clock_frequency();
        out.results.emplace_back("effective_model_deviation", format_double(effective_model_deviation(c)));
    }
    out.plots.push_back({"readout", std::move(plot)});
    return out;
}

CommandOutput cmd_allan(ConfigSection section, const RunOptions&) {
    CommandOutput out;
    Settings s(section, out.resolved);
    const double fwhm = s.positive("fwhm", 1.0);
    const double carrier = s.positive("carrier", 1e9);
    const auto counts = s.positive_list("atom_counts", {1.0, 2.0, 100.0});
    const double cycle = s.positive("cycle_time", 1.0);
    const auto taus = s.positive_list("averaging_times", {1.0, 4.0, 100.0});
    const double group = s.positive("locked_group", 2.0);
    s.finish();

    TraceRecord r;
    r.name = "allan";
    r.monotone_column = -1;
    r.columns = {"atom_count", "averaging_time", "sigma_y", "sigma_y_locked", "narrowing"};
    std::ostringstream table;
    table << "atom_count  averaging_time  sigma_y  sigma_y_locked  narrowing\n";
    for (double n : counts) {
        for (double tau : taus) {
            const double a = allan_deviation({fwhm, carrier, n, cycle, tau});
            const double b = allan_deviation({fwhm / std::sqrt(group), carrier, n, cycle, tau});
            r.add_row({n, tau, a, b, a / b});
            table << format_double(n) << "  " << format_double(tau) << "  " << format_double(a) << "  "
                  << format_double(b) << "  " << format_double(a / b) << "\n";
        }
    }
    stamp(r, out);
    out.table = table.str();
    out.results = {{"narrowing_factor", format_double(std::sqrt(group))}};
    out.records.push_back(std::move(r));
    return out;
}

const std::vector<std::string>& command_names() {
    static const std::vector<std::string> names{"dephasing", "zeno2", "zeno4", "readout", "allan"};
    return names;
}

int execute(const RunOptions& options, std::ostream& out, std::ostream& err) {
    CommandOutput result;
    try {
        const auto file = ConfigFile::load(options.config_path);
        auto section = file.section(options.command);
        if (options.command == "dephasing") {
            result = cmd_dephasing(std::move(section), options);
        } else if (options.command == "zeno2") {
            result = cmd_zeno2(std::move(section), options);
        } else if (options.command == "zeno4") {
            result = cmd_zeno4(std::move(section), options);
        } else if (options.command == "readout") {
            result = cmd_readout(std::move(section), options);
        } else if (options.command == "allan") {
            result = cmd_allan(std::move(section), options);
        } else {
            err << "unknown command '" << options.command << "'\n";
            return kExitUsage;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        err << "numerical failure: " << e.what() << "\n";
        return kExitInvalid;
    }

    std::error_code ec;
    std::filesystem::create_directories(options.out_dir, ec);
    if (ec) {
        err << "cannot create " << options.out_dir.string() << ": " << ec.message() << "\n";
        return kExitConfig;
    }

    std::vector<std::string> files;
    try {
        for (const auto& r : result.records) files.push_back(write_csv(r, options.out_dir).filename().string());
        if (options.plots) {
            for (const auto& [stem, plot] : result.plots) {
                std::ofstream svg(options.out_dir / (stem + ".svg"), std::ios::binary);
                svg << render_svg(plot);
                files.push_back(stem + ".svg");
            }
        }
        std::ofstream manifest(options.out_dir / "manifest.txt", std::ios::binary);
        manifest << "tool: zenolock " << kToolVersion << "\n"
                 << "command: " << options.command << "\n"
                 << "config: " << options.config_path.string() << "\n"
                 << "config_hash: " << config_hash(result.resolved) << "\n"
                 << "seed: " << result.seed << "\n"
                 << "output: " << options.out_dir.string() << "\n"
                 << "plots: " << flag(options.plots) << "\n"
                 << "strict: " << flag(options.strict) << "\n"
                 << "out_of_regime: " << flag(result.out_of_regime) << "\n"
                 << "valid: " << flag(!result.invalid) << "\n"
                 << "[resolved]\n";
        for (const auto& [k, v] : result.resolved) manifest << k << " = " << v << "\n";
        manifest << "[results]\n";
        for (const auto& [k, v] : result.results) manifest << k << " = " << v << "\n";
        manifest << "[files]\n";
        for (const auto& f : files) manifest << f << "\n";
        if (!manifest) throw TraceError("cannot write manifest");
    } catch (const std::exception& e) {
        err << "output error: " << e.what() << "\n";
        return kExitInvalid;
    }

    out << result.table;
    for (const auto& [k, v] : result.results) out << k << " = " << v << "\n";
    if (result.invalid) {
        err << "validity check failed (Fock truncation); see manifest\n";
        return kExitInvalid;
    }
    if (result.out_of_regime && options.strict) {
        err << "parameters outside the perturbative regime (--strict)\n";
        return kExitOutOfRegime;
    }
    return kExitOk;
}

}  // namespace zenolock
