// lrc: simulate PAM-4 fiber links and equalize them with a delay-based
// photonic reservoir.

#include "lrc/analysis.hpp"
#include "lrc/errors.hpp"
#include "lrc/experiment.hpp"
#include "lrc/waveform_io.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>

namespace fs = std::filesystem;
using namespace lrc;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;
constexpr int kExitInterrupted = 130;

std::atomic<bool> g_cancel{false};

extern "C" void on_sigint(int) { g_cancel.store(true); }

struct CommonOptions {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out;
    bool desk_scale = false;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o)
{
    cmd->add_option("--config", o.config_path, "Config file (section.key = value lines)");
    cmd->add_option("--preset", o.preset, "Built-in preset, applied before --config");
    cmd->add_option("--seed", o.seed, "Base seed (run.seed)");
    cmd->add_option("--out", o.out, "Output directory (run.output_dir)");
    cmd->add_flag("--desk-scale", o.desk_scale, "Shorter streams and fewer test sets");
    cmd->add_option("--set", o.overrides, "Extra key=value override, repeatable");
}

ExperimentConfig resolve(const CommonOptions& o)
{
    ExperimentConfig cfg;
    if (!o.preset.empty()) {
        auto p = builtin_preset(o.preset);
        if (!p) {
            std::string names;
            for (const auto& n : preset_names()) names += " " + n;
            throw ConfigError("unknown preset '" + o.preset + "'; available:" + names);
        }
        cfg = *p;
    }
    if (!o.config_path.empty()) cfg = load_config(o.config_path, cfg);
    std::string extra;
    for (const auto& kv : o.overrides) extra += kv + "\n";
    if (o.seed) extra += "run.seed = " + std::to_string(*o.seed) + "\n";
    if (!extra.empty()) cfg = parse_config(extra, cfg);
    if (!o.out.empty()) cfg.run.output_dir = o.out;
    if (o.desk_scale) apply_desk_scale(cfg);
    cfg.validate();
    return cfg;
}

fs::path output_dir(const ExperimentConfig& cfg)
{
    const fs::path dir = cfg.run.output_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory " + dir.string());
    return dir;
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw IoError("write failed: " + path.string());
}

std::string stream_name(int index) { return index == 0 ? "train" : "test" + std::to_string(index); }

std::vector<LabeledTrace> simulate_all(const ExperimentConfig& cfg, const fs::path* save_dir)
{
    std::vector<LabeledTrace> out;
    for (int i = 0; i <= cfg.run.n_test_sets; ++i) {
        const auto seed = stream_seed(cfg.run.seed, i);
        auto s = simulate_stream(cfg.link, cfg.run.n_symbols, seed, cfg.run.osnr_db);
        if (save_dir) {
            const auto base = *save_dir / stream_name(i);
            io::write_optical(base.string() + ".launch.lrc", s.launch);
            io::write_optical(base.string() + ".received.lrc", s.received);
            io::write_trace(base.string() + ".detected.lrc", s.detected.dt, s.detected.samples);
            io::write_symbols(base.string() + ".symbols", s.symbols);
            const double naive = ber(naive_slice(s.detected, cfg.link), s.symbols, 0).ber;
            std::printf("%-6s seed %llu: %zu symbols, naive BER %.4g, OSNR %.2f dB\n", stream_name(i).c_str(),
                        static_cast<unsigned long long>(seed), s.symbols.size(), naive, measure_osnr(s.received));
        }
        out.push_back({std::move(s.detected), std::move(s.symbols)});
    }
    return out;
}

int finish_report(const ExperimentConfig& cfg, const std::vector<LabeledTrace>& streams, bool write_features)
{
    const auto dir = output_dir(cfg);
    const std::vector<LabeledTrace> tests(streams.begin() + 1, streams.end());
    FeatureMatrix features;
    const auto report = run_pipeline(cfg, streams.front(), tests, write_features ? &features : nullptr);
    write_text(dir / "report.json", report_json(cfg, report));
    write_model(dir / "model.csv", report.rc_model);
    if (write_features) write_features_csv(dir / "features_train.csv", features);
    for (const auto& w : report.rc_model.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    std::printf("BER rc %.4g  lr %.4g  naive %.4g  (HD-FEC %.2g)  speed penalty %.4g\n", report.ber_rc,
                report.ber_lr, report.ber_naive, phys::hd_fec_ber, report.speed_penalty);
    std::printf("report: %s\n", (dir / "report.json").string().c_str());
    return 0;
}

LabeledTrace load_trace(const ExperimentConfig& cfg, const fs::path& trace, const fs::path& symbols)
{
    auto t = io::read_trace(trace);
    const double expected = cfg.link.sample_interval();
    if (std::abs(t.dt / expected - 1.0) > 1e-9) {
        char buf[512];
        std::snprintf(buf, sizeof buf,
                      "%s: sample rate %.6g GSa/s does not match link.bit_rate / 2 * link.samples_per_baud = "
                      "%.6g GSa/s; resample the trace to %.6g GSa/s or adjust link.bit_rate and "
                      "link.samples_per_baud",
                      trace.string().c_str(), 1e-9 / t.dt, 1e-9 / expected, 1e-9 / expected);
        throw ConfigError(buf);
    }
    LabeledTrace lt;
    lt.symbols = io::read_symbols(symbols);
    const auto sps = static_cast<std::size_t>(cfg.link.samples_per_baud);
    if (t.samples.size() != lt.symbols.size() * sps) {
        throw ConfigError(trace.string() + ": " + std::to_string(t.samples.size()) + " samples for " +
                          std::to_string(lt.symbols.size()) + " symbols at " + std::to_string(sps) +
                          " samples per baud");
    }
    lt.detected.samples = std::move(t.samples);
    lt.detected.dt = t.dt;
    lt.detected.baud_period = t.dt * static_cast<double>(sps);
    return lt;
}

std::vector<double> or_default(const std::vector<double>& v, std::vector<double> fallback)
{
    return v.empty() ? fallback : v;
}

std::vector<double> range(double start, double step, double stop)
{
    std::vector<double> out;
    for (int i = 0; start + step * i <= stop + 1e-9; ++i) out.push_back(start + step * i);
    return out;
}

std::string x_name_of(const std::string& kind)
{
    if (kind == "taps") return "taps";
    if (kind == "power") return "power_dbm";
    if (kind == "osnr") return "osnr_db";
    return "";
}

void write_plots(const fs::path& dir, const std::string& kind, const std::vector<SweepRecord>& records,
                 const std::vector<AggregateRow>& rows)
{
    if (kind == "map") {
        std::set<double> dfs, kfs;
        for (const auto& r : rows) {
            dfs.insert(r.delta_f);
            kfs.insert(r.k_f);
        }
        const std::vector<double> xs(dfs.begin(), dfs.end()), ys(kfs.begin(), kfs.end());
        std::map<std::pair<double, double>, const AggregateRow*> at;
        for (const auto& r : rows) at[{r.delta_f, r.k_f}] = &r;
        std::vector<std::vector<double>> ber(ys.size(), std::vector<double>(xs.size(), NAN));
        auto snr = ber;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            for (std::size_t j = 0; j < xs.size(); ++j) {
                const auto it = at.find({xs[j], ys[i]});
                if (it == at.end()) continue;
                ber[i][j] = it->second->ber_mean;
                snr[i][j] = it->second->snr_mean;
            }
        }
        write_heatmap_svg(dir / "ber_map.svg", xs, ys, ber, "Reservoir BER (log10)", "detuning (GHz)", "k_f", true);
        write_heatmap_svg(dir / "snr_map.svg", xs, ys, snr, "Reservoir consistency SNR (dB)", "detuning (GHz)",
                          "k_f", false);
        return;
    }
    LineSeries rc{"RC", {}, {}}, lr{"LR", {}, {}}, naive{"no equalizer", {}, {}};
    for (const auto& r : rows) {
        rc.x.push_back(r.x);
        rc.y.push_back(r.ber_mean);
        lr.x.push_back(r.x);
        lr.y.push_back(r.ber_lr_mean);
        naive.x.push_back(r.x);
        naive.y.push_back(r.ber_naive_mean);
    }
    (void)records;
    const std::string label = kind == "taps" ? "taps per side" : kind == "power" ? "launch peak power (dBm)"
                                                                                  : "OSNR (dB, 0.1 nm)";
    write_line_svg(dir / (kind + ".svg"), {rc, lr, naive}, "BER against " + label, label, "BER", true,
                   phys::hd_fec_ber);
}

int cmd_sweep(const ExperimentConfig& cfg, unsigned threads)
{
    const auto dir = output_dir(cfg);
    const auto& sw = cfg.sweep;
    std::vector<std::uint64_t> seeds;
    for (int r = 0; r < sw.replicates; ++r) seeds.push_back(cfg.run.seed + static_cast<std::uint64_t>(r));
    const std::string x_name = x_name_of(sw.kind);

    // Records are appended as they finish so an interrupt leaves a usable file.
    const auto csv_path = dir / "records.csv";
    std::ofstream partial(csv_path);
    if (!partial) throw IoError("cannot open " + csv_path.string() + " for writing");
    partial << records_csv_header(x_name) << std::flush;
    SweepOptions opt;
    opt.threads = threads;
    opt.cancel = &g_cancel;
    opt.with_snr = sw.kind == "map";
    opt.on_record = [&](const SweepRecord& r) {
        partial << record_csv_line(r, !x_name.empty()) << std::flush;
        char x[64] = "";
        if (!x_name.empty()) std::snprintf(x, sizeof x, "%s %g ", x_name.c_str(), r.x);
        std::fprintf(stderr, "%sdF %g kf %g seed %llu: rc %.4g lr %.4g%s%s\n", x, r.delta_f, r.k_f,
                     static_cast<unsigned long long>(r.seed), r.ber_rc, r.ber_lr, r.reason.empty() ? "" : "  ",
                     r.reason.c_str());
    };

    std::vector<SweepRecord> records;
    if (sw.kind == "map") {
        SweepGrid grid = default_map_grid(seeds);
        if (!sw.delta_f.empty()) grid.delta_f = sw.delta_f;
        if (!sw.k_f.empty()) grid.k_f = sw.k_f;
        std::vector<PreparedData> data;
        for (auto s : seeds) data.push_back(prepare_seed(cfg, s));
        records = run_map(grid, cfg, data, opt);
    } else if (sw.kind == "taps") {
        std::vector<int> taps;
        for (double t : or_default(sw.taps, {0, 1, 2, 3, 4, 5, 6, 8, 10, 12, 15})) {
            taps.push_back(static_cast<int>(std::lround(t)));
        }
        std::vector<PreparedData> data;
        for (auto s : seeds) data.push_back(prepare_seed(cfg, s));
        records = run_tap_sweep(taps, cfg, seeds, data, opt);
    } else if (sw.kind == "power") {
        records = run_power_sweep(or_default(sw.power_dbm, range(-8, 2, 14)), cfg, seeds, opt);
    } else {
        records = run_osnr_sweep(or_default(sw.osnr_db, range(20, 5, 45)), cfg, seeds, opt);
    }
    partial.close();

    write_records_csv(csv_path, records, x_name);
    const auto rows = aggregate(records);
    write_aggregate_csv(dir / "aggregate.csv", rows, x_name);
    write_plots(dir, sw.kind, records, rows);
    write_text(dir / "config.txt", to_text(cfg));
    if (g_cancel.load()) {
        std::fprintf(stderr, "interrupted: %zu finished points written to %s\n", records.size(),
                     csv_path.string().c_str());
        return kExitInterrupted;
    }
    std::printf("%zu records: %s\n", records.size(), csv_path.string().c_str());
    return 0;
}

int cmd_report(const fs::path& in, const std::string& kind_opt, const fs::path& out_dir)
{
    std::ifstream f(in);
    if (!f) throw IoError("cannot open " + in.string());
    std::string header;
    std::getline(f, header);
    const auto comma = header.find(',');
    const std::string first = header.substr(0, comma);
    std::string kind = kind_opt;
    if (kind.empty()) {
        kind = first == "taps" ? "taps" : first == "power_dbm" ? "power" : first == "osnr_db" ? "osnr" : "map";
    }
    const std::string x_name = first == "delta_f_ghz" ? "" : first;
    const auto records = read_records_csv(in);
    const auto rows = aggregate(records);
    fs::create_directories(out_dir);
    write_aggregate_csv(out_dir / "aggregate.csv", rows, x_name);
    write_plots(out_dir, kind, records, rows);
    for (const auto& r : rows) {
        std::printf("%s%g  dF %g  kf %g  n %zu (nan %zu)  rc mean %.4g [%.4g, %.4g]  lr %.4g\n",
                    x_name.empty() ? "" : (x_name + " ").c_str(), x_name.empty() ? 0.0 : r.x, r.delta_f, r.k_f,
                    r.count, r.nan_count, r.ber_mean, r.ber_min, r.ber_max, r.ber_lr_mean);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"PAM-4 fiber link simulation and reservoir-computing equalization"};
    app.require_subcommand(1);

    CommonOptions sim_o, rc_o, sweep_o, ingest_o;
    auto* sim = app.add_subcommand("simulate", "Write launch, received and detected waveforms plus symbols");
    add_common(sim, sim_o);

    auto* rc = app.add_subcommand("rc", "Simulate and run the reservoir pipeline, write a BER report");
    add_common(rc, rc_o);
    bool rc_features = false;
    rc->add_flag("--features", rc_features, "Also write the training feature matrix as CSV");

    auto* sweep = app.add_subcommand("sweep", "Run a map, taps, power or OSNR sweep");
    add_common(sweep, sweep_o);
    std::string sweep_kind;
    unsigned threads = 0;
    sweep->add_option("--kind", sweep_kind, "Overrides sweep.kind")->check(CLI::IsMember({"map", "taps", "power", "osnr"}));
    sweep->add_option("--threads", threads, "Worker threads (0: all cores)");

    auto* ingest = app.add_subcommand("ingest", "Run the pipeline on externally produced traces");
    add_common(ingest, ingest_o);
    std::string train_trace, train_symbols;
    std::vector<std::string> test_traces, test_symbols;
    ingest->add_option("--trace", train_trace, "Training detected trace (.lrc)")->required();
    ingest->add_option("--symbols", train_symbols, "Training symbols")->required();
    ingest->add_option("--test-trace", test_traces, "Test detected trace, repeatable")->required();
    ingest->add_option("--test-symbols", test_symbols, "Test symbols, one per --test-trace")->required();

    auto* report = app.add_subcommand("report", "Aggregate a sweep records CSV and redraw its plots");
    std::string report_in, report_kind, report_out = ".";
    report->add_option("--in", report_in, "records.csv from a sweep")->required();
    report->add_option("--kind", report_kind, "map, taps, power or osnr (default: from the header)");
    report->add_option("--out", report_out, "Output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    std::signal(SIGINT, on_sigint);
    try {
        if (*sim) {
            const auto cfg = resolve(sim_o);
            const auto dir = output_dir(cfg);
            simulate_all(cfg, &dir);
            write_text(dir / "config.txt", to_text(cfg));
            return 0;
        }
        if (*rc) {
            const auto cfg = resolve(rc_o);
            return finish_report(cfg, simulate_all(cfg, nullptr), rc_features);
        }
        if (*sweep) {
            auto o = sweep_o;
            if (!sweep_kind.empty()) o.overrides.push_back("sweep.kind = " + sweep_kind);
            return cmd_sweep(resolve(o), threads);
        }
        if (*ingest) {
            const auto cfg = resolve(ingest_o);
            if (test_traces.size() != test_symbols.size()) {
                throw ConfigError("ingest: each --test-trace needs a matching --test-symbols");
            }
            std::vector<LabeledTrace> streams{load_trace(cfg, train_trace, train_symbols)};
            for (std::size_t i = 0; i < test_traces.size(); ++i) {
                streams.push_back(load_trace(cfg, test_traces[i], test_symbols[i]));
            }
            return finish_report(cfg, streams, false);
        }
        if (*report) return cmd_report(report_in, report_kind, report_out);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "rejected input: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
