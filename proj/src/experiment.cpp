#include "lrc/experiment.hpp"

#include "lrc/errors.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace lrc {

// ---------------------------------------------------------------------------
// Config text

namespace {

std::string fmt_double(double v)
{
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    if (std::isnan(v)) return "nan";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    if (v == "inf" || v == "+inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a number, got '" + v + "'");
    }
    return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v)
{
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
    }
    return out;
}

long long parse_int(const std::string& key, const std::string& v)
{
    long long out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
        throw ConfigError(key + ": expected an integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

// "a,b,c" or "start:step:stop" (inclusive, tolerant to rounding).
std::vector<double> parse_list(const std::string& key, const std::string& v)
{
    std::vector<double> out;
    if (v.empty()) return out;
    if (v.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::stringstream ss(v);
        std::string item;
        while (std::getline(ss, item, ':')) parts.push_back(parse_double(key, trim(item)));
        if (parts.size() != 3 || !(parts[1] > 0) || parts[2] < parts[0]) {
            throw ConfigError(key + ": range must be start:step:stop with step > 0");
        }
        const auto count = static_cast<long long>(std::floor((parts[2] - parts[0]) / parts[1] + 1e-9));
        for (long long i = 0; i <= count; ++i) out.push_back(parts[0] + static_cast<double>(i) * parts[1]);
        return out;
    }
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
    return out;
}

std::string fmt_list(const std::vector<double>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt_double(v[i]);
    return s;
}

struct Key {
    std::string name;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define LRC_DOUBLE(section, field)                                                                                     \
    Key{#section "." #field, [](const ExperimentConfig& c) { return fmt_double(c.section.field); },                   \
        [](ExperimentConfig& c, const std::string& v) { c.section.field = parse_double(#section "." #field, v); }}
#define LRC_BOOL(section, field)                                                                                       \
    Key{#section "." #field, [](const ExperimentConfig& c) { return std::string(c.section.field ? "true" : "false"); }, \
        [](ExperimentConfig& c, const std::string& v) { c.section.field = parse_bool(#section "." #field, v); }}
#define LRC_UINT(section, field)                                                                                       \
    Key{#section "." #field, [](const ExperimentConfig& c) { return std::to_string(c.section.field); },               \
        [](ExperimentConfig& c, const std::string& v) {                                                                \
            c.section.field = static_cast<decltype(c.section.field)>(parse_uint(#section "." #field, v));              \
        }}
#define LRC_INT(section, field)                                                                                        \
    Key{#section "." #field, [](const ExperimentConfig& c) { return std::to_string(c.section.field); },               \
        [](ExperimentConfig& c, const std::string& v) {                                                                \
            c.section.field = static_cast<decltype(c.section.field)>(parse_int(#section "." #field, v));               \
        }}
#define LRC_LIST(section, field)                                                                                       \
    Key{#section "." #field, [](const ExperimentConfig& c) { return fmt_list(c.section.field); },                     \
        [](ExperimentConfig& c, const std::string& v) { c.section.field = parse_list(#section "." #field, v); }}

const std::vector<Key>& keys()
{
    static const std::vector<Key> table{
        LRC_DOUBLE(link, bit_rate),
        LRC_DOUBLE(link, fiber_length_km),
        LRC_DOUBLE(link, launch_peak_power_dbm),
        LRC_DOUBLE(link, attenuation_db_km),
        LRC_DOUBLE(link, dispersion_ps_nm_km),
        LRC_DOUBLE(link, n2),
        LRC_DOUBLE(link, a_eff_um2),
        LRC_DOUBLE(link, dgd_ps_km),
        LRC_DOUBLE(link, rin_db_hz),
        LRC_DOUBLE(link, wavelength_nm),
        LRC_INT(link, samples_per_baud),
        LRC_DOUBLE(link, responsivity),
        LRC_DOUBLE(link, tia_gain_db),
        LRC_DOUBLE(link, rx_cutoff_fraction),
        LRC_UINT(link, rng_seed),
        LRC_DOUBLE(link, step_m),
        LRC_DOUBLE(link, extinction_floor),
        LRC_DOUBLE(link, thermal_noise_density),
        LRC_BOOL(link, rin_enabled),
        LRC_BOOL(link, shot_noise_enabled),
        LRC_BOOL(link, thermal_noise_enabled),
        LRC_BOOL(link, rx_filter_enabled),
        LRC_BOOL(link, sbs_clamp),
        LRC_DOUBLE(link, sbs_gain),
        LRC_INT(link, guard_symbols),
        LRC_DOUBLE(reservoir, alpha_h),
        LRC_DOUBLE(reservoir, g_n),
        LRC_DOUBLE(reservoir, sat_s),
        LRC_DOUBLE(reservoir, n0),
        LRC_DOUBLE(reservoir, t_s),
        LRC_DOUBLE(reservoir, t_in),
        LRC_DOUBLE(reservoir, t_ph),
        LRC_DOUBLE(reservoir, bias_current),
        LRC_DOUBLE(reservoir, threshold_current),
        LRC_DOUBLE(reservoir, k_f),
        LRC_DOUBLE(reservoir, k_inj),
        LRC_DOUBLE(reservoir, tau),
        LRC_DOUBLE(reservoir, delta_f),
        LRC_DOUBLE(reservoir, feedback_phase),
        LRC_DOUBLE(reservoir, noise_d),
        LRC_DOUBLE(reservoir, e_inj0),
        LRC_DOUBLE(reservoir, dt),
        LRC_UINT(reservoir, rng_seed),
        LRC_UINT(mask, n_nodes),
        LRC_UINT(mask, rng_seed),
        Key{"mask.kind",
            [](const ExperimentConfig& c) {
                return std::string(c.mask.kind == MaskKind::Uniform ? "uniform" : "binary");
            },
            [](ExperimentConfig& c, const std::string& v) {
                if (v == "uniform") c.mask.kind = MaskKind::Uniform;
                else if (v == "binary") c.mask.kind = MaskKind::Binary;
                else throw ConfigError("mask.kind: expected uniform or binary, got '" + v + "'");
            }},
        LRC_DOUBLE(readout, split.train_fraction),
        LRC_DOUBLE(readout, split.validation_fraction),
        LRC_LIST(readout, lambda_grid),
        LRC_INT(readout, taps),
        LRC_UINT(run, n_symbols),
        LRC_INT(run, n_test_sets),
        LRC_UINT(run, seed),
        Key{"run.output_dir", [](const ExperimentConfig& c) { return c.run.output_dir; },
            [](ExperimentConfig& c, const std::string& v) { c.run.output_dir = v; }},
        LRC_DOUBLE(run, osnr_db),
        LRC_INT(run, probe_symbols),
        LRC_INT(run, probe_trials),
        Key{"sweep.kind", [](const ExperimentConfig& c) { return c.sweep.kind; },
            [](ExperimentConfig& c, const std::string& v) {
                if (v != "map" && v != "taps" && v != "power" && v != "osnr") {
                    throw ConfigError("sweep.kind: expected map, taps, power or osnr, got '" + v + "'");
                }
                c.sweep.kind = v;
            }},
        LRC_LIST(sweep, delta_f),
        LRC_LIST(sweep, k_f),
        LRC_LIST(sweep, power_dbm),
        LRC_LIST(sweep, osnr_db),
        LRC_LIST(sweep, taps),
        LRC_INT(sweep, replicates),
    };
    return table;
}

#undef LRC_DOUBLE
#undef LRC_BOOL
#undef LRC_UINT
#undef LRC_INT
#undef LRC_LIST

} // namespace

void ExperimentConfig::validate() const
{
    link.validate();
    reservoir.validate();
    readout.split.validate();
    if (mask.values.size() != mask.n_nodes || mask.n_nodes == 0) throw ConfigError("mask.n_nodes: mask not generated");
    if (mask.n_nodes % static_cast<std::size_t>(link.samples_per_baud) != 0) {
        throw ConfigError("mask.n_nodes: must be a multiple of link.samples_per_baud (" +
                          std::to_string(link.samples_per_baud) + ")");
    }
    (void)steps_per_slot(reservoir, mask.n_nodes);
    if (readout.lambda_grid.empty()) throw ConfigError("readout.lambda_grid: must not be empty");
    for (double l : readout.lambda_grid) {
        if (!(l >= 0)) throw ConfigError("readout.lambda_grid: values must be >= 0");
    }
    if (readout.taps < 0) throw ConfigError("readout.taps: must be >= 0");
    if (run.n_symbols < 16) throw ConfigError("run.n_symbols: must be >= 16");
    if (run.n_test_sets < 1) throw ConfigError("run.n_test_sets: must be >= 1");
    if (run.probe_trials < 2) throw ConfigError("run.probe_trials: must be >= 2");
    if (run.probe_symbols < 1) throw ConfigError("run.probe_symbols: must be >= 1");
    if (std::isnan(run.osnr_db)) throw ConfigError("run.osnr_db: must be a number or inf");
    if (sweep.replicates < 1) throw ConfigError("sweep.replicates: must be >= 1");
    if (2 * static_cast<std::size_t>(readout.taps) >= run.n_symbols) {
        throw ConfigError("readout.taps: too many taps for run.n_symbols");
    }
}

std::size_t ExperimentConfig::oversampling() const
{
    return mask.n_nodes / static_cast<std::size_t>(link.samples_per_baud);
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base)
{
    std::stringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        bool found = false;
        for (const auto& k : keys()) {
            if (k.name == key) {
                try {
                    k.set(base, value);
                } catch (const ConfigError& e) {
                    throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
                }
                found = true;
                break;
            }
        }
        if (!found) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    base.mask = make_mask(base.mask.n_nodes, base.mask.rng_seed, base.mask.kind);
    base.validate();
    return base;
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig base)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string to_text(const ExperimentConfig& cfg)
{
    // Where results are written does not change them; keep it out of the
    // text that reports embed and hash.
    std::string out;
    for (const auto& k : keys()) {
        if (k.name != "run.output_dir") out += k.name + " = " + k.get(cfg) + "\n";
    }
    return out;
}

std::string config_hash(const ExperimentConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : to_text(cfg)) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::uint64_t stream_seed(std::uint64_t base, int index)
{
    return base * 1000003ull + static_cast<std::uint64_t>(index);
}

// ---------------------------------------------------------------------------
// Streams and pipeline

namespace {

// Runs one pipeline stage, prefixing any rejection with the stage name.
template <class F>
auto stage(const char* name, F&& f) -> decltype(f())
{
    const auto msg = [&](const std::exception& e) { return std::string(name) + ": " + e.what(); };
    try {
        return f();
    } catch (const ConfigError& e) {
        throw ConfigError(msg(e));
    } catch (const NumericalError& e) {
        throw NumericalError(msg(e));
    } catch (const IoError& e) {
        throw IoError(msg(e));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(msg(e));
    }
}

} // namespace

SimulatedStream simulate_stream(const LinkConfig& link, std::size_t n_symbols, std::uint64_t seed, double osnr_db)
{
    LinkConfig cfg = link;
    cfg.rng_seed = seed;
    cfg.validate();
    SimulatedStream s;
    s.symbols = encode_pam4(random_bits(2 * n_symbols, seed));
    s.launch = modulate(s.symbols, cfg);
    s.received = propagate(s.launch, cfg);
    if (!(std::isinf(osnr_db) && osnr_db > 0)) s.received = add_ase_noise(s.received, osnr_db, seed);
    s.detected = detect(s.received, cfg);
    return s;
}

PreparedData prepare(const ExperimentConfig& cfg, const LabeledTrace& train, const std::vector<LabeledTrace>& tests)
{
    const std::size_t sps = static_cast<std::size_t>(cfg.link.samples_per_baud);
    const std::size_t factor = cfg.oversampling();
    auto check = [&](const LabeledTrace& t, const char* what) {
        if (t.detected.samples.size() != t.symbols.size() * sps) {
            throw std::invalid_argument(std::string(what) + ": waveform has " +
                                        std::to_string(t.detected.samples.size()) + " samples for " +
                                        std::to_string(t.symbols.size()) + " symbols at " + std::to_string(sps) +
                                        " samples per baud");
        }
    };
    stage("input", [&] { check(train, "training stream"); });
    PreparedData d;
    d.samples_per_baud = sps;
    auto fit = stage("normalize", [&] { return normalize_fit(train.detected.samples); });
    d.affine = fit.affine;
    d.train_normalized = std::move(fit.values);
    d.train_masked = stage("mask", [&] { return apply_mask(oversample(d.train_normalized, factor), cfg.mask); });
    d.train_symbols = train.symbols;
    for (const auto& t : tests) {
        stage("input", [&] { check(t, "test stream"); });
        d.test_normalized.push_back(stage("normalize", [&] { return normalize_apply(t.detected.samples, d.affine); }));
        d.test_masked.push_back(
            stage("mask", [&] { return apply_mask(oversample(d.test_normalized.back(), factor), cfg.mask); }));
        d.test_symbols.push_back(t.symbols);
        d.naive_ber.push_back(stage("naive slicer", [&] {
            return ber(naive_slice(t.detected, cfg.link), t.symbols, static_cast<std::size_t>(cfg.readout.taps)).ber;
        }));
    }
    return d;
}

NodeSet run_reservoir(const ReservoirParams& params, std::size_t n_nodes, const PreparedData& data)
{
    NodeSet nodes;
    nodes.train = reservoir_nodes(data.train_masked, n_nodes, params);
    for (const auto& m : data.test_masked) nodes.tests.push_back(reservoir_nodes(m, n_nodes, params));
    return nodes;
}

namespace {

ReadoutOutcome evaluate_blocks(const Eigen::MatrixXd& train_blocks, const std::vector<Eigen::MatrixXd>& test_blocks,
                               const PreparedData& data, const ReadoutConfig& readout, int taps)
{
    ReadoutOutcome out;
    out.model = train_ridge(assemble_features(train_blocks, taps), data.train_symbols, readout.split,
                            readout.lambda_grid);
    out.model.norm_affine = data.affine;
    double sum = 0.0;
    for (std::size_t i = 0; i < test_blocks.size(); ++i) {
        const auto hat = predict_and_slice(out.model, assemble_features(test_blocks[i], taps));
        out.test.push_back(ber(hat, data.test_symbols[i], static_cast<std::size_t>(taps)));
        sum += out.test.back().ber;
    }
    out.mean_ber = test_blocks.empty() ? 0.0 : sum / static_cast<double>(test_blocks.size());
    return out;
}

} // namespace

ReadoutOutcome evaluate_readout(const Eigen::MatrixXd& train_nodes, const std::vector<Eigen::MatrixXd>& test_nodes,
                                const PreparedData& data, const ReadoutConfig& readout, int taps)
{
    return evaluate_blocks(train_nodes, test_nodes, data, readout, taps);
}

ReadoutOutcome evaluate_baseline(const PreparedData& data, const ReadoutConfig& readout, int taps)
{
    std::vector<Eigen::MatrixXd> tests;
    for (const auto& t : data.test_normalized) tests.push_back(sample_blocks(t, data.samples_per_baud));
    return evaluate_blocks(sample_blocks(data.train_normalized, data.samples_per_baud), tests, data, readout, taps);
}

double reservoir_snr(const ExperimentConfig& cfg, const PreparedData& data)
{
    const std::size_t n = cfg.mask.n_nodes;
    const std::size_t symbols =
        std::min<std::size_t>(static_cast<std::size_t>(cfg.run.probe_symbols), data.train_masked.size() / n);
    const auto inj = build_injection(std::span<const double>(data.train_masked).first(symbols * n), cfg.theta_ns(),
                                     cfg.reservoir);
    return consistency_probe(inj, cfg.reservoir, cfg.run.probe_trials);
}

PipelineReport run_pipeline(const ExperimentConfig& cfg, const LabeledTrace& train,
                            const std::vector<LabeledTrace>& tests, FeatureMatrix* train_features)
{
    stage("config", [&] { cfg.validate(); });
    const auto data = prepare(cfg, train, tests);
    const auto nodes = stage("reservoir", [&] { return run_reservoir(cfg.reservoir, cfg.mask.n_nodes, data); });
    const auto rc = stage("readout", [&] {
        return evaluate_readout(nodes.train, nodes.tests, data, cfg.readout, cfg.readout.taps);
    });
    const auto lr = stage("baseline", [&] { return evaluate_baseline(data, cfg.readout, cfg.readout.taps); });
    if (train_features) *train_features = assemble_features(nodes.train, cfg.readout.taps);

    PipelineReport r;
    r.rc_model = rc.model;
    r.affine = data.affine;
    r.lambda_rc = rc.model.ridge_lambda;
    r.lambda_lr = lr.model.ridge_lambda;
    double naive_sum = 0.0;
    for (std::size_t i = 0; i < tests.size(); ++i) {
        r.ber_rc_sets.push_back(rc.test[i].ber);
        r.ber_lr_sets.push_back(lr.test[i].ber);
        r.ber_naive_sets.push_back(data.naive_ber[i]);
        naive_sum += data.naive_ber[i];
    }
    r.ber_rc = rc.mean_ber;
    r.ber_lr = lr.mean_ber;
    r.ber_naive = tests.empty() ? 0.0 : naive_sum / static_cast<double>(tests.size());
    r.counted_bits = rc.test.empty() ? 0 : rc.test.front().counted_bits;
    r.speed_penalty = speed_penalty(cfg.link.bit_rate, cfg.reservoir.tau);
    r.theta_ps = cfg.theta_ns() * 1e3;
    return r;
}

std::string report_json(const ExperimentConfig& cfg, const PipelineReport& r)
{
    nlohmann::ordered_json j;
    j["config_hash"] = config_hash(cfg);
    j["ber_rc"] = r.ber_rc;
    j["ber_lr"] = r.ber_lr;
    j["ber_naive"] = r.ber_naive;
    j["hd_fec_limit"] = phys::hd_fec_ber;
    j["ber_rc_sets"] = r.ber_rc_sets;
    j["ber_lr_sets"] = r.ber_lr_sets;
    j["ber_naive_sets"] = r.ber_naive_sets;
    j["counted_bits_per_set"] = r.counted_bits;
    j["lambda_rc"] = r.lambda_rc;
    j["lambda_lr"] = r.lambda_lr;
    j["speed_penalty"] = r.speed_penalty;
    j["theta_ps"] = r.theta_ps;
    j["norm_affine"] = {{"offset", r.affine.offset}, {"scale", r.affine.scale}};
    j["config"] = to_text(cfg);
    return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Presets

namespace {

struct PresetText {
    const char* name;
    const char* text;
};

constexpr PresetText kPresets[] = {
#include "presets.inc"
};

} // namespace

std::vector<std::string> preset_names()
{
    std::vector<std::string> names;
    for (const auto& p : kPresets) names.emplace_back(p.name);
    return names;
}

std::optional<ExperimentConfig> builtin_preset(const std::string& name)
{
    for (const auto& p : kPresets) {
        if (name == p.name) return parse_config(p.text);
    }
    return std::nullopt;
}

void apply_desk_scale(ExperimentConfig& cfg)
{
    cfg.run.n_symbols = std::min<std::size_t>(cfg.run.n_symbols, std::size_t{1} << 15);
    cfg.run.n_test_sets = std::min(cfg.run.n_test_sets, 3);
}

} // namespace lrc
