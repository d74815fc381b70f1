// End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero exit
// if any criterion fails. The long-running criteria (map, sweeps) share the
// prepared seed data so each stream is simulated once.

#include "support.hpp"

#include "lrc/analysis.hpp"
#include "lrc/experiment.hpp"
#include "lrc/link.hpp"
#include "lrc/readout.hpp"
#include "lrc/reservoir.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using namespace lrc;

namespace {

constexpr double kHdFec = 3.8e-3;

struct Result {
    bool pass = true;
    std::string summary;
};

// Accumulates named checks; the criterion passes only if all of them do.
class Checks {
public:
    void check(bool ok, const std::string& what)
    {
        std::printf("  [%s] %s\n", ok ? "ok" : "FAIL", what.c_str());
        std::fflush(stdout);
        pass_ = pass_ && ok;
        if (!ok) ++failed_;
        ++total_;
    }
    Result result() const
    {
        return {pass_, std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks"};
    }

private:
    bool pass_ = true;
    int total_ = 0;
    int failed_ = 0;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig desk_preset(const std::string& name)
{
    auto cfg = *builtin_preset(name);
    apply_desk_scale(cfg);
    return cfg;
}

// Lowest x whose BER is at or below the threshold, interpolated in log10(BER)
// from the neighbour above it. NaN when no point reaches the threshold.
double fec_crossing(const std::vector<double>& x, const std::vector<double>& ber)
{
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(ber[i] <= kHdFec)) continue;
        if (i == 0 || !(ber[i - 1] > 0)) return x[i];
        const double a = std::log10(ber[i - 1]), b = std::log10(ber[i]), t = std::log10(kHdFec);
        return x[i - 1] + (x[i] - x[i - 1]) * (a - t) / (a - b);
    }
    return std::numeric_limits<double>::quiet_NaN();
}

struct Context {
    std::string cli;
    fs::path out;
    unsigned threads = 0;
    std::map<std::uint64_t, PreparedData> r1_data;   // desk-scale R1, 10 dBm, all test sets

    const ExperimentConfig r1 = desk_preset("r1");

    const PreparedData& r1_seed(std::uint64_t seed)
    {
        auto it = r1_data.find(seed);
        if (it == r1_data.end()) it = r1_data.emplace(seed, prepare_seed(r1, seed)).first;
        return it->second;
    }
};

// ---------------------------------------------------------------- fiber

Result fiber_oracles(Context&)
{
    Checks c;
    {
        auto cfg = test::bare_fiber(10.0);
        cfg.dispersion_ps_nm_km = 17.0;
        const double t0 = 10e-12;
        const auto in = test::gaussian_pulse(4096, 0.5e-12, t0, 1e-3);
        const auto out = propagate(in, cfg);
        const double ld = t0 * t0 / std::abs(test::beta2_from(17.0, 1550.0));
        const double expected = std::sqrt(1.0 + std::pow(10e3 / ld, 2));
        const double got = test::rms_width(out) / test::rms_width(in);
        c.check(std::abs(got / expected - 1.0) <= 0.01,
                fmt("dispersion broadening %.6f vs closed form %.6f", got, expected));
    }
    {
        auto cfg = test::bare_fiber(27.0);
        cfg.attenuation_db_km = 0.2;
        const auto in = test::cw_field(1024, cfg.sample_interval(), 1e-3);
        const auto out = propagate(in, cfg);
        const double expected = std::pow(10.0, -0.2 * 27.0 / 10.0);
        double worst = 0.0;
        for (std::size_t i = 0; i < in.size(); ++i) {
            worst = std::max(worst, std::abs(out.power(i) / in.power(i) / expected - 1.0));
        }
        c.check(worst <= 1e-12, fmt("attenuation relative error %.3e (limit 1e-12)", worst));
    }
    {
        auto cfg = test::bare_fiber(27.0);
        cfg.attenuation_db_km = 0.2;
        cfg.n2 = 2.6e-20;
        const double p = 10e-3;
        const auto in = test::cw_field(512, cfg.sample_interval(), p);
        const auto out = propagate(in, cfg);
        const double gamma = 2.0 * std::numbers::pi * 2.6e-20 / (1550e-9 * 80e-12);
        const double alpha = 0.2 / (10.0 * std::log10(std::numbers::e)) * 1e-3;
        const double l_eff = (1.0 - std::exp(-alpha * 27e3)) / alpha;
        double worst = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            worst = std::max(worst, std::abs(std::arg(out.x[i] / in.x[i]) - gamma * p * l_eff));
        }
        c.check(worst <= 1e-6, fmt("kerr phase error %.3e rad (limit 1e-6)", worst));
    }
    {
        auto cfg = test::bare_fiber(2.0);
        cfg.dispersion_ps_nm_km = 17.0;
        cfg.n2 = 2.6e-20;
        const auto in = test::gaussian_pulse(4096, 0.25e-12, 5e-12, 1.0);
        const auto a = propagate_fixed_step(in, cfg, 100.0);
        const auto b = propagate_fixed_step(in, cfg, 50.0);
        const auto d = propagate_fixed_step(in, cfg, 25.0);
        const double order = std::log2(test::l2_distance(a, b) / test::l2_distance(b, d));
        c.check(order >= 1.7 && order <= 2.3, fmt("step-halving order %.3f (range [1.7, 2.3])", order));
    }
    {
        const double km = 10.0;
        auto cfg = test::bare_fiber(km);
        cfg.dispersion_ps_nm_km = 17.0;
        cfg.n2 = 2.6e-20;
        const auto in = test::gaussian_pulse(4096, 0.5e-12, 10e-12, 0.1);
        const double drift = std::abs(propagate(in, cfg).energy() / in.energy() - 1.0);
        c.check(drift <= 1e-9 * km, fmt("lossless energy drift %.3e over %g km (limit 1e-9/km)", drift, km));
    }
    return c.result();
}

// ---------------------------------------------------------------- laser

Result laser_oracles(Context&)
{
    Checks c;
    ReservoirParams quiet;
    quiet.noise_d = 0.0;
    {
        auto p = quiet;
        p.k_f = 0.0;
        p.k_inj = 0.0;
        auto state = initial_state(p);
        state.e_r = {10.0, 0.0};
        InjectionTrace none;
        none.samples.assign(8000, {});
        const auto trace = integrate(none, p, state);
        bool monotone = true;
        for (std::size_t i = 4001; i < trace.size(); ++i) monotone = monotone && trace[i] <= trace[i - 1];
        c.check(p.bias_current == 15.3e-3 && trace.back() < 1e-4 && monotone,
                fmt("free-running at %.1f mA decays: |E|^2 100 -> %.3e, monotone tail %s", p.bias_current * 1e3,
                    trace.back(), monotone ? "yes" : "no"));
    }
    {
        ReservoirParams p;
        bool zero = true;
        for (double s : {0.0, 1.0, 1e3, 1e6}) zero = zero && p.gain(p.n0, s) == 0.0;
        c.check(zero, "modal gain is exactly 0 at the transparency carrier number");
    }
    {
        auto p = quiet;
        p.k_f = 0.0;
        const double amplitude = 100.0;
        auto state = initial_state(p);
        InjectionTrace inj;
        inj.samples.assign(10000, {amplitude, 0.0});
        std::vector<double> trace;
        for (int chunk = 0; chunk < 40; ++chunk) trace = integrate(inj, p, state);
        const double expected = test::locked_photon_number(p, amplitude);
        const double rel = std::abs(trace.back() / expected - 1.0);
        c.check(rel <= 1e-6, fmt("locked steady state %.9g vs root solve %.9g, relative %.2e (limit 1e-6)",
                                 trace.back(), expected, rel));
    }
    {
        auto p = quiet;
        p.k_inj = 0.0;
        p.k_f = 0.1;
        auto state = initial_state(p);
        state.e_r = {100.0, 0.0};
        const std::size_t m = p.delay_steps(), slot = m / 32;
        InjectionTrace none;
        none.samples.assign(5 * m, {});
        const auto trace = integrate(none, p, state);
        std::string offsets;
        bool ok = true;
        for (std::size_t k = 1; k <= 4; ++k) {
            const std::size_t from = k * m - m / 2, to = k * m + m / 2;
            std::size_t peak = from;
            for (std::size_t i = from; i < to; ++i) {
                if (trace[i] > trace[peak]) peak = i;
            }
            ok = ok && peak >= k * m && peak < k * m + slot && trace[peak] > 100.0 * trace[from];
            offsets += fmt(" %+.1f", (static_cast<double>(peak) - static_cast<double>(k * m)) * p.dt * 1e3);
        }
        c.check(ok, "echoes at k*tau within one node slot, offsets (ps):" + offsets);
    }
    return c.result();
}

// ---------------------------------------------------------------- ridge

Result ridge_oracles(Context& ctx)
{
    Checks c;
    {
        Eigen::MatrixXd x(5, 5);
        x << 4, 1, 0, 2, 1, 1, 5, 1, 0, 2, 0, 1, 6, 1, 0, 2, 0, 1, 7, 1, 1, 2, 0, 1, 8;
        Eigen::VectorXd y(5);
        y << 1, -2, 3, 0.5, -1;
        const Eigen::VectorXd exact = x.colPivHouseholderQr().solve(y);
        const auto sol = solve_ridge(gram_matrix(x), x.transpose() * y, 0.0);
        const double err = (sol.weights - exact).norm() / exact.norm();
        c.check(sol.accepted && err <= 1e-8, fmt("5x5 at lambda 0 vs QR solve: relative %.2e", err));
    }

    // Every fit of the training procedure, on reservoir and baseline features.
    auto cfg = ctx.r1;
    cfg.run.n_symbols = 8192;
    cfg.run.n_test_sets = 1;
    const auto data = prepare_seed(cfg, 1);
    const auto nodes = run_reservoir(cfg.reservoir, cfg.mask.n_nodes, data);
    const std::vector<std::pair<std::string, FeatureMatrix>> sets{
        {"reservoir", assemble_features(nodes.train, cfg.readout.taps)},
        {"baseline", assemble_features(sample_blocks(data.train_normalized, data.samples_per_baud), cfg.readout.taps)}};
    for (const auto& [name, f] : sets) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(data.train_symbols.size()));
        for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = 2.0 * data.train_symbols.symbols[i] - 3.0;
        const auto rows = static_cast<Eigen::Index>(std::floor(cfg.readout.split.train_fraction * double(y.size())));
        int accepted = 0, rejected = 0;
        double worst = 0.0;
        for (Eigen::Index n : {rows, y.size()}) {
            const Eigen::MatrixXd xs = f.x.topRows(n);
            const Eigen::VectorXd b = xs.transpose() * y.head(n);
            for (double lambda : cfg.readout.lambda_grid) {
                const auto sol = solve_ridge(gram_matrix(xs), b, lambda);
                if (!sol.accepted) {
                    ++rejected;
                    continue;
                }
                ++accepted;
                Eigen::MatrixXd a = xs.transpose() * xs;
                a.diagonal().array() += lambda;
                worst = std::max(worst, (a * sol.weights - b).norm() / b.norm());
            }
        }
        const auto model = train_ridge(f, data.train_symbols, cfg.readout.split, cfg.readout.lambda_grid);
        Eigen::MatrixXd a = f.x.transpose() * f.x;
        a.diagonal().array() += model.ridge_lambda;
        const Eigen::VectorXd b = f.x.transpose() * y;
        const double chosen = (a * model.weights - b).norm() / b.norm();
        c.check(accepted > 0 && worst <= 1e-8 && chosen <= 1e-8,
                fmt("%s (%zu columns): %d fits accepted, %d rejected by the solver; worst recomputed residual "
                    "%.2e, selected model %.2e (limit 1e-8)",
                    name.c_str(), f.cols(), accepted, rejected, worst, chosen));
    }
    return c.result();
}

// ---------------------------------------------------------------- end to end

Result end_to_end(Context& ctx)
{
    Checks c;
    std::printf("  R1 %g Gb/s, %g km, %g dBm, theta %g ps, %zu symbols, %d test sets; HD-FEC target %.1e\n",
                ctx.r1.link.bit_rate * 1e-9, ctx.r1.link.fiber_length_km, ctx.r1.link.launch_peak_power_dbm,
                ctx.r1.theta_ns() * 1e3, ctx.r1.run.n_symbols, ctx.r1.run.n_test_sets, kHdFec);
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto r = evaluate_point(ctx.r1, ctx.r1_seed(seed), seed, false);
        const auto lr = evaluate_baseline(ctx.r1_seed(seed), ctx.r1.readout, ctx.r1.readout.taps).mean_ber;
        double naive = 0.0;
        for (double v : ctx.r1_seed(seed).naive_ber) naive += v;
        naive /= static_cast<double>(ctx.r1_seed(seed).naive_ber.size());
        std::printf("  seed %llu: naive %.4g, LR %.4g, RC %.4g%s\n", static_cast<unsigned long long>(seed), naive,
                    lr, r.ber_rc, r.ber_rc <= kHdFec ? " (below HD-FEC)" : "");
        c.check(naive > lr && lr > r.ber_rc, fmt("seed %llu ordering naive > LR > RC", (unsigned long long)seed));
        c.check(naive >= 0.1, fmt("seed %llu naive %.4g >= 0.1", (unsigned long long)seed, naive));
        c.check(lr >= 0.01 && lr <= 0.1, fmt("seed %llu LR %.4g in [0.01, 0.1]", (unsigned long long)seed, lr));
        c.check(r.ber_rc <= 8e-3, fmt("seed %llu RC %.4g <= 8e-3", (unsigned long long)seed, r.ber_rc));
    }
    return c.result();
}

// ---------------------------------------------------------------- map

Result map_structure(Context& ctx)
{
    Checks c;
    auto cfg = ctx.r1;
    cfg.run.n_test_sets = 1;
    auto data = ctx.r1_seed(1);
    data.test_normalized.resize(1);
    data.test_masked.resize(1);
    data.test_symbols.resize(1);
    data.naive_ber.resize(1);

    const auto grid = default_map_grid({1});
    SweepOptions opt;
    opt.threads = ctx.threads;
    std::size_t done = 0;
    opt.on_record = [&](const SweepRecord&) {
        if (++done % 11 == 0) std::printf("  map: %zu/%zu points\n", done, grid.delta_f.size() * grid.k_f.size());
        std::fflush(stdout);
    };
    const auto recs = run_map(grid, cfg, {data}, opt);
    write_records_csv(ctx.out / "map_records.csv", recs);

    std::map<std::pair<double, double>, const SweepRecord*> at;
    const SweepRecord* best = nullptr;
    for (const auto& r : recs) {
        at[{r.delta_f, r.k_f}] = &r;
        if (std::isfinite(r.ber_rc) && (!best || r.ber_rc < best->ber_rc)) best = &r;
    }
    if (!best) {
        c.check(false, "map has no finite BER");
        return c.result();
    }
    std::printf("  BER (rows k_f, columns delta_f -50..50 GHz)\n");
    for (double kf : grid.k_f) {
        std::printf("  %5.3f", kf);
        for (double df : grid.delta_f) std::printf(" %8.2e", at[{df, kf}]->ber_rc);
        std::printf("\n");
    }
    const double floor = best->ber_rc;
    c.check(std::abs(best->delta_f) <= 10.0 && best->k_f >= 0.02 && best->k_f <= 0.10,
            fmt("argmin BER %.3g at delta_f %g GHz, k_f %g (want |delta_f| <= 10, k_f in [0.02, 0.10])", floor,
                best->delta_f, best->k_f));

    double row_min = std::numeric_limits<double>::infinity();
    for (double df : grid.delta_f) row_min = std::min(row_min, at[{df, 0.2}]->ber_rc);
    c.check(row_min >= 3.0 * floor, fmt("k_f = 0.2 row: lowest BER %.3g is %.2fx the minimum (want >= 3)", row_min,
                                        row_min / floor));

    // Columns named for deep locking: the -10 GHz column and the column with
    // the highest mean consistency SNR.
    double best_snr = -std::numeric_limits<double>::infinity(), snr_column = 0.0;
    for (double df : grid.delta_f) {
        double sum = 0.0;
        int n = 0;
        for (double kf : grid.k_f) {
            const double s = at[{df, kf}]->snr_db;
            if (std::isfinite(s)) sum += s, ++n;
        }
        if (n > 0 && sum / n > best_snr) best_snr = sum / n, snr_column = df;
    }
    std::printf("  highest mean consistency SNR %.1f dB in the delta_f = %g GHz column\n", best_snr, snr_column);
    for (double df : std::set<double>{-10.0, snr_column}) {
        double col_min = std::numeric_limits<double>::infinity();
        for (double kf : grid.k_f) col_min = std::min(col_min, at[{df, kf}]->ber_rc);
        c.check(col_min >= 3.0 * floor, fmt("delta_f = %g GHz column: lowest BER %.3g is %.2fx the minimum (want >= 3)",
                                            df, col_min, col_min / floor));
    }

    auto correlation = [&](double df, double kf) {
        auto point = cfg;
        point.reservoir.delta_f = df;
        point.reservoir.k_f = kf;
        return injection_response_correlation(point, data, 512).r;
    };
    const double full = correlation(-10.0, 0.05), partial = correlation(0.0, 0.05), chaotic = correlation(0.0, 0.2);
    c.check(full >= 0.8, fmt("full locking (-10 GHz, 0.05) input/response r = %.3f (want >= 0.8)", full));
    c.check(chaotic <= 0.3, fmt("strong feedback (0 GHz, 0.2) r = %.3f (want <= 0.3)", chaotic));
    c.check(partial > chaotic && partial < full,
            fmt("partial locking (0 GHz, 0.05) r = %.3f lies between %.3f and %.3f", partial, chaotic, full));
    return c.result();
}

// ---------------------------------------------------------------- taps

Result tap_study(Context& ctx)
{
    Checks c;
    const auto preset = desk_preset("fig6");
    const auto cfg = ctx.r1;
    std::vector<int> taps;
    for (double t : preset.sweep.taps) taps.push_back(static_cast<int>(t));
    const std::vector<std::uint64_t> seeds{1, 2, 3};
    std::vector<PreparedData> data;
    for (auto s : seeds) data.push_back(ctx.r1_seed(s));
    SweepOptions opt;
    opt.threads = ctx.threads;
    opt.with_snr = false;
    const auto recs = run_tap_sweep(taps, cfg, seeds, data, opt);
    write_records_csv(ctx.out / "taps_records.csv", recs, "taps");
    const auto rows = aggregate(recs);

    double var_sum = 0.0;
    int var_n = 0;
    for (const auto& r : rows) {
        std::printf("  taps %2g: mean %.4g, std %.2g over %zu seeds\n", r.x, r.ber_mean, r.ber_std, r.count);
        if (std::isfinite(r.ber_std)) var_sum += r.ber_std * r.ber_std, ++var_n;
    }
    const double pooled = var_n > 0 ? std::sqrt(var_sum / var_n) : 0.0;
    std::printf("  pooled std %.3g\n", pooled);
    bool ok = true;
    std::string worst;
    for (std::size_t i = 1; i < rows.size() && rows[i].x <= 10; ++i) {
        if (rows[i].ber_mean > rows[i - 1].ber_mean + pooled) {
            ok = false;
            worst += fmt(" %g->%g", rows[i - 1].x, rows[i].x);
        }
    }
    c.check(ok, "mean BER non-increasing within one pooled std from 0 to 10 taps" +
                    (worst.empty() ? std::string() : ", rises at" + worst));
    const AggregateRow *at10 = nullptr, *at15 = nullptr;
    for (const auto& r : rows) {
        if (r.x == 10) at10 = &r;
        if (r.x == 15) at15 = &r;
    }
    const double change = std::abs(at15->ber_mean - at10->ber_mean) / at10->ber_mean;
    c.check(change < 0.10, fmt("10 -> 15 taps changes mean BER by %.1f%% (want < 10%%)", 100.0 * change));
    return c.result();
}

// ---------------------------------------------------------------- power

Result power_sweep(Context& ctx)
{
    Checks c;
    for (const char* name : {"fig7a", "fig7b"}) {
        auto cfg = desk_preset(name);
        cfg.run.n_test_sets = 1;
        SweepOptions opt;
        opt.threads = ctx.threads;
        opt.with_snr = false;
        const auto recs = run_power_sweep(cfg.sweep.power_dbm, cfg, {cfg.run.seed}, opt);
        write_records_csv(ctx.out / (std::string(name) + "_records.csv"), recs, "power_dbm");
        const auto rows = aggregate(recs);
        std::vector<double> x, y;
        std::printf("  %g Gb/s over %g km:", cfg.link.bit_rate * 1e-9, cfg.link.fiber_length_km);
        for (const auto& r : rows) {
            x.push_back(r.x);
            y.push_back(r.ber_mean);
            std::printf(" %g:%.3g", r.x, r.ber_mean);
        }
        std::printf("\n");
        const double cross = fec_crossing(x, y);
        if (cfg.link.bit_rate == 56e9) {
            std::size_t arg = 0;
            for (std::size_t i = 1; i < y.size(); ++i) {
                if (y[i] < y[arg]) arg = i;
            }
            const bool interior = arg > 0 && arg + 1 < y.size();
            c.check(interior && x[arg] >= 8 && x[arg] <= 12,
                    fmt("R1 minimum %.3g at %g dBm (want an interior minimum in [8, 12])", y[arg], x[arg]));
            c.check(std::isfinite(cross) && cross >= 4,
                    std::isfinite(cross) ? fmt("R1 HD-FEC crossing at %.2f dBm (want >= 4)", cross)
                                         : std::string("R1 never reaches HD-FEC (want a crossing at >= 4 dBm)"));
        } else {
            c.check(std::isfinite(cross) && cross >= 6,
                    std::isfinite(cross) ? fmt("R2 HD-FEC crossing at %.2f dBm (want >= 6)", cross)
                                         : std::string("R2 never reaches HD-FEC (want a crossing at >= 6 dBm)"));
        }
    }
    return c.result();
}

// ---------------------------------------------------------------- osnr

Result osnr_sweep(Context& ctx)
{
    Checks c;
    double crossing[2] = {0, 0};
    double max_osnr = 0;
    int idx = 0;
    for (const char* name : {"fig8", "fig8-r2"}) {
        auto cfg = desk_preset(name);
        cfg.run.n_test_sets = 1;
        SweepOptions opt;
        opt.threads = ctx.threads;
        opt.with_snr = false;
        const auto recs = run_osnr_sweep(cfg.sweep.osnr_db, cfg, {1, 2}, opt);
        write_records_csv(ctx.out / (std::string(name) + "_records.csv"), recs, "osnr_db");
        const auto rows = aggregate(recs);
        std::map<double, double> mean;
        std::vector<double> x, y;
        std::printf("  %g Gb/s over %g km:", cfg.link.bit_rate * 1e-9, cfg.link.fiber_length_km);
        for (const auto& r : rows) {
            mean[r.x] = r.ber_mean;
            x.push_back(r.x);
            y.push_back(r.ber_mean);
            std::printf(" %g:%.3g", r.x, r.ber_mean);
        }
        std::printf("\n");
        max_osnr = x.back();
        const char* label = idx == 0 ? "R1" : "R2";
        const bool falling = mean[20] > mean[25] && mean[25] > mean[30] && mean[30] > mean[35];
        c.check(falling, fmt("%s BER strictly falls from 20 to 35 dB OSNR", label));
        const double ratio = std::max(mean[40], mean[45]) / std::min(mean[40], mean[45]);
        c.check(ratio < 2.0, fmt("%s BER changes %.2fx from 40 to 45 dB (want < 2)", label, ratio));
        crossing[idx++] = fec_crossing(x, y);
    }
    // An R2 curve that never reaches HD-FEC crosses above the swept range.
    const double r2 = std::isfinite(crossing[1]) ? crossing[1] : std::numeric_limits<double>::infinity();
    c.check(std::isfinite(crossing[0]) && crossing[0] < r2,
            fmt("HD-FEC crossing R1 %.2f dB vs R2 %s dB", crossing[0],
                std::isfinite(crossing[1]) ? fmt("%.2f", crossing[1]).c_str()
                                           : fmt("above %g", max_osnr).c_str()));
    return c.result();
}

// ---------------------------------------------------------------- reproducibility

Result reproducibility(Context& ctx)
{
    Checks c;
    const fs::path dir = ctx.out / "repro";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string small = " --preset r1 --seed 4 --set run.n_symbols=4096 --set run.n_test_sets=2";
    auto run = [&](const std::string& args) {
        const std::string cmd = "\"" + ctx.cli + "\" " + args + " > \"" + (dir / "log.txt").string() + "\" 2>&1";
        const int rc = std::system(cmd.c_str());
        if (rc != 0) std::printf("  command failed (%d): %s\n", rc, cmd.c_str());
        return rc == 0;
    };
    auto d = [&](const char* name) { return "\"" + (dir / name).string() + "\""; };

    const bool ran = run("rc" + small + " --out " + d("a")) && run("rc" + small + " --out " + d("b"));
    const auto a = slurp(dir / "a" / "report.json");
    c.check(ran && !a.empty() && a == slurp(dir / "b" / "report.json"), "rc report identical across two runs");
    c.check(ran && slurp(dir / "a" / "model.csv") == slurp(dir / "b" / "model.csv"), "rc model identical across two runs");

    // The report alone is enough to regenerate it.
    bool regen = false;
    if (!a.empty()) {
        std::ofstream(dir / "embedded.conf") << nlohmann::json::parse(a)["config"].get<std::string>();
        regen = run("rc --config " + d("embedded.conf") + " --out " + d("c"));
    }
    c.check(regen && slurp(dir / "c" / "report.json") == a, "rc from the config embedded in the report is identical");

    bool ingested = run("simulate" + small + " --out " + d("sim"));
    std::string ing = "ingest" + small + " --out " + d("ing");
    ing += " --trace " + d("sim/train.detected.lrc") + " --symbols " + d("sim/train.symbols");
    for (const char* t : {"test1", "test2"}) {
        ing += " --test-trace " + d((std::string("sim/") + t + ".detected.lrc").c_str());
        ing += " --test-symbols " + d((std::string("sim/") + t + ".symbols").c_str());
    }
    ingested = ingested && run(ing);
    c.check(ingested && slurp(dir / "ing" / "report.json") == a, "ingest of simulated traces reproduces the rc report");

    const std::string sweep = "sweep --preset fig6 --seed 2 --set run.n_symbols=2048 --set run.n_test_sets=1 "
                              "--set sweep.taps=0,2 --set sweep.replicates=2";
    const bool swept = run(sweep + " --threads 2 --out " + d("s1")) && run(sweep + " --threads 1 --out " + d("s2"));
    const auto recs = slurp(dir / "s1" / "records.csv");
    c.check(swept && !recs.empty() && recs == slurp(dir / "s2" / "records.csv") &&
                slurp(dir / "s1" / "aggregate.csv") == slurp(dir / "s2" / "aggregate.csv"),
            "sweep records and aggregate identical across runs and thread counts");
    return c.result();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Acceptance run"};
    Context ctx;
    std::string out = "acceptance_out";
    std::vector<int> only;
    app.add_option("--cli", ctx.cli, "Path to the lrc executable")->required();
    app.add_option("--out", out, "Directory for sweep records and scratch files");
    app.add_option("--only", only, "Criteria to run (default: all)");
    app.add_option("--threads", ctx.threads, "Worker threads for sweeps (0: all cores)");
    CLI11_PARSE(app, argc, argv);
    ctx.out = out;
    fs::create_directories(ctx.out);

    const std::vector<std::pair<const char*, std::function<Result(Context&)>>> criteria{
        {"fiber propagation oracles", fiber_oracles},
        {"laser rate-equation oracles", laser_oracles},
        {"ridge solver oracles", ridge_oracles},
        {"end-to-end BER ordering at desk scale", end_to_end},
        {"detuning x feedback map structure", map_structure},
        {"tap count study", tap_study},
        {"launch power sweep", power_sweep},
        {"OSNR sweep", osnr_sweep},
        {"reproducibility", reproducibility},
    };
    // Runtime bounds for the quick oracle criteria, seconds.
    const std::map<int, double> limit{{1, 60.0}, {2, 60.0}};

    std::vector<std::string> lines;
    bool all = true;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        std::printf("criterion %d: %s\n", id, criteria[i].first);
        std::fflush(stdout);
        const auto t0 = std::chrono::steady_clock::now();
        Result r;
        try {
            r = criteria[i].second(ctx);
        } catch (const std::exception& e) {
            r = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (limit.count(id) && secs >= limit.at(id)) {
            r.pass = false;
            r.summary += fmt(", over the %g s budget", limit.at(id));
        }
        const auto line = fmt("criterion %d: %s (%s, %.0f s)", id, r.pass ? "PASS" : "FAIL", r.summary.c_str(), secs);
        std::printf("%s\n\n", line.c_str());
        std::fflush(stdout);
        lines.push_back(line);
        all = all && r.pass;
    }
    std::printf("summary\n");
    for (const auto& l : lines) std::printf("%s\n", l.c_str());
    return all ? 0 : 1;
}
