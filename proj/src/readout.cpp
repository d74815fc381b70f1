#include "lrc/readout.hpp"

#include "lrc/errors.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lrc {

void SplitSpec::validate() const
{
    if (!(train_fraction > 0 && validation_fraction > 0 && train_fraction + validation_fraction <= 1.0 + 1e-12)) {
        throw ConfigError("readout.split: fractions must be positive and sum to at most 1");
    }
}

std::vector<double> default_lambda_grid()
{
    std::vector<double> grid;
    for (int e = -8; e <= 4; ++e) grid.push_back(std::pow(10.0, e));
    return grid;
}

Eigen::MatrixXd gram_matrix(const Eigen::Ref<const Eigen::MatrixXd>& x)
{
    const Eigen::Index n = x.cols();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(n, n);
    g.selfadjointView<Eigen::Lower>().rankUpdate(x.transpose());
    return g.selfadjointView<Eigen::Lower>();
}

RidgeSolution solve_ridge(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs, double lambda)
{
    RidgeSolution sol;
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) return sol;
    sol.weights = llt.solve(rhs);
    Eigen::VectorXd r = rhs - a * sol.weights;
    sol.weights += llt.solve(r);
    r = rhs - a * sol.weights;
    const double bnorm = rhs.norm();
    sol.relative_residual = bnorm > 0 ? r.norm() / bnorm : r.norm();
    sol.accepted = sol.weights.allFinite() && sol.relative_residual <= kRidgeResidualTolerance;
    return sol;
}

namespace {

Eigen::VectorXd level_targets(const SymbolStream& y, const std::array<double, 4>& levels)
{
    Eigen::VectorXd t(static_cast<Eigen::Index>(y.size()));
    for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i)) = levels.at(y.symbols[i]);
    return t;
}

std::array<double, 3> midpoints(const std::array<double, 4>& levels)
{
    return {(levels[0] + levels[1]) / 2, (levels[1] + levels[2]) / 2, (levels[2] + levels[3]) / 2};
}

SymbolStream subrange(const SymbolStream& y, std::size_t first, std::size_t count)
{
    SymbolStream s;
    s.symbols.assign(y.symbols.begin() + static_cast<std::ptrdiff_t>(first),
                     y.symbols.begin() + static_cast<std::ptrdiff_t>(first + count));
    return s;
}

} // namespace

ReadoutModel train_ridge(const FeatureMatrix& x, const SymbolStream& y, const SplitSpec& split,
                         std::span<const double> lambda_grid)
{
    split.validate();
    if (x.rows() != y.size()) {
        throw std::invalid_argument("train_ridge: " + std::to_string(x.rows()) + " feature rows vs " +
                                    std::to_string(y.size()) + " symbols");
    }
    if (lambda_grid.empty()) throw std::invalid_argument("train_ridge: empty lambda grid");
    const std::size_t rows = x.rows();
    const auto n_train = static_cast<std::size_t>(std::floor(split.train_fraction * static_cast<double>(rows)));
    const auto n_val = std::min(rows - n_train, static_cast<std::size_t>(std::floor(
                                                    split.validation_fraction * static_cast<double>(rows) + 0.5)));
    if (n_train == 0 || n_val == 0) throw std::invalid_argument("train_ridge: too few rows for the split");

    ReadoutModel model;
    model.thresholds = midpoints(model.target_levels);
    const Eigen::VectorXd targets = level_targets(y, model.target_levels);
    const auto ti = static_cast<Eigen::Index>(n_train);
    const auto vi = static_cast<Eigen::Index>(n_val);

    const Eigen::MatrixXd gram_train = gram_matrix(x.x.topRows(ti));
    const Eigen::VectorXd rhs_train = x.x.topRows(ti).transpose() * targets.head(ti);
    const auto x_val = x.x.middleRows(ti, vi);
    const auto y_val = subrange(y, n_train, n_val);

    double best_ber = std::numeric_limits<double>::infinity();
    double best_mse = std::numeric_limits<double>::infinity();
    double best_lambda = std::numeric_limits<double>::quiet_NaN();
    for (double lambda : lambda_grid) {
        if (!(lambda >= 0)) throw std::invalid_argument("train_ridge: lambda must be >= 0");
        const auto sol = solve_ridge(gram_train, rhs_train, lambda);
        if (!sol.accepted) {
            model.warnings.push_back("lambda " + std::to_string(lambda) + " skipped (relative residual " +
                                     std::to_string(sol.relative_residual) + ")");
            continue;
        }
        const Eigen::VectorXd pred = x_val * sol.weights;
        const double mse = (pred - targets.segment(ti, vi)).squaredNorm() / static_cast<double>(n_val);
        const double b = ber(slice(pred, model.thresholds), y_val, 0).ber;
        if (b < best_ber || (b == best_ber && mse < best_mse)) {
            best_ber = b;
            best_mse = mse;
            best_lambda = lambda;
        }
    }
    if (std::isnan(best_lambda)) throw NumericalError("train_ridge: no lambda on the grid gave an accepted solve");

    const Eigen::MatrixXd gram_all = gram_train + gram_matrix(x_val);
    const Eigen::VectorXd rhs_all = rhs_train + x_val.transpose() * targets.segment(ti, vi);
    auto sol = solve_ridge(gram_all, rhs_all, best_lambda);
    if (!sol.accepted) {
        throw NumericalError("train_ridge: refit at lambda " + std::to_string(best_lambda) +
                             " failed the residual check (" + std::to_string(sol.relative_residual) + ")");
    }
    model.weights = std::move(sol.weights);
    model.ridge_lambda = best_lambda;
    model.validation_ber = best_ber;
    return model;
}

Eigen::VectorXd predict(const ReadoutModel& model, const FeatureMatrix& x)
{
    if (static_cast<Eigen::Index>(x.cols()) != model.weights.size()) {
        throw std::invalid_argument("predict: feature matrix has " + std::to_string(x.cols()) +
                                    " columns, model expects " + std::to_string(model.weights.size()));
    }
    return x.x * model.weights;
}

SymbolStream slice(const Eigen::VectorXd& prediction, const std::array<double, 3>& thresholds)
{
    SymbolStream out;
    out.symbols.resize(static_cast<std::size_t>(prediction.size()));
    for (Eigen::Index i = 0; i < prediction.size(); ++i) {
        std::uint8_t s = 0;
        while (s < 3 && prediction(i) > thresholds[s]) ++s;
        out.symbols[static_cast<std::size_t>(i)] = s;
    }
    return out;
}

SymbolStream predict_and_slice(const ReadoutModel& model, const FeatureMatrix& x)
{
    return slice(predict(model, x), model.thresholds);
}

BerResult ber(const SymbolStream& hat, const SymbolStream& ref, std::size_t skip_edges)
{
    if (hat.size() != ref.size()) {
        throw std::invalid_argument("ber: stream lengths differ (" + std::to_string(hat.size()) + " vs " +
                                    std::to_string(ref.size()) + ")");
    }
    BerResult r;
    if (2 * skip_edges >= ref.size()) {
        r.ber = r.ser = std::numeric_limits<double>::quiet_NaN();
        return r;
    }
    for (std::size_t i = skip_edges; i + skip_edges < ref.size(); ++i) {
        const auto diff = SymbolStream::bits_of(hat.symbols[i]) ^ SymbolStream::bits_of(ref.symbols[i]);
        r.bit_errors += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(diff)));
        r.symbol_errors += hat.symbols[i] != ref.symbols[i] ? 1u : 0u;
    }
    const std::size_t symbols = ref.size() - 2 * skip_edges;
    r.counted_bits = 2 * symbols;
    r.ber = static_cast<double>(r.bit_errors) / static_cast<double>(r.counted_bits);
    r.ser = static_cast<double>(r.symbol_errors) / static_cast<double>(symbols);
    return r;
}

Eigen::MatrixXd sample_blocks(std::span<const double> samples, std::size_t samples_per_baud)
{
    if (samples_per_baud == 0 || samples.size() % samples_per_baud != 0) {
        throw std::invalid_argument("sample_blocks: waveform is not a whole number of bauds");
    }
    const auto rows = static_cast<Eigen::Index>(samples.size() / samples_per_baud);
    const auto cols = static_cast<Eigen::Index>(samples_per_baud);
    return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(samples.data(),
                                                                                                     rows, cols);
}

BaselineResult baseline_lr(std::span<const double> normalized, std::size_t samples_per_baud, const SymbolStream& y,
                           const SplitSpec& split, int taps, std::span<const double> lambda_grid)
{
    const auto features = assemble_features(sample_blocks(normalized, samples_per_baud), taps);
    BaselineResult r;
    r.model = train_ridge(features, y, split, lambda_grid);
    r.ber = r.model.validation_ber;
    return r;
}

void write_model(const std::filesystem::path& path, const ReadoutModel& model)
{
    nlohmann::json header;
    header["lambda"] = model.ridge_lambda;
    header["levels"] = model.target_levels;
    header["thresholds"] = model.thresholds;
    header["affine"] = {{"offset", model.norm_affine.offset}, {"scale", model.norm_affine.scale}};
    header["validation_ber"] = model.validation_ber;
    header["n_weights"] = model.weights.size();
    std::ofstream out(path);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out << "# " << header.dump() << "\nweight\n";
    out.precision(17);
    for (Eigen::Index i = 0; i < model.weights.size(); ++i) out << model.weights(i) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

ReadoutModel read_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# ", 0) != 0) throw IoError(path.string() + ": missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line.substr(2));
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path.string() + ": bad header: " + e.what());
    }
    if (!std::getline(in, line) || line != "weight") throw IoError(path.string() + ": missing weight column");
    ReadoutModel m;
    m.ridge_lambda = header.at("lambda").get<double>();
    m.target_levels = header.at("levels").get<std::array<double, 4>>();
    m.thresholds = header.at("thresholds").get<std::array<double, 3>>();
    m.norm_affine.offset = header.at("affine").at("offset").get<double>();
    m.norm_affine.scale = header.at("affine").at("scale").get<double>();
    m.validation_ber = header.at("validation_ber").get<double>();
    const auto n = header.at("n_weights").get<Eigen::Index>();
    m.weights.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw IoError(path.string() + ": expected " + std::to_string(n) + " weights");
        m.weights(i) = std::stod(line);
    }
    return m;
}

} // namespace lrc
