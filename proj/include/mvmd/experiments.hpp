#ifndef MVMD_EXPERIMENTS_HPP
#define MVMD_EXPERIMENTS_HPP

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mvmd/config.hpp"
#include "mvmd/dependence.hpp"
#include "mvmd/montecarlo.hpp"
#include "mvmd/pricing.hpp"

namespace mvmd {

struct PriceRow {
    std::string experiment;
    std::string scheme;
    double strike = 0.0;
    double rho = 0.0;
    PriceEstimate estimate;
    std::uint64_t seed = 0;
    double wall_seconds = 0.0;
    std::string error;  // non-empty when the row failed
};

namespace detail {

inline double leading_rho(const ModelConfig& m) { return m.correlation.size() > 1 ? m.correlation[0][1] : 1.0; }

inline std::optional<Scheme> sampler_scheme(const std::string& name) {
    if (name == "mvmd-terminal") return Scheme::mvmd_terminal;
    if (name == "muvm-terminal") return Scheme::muvm_terminal;
    if (name == "scmd-euler") return Scheme::scmd_euler;
    return std::nullopt;
}

inline double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace detail

/// One row per (scheme, strike). Sampler schemes simulate once and reuse the
/// terminal sample across strikes.
inline std::vector<PriceRow> run_price(const ExperimentConfig& cfg, unsigned workers = default_workers()) {
    const auto model = cfg.model.build();
    const auto& e = cfg.engine;
    const double rho = detail::leading_rho(cfg.model);
    std::vector<PriceRow> rows;
    for (const auto& scheme : e.schemes) {
        const auto start = std::chrono::steady_clock::now();
        if (const auto s = detail::sampler_scheme(scheme)) {
            SimulationConfig sim{e.paths, e.steps, cfg.product.maturity, e.seed, *s, e.kappa, e.antithetic, workers};
            const auto sample = simulate(model, sim);
            const double sim_seconds = detail::seconds_since(start);
            for (double k : cfg.product.strikes) {
                const auto t0 = std::chrono::steady_clock::now();
                rows.push_back({cfg.name, scheme, k, rho, estimate(sample, cfg.product.spec(k)), e.seed,
                                sim_seconds + detail::seconds_since(t0), {}});
            }
            continue;
        }
        for (double k : cfg.product.strikes) {
            const auto t0 = std::chrono::steady_clock::now();
            const auto spec = cfg.product.spec(k);
            PriceEstimate est;
            if (scheme == "closed-form") {
                if (spec.kind != BasketKind::geometric)
                    throw ValidationError("engine.schemes: closed-form pricing needs a geometric basket");
                est = price_geometric_mvmd(model, spec, e.kappa);
            } else {
                est = price_mvmd_single_step(model, spec, e.kappa, {e.paths, e.seed, workers});
            }
            rows.push_back({cfg.name, scheme, k, rho, est, e.seed, detail::seconds_since(t0), {}});
        }
    }
    return rows;
}

struct TauRow {
    std::string method;  // closed-form, mvmd-empirical, scmd-empirical
    double tau = std::numeric_limits<double>::quiet_NaN();
    std::size_t samples = 0;
    std::string status = "ok";
};

/// Closed-form tau (when the model is in its two-asset, two-component scope) and empirical
/// tau of the first two assets from MVMD and SCMD samples.
inline std::vector<TauRow> run_tau(const ExperimentConfig& cfg, unsigned workers = default_workers()) {
    const auto model = cfg.model.build();
    if (model.size() < 2) throw ValidationError("model.assets: Kendall tau needs at least two assets");
    const auto& e = cfg.engine;
    const double t = cfg.product.maturity;
    std::vector<TauRow> rows;
    try {
        rows.push_back({"closed-form", kendall_tau_mvmd(model, t), 0, "ok"});
    } catch (const UnsupportedError& err) {
        rows.push_back({"closed-form", std::numeric_limits<double>::quiet_NaN(), 0, "unsupported"});
    }
    const auto mvmd = sample_mvmd_terminal(model, t, e.paths, e.seed, e.kappa, false, workers);
    rows.push_back({"mvmd-empirical", kendall_tau_empirical(mvmd.column(0), mvmd.column(1)), e.paths, "ok"});
    SimulationConfig sim{e.paths, e.steps, t, e.seed, Scheme::scmd_euler, 0.0, false, workers};
    const auto scmd = simulate_scmd(model, sim);
    rows.push_back({"scmd-empirical", kendall_tau_empirical(scmd.column(0), scmd.column(1)), e.paths, "ok"});
    return rows;
}

struct CopulaRow {
    double u1 = 0.0;
    double u2 = 0.0;
    double model = 0.0;
    double empirical = 0.0;
};

/// Copula of the first two assets on the grid u = j / (K + 1), j = 1..K,
/// remaining coordinates at 1; the empirical column uses MVMD terminal ranks.
inline std::vector<CopulaRow> run_copula(const ExperimentConfig& cfg, std::size_t grid,
                                         unsigned workers = default_workers()) {
    if (grid == 0) throw ValidationError("grid must be positive");
    const auto model = cfg.model.build();
    if (model.size() < 2) throw ValidationError("model.assets: a copula grid needs at least two assets");
    const double t = cfg.product.maturity;
    const auto sample = sample_mvmd_terminal(model, t, cfg.engine.paths, cfg.engine.seed, cfg.engine.kappa, false, workers);
    const EmpiricalCopula empirical(sample);
    std::vector<CopulaRow> rows;
    std::vector<double> u(model.size(), 1.0);
    for (std::size_t a = 1; a <= grid; ++a)
        for (std::size_t b = 1; b <= grid; ++b) {
            u[0] = static_cast<double>(a) / static_cast<double>(grid + 1);
            u[1] = static_cast<double>(b) / static_cast<double>(grid + 1);
            rows.push_back({u[0], u[1], copula_value(model, t, u, cfg.engine.kappa), empirical(u)});
        }
    return rows;
}

// ---------------------------------------------------------------------------
// Published tables

struct ReferenceCell {
    double price;
    double se;
};

struct ReferenceProduct {
    std::string product;  // vanilla, spread, geometric
    std::array<ReferenceCell, 3> mvmd;
    std::array<ReferenceCell, 3> scmd;
};

struct ReferenceTable {
    int index;
    BasketKind kind;
    double rho;
    std::vector<ReferenceProduct> products;
};

inline constexpr std::array<double, 3> kTableStrikes{0.7, 1.0, 1.3};
inline constexpr double kTableRate = 0.05;
inline constexpr double kTableMaturity = 1.0;
inline constexpr std::size_t kTablePaths = 100'000;
inline constexpr std::uint64_t kTableSeedBase = 42;

inline const std::vector<ReferenceTable>& reference_tables() {
    static const std::vector<ReferenceTable> tables{
        {2, BasketKind::arithmetic, 0.6,
         {{"vanilla", {{{0.3380, 0.0007}, {0.1202, 0.0005}, {0.0290, 0.0003}}},
           {{{0.3386, 0.0007}, {0.1200, 0.0005}, {0.0296, 0.0003}}}},
          {"spread", {{{0.4413, 0.0019}, {0.2868, 0.0017}, {0.1810, 0.0014}}},
           {{{0.4365, 0.0019}, {0.2833, 0.0017}, {0.1836, 0.0014}}}}}},
        {3, BasketKind::arithmetic, 1.0,
         {{"vanilla", {{{0.3404, 0.0008}, {0.1307, 0.0006}, {0.0364, 0.0003}}},
           {{{0.3411, 0.0008}, {0.1305, 0.0006}, {0.0373, 0.0003}}}},
          {"spread", {{{0.4199, 0.0018}, {0.2611, 0.0016}, {0.1661, 0.0013}}},
           {{{0.4193, 0.0019}, {0.2647, 0.0016}, {0.1637, 0.0013}}}}}},
        {4, BasketKind::geometric, 0.6,
         {{"geometric", {{{0.3313, 0.00074}, {0.1154, 0.00055}, {0.0267, 0.00028}}},
           {{{0.3312, 0.00075}, {0.1159, 0.00057}, {0.0268, 0.00029}}}}}},
        {5, BasketKind::geometric, -0.6,
         {{"geometric", {{{0.3049, 0.00037}, {0.0584, 0.00025}, {0.0016, 0.00003}}},
           {{{0.3045, 0.00037}, {0.0574, 0.00025}, {0.0013, 0.00003}}}}}},
        {6, BasketKind::geometric, 1.0,
         {{"geometric", {{{0.3387, 0.00083}, {0.1308, 0.00063}, {0.0367, 0.00035}}},
           {{{0.3413, 0.00084}, {0.1307, 0.00064}, {0.0376, 0.00038}}}}}},
    };
    return tables;
}

/// Table 1 parameter sets. The geometric basket reuses the vanilla assets.
inline ModelConfig table_model(const std::string& product, double rho) {
    ModelConfig m;
    if (product == "spread") {
        m.assets = {{0.7, kTableRate, {0.6, 0.4}, {VolCurve(0.2), VolCurve(0.1)}},
                    {1.7, kTableRate, {0.7, 0.3}, {VolCurve(0.4), VolCurve(0.5)}}};
    } else {
        m.assets = {{1.0, kTableRate, {0.6, 0.4}, {VolCurve(0.3), VolCurve(0.2)}},
                    {1.0, kTableRate, {0.7, 0.3}, {VolCurve(0.25), VolCurve(0.35)}}};
    }
    m.correlation = {{1.0, rho}, {rho, 1.0}};
    return m;
}

inline std::vector<double> table_weights(const std::string& product) {
    if (product == "spread") return {-1.0, 1.0};
    if (product == "geometric") return {1.0, 1.0};
    return {0.5, 0.5};
}

inline std::uint64_t table_seed(int index) { return kTableSeedBase + static_cast<std::uint64_t>(index); }

/// Experiment configs of one published table, one per product.
inline std::vector<ExperimentConfig> table_configs(const ReferenceTable& t) {
    std::vector<ExperimentConfig> out;
    for (const auto& p : t.products) {
        ExperimentConfig c;
        c.name = "table" + std::to_string(t.index) + "-" + p.product;
        c.model = table_model(p.product, t.rho);
        c.product = {t.kind, table_weights(p.product), {kTableStrikes.begin(), kTableStrikes.end()},
                     kTableMaturity, 1, kTableRate};
        c.engine.schemes = {"mvmd", "scmd-euler"};
        c.engine.paths = kTablePaths;
        c.engine.steps = kStepsPerYear;
        c.engine.seed = table_seed(t.index);
        out.push_back(std::move(c));
    }
    return out;
}

struct TableCell {
    std::string product;
    std::string scheme;
    double strike;
    double rho;
    PriceEstimate estimate;
    std::uint64_t seed;
    ReferenceCell published;
    std::string error;

    double combined_se() const { return std::hypot(published.se, estimate.std_error); }
    /// Deviation from the published value in units of the published SE.
    double z_score() const { return (estimate.price - published.price) / published.se; }
    bool within(double sigmas) const {
        return error.empty() && std::abs(estimate.price - published.price) <= sigmas * combined_se();
    }
};

inline std::vector<TableCell> run_table(const ReferenceTable& t, unsigned workers = default_workers()) {
    std::vector<TableCell> cells;
    const auto configs = table_configs(t);
    for (std::size_t p = 0; p < configs.size(); ++p) {
        const auto& published = t.products[p];
        std::vector<PriceRow> rows;
        std::string failure;
        try {
            rows = run_price(configs[p], workers);
        } catch (const std::exception& err) {
            failure = err.what();
        }
        for (const std::string scheme : {"mvmd", "scmd-euler"})
            for (std::size_t k = 0; k < kTableStrikes.size(); ++k) {
                const auto& ref = scheme == "mvmd" ? published.mvmd[k] : published.scmd[k];
                TableCell cell{published.product, scheme, kTableStrikes[k], t.rho, {}, configs[p].engine.seed, ref, failure};
                cell.estimate.price = std::numeric_limits<double>::quiet_NaN();
                for (const auto& r : rows)
                    if (r.scheme == scheme && r.strike == kTableStrikes[k]) cell.estimate = r.estimate;
                cells.push_back(cell);
            }
    }
    return cells;
}

// ---------------------------------------------------------------------------
// Output

inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline const char* kTableCsvHeader = "product,scheme,strike,rho,price,std_error,paths,seed,paper_price,paper_se,z_score";

inline std::string table_csv(const std::vector<TableCell>& cells) {
    std::ostringstream out;
    out << kTableCsvHeader << '\n';
    for (const auto& c : cells)
        out << c.product << ',' << c.scheme << ',' << format_number(c.strike) << ',' << format_number(c.rho) << ','
            << format_number(c.estimate.price) << ',' << format_number(c.estimate.std_error) << ','
            << c.estimate.samples << ',' << c.seed << ',' << format_number(c.published.price) << ','
            << format_number(c.published.se) << ',' << format_number(c.z_score()) << '\n';
    return out.str();
}

inline std::string table1_csv() {
    std::ostringstream out;
    out << "product,asset,spot,drift,lambda_1,lambda_2,sigma_1,sigma_2,weight\n";
    for (const std::string product : {"vanilla", "spread", "geometric"}) {
        const auto m = table_model(product, 0.0);
        const auto w = table_weights(product);
        for (std::size_t i = 0; i < m.assets.size(); ++i) {
            const auto& a = m.assets[i];
            out << product << ',' << i + 1 << ',' << format_number(a.spot) << ',' << format_number(a.drift) << ','
                << format_number(a.weights[0]) << ',' << format_number(a.weights[1]) << ','
                << format_number(a.vols[0].values()[0]) << ',' << format_number(a.vols[1].values()[0]) << ','
                << format_number(w[i]) << '\n';
        }
    }
    return out.str();
}

inline std::string price_rows_csv(const std::vector<PriceRow>& rows) {
    std::ostringstream out;
    out << "experiment,scheme,strike,rho,price,std_error,samples,seed,method\n";
    for (const auto& r : rows)
        out << r.experiment << ',' << r.scheme << ',' << format_number(r.strike) << ',' << format_number(r.rho) << ','
            << format_number(r.estimate.price) << ',' << format_number(r.estimate.std_error) << ','
            << r.estimate.samples << ',' << r.seed << ',' << to_string(r.estimate.method) << '\n';
    return out.str();
}

inline Json price_rows_json(const std::vector<PriceRow>& rows, const std::string& hash) {
    Json arr = Json::array();
    for (const auto& r : rows)
        arr.push_back({{"experiment", r.experiment},
                       {"scheme", r.scheme},
                       {"strike", r.strike},
                       {"rho", r.rho},
                       {"price", r.estimate.price},
                       {"std_error", r.estimate.std_error},
                       {"samples", r.estimate.samples},
                       {"seed", r.seed},
                       {"method", to_string(r.estimate.method)},
                       {"wall_seconds", r.wall_seconds}});
    return {{"config_hash", hash}, {"rows", arr}};
}

struct TablesReport {
    std::vector<std::vector<TableCell>> tables;  // aligned with reference_tables()
    double wall_seconds = 0.0;
};

inline void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write " + path.string());
    out << text;
}

/// Writes table1_parameters.csv, table2.csv .. table6.csv, the config of
/// every table (tableN.json) and manifest.json into dir.
inline TablesReport reproduce_tables(const std::filesystem::path& dir, unsigned workers = default_workers()) {
    std::filesystem::create_directories(dir);
    const auto start = std::chrono::steady_clock::now();
    TablesReport report;
    write_file(dir / "table1_parameters.csv", table1_csv());
    Json manifest = Json::object();
    for (const auto& t : reference_tables()) {
        const std::string stem = "table" + std::to_string(t.index);
        const auto configs = table_configs(t);
        const std::string cfg_text = canonical(configs);
        write_file(dir / (stem + ".json"), Json::parse(cfg_text).dump(2) + "\n");
        auto cells = run_table(t, workers);
        write_file(dir / (stem + ".csv"), table_csv(cells));
        Json failures = Json::array();
        for (const auto& c : cells)
            if (!c.error.empty()) failures.push_back({{"product", c.product}, {"scheme", c.scheme}, {"error", c.error}});
        manifest[stem] = {{"csv", stem + ".csv"},
                          {"config", stem + ".json"},
                          {"config_hash", config_hash(cfg_text)},
                          {"seed", table_seed(t.index)},
                          {"failures", failures}};
        report.tables.push_back(std::move(cells));
    }
    write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    report.wall_seconds = detail::seconds_since(start);
    return report;
}

}  // namespace mvmd

#endif  // MVMD_EXPERIMENTS_HPP
