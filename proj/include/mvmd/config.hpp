#ifndef MVMD_CONFIG_HPP
#define MVMD_CONFIG_HPP

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mvmd/errors.hpp"
#include "mvmd/mixture_multivariate.hpp"
#include "mvmd/montecarlo.hpp"
#include "mvmd/pricing.hpp"

namespace mvmd {

using Json = nlohmann::json;

struct AssetConfig {
    double spot = 1.0;
    double drift = 0.0;
    std::vector<double> weights;
    std::vector<VolCurve> vols;

    bool operator==(const AssetConfig&) const = default;
};

struct ModelConfig {
    std::vector<AssetConfig> assets;
    std::vector<std::vector<double>> correlation;

    MultiAssetModel build() const {
        std::vector<AssetMixture> mixtures;
        for (const auto& a : assets) {
            std::vector<MixtureComponent> comps;
            for (std::size_t k = 0; k < a.weights.size(); ++k) comps.push_back({a.weights[k], a.vols[k]});
            mixtures.emplace_back(a.spot, a.drift, std::move(comps));
        }
        const auto n = static_cast<Eigen::Index>(correlation.size());
        Matrix r(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                r(i, j) = correlation[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        return MultiAssetModel(std::move(mixtures), CorrelationMatrix(std::move(r)));
    }

    bool operator==(const ModelConfig&) const = default;
};

struct ProductConfig {
    BasketKind kind = BasketKind::arithmetic;
    std::vector<double> weights;
    std::vector<double> strikes;
    double maturity = 1.0;
    int omega = 1;
    double rate = 0.0;

    BasketSpec spec(double strike) const { return {weights, kind, strike, maturity, omega, rate}; }

    bool operator==(const ProductConfig&) const = default;
};

/// Pricing engines selectable from a config. "mvmd" is the convex combination
/// of single-step tuple prices with common random numbers; "closed-form" is
/// the exact geometric pricer.
inline const std::vector<std::string>& known_engines() {
    static const std::vector<std::string> names{"mvmd", "closed-form", "mvmd-terminal", "muvm-terminal", "scmd-euler"};
    return names;
}

struct EngineConfig {
    std::vector<std::string> schemes{"mvmd", "scmd-euler"};
    std::size_t paths = 100'000;
    std::size_t steps = kStepsPerYear;
    std::uint64_t seed = 42;
    double kappa = 0.0;
    bool antithetic = false;

    bool operator==(const EngineConfig&) const = default;
};

struct OutputConfig {
    std::string format = "csv";
    std::string path;

    bool operator==(const OutputConfig&) const = default;
};

struct ExperimentConfig {
    std::string name;
    ModelConfig model;
    ProductConfig product;
    EngineConfig engine;
    OutputConfig output;

    bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

class JsonReader {
public:
    JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const Json& json() const { return j_; }

    void require_object(std::initializer_list<const char*> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [key, value] : j_.items()) {
            bool ok = false;
            for (const char* a : allowed) ok = ok || key == a;
            if (!ok) throw ValidationError(child_path(key) + ": unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    JsonReader at(const char* key) const {
        if (!j_.contains(key)) throw ValidationError(child_path(key) + ": missing key");
        return {j_.at(key), child_path(key)};
    }

    JsonReader at(std::size_t i) const { return {j_.at(i), path_ + "[" + std::to_string(i) + "]"}; }

    std::size_t array_size() const {
        if (!j_.is_array()) fail("expected an array");
        return j_.size();
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }

    std::uint64_t unsigned_integer() const {
        if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0))
            fail("expected a non-negative integer");
        return j_.get<std::uint64_t>();
    }

    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }

    bool boolean() const {
        if (!j_.is_boolean()) fail("expected true or false");
        return j_.get<bool>();
    }

    std::vector<double> numbers() const {
        std::vector<double> out(array_size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = at(i).number();
        return out;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ValidationError(path_ + ": " + what); }

private:
    std::string child_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const Json& j_;
    std::string path_;
};

/// Runs f and re-labels module-level validation failures with the key path.
template <class F>
auto at_key(const JsonReader& r, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        const std::string msg = e.what();
        if (msg.rfind(r.path(), 0) == 0) throw;
        throw ValidationError(r.path() + ": " + msg);
    } catch (const DomainError& e) {
        throw ValidationError(r.path() + ": " + e.what());
    }
}

inline VolCurve parse_vol(const JsonReader& r) {
    if (r.json().is_number()) return at_key(r, [&] { return VolCurve(r.number()); });
    r.require_object({"breakpoints", "values"});
    const auto bp = r.at("breakpoints").numbers();
    const auto vals = r.at("values").numbers();
    return at_key(r, [&] { return VolCurve(bp, vals); });
}

inline Json vol_to_json(const VolCurve& v) {
    if (v.breakpoints().size() == 1) return v.values().front();
    return Json{{"breakpoints", v.breakpoints()}, {"values", v.values()}};
}

inline AssetConfig parse_asset(const JsonReader& r) {
    r.require_object({"spot", "drift", "weights", "vols"});
    AssetConfig a;
    a.spot = r.at("spot").number();
    a.drift = r.at("drift").number();
    a.weights = r.at("weights").numbers();
    const auto vols = r.at("vols");
    for (std::size_t k = 0; k < vols.array_size(); ++k) a.vols.push_back(parse_vol(vols.at(k)));
    if (a.vols.size() != a.weights.size()) r.fail("weights and vols differ in length");
    return a;
}

inline ModelConfig parse_model(const JsonReader& r) {
    r.require_object({"assets", "correlation"});
    ModelConfig m;
    const auto assets = r.at("assets");
    for (std::size_t i = 0; i < assets.array_size(); ++i) m.assets.push_back(parse_asset(assets.at(i)));
    if (m.assets.empty()) assets.fail("at least one asset is required");
    const auto corr = r.at("correlation");
    if (corr.array_size() != m.assets.size()) corr.fail("correlation must be an n x n matrix");
    for (std::size_t i = 0; i < m.assets.size(); ++i) {
        m.correlation.push_back(corr.at(i).numbers());
        if (m.correlation.back().size() != m.assets.size()) corr.at(i).fail("correlation must be an n x n matrix");
    }
    for (std::size_t i = 0; i < m.assets.size(); ++i) {
        const auto a = assets.at(i);
        at_key(a, [&] {
            std::vector<MixtureComponent> comps;
            for (std::size_t k = 0; k < m.assets[i].weights.size(); ++k)
                comps.push_back({m.assets[i].weights[k], m.assets[i].vols[k]});
            return AssetMixture(m.assets[i].spot, m.assets[i].drift, std::move(comps));
        });
    }
    at_key(corr, [&] { return m.build(); });
    return m;
}

inline ProductConfig parse_product(const JsonReader& r, std::size_t assets) {
    r.require_object({"kind", "weights", "strikes", "maturity", "omega", "rate"});
    ProductConfig p;
    const auto kind = r.at("kind").string();
    if (kind == "arithmetic") p.kind = BasketKind::arithmetic;
    else if (kind == "geometric") p.kind = BasketKind::geometric;
    else r.at("kind").fail("expected \"arithmetic\" or \"geometric\"");
    p.weights = r.at("weights").numbers();
    p.strikes = r.at("strikes").numbers();
    if (p.strikes.empty()) r.at("strikes").fail("at least one strike is required");
    p.maturity = r.at("maturity").number();
    if (r.has("omega")) {
        const double om = r.at("omega").number();
        if (om != 1.0 && om != -1.0) r.at("omega").fail("omega must be +1 (call) or -1 (put)");
        p.omega = static_cast<int>(om);
    }
    p.rate = r.at("rate").number();
    for (std::size_t i = 0; i < p.strikes.size(); ++i)
        at_key(r.at("strikes").at(i), [&] {
            p.spec(p.strikes[i]).validate(assets);
            return 0;
        });
    return p;
}

inline EngineConfig parse_engine(const JsonReader& r) {
    r.require_object({"schemes", "paths", "steps", "seed", "kappa", "antithetic"});
    EngineConfig e;
    if (r.has("schemes")) {
        const auto s = r.at("schemes");
        e.schemes.clear();
        for (std::size_t i = 0; i < s.array_size(); ++i) {
            auto name = s.at(i).string();
            bool ok = false;
            for (const auto& k : known_engines()) ok = ok || k == name;
            if (!ok) s.at(i).fail("unknown scheme \"" + name + "\"");
            e.schemes.push_back(std::move(name));
        }
        if (e.schemes.empty()) s.fail("at least one scheme is required");
    }
    if (r.has("paths")) e.paths = r.at("paths").unsigned_integer();
    if (e.paths == 0) r.at("paths").fail("paths must be positive");
    if (r.has("steps")) e.steps = r.at("steps").unsigned_integer();
    if (e.steps == 0) r.at("steps").fail("steps must be positive");
    if (r.has("seed")) e.seed = r.at("seed").unsigned_integer();
    if (r.has("kappa")) e.kappa = r.at("kappa").number();
    if (!(e.kappa >= 0.0 && e.kappa < 1.0)) r.at("kappa").fail("kappa must lie in [0, 1)");
    if (r.has("antithetic")) e.antithetic = r.at("antithetic").boolean();
    return e;
}

inline OutputConfig parse_output(const JsonReader& r) {
    r.require_object({"format", "path"});
    OutputConfig o;
    if (r.has("format")) o.format = r.at("format").string();
    if (o.format != "csv" && o.format != "json") r.at("format").fail("expected \"csv\" or \"json\"");
    if (r.has("path")) o.path = r.at("path").string();
    return o;
}

inline ExperimentConfig parse_experiment(const JsonReader& r) {
    r.require_object({"name", "model", "product", "engine", "output"});
    ExperimentConfig c;
    if (r.has("name")) c.name = r.at("name").string();
    c.model = parse_model(r.at("model"));
    c.product = parse_product(r.at("product"), c.model.assets.size());
    if (r.has("engine")) c.engine = parse_engine(r.at("engine"));
    if (r.has("output")) c.output = parse_output(r.at("output"));
    return c;
}

}  // namespace detail

/// A config document holds one experiment object or an array of them.
inline std::vector<ExperimentConfig> parse_config(const Json& doc) {
    std::vector<ExperimentConfig> out;
    if (doc.is_array()) {
        const detail::JsonReader r(doc, "");
        for (std::size_t i = 0; i < doc.size(); ++i) out.push_back(detail::parse_experiment(r.at(i)));
        if (out.empty()) throw ValidationError("config holds no experiments");
    } else {
        out.push_back(detail::parse_experiment(detail::JsonReader(doc, "")));
    }
    return out;
}

inline std::vector<ExperimentConfig> parse_config_text(const std::string& text) {
    Json doc;
    try {
        doc = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline std::vector<ExperimentConfig> load_config(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ValidationError("cannot open config file " + file);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

inline Json to_json(const ExperimentConfig& c) {
    Json assets = Json::array();
    for (const auto& a : c.model.assets) {
        Json vols = Json::array();
        for (const auto& v : a.vols) vols.push_back(detail::vol_to_json(v));
        assets.push_back({{"spot", a.spot}, {"drift", a.drift}, {"weights", a.weights}, {"vols", vols}});
    }
    return Json{
        {"name", c.name},
        {"model", {{"assets", assets}, {"correlation", c.model.correlation}}},
        {"product",
         {{"kind", to_string(c.product.kind)},
          {"weights", c.product.weights},
          {"strikes", c.product.strikes},
          {"maturity", c.product.maturity},
          {"omega", c.product.omega},
          {"rate", c.product.rate}}},
        {"engine",
         {{"schemes", c.engine.schemes},
          {"paths", c.engine.paths},
          {"steps", c.engine.steps},
          {"seed", c.engine.seed},
          {"kappa", c.engine.kappa},
          {"antithetic", c.engine.antithetic}}},
        {"output", {{"format", c.output.format}, {"path", c.output.path}}},
    };
}

/// Sorted keys, shortest round-trip numbers, no whitespace.
inline std::string canonical(const ExperimentConfig& c) { return to_json(c).dump(); }

inline std::string canonical(const std::vector<ExperimentConfig>& cs) {
    Json arr = Json::array();
    for (const auto& c : cs) arr.push_back(to_json(c));
    return arr.dump();
}

/// 64-bit FNV-1a of the canonical serialisation, as 16 hex digits.
inline std::string config_hash(const std::string& canonical_text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : canonical_text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = hex[h & 0xF];
    return out;
}

inline std::string config_hash(const ExperimentConfig& c) { return config_hash(canonical(c)); }

}  // namespace mvmd

#endif  // MVMD_CONFIG_HPP
