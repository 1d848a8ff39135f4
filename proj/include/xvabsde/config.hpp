#pragma once

#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "credit.hpp"
#include "linalg.hpp"
#include "process.hpp"

namespace xvabsde {

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// One scalar rate: a constant, a piecewise-linear curve over [[t, v], ...],
// or a reference to another named deck entry ("linked").
struct RateSpec {
    struct Constant {
        double value = 0.0;
    };
    struct Curve {
        std::vector<std::pair<double, double>> knots;
    };
    struct Linked {
        std::string target;
    };
    std::variant<Constant, Curve, Linked> spec = Constant{};
};

struct IntensityCfg {
    // reuses RateSpec's constant/curve forms; "cir" adds the mean-reverting
    // square-root family
    struct Cir {
        double kappa = 0.0, theta = 0.0, xi = 0.0, lambda0 = 0.0;
        std::size_t driver = 0;
    };
    std::variant<RateSpec::Constant, RateSpec::Curve, Cir> spec = RateSpec::Constant{};
};

struct PayoffCfg {
    std::string type = "forward";  // "forward" | "call"
    std::vector<double> weights;
    double strike = 0.0;
};

struct ScenarioConfig {
    // model
    std::string family = "geometric";  // "constant" | "geometric" | "linear_drift"
    std::size_t dimension = 1;
    VectorXd s0;
    VectorXd drift_vec;   // kappa (geometric) or mu (constant)
    MatrixXd drift_mat;   // A (linear_drift)
    MatrixXd sigma;       // vol/sigma matrix
    // grid & MC
    double horizon = 1.0;
    std::size_t steps = 100;
    std::size_t paths = 10000;
    std::uint64_t seed = 1;
    // trade
    PayoffCfg payoff;
    // deck
    std::map<std::string, RateSpec> rates;  // r, r_b, r_c, q_c, r_x, r_tc, r_fc, r_k, r_f
    std::vector<RateSpec> q_s, gamma_s;     // per asset
    // credit
    IntensityCfg intensity_b, intensity_c;
    double recovery_b = 1.0, recovery_c = 1.0;
    // collateral; x_tracks_value: X follows the clean value pathwise
    bool x_tracks_value = false;
    RateSpec coll_x, coll_i_tc, coll_i_fc, coll_k_cap;
    // valuation
    std::string convention = "M=V";  // "M=V" | "M=Vhat" | "M=Vhat-approx"
    std::size_t basis_order = 3;
    double ridge = -1.0;  // negative: automatic
    // factor reduction
    bool reduction_enabled = false;
    std::size_t reduction_factors = 0;
    double reduction_beta = 1.0;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown(const json& obj, const std::vector<std::string>& allowed,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed) {
            if (it.key() == k) {
                ok = true;
                break;
            }
        }
        if (!ok) throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
    }
}

inline const json& require(const json& obj, const std::string& key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ConfigError("missing key \"" + key + "\" in " + where);
    return *it;
}

inline RateSpec parse_rate(const json& j, const std::string& where) {
    if (!j.is_object() || j.size() != 1) {
        throw ConfigError(where + ": a rate must be exactly one of "
                          "{\"constant\": x}, {\"curve\": [[t, v], ...]}, {\"linked\": name}");
    }
    RateSpec out;
    if (j.contains("constant")) {
        out.spec = RateSpec::Constant{j.at("constant").get<double>()};
    } else if (j.contains("curve")) {
        RateSpec::Curve c;
        for (const auto& knot : j.at("curve")) {
            if (!knot.is_array() || knot.size() != 2) {
                throw ConfigError(where + ": curve knots must be [t, v] pairs");
            }
            c.knots.emplace_back(knot[0].get<double>(), knot[1].get<double>());
        }
        if (c.knots.empty()) throw ConfigError(where + ": empty curve");
        for (std::size_t i = 1; i < c.knots.size(); ++i) {
            if (c.knots[i].first <= c.knots[i - 1].first) {
                throw ConfigError(where + ": curve times must be strictly increasing");
            }
        }
        out.spec = std::move(c);
    } else if (j.contains("linked")) {
        out.spec = RateSpec::Linked{j.at("linked").get<std::string>()};
    } else {
        throw ConfigError(where + ": expected \"constant\", \"curve\" or \"linked\"");
    }
    return out;
}

inline json rate_to_json(const RateSpec& r) {
    json j;
    if (const auto* c = std::get_if<RateSpec::Constant>(&r.spec)) {
        j["constant"] = c->value;
    } else if (const auto* cv = std::get_if<RateSpec::Curve>(&r.spec)) {
        json knots = json::array();
        for (const auto& [t, v] : cv->knots) knots.push_back(json::array({t, v}));
        j["curve"] = std::move(knots);
    } else {
        j["linked"] = std::get<RateSpec::Linked>(r.spec).target;
    }
    return j;
}

inline IntensityCfg parse_intensity(const json& j, const std::string& where) {
    IntensityCfg out;
    if (j.is_object() && j.contains("cir")) {
        reject_unknown(j, {"cir"}, where);
        const json& c = j.at("cir");
        reject_unknown(c, {"kappa", "theta", "xi", "lambda0", "driver"}, where + ".cir");
        IntensityCfg::Cir cir;
        cir.kappa = require(c, "kappa", where).get<double>();
        cir.theta = require(c, "theta", where).get<double>();
        cir.xi = require(c, "xi", where).get<double>();
        cir.lambda0 = require(c, "lambda0", where).get<double>();
        cir.driver = require(c, "driver", where).get<std::size_t>();
        out.spec = cir;
        return out;
    }
    RateSpec r = parse_rate(j, where);
    if (std::holds_alternative<RateSpec::Linked>(r.spec)) {
        throw ConfigError(where + ": intensities cannot be linked");
    }
    if (const auto* c = std::get_if<RateSpec::Constant>(&r.spec)) {
        out.spec = *c;
    } else {
        out.spec = std::get<RateSpec::Curve>(r.spec);
    }
    return out;
}

inline json intensity_to_json(const IntensityCfg& c) {
    if (const auto* cir = std::get_if<IntensityCfg::Cir>(&c.spec)) {
        return json{{"cir",
                     {{"kappa", cir->kappa},
                      {"theta", cir->theta},
                      {"xi", cir->xi},
                      {"lambda0", cir->lambda0},
                      {"driver", cir->driver}}}};
    }
    RateSpec r;
    if (const auto* cst = std::get_if<RateSpec::Constant>(&c.spec)) {
        r.spec = *cst;
    } else {
        r.spec = std::get<RateSpec::Curve>(c.spec);
    }
    return rate_to_json(r);
}

inline VectorXd parse_vector(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array() || j.size() != n) {
        throw ConfigError(where + ": expected an array of length " + std::to_string(n));
    }
    VectorXd out(static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) out(static_cast<Eigen::Index>(a)) = j[a].get<double>();
    return out;
}

inline MatrixXd parse_matrix(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array() || j.size() != n) {
        throw ConfigError(where + ": expected an " + std::to_string(n) + "-row matrix");
    }
    MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t a = 0; a < n; ++a) {
        out.row(static_cast<Eigen::Index>(a)) =
            parse_vector(j[a], n, where + " row " + std::to_string(a)).transpose();
    }
    return out;
}

inline json vector_to_json(const VectorXd& v) {
    json out = json::array();
    for (Eigen::Index a = 0; a < v.size(); ++a) out.push_back(v(a));
    return out;
}

inline json matrix_to_json(const MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index a = 0; a < m.rows(); ++a) out.push_back(vector_to_json(m.row(a)));
    return out;
}

}  // namespace detail

inline ScenarioConfig parse_config(const nlohmann::json& j) {
    using detail::parse_rate;
    using detail::reject_unknown;
    using detail::require;
    ScenarioConfig cfg;
    reject_unknown(j,
                   {"model", "grid", "mc", "payoff", "rates", "credit", "collateral",
                    "convention", "basis", "reduction"},
                   "config");

    const auto& model = require(j, "model", "config");
    reject_unknown(model, {"family", "dimension", "s0", "kappa", "mu", "a_matrix", "sigma"},
                   "model");
    cfg.family = require(model, "family", "model").get<std::string>();
    cfg.dimension = require(model, "dimension", "model").get<std::size_t>();
    if (cfg.dimension == 0) throw ConfigError("model: dimension must be positive");
    const std::size_t n = cfg.dimension;
    cfg.s0 = detail::parse_vector(require(model, "s0", "model"), n, "model.s0");
    cfg.sigma = detail::parse_matrix(require(model, "sigma", "model"), n, "model.sigma");
    if (cfg.family == "geometric") {
        cfg.drift_vec = detail::parse_vector(require(model, "kappa", "model"), n, "model.kappa");
    } else if (cfg.family == "constant") {
        cfg.drift_vec = detail::parse_vector(require(model, "mu", "model"), n, "model.mu");
    } else if (cfg.family == "linear_drift") {
        cfg.drift_mat =
            detail::parse_matrix(require(model, "a_matrix", "model"), n, "model.a_matrix");
    } else {
        throw ConfigError("model: unknown family \"" + cfg.family + "\"");
    }

    const auto& grid = require(j, "grid", "config");
    reject_unknown(grid, {"horizon", "steps"}, "grid");
    cfg.horizon = require(grid, "horizon", "grid").get<double>();
    cfg.steps = require(grid, "steps", "grid").get<std::size_t>();
    if (cfg.horizon <= 0.0 || cfg.steps == 0) throw ConfigError("grid: horizon and steps must be positive");

    const auto& mc = require(j, "mc", "config");
    reject_unknown(mc, {"paths", "seed"}, "mc");
    cfg.paths = require(mc, "paths", "mc").get<std::size_t>();
    cfg.seed = require(mc, "seed", "mc").get<std::uint64_t>();
    if (cfg.paths == 0) throw ConfigError("mc: paths must be positive");

    const auto& payoff = require(j, "payoff", "config");
    reject_unknown(payoff, {"type", "weights", "strike"}, "payoff");
    cfg.payoff.type = require(payoff, "type", "payoff").get<std::string>();
    if (cfg.payoff.type != "forward" && cfg.payoff.type != "call") {
        throw ConfigError("payoff: unknown type \"" + cfg.payoff.type + "\"");
    }
    cfg.payoff.weights = require(payoff, "weights", "payoff").get<std::vector<double>>();
    if (cfg.payoff.weights.size() != n) throw ConfigError("payoff: weights length mismatch");
    cfg.payoff.strike = require(payoff, "strike", "payoff").get<double>();

    const auto& rates = require(j, "rates", "config");
    const std::vector<std::string> names = {"r",    "r_b",  "r_c", "q_c", "r_x",
                                            "r_tc", "r_fc", "r_k", "r_f"};
    std::vector<std::string> allowed = names;
    allowed.push_back("q_s");
    allowed.push_back("gamma_s");
    reject_unknown(rates, allowed, "rates");
    for (const auto& name : names) {
        cfg.rates[name] = parse_rate(require(rates, name, "rates"), "rates." + name);
    }
    auto parse_rate_list = [&](const char* key) {
        std::vector<RateSpec> out;
        const auto& arr = require(rates, key, "rates");
        if (!arr.is_array() || arr.size() != n) {
            throw ConfigError(std::string("rates.") + key + ": expected one entry per asset");
        }
        for (std::size_t a = 0; a < n; ++a) {
            out.push_back(parse_rate(arr[a], std::string("rates.") + key));
        }
        return out;
    };
    cfg.q_s = parse_rate_list("q_s");
    cfg.gamma_s = parse_rate_list("gamma_s");
    // linked entries must name a non-linked deck rate
    for (const auto& [name, spec] : cfg.rates) {
        if (const auto* link = std::get_if<RateSpec::Linked>(&spec.spec)) {
            auto it = cfg.rates.find(link->target);
            if (it == cfg.rates.end()) {
                throw ConfigError("rates." + name + ": linked target \"" + link->target +
                                  "\" does not exist");
            }
            if (std::holds_alternative<RateSpec::Linked>(it->second.spec)) {
                throw ConfigError("rates." + name + ": linked target may not itself be linked");
            }
        }
    }

    const auto& credit = require(j, "credit", "config");
    reject_unknown(credit, {"intensity_b", "intensity_c", "recovery_b", "recovery_c"}, "credit");
    cfg.intensity_b =
        detail::parse_intensity(require(credit, "intensity_b", "credit"), "credit.intensity_b");
    cfg.intensity_c =
        detail::parse_intensity(require(credit, "intensity_c", "credit"), "credit.intensity_c");
    cfg.recovery_b = require(credit, "recovery_b", "credit").get<double>();
    cfg.recovery_c = require(credit, "recovery_c", "credit").get<double>();
    if (cfg.recovery_b < 0.0 || cfg.recovery_b > 1.0 || cfg.recovery_c < 0.0 ||
        cfg.recovery_c > 1.0) {
        throw ConfigError("credit: recoveries must lie in [0, 1]");
    }

    const auto& coll = require(j, "collateral", "config");
    reject_unknown(coll, {"x", "i_tc", "i_fc", "k_cap"}, "collateral");
    const auto& x = require(coll, "x", "collateral");
    if (x.is_object() && x.contains("linked") && x.at("linked") == "value") {
        cfg.x_tracks_value = true;
    } else {
        cfg.coll_x = parse_rate(x, "collateral.x");
        if (std::holds_alternative<RateSpec::Linked>(cfg.coll_x.spec)) {
            throw ConfigError("collateral.x: only {\"linked\": \"value\"} is supported");
        }
    }
    cfg.coll_i_tc = parse_rate(require(coll, "i_tc", "collateral"), "collateral.i_tc");
    cfg.coll_i_fc = parse_rate(require(coll, "i_fc", "collateral"), "collateral.i_fc");
    cfg.coll_k_cap = parse_rate(require(coll, "k_cap", "collateral"), "collateral.k_cap");
    for (const RateSpec* r : {&cfg.coll_i_tc, &cfg.coll_i_fc, &cfg.coll_k_cap}) {
        if (std::holds_alternative<RateSpec::Linked>(r->spec)) {
            throw ConfigError("collateral: margin and capital entries cannot be linked");
        }
    }

    cfg.convention = require(j, "convention", "config").get<std::string>();
    if (cfg.convention != "M=V" && cfg.convention != "M=Vhat" &&
        cfg.convention != "M=Vhat-approx") {
        throw ConfigError("convention: expected \"M=V\", \"M=Vhat\" or \"M=Vhat-approx\"");
    }

    const auto& basis = require(j, "basis", "config");
    reject_unknown(basis, {"order", "ridge"}, "basis");
    cfg.basis_order = require(basis, "order", "basis").get<std::size_t>();
    cfg.ridge = basis.contains("ridge") ? basis.at("ridge").get<double>() : -1.0;

    if (j.contains("reduction")) {
        const auto& red = j.at("reduction");
        reject_unknown(red, {"enabled", "factors", "beta"}, "reduction");
        cfg.reduction_enabled = require(red, "enabled", "reduction").get<bool>();
        cfg.reduction_factors =
            red.contains("factors") ? red.at("factors").get<std::size_t>() : n;
        cfg.reduction_beta = red.contains("beta") ? red.at("beta").get<double>() : 1.0;
        if (cfg.reduction_enabled &&
            (cfg.reduction_factors == 0 || cfg.reduction_factors > n)) {
            throw ConfigError("reduction: factors must lie in [1, dimension]");
        }
    }
    return cfg;
}

inline ScenarioConfig parse_config_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j);
}

inline nlohmann::json serialize_config(const ScenarioConfig& cfg) {
    using detail::intensity_to_json;
    using detail::rate_to_json;
    nlohmann::json j;
    nlohmann::json model;
    model["family"] = cfg.family;
    model["dimension"] = cfg.dimension;
    model["s0"] = detail::vector_to_json(cfg.s0);
    model["sigma"] = detail::matrix_to_json(cfg.sigma);
    if (cfg.family == "geometric") model["kappa"] = detail::vector_to_json(cfg.drift_vec);
    if (cfg.family == "constant") model["mu"] = detail::vector_to_json(cfg.drift_vec);
    if (cfg.family == "linear_drift") model["a_matrix"] = detail::matrix_to_json(cfg.drift_mat);
    j["model"] = std::move(model);
    j["grid"] = {{"horizon", cfg.horizon}, {"steps", cfg.steps}};
    j["mc"] = {{"paths", cfg.paths}, {"seed", cfg.seed}};
    j["payoff"] = {{"type", cfg.payoff.type},
                   {"weights", cfg.payoff.weights},
                   {"strike", cfg.payoff.strike}};
    nlohmann::json rates;
    for (const auto& [name, spec] : cfg.rates) rates[name] = rate_to_json(spec);
    nlohmann::json qs = nlohmann::json::array(), gs = nlohmann::json::array();
    for (const auto& r : cfg.q_s) qs.push_back(rate_to_json(r));
    for (const auto& r : cfg.gamma_s) gs.push_back(rate_to_json(r));
    rates["q_s"] = std::move(qs);
    rates["gamma_s"] = std::move(gs);
    j["rates"] = std::move(rates);
    j["credit"] = {{"intensity_b", intensity_to_json(cfg.intensity_b)},
                   {"intensity_c", intensity_to_json(cfg.intensity_c)},
                   {"recovery_b", cfg.recovery_b},
                   {"recovery_c", cfg.recovery_c}};
    nlohmann::json coll;
    coll["x"] = cfg.x_tracks_value ? nlohmann::json{{"linked", "value"}}
                                   : rate_to_json(cfg.coll_x);
    coll["i_tc"] = rate_to_json(cfg.coll_i_tc);
    coll["i_fc"] = rate_to_json(cfg.coll_i_fc);
    coll["k_cap"] = rate_to_json(cfg.coll_k_cap);
    j["collateral"] = std::move(coll);
    j["convention"] = cfg.convention;
    j["basis"] = {{"order", cfg.basis_order}, {"ridge", cfg.ridge}};
    j["reduction"] = {{"enabled", cfg.reduction_enabled},
                      {"factors", cfg.reduction_factors == 0 ? cfg.dimension
                                                             : cfg.reduction_factors},
                      {"beta", cfg.reduction_beta}};
    return j;
}

// FNV-1a over the canonical (alphabetically keyed) dump: a stable run-dir tag.
inline std::string config_hash(const ScenarioConfig& cfg) {
    const std::string dump = serialize_config(cfg).dump();
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// Deck materialization: linked entries resolved against their targets.
inline GridProcess materialize_rate(const RateSpec& spec,
                                    const std::map<std::string, RateSpec>& deck) {
    if (const auto* c = std::get_if<RateSpec::Constant>(&spec.spec)) {
        return GridProcess::constant(c->value);
    }
    if (const auto* cv = std::get_if<RateSpec::Curve>(&spec.spec)) {
        auto knots = cv->knots;
        return GridProcess::curve([knots](double t) {
            if (t <= knots.front().first) return knots.front().second;
            if (t >= knots.back().first) return knots.back().second;
            for (std::size_t i = 1; i < knots.size(); ++i) {
                if (t <= knots[i].first) {
                    const double w = (t - knots[i - 1].first) /
                                     (knots[i].first - knots[i - 1].first);
                    return (1.0 - w) * knots[i - 1].second + w * knots[i].second;
                }
            }
            return knots.back().second;
        });
    }
    const auto& target = std::get<RateSpec::Linked>(spec.spec).target;
    return materialize_rate(deck.at(target), deck);
}

inline IntensitySpec materialize_intensity(const IntensityCfg& cfg) {
    if (const auto* c = std::get_if<RateSpec::Constant>(&cfg.spec)) {
        return IntensitySpec::constant(c->value);
    }
    if (const auto* cv = std::get_if<RateSpec::Curve>(&cfg.spec)) {
        RateSpec r;
        r.spec = *cv;
        GridProcess gp = materialize_rate(r, {});
        return IntensitySpec::curve([gp](double t) { return gp(0, 0, t); });
    }
    const auto& cir = std::get<IntensityCfg::Cir>(cfg.spec);
    CirIntensity out;
    out.kappa = cir.kappa;
    out.theta = cir.theta;
    out.xi = cir.xi;
    out.lambda0 = cir.lambda0;
    out.driver_dim = cir.driver;
    return IntensitySpec::cir(out);
}

}  // namespace xvabsde
