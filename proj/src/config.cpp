#include "modmon/config.hpp"

#include <fstream>
#include <set>

#include "modmon/errors.hpp"
#include "modmon/names.hpp"

namespace modmon {

namespace {

using nlohmann::json;

void require_keys(const json& j, const std::set<std::string>& allowed,
                  const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (allowed.find(item.key()) == allowed.end()) {
            throw ParseError(where + ": unknown key '" + item.key() + "'");
        }
    }
}

template <typename T>
void read_into(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ParseError(where + ": mistyped value for '" + std::string(key) + "'");
    }
}

}  // namespace

CliConfig CliConfig::defaults() {
    CliConfig config;
    config.scenario.base = DcsbmConfig::balanced(200, 4, 18.0, 2.0);
    config.scenario.attribute_dim = 16;
    config.scenario.phase1_len = 20;
    config.scenario.phase2_len = 20;
    config.scenario.change = ChangeType::None;
    config.model.hidden_dim = 64;
    config.model.communities = 4;
    return config;
}

ExperimentConfig CliConfig::experiment() const {
    ExperimentConfig out;
    out.scenario = scenario;
    out.model = model;
    out.train = train;
    out.replications = replications;
    out.alpha = alpha;
    out.base_seed = base_seed;
    out.parallelism = parallelism;
    return out;
}

CliConfig parse_config_json(const json& j, const std::string& where) {
    CliConfig config = CliConfig::defaults();
    require_keys(j, {"scenario", "model", "train", "experiment", "tune"}, where);

    if (j.contains("scenario")) {
        const json& js = j.at("scenario");
        const std::string sw = where + ": scenario";
        require_keys(js,
                     {"n", "communities", "attribute_dim", "phase1_len", "phase2_len",
                      "lambda_intra", "lambda_inter", "theta_lower", "theta_upper",
                      "theta_exponent", "density", "zero_self_loops", "change",
                      "shift_step", "drift_cadence"},
                     sw);
        int n = config.scenario.base.n;
        int k = config.scenario.base.k;
        double intra = config.scenario.base.lambda(0, 0);
        double inter = config.scenario.base.lambda(0, 1);
        read_into(js, "n", n, sw);
        read_into(js, "communities", k, sw);
        read_into(js, "lambda_intra", intra, sw);
        read_into(js, "lambda_inter", inter, sw);
        DcsbmConfig base = DcsbmConfig::balanced(n, k, intra, inter);
        base.theta_lower = config.scenario.base.theta_lower;
        base.theta_upper = config.scenario.base.theta_upper;
        base.theta_exponent = config.scenario.base.theta_exponent;
        read_into(js, "theta_lower", base.theta_lower, sw);
        read_into(js, "theta_upper", base.theta_upper, sw);
        read_into(js, "theta_exponent", base.theta_exponent, sw);
        if (js.contains("density")) {
            std::string density;
            read_into(js, "density", density, sw);
            try {
                base.density = parse_density(density);
            } catch (const Error& e) {
                throw ParseError(sw + ": " + e.what());
            }
        }
        read_into(js, "zero_self_loops", base.zero_self_loops, sw);
        config.scenario.base = std::move(base);
        read_into(js, "attribute_dim", config.scenario.attribute_dim, sw);
        read_into(js, "phase1_len", config.scenario.phase1_len, sw);
        read_into(js, "phase2_len", config.scenario.phase2_len, sw);
        if (js.contains("change")) {
            std::string change;
            read_into(js, "change", change, sw);
            try {
                config.scenario.change = parse_change(change);
            } catch (const Error& e) {
                throw ParseError(sw + ": " + e.what());
            }
        }
        read_into(js, "shift_step", config.scenario.shift_step, sw);
        read_into(js, "drift_cadence", config.scenario.drift_cadence, sw);
    }

    if (j.contains("model")) {
        const json& jm = j.at("model");
        const std::string mw = where + ": model";
        require_keys(jm, {"hidden_dim", "communities"}, mw);
        read_into(jm, "hidden_dim", config.model.hidden_dim, mw);
        read_into(jm, "communities", config.model.communities, mw);
    }

    if (j.contains("train")) {
        const json& jt = j.at("train");
        const std::string tw = where + ": train";
        require_keys(jt,
                     {"learning_rate", "epochs", "regularizer", "reg_weight",
                      "dropout_rate", "seed"},
                     tw);
        read_into(jt, "learning_rate", config.train.learning_rate, tw);
        read_into(jt, "epochs", config.train.epochs, tw);
        if (jt.contains("regularizer")) {
            std::string reg;
            read_into(jt, "regularizer", reg, tw);
            try {
                config.train.regularizer = parse_regularizer(reg);
            } catch (const Error& e) {
                throw ParseError(tw + ": " + e.what());
            }
        }
        read_into(jt, "reg_weight", config.train.reg_weight, tw);
        read_into(jt, "dropout_rate", config.train.dropout_rate, tw);
        read_into(jt, "seed", config.train.seed, tw);
    }

    if (j.contains("experiment")) {
        const json& je = j.at("experiment");
        const std::string ew = where + ": experiment";
        require_keys(je, {"replications", "alpha", "base_seed", "parallelism"}, ew);
        read_into(je, "replications", config.replications, ew);
        read_into(je, "alpha", config.alpha, ew);
        read_into(je, "base_seed", config.base_seed, ew);
        read_into(je, "parallelism", config.parallelism, ew);
    }

    if (j.contains("tune")) {
        const json& jt = j.at("tune");
        const std::string tw = where + ": tune";
        require_keys(jt, {"communities", "learning_rates", "dropout_rates"}, tw);
        read_into(jt, "communities", config.tune.communities, tw);
        read_into(jt, "learning_rates", config.tune.learning_rates, tw);
        read_into(jt, "dropout_rates", config.tune.dropout_rates, tw);
    }
    return config;
}

CliConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ParseError(path + ": " + e.what());
    }
    return parse_config_json(j, path);
}

}  // namespace modmon
