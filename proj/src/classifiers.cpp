#include "idsbench/classifiers.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "idsbench/boosting.hpp"
#include "idsbench/error.hpp"
#include "idsbench/mlp.hpp"
#include "idsbench/naive_bayes.hpp"
#include "idsbench/tree.hpp"
#include "model_json.hpp"

namespace idsbench {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::size_t as_count(const HyperParams& p, std::string_view name) {
    const double v = *p.get(name);
    if (!(v >= 0.0) || v != std::floor(v)) {
        throw ConfigError("hyperparameter '" + std::string(name) + "' must be a non-negative integer, got " + shortest(v));
    }
    return static_cast<std::size_t>(v);
}

double positive(const HyperParams& p, std::string_view name) {
    const double v = *p.get(name);
    if (!(v > 0.0)) throw ConfigError("hyperparameter '" + std::string(name) + "' must be > 0");
    return v;
}

}  // namespace

std::string_view to_string(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::random_forest: return "random_forest";
        case Algorithm::decision_tree: return "decision_tree";
        case Algorithm::boosting: return "boosting";
        case Algorithm::naive_bayes: return "naive_bayes";
        case Algorithm::mlp: return "mlp";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    if (name == "random_forest" || name == "rf") return Algorithm::random_forest;
    if (name == "decision_tree" || name == "dt") return Algorithm::decision_tree;
    if (name == "boosting" || name == "xgb" || name == "gbdt") return Algorithm::boosting;
    if (name == "naive_bayes" || name == "nb") return Algorithm::naive_bayes;
    if (name == "mlp" || name == "nn") return Algorithm::mlp;
    throw ConfigError("unknown algorithm '" + std::string(name) + "'");
}

const std::vector<Algorithm>& all_algorithms() {
    static const std::vector<Algorithm> all = {Algorithm::random_forest, Algorithm::decision_tree,
                                               Algorithm::boosting, Algorithm::naive_bayes, Algorithm::mlp};
    return all;
}

HyperParams::HyperParams(std::initializer_list<std::pair<std::string, double>> entries) {
    for (const auto& [k, v] : entries) set(k, v);
}

void HyperParams::set(const std::string& name, double value) {
    for (auto& [k, v] : entries_) {
        if (k == name) {
            v = value;
            return;
        }
    }
    entries_.emplace_back(name, value);
}

std::optional<double> HyperParams::get(std::string_view name) const {
    for (const auto& [k, v] : entries_) {
        if (k == name) return v;
    }
    return std::nullopt;
}

double HyperParams::get_or(std::string_view name, double fallback) const { return get(name).value_or(fallback); }

std::string HyperParams::to_string() const {
    std::string out;
    for (const auto& [k, v] : entries_) {
        if (!out.empty()) out += ';';
        out += k;
        out += '=';
        out += shortest(v);
    }
    return out;
}

HyperParams HyperParams::parse(std::string_view text) {
    HyperParams p;
    while (!text.empty()) {
        const auto semi = text.find(';');
        const std::string_view item = text.substr(0, semi);
        const auto eq = item.find('=');
        if (eq == std::string_view::npos) throw ConfigError("bad hyperparameter item '" + std::string(item) + "'");
        double v = 0.0;
        const auto val = item.substr(eq + 1);
        const auto res = std::from_chars(val.data(), val.data() + val.size(), v);
        if (res.ec != std::errc() || res.ptr != val.data() + val.size()) {
            throw ConfigError("bad hyperparameter value '" + std::string(val) + "'");
        }
        p.set(std::string(item.substr(0, eq)), v);
        if (semi == std::string_view::npos) break;
        text.remove_prefix(semi + 1);
    }
    return p;
}

HyperParams default_params(Algorithm algorithm) {
    switch (algorithm) {
        case Algorithm::random_forest:
            return {{"n_trees", 100}, {"max_depth", 0}, {"min_samples_split", 2}, {"bootstrap", 1}, {"max_features", 0}};
        case Algorithm::decision_tree:
            return {{"max_depth", 0}, {"min_samples_split", 2}};
        case Algorithm::boosting:
            return {{"rounds", 100}, {"learning_rate", 0.3}, {"max_depth", 6}, {"lambda", 1}, {"min_child_weight", 1}};
        case Algorithm::naive_bayes:
            return {{"var_smoothing", 1e-9}};
        case Algorithm::mlp:
            return {{"learning_rate", 1e-3}, {"dropout", 0.3},        {"batch_size", 512},
                    {"max_epochs", 100},     {"patience", 5},         {"validation_fraction", 0.1}};
    }
    return {};
}

const std::vector<std::string>& known_params(Algorithm algorithm) {
    static const auto table = [] {
        std::vector<std::vector<std::string>> t;
        for (Algorithm a : all_algorithms()) {
            std::vector<std::string> names;
            const HyperParams defaults = default_params(a);
            for (const auto& [k, v] : defaults.entries()) names.push_back(k);
            t.push_back(std::move(names));
        }
        return t;
    }();
    return table.at(static_cast<std::size_t>(algorithm));
}

std::vector<Label> threshold_scores(std::span<const double> scores) {
    std::vector<Label> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] > 0.5 ? Label{1} : Label{0};
    return out;
}

std::unique_ptr<TrainedModel> fit_model(Algorithm algorithm, const HyperParams& params, const ColumnarTable& train,
                                        const FitOptions& options) {
    HyperParams p = default_params(algorithm);
    const auto& known = known_params(algorithm);
    for (const auto& [k, v] : params.entries()) {
        if (std::find(known.begin(), known.end(), k) == known.end()) {
            throw ConfigError("unknown hyperparameter '" + k + "' for " + std::string(to_string(algorithm)));
        }
        p.set(k, v);
    }

    switch (algorithm) {
        case Algorithm::decision_tree: {
            TreeLimits limits{static_cast<int>(as_count(p, "max_depth")), static_cast<double>(as_count(p, "min_samples_split"))};
            return std::make_unique<TreeModel>(tree_fit(train, limits));
        }
        case Algorithm::random_forest: {
            ForestOptions fo;
            fo.n_trees = as_count(p, "n_trees");
            fo.limits = {static_cast<int>(as_count(p, "max_depth")), static_cast<double>(as_count(p, "min_samples_split"))};
            fo.bootstrap = as_count(p, "bootstrap") != 0;
            fo.max_features = as_count(p, "max_features");
            fo.seed = options.seed;
            fo.threads = options.threads;
            return std::make_unique<ForestModel>(forest_fit(train, fo));
        }
        case Algorithm::boosting: {
            BoostOptions bo;
            bo.rounds = as_count(p, "rounds");
            bo.learning_rate = positive(p, "learning_rate");
            bo.max_depth = static_cast<int>(as_count(p, "max_depth"));
            bo.lambda = *p.get("lambda");
            bo.min_child_weight = *p.get("min_child_weight");
            return std::make_unique<BoostModel>(boost_fit(train, bo));
        }
        case Algorithm::naive_bayes:
            return std::make_unique<GaussianNbModel>(gnb_fit(train, positive(p, "var_smoothing")));
        case Algorithm::mlp: {
            MlpConfig mc;
            mc.learning_rate = positive(p, "learning_rate");
            mc.dropout = *p.get("dropout");
            mc.batch_size = as_count(p, "batch_size");
            mc.max_epochs = as_count(p, "max_epochs");
            mc.patience = as_count(p, "patience");
            mc.validation_fraction = *p.get("validation_fraction");
            mc.seed = options.seed;
            if (mc.dropout < 0.0 || mc.dropout >= 1.0) throw ConfigError("hyperparameter 'dropout' must be in [0, 1)");
            return std::make_unique<MlpModel>(mlp_fit(train, mc));
        }
    }
    throw ConfigError("unsupported algorithm");
}

std::unique_ptr<TrainedModel> load_model(std::string_view text) {
    detail::Json j;
    try {
        j = detail::Json::parse(text);
    } catch (const detail::Json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
    try {
        if (j.value("format", "") != "idsbench-model") throw DataError("model file: not an idsbench model");
        const int version = j.at("version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("model file: unsupported format version " + std::to_string(version));
        }
        switch (parse_algorithm(j.at("algorithm").get<std::string>())) {
            case Algorithm::decision_tree: return detail::tree_from_json(j);
            case Algorithm::random_forest: return detail::forest_from_json(j);
            case Algorithm::boosting: return detail::boost_from_json(j);
            case Algorithm::naive_bayes: return detail::gnb_from_json(j);
            case Algorithm::mlp: return detail::mlp_from_json(j);
        }
    } catch (const detail::Json::exception& e) {
        throw DataError(std::string("model file: ") + e.what());
    }
    throw DataError("model file: unknown algorithm");
}

namespace detail {

Json model_header(Algorithm algorithm, std::size_t n_features) {
    Json j;
    j["format"] = "idsbench-model";
    j["version"] = kModelFormatVersion;
    j["algorithm"] = std::string(to_string(algorithm));
    j["n_features"] = n_features;
    return j;
}

}  // namespace detail

}  // namespace idsbench
