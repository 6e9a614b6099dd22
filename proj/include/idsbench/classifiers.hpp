#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <istream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idsbench/table.hpp"

namespace idsbench {

enum class Algorithm { random_forest, decision_tree, boosting, naive_bayes, mlp };

std::string_view to_string(Algorithm algorithm);
Algorithm parse_algorithm(std::string_view name);
const std::vector<Algorithm>& all_algorithms();

// Ordered name -> value assignment. Depth limits use 0 for "unlimited".
class HyperParams {
public:
    HyperParams() = default;
    HyperParams(std::initializer_list<std::pair<std::string, double>> entries);

    void set(const std::string& name, double value);
    std::optional<double> get(std::string_view name) const;
    double get_or(std::string_view name, double fallback) const;
    const std::vector<std::pair<std::string, double>>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }

    // "name=value;name=value" in insertion order, values printed round-trip exact.
    std::string to_string() const;
    static HyperParams parse(std::string_view text);

    bool operator==(const HyperParams&) const = default;

private:
    std::vector<std::pair<std::string, double>> entries_;
};

// Library defaults used by the "default hyperparameters" scenarios.
HyperParams default_params(Algorithm algorithm);

// Hyperparameter names understood by an algorithm.
const std::vector<std::string>& known_params(Algorithm algorithm);

// Shared thresholding rule: attack iff score > 0.5.
std::vector<Label> threshold_scores(std::span<const double> scores);

class TrainedModel {
public:
    virtual ~TrainedModel() = default;

    virtual Algorithm algorithm() const = 0;
    virtual std::size_t n_features() const = 0;

    // Attack probability (or vote share) per row, in [0, 1].
    virtual std::vector<double> predict_score(const ColumnarTable& features) const = 0;

    std::vector<Label> predict(const ColumnarTable& features) const {
        return threshold_scores(predict_score(features));
    }

    // Versioned JSON text; load_model() restores an identically predicting model.
    virtual std::string serialize() const = 0;

protected:
    void check_width(const ColumnarTable& features) const;
};

inline constexpr int kModelFormatVersion = 1;

std::unique_ptr<TrainedModel> load_model(std::string_view text);

struct FitOptions {
    std::uint64_t seed = 42;
    unsigned threads = 1;
};

// Fits with `params` layered over default_params(algorithm).
// Throws ConfigError on unknown hyperparameter names.
std::unique_ptr<TrainedModel> fit_model(Algorithm algorithm, const HyperParams& params, const ColumnarTable& train,
                                        const FitOptions& options = {});

}  // namespace idsbench
