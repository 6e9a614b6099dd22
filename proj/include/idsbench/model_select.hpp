#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "idsbench/classifiers.hpp"
#include "idsbench/table.hpp"

namespace idsbench {

struct SplitIndices {
    std::vector<std::size_t> train_rows;  // ascending
    std::vector<std::size_t> test_rows;   // ascending
    std::uint64_t seed = 0;
    double test_fraction = 0.3;
};

// Per class, round(count * test_fraction) rows go to the test side.
// Throws DataError when a class has fewer than two rows.
SplitIndices stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed);

struct FoldPlan {
    std::size_t k = 5;
    std::vector<std::size_t> fold_assignments;  // position -> fold id
    bool stratified = true;
    std::uint64_t seed = 0;

    std::vector<std::size_t> fold_rows(std::size_t fold) const;
    std::vector<std::size_t> training_rows(std::size_t fold) const;
    std::vector<std::size_t> fold_sizes() const;
};

// Each class is shuffled and dealt round-robin, the deal continuing across classes,
// so fold sizes differ by at most one. Throws DataError when a class has fewer than k rows.
FoldPlan make_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed, bool stratified = true);

struct ParamGrid {
    Algorithm algorithm = Algorithm::decision_tree;
    // Declared order; enumeration varies the last axis fastest.
    std::vector<std::pair<std::string, std::vector<double>>> axes;

    std::size_t size() const;
    HyperParams point(std::size_t index) const;
    // Throws ConfigError on empty value lists or unknown names.
    void validate() const;
};

ParamGrid default_grid(Algorithm algorithm);

struct GridPointResult {
    std::size_t index = 0;
    HyperParams params;
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;  // -inf when a fit failed
    std::string failure;
};

struct SearchResult {
    Algorithm algorithm = Algorithm::decision_tree;
    std::vector<GridPointResult> points;  // by enumeration index
    std::size_t best_index = 0;

    const HyperParams& best_params() const { return points.at(best_index).params; }
    double best_score() const { return points.at(best_index).mean_accuracy; }
    // grid_point,params,fold_1..fold_k,mean_accuracy,failure
    std::string to_csv() const;
};

using Fitter = std::function<std::unique_ptr<TrainedModel>(Algorithm, const HyperParams&, const ColumnarTable&,
                                                           const FitOptions&)>;

struct SearchOptions {
    std::uint64_t model_seed = 42;
    unsigned threads = 1;
    Fitter fitter;  // defaults to fit_model
};

// Exhaustive search scored by mean validation accuracy over the folds. Ties go to the
// smallest enumeration index. Throws PipelineError if every point fails.
SearchResult grid_search(const ParamGrid& grid, const ColumnarTable& train, const FoldPlan& plan,
                         const SearchOptions& options = {});

// Selects rows by index and returns the fraction of correct 0.5-thresholded predictions.
double accuracy(std::span<const Label> truth, std::span<const Label> predicted);

}  // namespace idsbench
