#include "idsbench/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "idsbench/error.hpp"
#include "idsbench/util.hpp"

namespace idsbench {

namespace {

std::array<std::vector<std::size_t>, 2> rows_by_class(std::span<const Label> labels) {
    std::array<std::vector<std::size_t>, 2> out;
    for (std::size_t i = 0; i < labels.size(); ++i) out[labels[i]].push_back(i);
    return out;
}

std::string fmt17(double v) {
    if (std::isinf(v)) return v < 0 ? "-inf" : "inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

}  // namespace

SplitIndices stratified_split(std::span<const Label> labels, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ContractViolation("stratified_split: fraction must be in (0, 1)");
    auto classes = rows_by_class(labels);
    for (int c = 0; c < 2; ++c) {
        if (classes[c].size() < 2) {
            throw DataError("stratified_split: class " + std::to_string(c) + " has " +
                            std::to_string(classes[c].size()) + " rows; stratification needs at least 2");
        }
    }
    SplitIndices out;
    out.seed = seed;
    out.test_fraction = test_fraction;
    Rng rng(seed);
    for (auto& rows : classes) {
        rng.shuffle(rows);
        const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(rows.size()) * test_fraction));
        out.test_rows.insert(out.test_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_test));
        out.train_rows.insert(out.train_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_test), rows.end());
    }
    std::sort(out.train_rows.begin(), out.train_rows.end());
    std::sort(out.test_rows.begin(), out.test_rows.end());
    return out;
}

std::vector<std::size_t> FoldPlan::fold_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::training_rows(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_assignments.size(); ++i) {
        if (fold_assignments[i] != fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (std::size_t f : fold_assignments) ++sizes.at(f);
    return sizes;
}

FoldPlan make_folds(std::span<const Label> labels, std::size_t k, std::uint64_t seed, bool stratified) {
    if (k < 2) throw ContractViolation("make_folds: k must be >= 2");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.stratified = stratified;
    plan.fold_assignments.assign(labels.size(), 0);
    Rng rng(seed);

    std::vector<std::vector<std::size_t>> groups;
    if (stratified) {
        auto classes = rows_by_class(labels);
        for (int c = 0; c < 2; ++c) {
            if (classes[c].size() < k) {
                throw DataError("make_folds: class " + std::to_string(c) + " has " + std::to_string(classes[c].size()) +
                                " rows, fewer than k=" + std::to_string(k));
            }
            groups.push_back(std::move(classes[c]));
        }
    } else {
        if (labels.size() < k) throw DataError("make_folds: fewer rows than folds");
        std::vector<std::size_t> all(labels.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        groups.push_back(std::move(all));
    }
    std::size_t deal = 0;
    for (auto& g : groups) {
        rng.shuffle(g);
        for (std::size_t row : g) plan.fold_assignments[row] = deal++ % k;
    }
    return plan;
}

std::size_t ParamGrid::size() const {
    std::size_t n = 1;
    for (const auto& [name, values] : axes) n *= values.size();
    return n;
}

HyperParams ParamGrid::point(std::size_t index) const {
    if (index >= size()) throw ContractViolation("ParamGrid::point: index out of range");
    std::vector<std::size_t> digits(axes.size());
    for (std::size_t a = axes.size(); a-- > 0;) {
        digits[a] = index % axes[a].second.size();
        index /= axes[a].second.size();
    }
    HyperParams p;
    for (std::size_t a = 0; a < axes.size(); ++a) p.set(axes[a].first, axes[a].second[digits[a]]);
    return p;
}

void ParamGrid::validate() const {
    const auto& known = known_params(algorithm);
    for (const auto& [name, values] : axes) {
        if (values.empty()) throw ConfigError("grid for " + std::string(to_string(algorithm)) + ": '" + name + "' has no values");
        if (std::find(known.begin(), known.end(), name) == known.end()) {
            throw ConfigError("grid for " + std::string(to_string(algorithm)) + ": unknown hyperparameter '" + name + "'");
        }
    }
}

ParamGrid default_grid(Algorithm algorithm) {
    ParamGrid g;
    g.algorithm = algorithm;
    switch (algorithm) {
        case Algorithm::random_forest:
            g.axes = {{"n_trees", {50, 100, 200}}, {"max_depth", {0, 10, 20}}};
            break;
        case Algorithm::decision_tree:
            g.axes = {{"max_depth", {0, 5, 10, 20}}, {"min_samples_split", {2, 10}}};
            break;
        case Algorithm::boosting:
            g.axes = {{"rounds", {50, 100}}, {"learning_rate", {0.1, 0.3}}, {"max_depth", {3, 6}}};
            break;
        case Algorithm::naive_bayes:
            g.axes = {{"var_smoothing", {1e-9, 1e-8, 1e-7}}};
            break;
        case Algorithm::mlp:
            g.axes = {{"learning_rate", {1e-3, 1e-4}}, {"dropout", {0.2, 0.3}}};
            break;
    }
    return g;
}

double accuracy(std::span<const Label> truth, std::span<const Label> predicted) {
    if (truth.size() != predicted.size() || truth.empty()) throw ContractViolation("accuracy: bad lengths");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) correct += truth[i] == predicted[i] ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(truth.size());
}

std::string SearchResult::to_csv() const {
    std::ostringstream os;
    const std::size_t k = points.empty() ? 0 : points.front().fold_accuracy.size();
    os << "grid_point,params";
    for (std::size_t f = 0; f < k; ++f) os << ",fold_" << f + 1;
    os << ",mean_accuracy,failure\n";
    for (const auto& p : points) {
        os << p.index << ',' << csv_quote(p.params.to_string());
        for (std::size_t f = 0; f < k; ++f) {
            os << ',' << (f < p.fold_accuracy.size() ? fmt17(p.fold_accuracy[f]) : std::string());
        }
        os << ',' << fmt17(p.mean_accuracy) << ',' << csv_quote(p.failure) << '\n';
    }
    return os.str();
}

SearchResult grid_search(const ParamGrid& grid, const ColumnarTable& train, const FoldPlan& plan,
                         const SearchOptions& options) {
    grid.validate();
    if (grid.size() == 0) throw ConfigError("grid_search: empty grid");
    if (plan.fold_assignments.size() != train.n_rows()) {
        throw ContractViolation("grid_search: fold plan does not cover the training table");
    }
    const Fitter fitter = options.fitter ? options.fitter : Fitter(fit_model);

    struct FoldData {
        ColumnarTable fit;
        ColumnarTable validate;
    };
    std::vector<FoldData> folds;
    folds.reserve(plan.k);
    for (std::size_t f = 0; f < plan.k; ++f) {
        folds.push_back({train.select_rows(plan.training_rows(f)), train.select_rows(plan.fold_rows(f))});
    }

    SearchResult result;
    result.algorithm = grid.algorithm;
    result.points.resize(grid.size());
    FitOptions fit_opts{options.model_seed, 1};
    parallel_for(grid.size(), options.threads, [&](std::size_t idx) {
        GridPointResult& point = result.points[idx];
        point.index = idx;
        point.params = grid.point(idx);
        try {
            double sum = 0.0;
            for (const auto& fd : folds) {
                const auto model = fitter(grid.algorithm, point.params, fd.fit, fit_opts);
                const double acc = accuracy(fd.validate.labels(), model->predict(fd.validate));
                point.fold_accuracy.push_back(acc);
                sum += acc;
            }
            point.mean_accuracy = sum / static_cast<double>(folds.size());
        } catch (const std::exception& e) {
            point.mean_accuracy = -std::numeric_limits<double>::infinity();
            point.failure = e.what();
        }
    });

    bool any = false;
    for (const auto& p : result.points) {
        if (!p.failure.empty()) continue;
        if (!any || p.mean_accuracy > result.points[result.best_index].mean_accuracy) {
            result.best_index = p.index;
            any = true;
        }
    }
    if (!any) {
        throw PipelineError("grid_search: every grid point failed for " + std::string(to_string(grid.algorithm)) +
                            "; first failure: " + result.points.front().failure);
    }
    return result;
}

}  // namespace idsbench
