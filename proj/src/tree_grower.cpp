#include "tree_grower.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "idsbench/error.hpp"

namespace idsbench::detail {

namespace {

double midpoint(double lo, double hi) {
    const double mid = lo + (hi - lo) * 0.5;
    return mid < hi ? mid : lo;
}

bool clearly_greater(double a, double b) { return a > b + 1e-12 * (1.0 + std::abs(b)); }

struct ClassStat {
    double benign = 0.0;
    double attack = 0.0;

    double total() const { return benign + attack; }
    ClassStat& operator+=(const ClassStat& o) {
        benign += o.benign;
        attack += o.attack;
        return *this;
    }
    ClassStat operator-(const ClassStat& o) const { return {benign - o.benign, attack - o.attack}; }
};

struct ClassPolicy {
    using Stat = ClassStat;

    std::span<const Label> labels;
    std::span<const double> weights;
    double min_samples_split;

    bool active(std::size_t r) const { return weights[r] > 0.0; }
    Stat row_stat(std::size_t r) const {
        return labels[r] == 1 ? Stat{0.0, weights[r]} : Stat{weights[r], 0.0};
    }
    bool can_split(const Stat& s) const { return s.total() >= min_samples_split && s.benign > 0 && s.attack > 0; }
    // Negated weighted Gini up to a constant: larger is purer.
    double score(const Stat& s) const {
        const double w = s.total();
        return w > 0.0 ? (s.benign * s.benign + s.attack * s.attack) / w : 0.0;
    }
    bool valid_split(const Stat& left, const Stat& right) const { return left.total() > 0 && right.total() > 0; }
    // Zero-gain splits are kept so that XOR-like structure can still be separated.
    bool accept(double gain) const { return gain > -1e-9; }
    void fill(TreeNode& node, const Stat& s) const {
        node.count_benign = s.benign;
        node.count_attack = s.attack;
        node.value = s.total() > 0.0 ? s.attack / s.total() : 0.0;
    }
};

struct GradStat {
    double g = 0.0;
    double h = 0.0;
    double count = 0.0;

    GradStat& operator+=(const GradStat& o) {
        g += o.g;
        h += o.h;
        count += o.count;
        return *this;
    }
    GradStat operator-(const GradStat& o) const { return {g - o.g, h - o.h, count - o.count}; }
};

struct GradPolicy {
    using Stat = GradStat;

    std::span<const double> grad;
    std::span<const double> hess;
    double lambda;
    double min_child_weight;

    bool active(std::size_t) const { return true; }
    Stat row_stat(std::size_t r) const { return {grad[r], hess[r], 1.0}; }
    bool can_split(const Stat& s) const { return s.count >= 2.0 && s.h >= 2.0 * min_child_weight; }
    double score(const Stat& s) const { return s.g * s.g / (s.h + lambda); }
    bool valid_split(const Stat& left, const Stat& right) const {
        return left.h >= min_child_weight && right.h >= min_child_weight;
    }
    bool accept(double gain) const { return gain > 1e-6; }
    void fill(TreeNode& node, const Stat& s) const {
        node.count_benign = 0.0;
        node.count_attack = s.count;
        node.value = -s.g / (s.h + lambda);
    }
};

template <typename Policy>
NodeList grow(const FeatureView& x, const SortedIndex& sorted, const Policy& pol, const GrowParams& params,
              Rng* rng) {
    using Stat = typename Policy::Stat;
    const std::size_t n = x.n_rows;
    const std::size_t d = x.columns.size();
    const bool subsample = params.max_features > 0 && params.max_features < d;
    if (subsample && rng == nullptr) throw ContractViolation("tree growth: feature subsampling needs an rng");

    NodeList nodes(1);
    std::vector<Stat> stats(1);
    std::vector<std::int32_t> node_of(n, -1);
    for (std::size_t r = 0; r < n; ++r) {
        if (pol.active(r)) {
            node_of[r] = 0;
            stats[0] += pol.row_stat(r);
        }
    }

    std::vector<std::vector<std::uint32_t>> lists(d);
    for (std::size_t f = 0; f < d; ++f) {
        lists[f].reserve(n);
        for (std::uint32_t r : sorted[f]) {
            if (node_of[r] >= 0) lists[f].push_back(r);
        }
    }

    struct Best {
        double gain = 0.0;
        double threshold = 0.0;
        Stat left{};
        bool valid = false;
        bool nonconstant = false;
    };
    struct Scan {
        Stat left{};
        double last = 0.0;
        bool seen = false;
    };

    std::vector<std::int32_t> frontier{0};
    std::vector<std::int32_t> slot_of;
    std::vector<std::int32_t> splittable;
    std::vector<std::int32_t> children;
    std::vector<Best> best;
    std::vector<Scan> scan;
    std::vector<std::size_t> perm(d);

    for (int depth = 0; !frontier.empty(); ++depth) {
        splittable.clear();
        for (std::int32_t node : frontier) {
            pol.fill(nodes[node], stats[node]);
            const bool depth_ok = params.max_depth <= 0 || depth < params.max_depth;
            if (depth_ok && pol.can_split(stats[node])) splittable.push_back(node);
        }
        if (splittable.empty()) break;

        slot_of.assign(nodes.size(), -1);
        for (std::size_t s = 0; s < splittable.size(); ++s) slot_of[splittable[s]] = static_cast<std::int32_t>(s);
        const std::size_t m = splittable.size();
        best.assign(m * d, Best{});
        scan.resize(m);

        for (std::size_t f = 0; f < d; ++f) {
            std::fill(scan.begin(), scan.end(), Scan{});
            const auto col = x.columns[f];
            for (std::uint32_t r : lists[f]) {
                const std::int32_t node = node_of[r];
                const std::int32_t s = slot_of[node];
                if (s < 0) continue;
                const double v = col[r];
                Scan& sc = scan[s];
                if (sc.seen && v > sc.last) {
                    Best& b = best[static_cast<std::size_t>(s) * d + f];
                    b.nonconstant = true;
                    const Stat right = stats[node] - sc.left;
                    if (pol.valid_split(sc.left, right)) {
                        const double gain = pol.score(sc.left) + pol.score(right) - pol.score(stats[node]);
                        if (!b.valid || clearly_greater(gain, b.gain)) {
                            b.gain = gain;
                            b.threshold = midpoint(sc.last, v);
                            b.left = sc.left;
                            b.valid = true;
                        }
                    }
                }
                sc.left += pol.row_stat(r);
                sc.last = v;
                sc.seen = true;
            }
        }

        children.clear();
        for (std::size_t s = 0; s < m; ++s) {
            const std::int32_t node = splittable[s];
            const Best* row = &best[s * d];

            std::size_t chosen = d;
            auto consider = [&](std::size_t f) {
                if (!row[f].valid) return;
                if (chosen == d || clearly_greater(row[f].gain, row[chosen].gain) ||
                    (!clearly_greater(row[chosen].gain, row[f].gain) && f < chosen)) {
                    chosen = f;
                }
            };
            if (subsample && rng != nullptr) {
                std::iota(perm.begin(), perm.end(), std::size_t{0});
                rng->shuffle(perm);
                // Features constant within the node do not count toward max_features.
                std::size_t visited = 0;
                for (std::size_t f : perm) {
                    if (!row[f].nonconstant) continue;
                    consider(f);
                    if (++visited == params.max_features) break;
                }
            } else {
                for (std::size_t f = 0; f < d; ++f) consider(f);
            }
            if (chosen == d || !pol.accept(row[chosen].gain)) continue;

            const Stat left = row[chosen].left;
            const Stat right = stats[node] - left;
            const auto left_id = static_cast<std::int32_t>(nodes.size());
            nodes.push_back({});
            nodes.push_back({});
            stats.push_back(left);
            stats.push_back(right);
            nodes[node].feature = static_cast<std::int32_t>(chosen);
            nodes[node].threshold = row[chosen].threshold;
            nodes[node].left = left_id;
            nodes[node].right = left_id + 1;
            children.push_back(left_id);
            children.push_back(left_id + 1);
        }
        if (children.empty()) break;

        for (std::size_t r = 0; r < n; ++r) {
            const std::int32_t node = node_of[r];
            if (node < 0) continue;
            const TreeNode& tn = nodes[node];
            if (tn.is_leaf()) {
                node_of[r] = -1;
            } else {
                node_of[r] = x.columns[tn.feature][r] <= tn.threshold ? tn.left : tn.right;
            }
        }
        for (auto& list : lists) {
            std::erase_if(list, [&](std::uint32_t r) { return node_of[r] < 0; });
        }
        frontier.swap(children);
    }
    return nodes;
}

}  // namespace

FeatureView view_of(const ColumnarTable& table) {
    FeatureView v;
    v.n_rows = table.n_rows();
    for (std::size_t j = 0; j < table.n_features(); ++j) v.columns.push_back(table.values(j));
    return v;
}

SortedIndex presort(const FeatureView& x) {
    if (x.n_rows > std::numeric_limits<std::uint32_t>::max()) throw ContractViolation("presort: too many rows");
    SortedIndex out(x.columns.size());
    for (std::size_t f = 0; f < x.columns.size(); ++f) {
        auto& idx = out[f];
        idx.resize(x.n_rows);
        std::iota(idx.begin(), idx.end(), std::uint32_t{0});
        const auto col = x.columns[f];
        std::stable_sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) { return col[a] < col[b]; });
    }
    return out;
}

NodeList grow_classifier(const FeatureView& x, const SortedIndex& sorted, std::span<const Label> labels,
                         std::span<const double> weights, const GrowParams& params, Rng* rng) {
    if (labels.size() != x.n_rows || weights.size() != x.n_rows) {
        throw ContractViolation("grow_classifier: labels/weights length mismatch");
    }
    const ClassPolicy pol{labels, weights, params.min_samples_split};
    return grow(x, sorted, pol, params, rng);
}

NodeList grow_regressor(const FeatureView& x, const SortedIndex& sorted, std::span<const double> grad,
                        std::span<const double> hess, const GrowParams& params) {
    if (grad.size() != x.n_rows || hess.size() != x.n_rows) {
        throw ContractViolation("grow_regressor: gradient/hessian length mismatch");
    }
    const GradPolicy pol{grad, hess, params.lambda, params.min_child_weight};
    GrowParams p = params;
    p.max_features = 0;
    return grow(x, sorted, pol, p, nullptr);
}

}  // namespace idsbench::detail
