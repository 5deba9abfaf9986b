#pragma once

#include "ezr/active.hpp"
#include "ezr/tree.hpp"

namespace ezr {

struct FeatureImportance {
    enum class Method { mdi, permutation };

    Method method = Method::mdi;
    std::vector<double> scores;  // per schema column; non-split features stay 0

    // learnable columns ordered by descending score, ties by column index
    std::vector<int> ranking(const Dataset& ds) const;
    // scale so the scores sum to 1 (meaningful for mdi's non-negative scores)
    void to_unit_sum();
};

// Per feature, the sum over the nodes splitting on it of the size-weighted
// mean of the children's impurities.
FeatureImportance mdi_importance(const TreeNode& root, const Dataset& ds);

// Model-agnostic check: shuffle one column, re-route every row, and measure
// how much the leaf-median prediction error grows. Negative scores mean the
// column's real values were adding noise.
FeatureImportance permutation_importance(const TreeNode& root,
                                         const std::vector<Row>& rows,
                                         const Dataset& ds, long repeats, Rng& rng,
                                         Metric metric = Metric::d2h);

// The boundary conditions that would reroute a row into a better leaf.
struct Counterfactual {
    std::vector<Split> edits;           // conditions on the diverging suffix
    const TreeNode* source = nullptr;   // where the row lands today
    const TreeNode* target = nullptr;   // the better leaf
    double win_gain = 0.0;
};

// Against the best-win leaf by default; with nearest=true, against the
// better leaf reachable with the fewest edits. Returns nothing when the row
// already lands in the chosen target.
std::optional<Counterfactual> counterfactual(const TreeNode& root, const Row& row,
                                             bool nearest = false);

// Rewrite the row's cells so it satisfies every condition on the path to the
// counterfactual's target; re-routing the result reaches that leaf.
Row apply_counterfactual(const Row& row, const Counterfactual& cf,
                         const TreeNode& root, const Dataset& ds);

struct FeatureSelection {
    long k = 0;                                   // features worth keeping
    std::vector<std::pair<int, double>> ranked;   // (column, mdi), descending
    long labels_spent = 0;
};

// Budgeted feature selection: actively label a small sample, grow the
// explanation tree over it, and keep the features with nonzero importance.
// The default budget is min(150, 40% of the pool).
FeatureSelection select_features(const Dataset& ds, std::vector<Row> pool, Rng& rng,
                                 const GrowOptions& options = {},
                                 std::optional<BudgetPolicy> policy = std::nullopt);

}  // namespace ezr
