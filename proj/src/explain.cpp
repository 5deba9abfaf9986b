#include "ezr/explain.hpp"

#include <algorithm>
#include <cmath>

namespace ezr {

std::vector<int> FeatureImportance::ranking(const Dataset& ds) const {
    std::vector<int> order = ds.x_columns();
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return order;
}

void FeatureImportance::to_unit_sum() {
    double total = 0.0;
    for (double s : scores) total += s;
    if (total > 0.0)
        for (double& s : scores) s /= total;
}

namespace {

double weighted_child_impurity(const TreeNode& node) {
    const double nl = static_cast<double>(node.left->n);
    const double nr = static_cast<double>(node.right->n);
    return (nl * node.left->impurity + nr * node.right->impurity) / (nl + nr);
}

void accumulate_mdi(const TreeNode& node, std::vector<double>& scores) {
    if (node.is_leaf()) return;
    scores[node.split->feature] += weighted_child_impurity(node);
    accumulate_mdi(*node.left, scores);
    accumulate_mdi(*node.right, scores);
}

double prediction_error(const TreeNode& root, const std::vector<Row>& rows,
                        const std::vector<double>& truth) {
    double total = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const DecisionPath path = route(root, rows[i]);
        const double predicted = path.terminal->median_score;
        if (std::isnan(predicted))
            throw DataError("tree carries no medians; grow it from labeled rows");
        total += std::fabs(predicted - truth[i]);
    }
    return total / static_cast<double>(rows.size());
}

}  // namespace

FeatureImportance mdi_importance(const TreeNode& root, const Dataset& ds) {
    FeatureImportance out;
    out.method = FeatureImportance::Method::mdi;
    out.scores.assign(ds.n_cols(), 0.0);
    accumulate_mdi(root, out.scores);
    return out;
}

FeatureImportance permutation_importance(const TreeNode& root,
                                         const std::vector<Row>& rows,
                                         const Dataset& ds, long repeats, Rng& rng,
                                         Metric metric) {
    if (rows.size() < 2) throw DataError("permutation needs at least two rows");
    if (repeats < 1) throw DataError("permutation needs at least one repeat");

    std::vector<double> truth;
    truth.reserve(rows.size());
    for (const Row& row : rows) truth.push_back(ds.true_score(row, metric));

    FeatureImportance out;
    out.method = FeatureImportance::Method::permutation;
    out.scores.assign(ds.n_cols(), 0.0);

    const double baseline = prediction_error(root, rows, truth);
    std::vector<Row> work = rows;
    std::vector<std::size_t> order(rows.size());

    for (int col : ds.x_columns()) {
        Rng stream = rng.fork(static_cast<std::uint64_t>(col) + 1);
        double shifted = 0.0;
        for (long r = 0; r < repeats; ++r) {
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            stream.shuffle(order);
            for (std::size_t i = 0; i < order.size(); ++i)
                work[i].cells[col] = rows[order[i]].cells[col];
            shifted += prediction_error(root, work, truth);
        }
        for (std::size_t i = 0; i < rows.size(); ++i)
            work[i].cells[col] = rows[i].cells[col];
        out.scores[col] = shifted / static_cast<double>(repeats) - baseline;
    }
    return out;
}

namespace {

struct LeafPath {
    const TreeNode* leaf;
    std::vector<PathStep> steps;
};

// leaves in rendering order (pre-order, children by descending win)
void collect_leaves(const TreeNode& node, std::vector<PathStep>& trail,
                    std::vector<LeafPath>& out) {
    if (node.is_leaf()) {
        out.push_back({&node, trail});
        return;
    }
    std::vector<std::pair<const TreeNode*, Split>> kids{
        {node.left.get(), *node.split}, {node.right.get(), node.split->flipped()}};
    if (kids[1].first->win_score > kids[0].first->win_score) std::swap(kids[0], kids[1]);
    for (const auto& [child, split] : kids) {
        trail.push_back({split, child});
        collect_leaves(*child, trail, out);
        trail.pop_back();
    }
}

std::size_t common_prefix(const std::vector<PathStep>& a, const std::vector<PathStep>& b) {
    std::size_t i = 0;
    while (i < a.size() && i < b.size() && a[i].node == b[i].node) ++i;
    return i;
}

}  // namespace

std::optional<Counterfactual> counterfactual(const TreeNode& root, const Row& row,
                                             bool nearest) {
    std::vector<LeafPath> leaves;
    std::vector<PathStep> trail;
    collect_leaves(root, trail, leaves);
    if (leaves.size() < 2) return std::nullopt;

    const DecisionPath current = route(root, row);
    const TreeNode* source = current.terminal;

    const LeafPath* target = nullptr;
    if (nearest) {
        std::size_t target_edits = 0;
        for (const LeafPath& leaf : leaves) {
            if (leaf.leaf == source || !(leaf.leaf->win_score > source->win_score))
                continue;
            const std::size_t edits = leaf.steps.size() - common_prefix(current.steps, leaf.steps);
            if (!target || edits < target_edits ||
                (edits == target_edits && leaf.leaf->win_score > target->leaf->win_score)) {
                target = &leaf;
                target_edits = edits;
            }
        }
    } else {
        for (const LeafPath& leaf : leaves)
            if (!target || leaf.leaf->win_score > target->leaf->win_score) target = &leaf;
        if (target && target->leaf == source) target = nullptr;
    }
    if (!target) return std::nullopt;

    Counterfactual out;
    out.source = source;
    out.target = target->leaf;
    out.win_gain = target->leaf->win_score - source->win_score;
    for (std::size_t i = common_prefix(current.steps, target->steps);
         i < target->steps.size(); ++i)
        out.edits.push_back(target->steps[i].taken);
    return out;
}

namespace {

bool find_path(const TreeNode& node, const TreeNode* goal, std::vector<Split>& trail) {
    if (&node == goal) return true;
    if (node.is_leaf()) return false;
    trail.push_back(*node.split);
    if (find_path(*node.left, goal, trail)) return true;
    trail.back() = node.split->flipped();
    if (find_path(*node.right, goal, trail)) return true;
    trail.pop_back();
    return false;
}

}  // namespace

Row apply_counterfactual(const Row& row, const Counterfactual& cf,
                         const TreeNode& root, const Dataset& ds) {
    std::vector<Split> conditions;
    if (!find_path(root, cf.target, conditions))
        throw DataError("counterfactual target is not in this tree");

    Row edited = row;
    for (const Split& edit : cf.edits) {
        const int col = edit.feature;
        if (edit.numeric()) {
            // satisfy every numeric condition the target path puts on this column
            double lower = -std::numeric_limits<double>::infinity();
            double upper = std::numeric_limits<double>::infinity();
            for (const Split& c : conditions) {
                if (c.feature != col || !c.numeric()) continue;
                if (c.relation == Relation::le)
                    upper = std::min(upper, c.threshold);
                else
                    lower = std::max(lower, c.threshold);
            }
            if (!(lower < upper))
                throw DataError("contradictory numeric conditions on " +
                                ds.schema().at(col).name);
            edited.cells[col] = std::isfinite(upper) ? upper : lower + 1.0;
        } else {
            std::string required;
            std::vector<std::string> forbidden;
            for (const Split& c : conditions) {
                if (c.feature != col || c.numeric()) continue;
                if (c.relation == Relation::eq)
                    required = c.value;
                else
                    forbidden.push_back(c.value);
            }
            auto allowed = [&](const std::string& v) {
                return std::find(forbidden.begin(), forbidden.end(), v) == forbidden.end();
            };
            if (!required.empty()) {
                edited.cells[col] = required;
            } else if (is_missing(edited.cells[col]) || !allowed(symbol(edited.cells[col]))) {
                bool done = false;
                for (const auto& [v, count] : ds.sym_stats(col).counts) {
                    if (allowed(v)) {
                        edited.cells[col] = v;
                        done = true;
                        break;
                    }
                }
                if (!done)
                    throw DataError("no admissible symbol for " + ds.schema().at(col).name);
            }
        }
    }
    return edited;
}

FeatureSelection select_features(const Dataset& ds, std::vector<Row> pool, Rng& rng,
                                 const GrowOptions& options,
                                 std::optional<BudgetPolicy> policy) {
    const BudgetPolicy budget =
        policy ? *policy : BudgetPolicy::feature_selection(static_cast<long>(pool.size()));
    const GoalStats stats = pool_goal_stats(ds, pool, options.metric);
    if (stats.degenerate())
        throw DegenerateError("pool objective median equals its minimum");

    LearnState st = active_learn(ds, std::move(pool), budget, rng, options.metric);
    const auto tree = grow_tree(st.labeled_rows(), ds, stats, options);
    const FeatureImportance mdi = mdi_importance(*tree, ds);

    FeatureSelection out;
    out.labels_spent = st.labels_spent;
    for (int col : mdi.ranking(ds)) {
        if (mdi.scores[col] > 0.0) out.ranked.emplace_back(col, mdi.scores[col]);
    }
    out.k = static_cast<long>(out.ranked.size());
    return out;
}

}  // namespace ezr
