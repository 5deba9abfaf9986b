#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>

#include <json.hpp>

#include "ezr/data.hpp"

namespace ezr {

enum class Relation { le, gt, eq, ne };

// One branch condition. Numeric features use le/gt around a threshold,
// symbolic features use eq/ne against a value.
struct Split {
    int feature = -1;
    Relation relation = Relation::le;
    double threshold = 0.0;
    std::string value;

    bool numeric() const { return relation == Relation::le || relation == Relation::gt; }
    bool matches(const Value& cell) const;  // a missing cell matches nothing
    Split flipped() const;
    std::string text(const Dataset& ds) const;  // e.g. "STOR <= 5"
};

struct TreeNode {
    // question asked at this node, in canonical le/eq form; empty on leaves
    std::optional<Split> split;
    std::unique_ptr<TreeNode> left;   // rows matching the split
    std::unique_ptr<TreeNode> right;  // rows failing it
    std::vector<std::size_t> members;  // training-row ids (grown trees only)
    long n = 0;
    double impurity = 0.0;      // standard deviation of members' objective
    double win_score = 0.0;     // win of the members' median objective
    double median_score = std::numeric_limits<double>::quiet_NaN();
    int depth = 0;

    bool is_leaf() const { return !left; }
};

struct GrowOptions {
    long min_leaf = 2;
    Metric metric = Metric::d2h;
};

// Recursively split labeled rows on the feature/threshold pair minimizing the
// size-weighted mean of the children's objective standard deviations. A node
// becomes a leaf when it is too small, no legal split exists, or the best
// split fails to reduce impurity. Rows missing the split feature stay at the
// node instead of descending.
std::unique_ptr<TreeNode> grow_tree(const std::vector<Row>& rows, const Dataset& ds,
                                    const GoalStats& stats, const GrowOptions& options = {});

struct SplitQuality {
    Split split;
    double weighted_impurity = 0.0;
};

// Best binary split of `ids` on one feature; thresholds are midpoints of
// consecutive distinct values, symbolic candidates are eq/ne per observed
// value. Returns nothing when no candidate leaves min_leaf rows on each side.
std::optional<SplitQuality> best_split(std::span<const std::size_t> ids,
                                       const std::vector<Row>& rows,
                                       const std::vector<double>& scores, int feature,
                                       const Dataset& ds, long min_leaf);

struct PathStep {
    Split taken;            // the condition of the branch entered
    const TreeNode* node;   // the child entered
};

struct DecisionPath {
    std::vector<PathStep> steps;
    const TreeNode* terminal = nullptr;  // deepest node reached
};

// Deterministic descent; a missing value at a split feature stops the walk,
// making that node the effective leaf.
DecisionPath route(const TreeNode& root, const Row& row);

// Text listing: win and n columns, "|  " indentation, " ;" on leaves.
// Children print in descending win order.
std::string render_tree(const TreeNode& root, const Dataset& ds);

// Same format, restricted to the root plus one root-to-terminal path.
std::string render_path(const TreeNode& root, const DecisionPath& path, const Dataset& ds);

// Structured form: one record per node (id, parent, split, n, win, impurity),
// in the same order the text rendering uses. Round-trips through parse_tree.
nlohmann::ordered_json tree_to_json(const TreeNode& root, const Dataset& ds);
std::unique_ptr<TreeNode> tree_from_json(const nlohmann::json& doc, const Dataset& ds);

}  // namespace ezr
