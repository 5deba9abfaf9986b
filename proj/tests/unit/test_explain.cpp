#include <doctest.h>

#include <fstream>
#include <functional>

#include "ezr/explain.hpp"
#include "helpers.hpp"

using namespace ezr;
using test::load_csv;

namespace {

std::unique_ptr<TreeNode> leaf_node(long n, double impurity, double win, double median) {
    auto node = std::make_unique<TreeNode>();
    node->n = n;
    node->impurity = impurity;
    node->win_score = win;
    node->median_score = median;
    return node;
}

double sum_weighted_children(const TreeNode& node) {
    if (node.is_leaf()) return 0.0;
    const double nl = static_cast<double>(node.left->n);
    const double nr = static_cast<double>(node.right->n);
    return (nl * node.left->impurity + nr * node.right->impurity) / (nl + nr) +
           sum_weighted_children(*node.left) + sum_weighted_children(*node.right);
}

}  // namespace

TEST_CASE("single split: the root feature takes all the credit") {
    const Dataset ds = load_csv("A,B,G-\n1,5,0\n2,5,0\n9,5,1\n10,5,1\n");
    const auto tree = grow_tree(test::labeled_copy(ds), ds, GoalStats{0.0, 0.5});
    REQUIRE(!tree->is_leaf());
    const FeatureImportance mdi = mdi_importance(*tree, ds);
    const double nl = static_cast<double>(tree->left->n);
    const double nr = static_cast<double>(tree->right->n);
    const double expected =
        (nl * tree->left->impurity + nr * tree->right->impurity) / (nl + nr);
    CHECK(mdi.scores[0] == doctest::Approx(expected));
    CHECK(mdi.scores[1] == 0.0);  // B never splits
    CHECK(mdi.ranking(ds).front() == 0);
}

TEST_CASE("hand-built two-level tree sums by hand") {
    // root splits on column 0; its left child splits on column 1
    auto root = leaf_node(8, 0.5, 0, 0.5);
    Split top;
    top.feature = 0;
    top.relation = Relation::le;
    top.threshold = 1.0;
    root->split = top;
    root->left = leaf_node(4, 0.2, 10, 0.4);
    root->right = leaf_node(4, 0.4, -10, 0.6);
    Split inner;
    inner.feature = 1;
    inner.relation = Relation::le;
    inner.threshold = 2.0;
    root->left->split = inner;
    root->left->left = leaf_node(2, 0.1, 20, 0.3);
    root->left->right = leaf_node(2, 0.3, 5, 0.5);

    const Dataset ds = load_csv("A,B,G-\n1,1,0\n2,2,1\n");
    const FeatureImportance mdi = mdi_importance(*root, ds);
    CHECK(mdi.scores[0] == doctest::Approx((4.0 * 0.2 + 4.0 * 0.4) / 8.0));  // 0.3
    CHECK(mdi.scores[1] == doctest::Approx((2.0 * 0.1 + 2.0 * 0.3) / 4.0));  // 0.2

    FeatureImportance unit = mdi;
    unit.to_unit_sum();
    CHECK(unit.scores[0] + unit.scores[1] == doctest::Approx(1.0));
}

TEST_CASE("importance totals equal the per-node weighted impurities") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset ds = test::load_csv(test::random_csv(40, 2, seed + 900));
        const std::vector<Row> rows = test::labeled_copy(ds);
        const auto tree = grow_tree(rows, ds, pool_goal_stats(ds, rows, Metric::d2h));
        const FeatureImportance mdi = mdi_importance(*tree, ds);
        double total = 0.0;
        for (double s : mdi.scores) total += s;
        CHECK(total == doctest::Approx(sum_weighted_children(*tree)).epsilon(1e-9));
    }
}

TEST_CASE("mdi ranking survives power-of-two rescaling") {
    std::ostringstream plain, scaled;
    Rng rng(13);
    plain << "A,B,G-\n";
    scaled << "A,B,G-\n";
    for (int i = 0; i < 40; ++i) {
        const double a = rng.uniform() * 9, b = rng.uniform() * 2;
        const double g = a + 0.3 * b + rng.uniform() * 0.5;
        plain << a << "," << b << "," << g << "\n";
        scaled << a * 4 << "," << b * 0.25 << "," << g << "\n";
    }
    const Dataset p = test::load_csv(plain.str());
    const Dataset s = test::load_csv(scaled.str());
    const auto pt = grow_tree(test::labeled_copy(p), p,
                              pool_goal_stats(p, p.rows(), Metric::d2h));
    const auto st = grow_tree(test::labeled_copy(s), s,
                              pool_goal_stats(s, s.rows(), Metric::d2h));
    const auto pm = mdi_importance(*pt, p);
    const auto sm = mdi_importance(*st, s);
    for (int col : p.x_columns())
        CHECK(pm.scores[col] == doctest::Approx(sm.scores[col]).epsilon(1e-12));
    CHECK(pm.ranking(p) == sm.ranking(s));
}

TEST_CASE("permuting a constant column scores exactly zero") {
    const Dataset ds = load_csv("A,C,G-\n1,7,0\n2,7,0\n9,7,1\n10,7,1\n5,7,0.4\n6,7,0.6\n");
    const std::vector<Row> rows = test::labeled_copy(ds);
    const auto tree = grow_tree(rows, ds, GoalStats{0.0, 0.5});
    Rng rng(3);
    const FeatureImportance scores = permutation_importance(*tree, rows, ds, 4, rng);
    CHECK(scores.scores[1] == 0.0);
}

TEST_CASE("a feature outside every split scores zero under any seed") {
    // B varies, but the only split is on A, so shuffling B moves nothing
    const Dataset ds = load_csv("A,B,G-\n1,9,0\n2,4,0\n9,7,1\n10,1,1\n5,2,0.4\n6,8,0.6\n");
    const std::vector<Row> rows = test::labeled_copy(ds);
    GrowOptions options;
    options.min_leaf = 3;
    const auto tree = grow_tree(rows, ds, GoalStats{0.0, 0.5}, options);
    REQUIRE(!tree->is_leaf());
    REQUIRE(tree->left->is_leaf());
    REQUIRE(tree->right->is_leaf());
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        const auto scores = permutation_importance(*tree, rows, ds, 3, rng);
        CHECK(scores.scores[ds.column_index("B")] == 0.0);
    }
}

TEST_CASE("the only informative feature ranks first almost always") {
    int firsts = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset ds = test::load_csv(test::monotone_csv(64, seed + 50));
        const std::vector<Row> rows = test::labeled_copy(ds);
        const auto tree = grow_tree(rows, ds, pool_goal_stats(ds, rows, Metric::d2h));
        Rng rng(seed);
        const FeatureImportance scores = permutation_importance(*tree, rows, ds, 3, rng);
        if (scores.ranking(ds).front() == ds.column_index("Key")) ++firsts;
    }
    CHECK(firsts >= 18);
}

TEST_CASE("permutation importance is reproducible") {
    const Dataset ds = test::load_csv(test::monotone_csv(40, 77));
    const std::vector<Row> rows = test::labeled_copy(ds);
    const auto tree = grow_tree(rows, ds, pool_goal_stats(ds, rows, Metric::d2h));
    Rng a(9), b(9);
    const auto first = permutation_importance(*tree, rows, ds, 5, a);
    const auto second = permutation_importance(*tree, rows, ds, 5, b);
    CHECK(first.scores == second.scores);
    CHECK_THROWS_AS(permutation_importance(*tree, {rows[0]}, ds, 5, a), DataError);
}

TEST_CASE("counterfactual on the reference tree") {
    const Dataset ds = Dataset::load_file(test::data_file("coc_mini.csv"));
    std::ifstream in(test::data_file("cocomo_tree.json"));
    const auto tree = tree_from_json(nlohmann::json::parse(in), ds);
    const Dataset inst = Dataset::load_file(test::data_file("cocomo_instance.csv"));
    const Row& row = inst.rows().front();

    const DecisionPath path = route(*tree, row);
    CHECK(path.terminal->win_score == doctest::Approx(55.0));
    CHECK(path.terminal->n == 2);
    REQUIRE(path.steps.size() == 8);
    const char* expected[] = {"STOR <= 5", "TEAM <= 5", "TEAM <= 4", "PREC <= 5",
                              "TEAM >  1", "PVOL >  2", "PCON <= 1", "ACAP <= 4"};
    for (std::size_t i = 0; i < 8; ++i) CHECK(path.steps[i].taken.text(ds) == expected[i]);

    const auto what_if = counterfactual(*tree, row);
    REQUIRE(what_if.has_value());
    REQUIRE(what_if->edits.size() == 1);
    CHECK(what_if->edits[0].text(ds) == "ACAP >  4");
    CHECK(what_if->win_gain == doctest::Approx(21.0));
    CHECK(what_if->target->win_score == doctest::Approx(76.0));

    // the edit is executable: apply it and land in the target leaf
    const Row edited = apply_counterfactual(row, *what_if, *tree, ds);
    CHECK(route(*tree, edited).terminal == what_if->target);

    // a row already at the best leaf has nothing to change
    CHECK(!counterfactual(*tree, edited).has_value());
}

TEST_CASE("depth-one trees need exactly one edit") {
    const Dataset ds = load_csv("A,G-\n1,0\n2,0\n9,1\n10,1\n");
    const auto tree = grow_tree(test::labeled_copy(ds), ds, GoalStats{0.0, 0.5});
    const auto what_if = counterfactual(*tree, ds.rows()[3]);
    REQUIRE(what_if.has_value());
    CHECK(what_if->edits.size() == 1);
    CHECK(what_if->edits[0].feature == 0);
    CHECK(what_if->edits[0].relation == Relation::le);
}

TEST_CASE("edits are executable on random trees") {
    int exercised = 0;
    for (std::uint64_t seed = 0; seed < 15; ++seed) {
        const Dataset ds = test::load_csv(test::random_csv(50, 2, seed + 1200));
        const std::vector<Row> rows = test::labeled_copy(ds);
        const auto tree = grow_tree(rows, ds, pool_goal_stats(ds, rows, Metric::d2h));
        if (tree->is_leaf()) continue;
        Rng rng(seed);
        for (int trial = 0; trial < 10; ++trial) {
            const Row& row = rows[rng.below(rows.size())];
            for (bool nearest : {false, true}) {
                const auto what_if = counterfactual(*tree, row, nearest);
                if (!what_if) continue;
                ++exercised;
                CHECK(what_if->win_gain > 0.0);
                const Row edited = apply_counterfactual(row, *what_if, *tree, ds);
                CHECK(route(*tree, edited).terminal == what_if->target);
            }
        }
    }
    CHECK(exercised > 50);
}

TEST_CASE("nearest mode minimizes the edit count") {
    const Dataset ds = Dataset::load_file(test::data_file("coc_mini.csv"));
    std::ifstream in(test::data_file("cocomo_tree.json"));
    const auto tree = tree_from_json(nlohmann::json::parse(in), ds);
    // an instance landing deep on a weak branch: edits to the global best are
    // many, but a small change reaches some nearer better leaf
    Row row = ds.rows()[0];
    row.cells[ds.column_index("STOR")] = 6.0;  // goes straight to the -79 leaf
    const auto greedy = counterfactual(*tree, row, false);
    const auto nearest = counterfactual(*tree, row, true);
    REQUIRE(greedy.has_value());
    REQUIRE(nearest.has_value());
    CHECK(nearest->edits.size() <= greedy->edits.size());
    CHECK(nearest->win_gain > 0.0);
}

TEST_CASE("feature selection spends its budget and ranks the signal first") {
    const Dataset ds = test::load_csv(test::monotone_csv(120, 5));
    Rng rng(11);
    const FeatureSelection selection = select_features(ds, ds.rows(), rng);
    CHECK(selection.labels_spent == std::min<long>(150, std::lround(0.4 * 120)));
    CHECK(selection.k >= 1);
    CHECK(selection.k <= static_cast<long>(ds.x_columns().size()));
    CHECK(selection.ranked.front().first == ds.column_index("Key"));
    for (std::size_t i = 1; i < selection.ranked.size(); ++i)
        CHECK(selection.ranked[i - 1].second >= selection.ranked[i].second);
}
