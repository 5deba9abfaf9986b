// ezr: label-efficient multi-objective optimization over MOOT-style CSVs,
// with explanation trees, feature importance, and counterfactual what-ifs.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ezr/explain.hpp"
#include "ezr/harness.hpp"

namespace {

using namespace ezr;

struct Common {
    std::string file;
    std::uint64_t seed = 1;
    long budget = 0;  // 0 picks the default policy for the dataset
    long check = 10;
    long min_leaf = 2;
    std::string metric = "d2h";
    std::string format = "text";
};

void add_common(CLI::App* cmd, Common& options) {
    cmd->add_option("-f,--file", options.file, "MOOT-convention CSV")->required();
    cmd->add_option("--seed", options.seed, "random seed")->envname("EZR_SEED");
    cmd->add_option("--metric", options.metric, "objective: d2h or chebyshev")
        ->check(CLI::IsMember({"d2h", "chebyshev"}));
    cmd->add_option("--format", options.format, "output: text or records")
        ->check(CLI::IsMember({"text", "records"}));
}

Metric metric_of(const Common& options) {
    return options.metric == "chebyshev" ? Metric::chebyshev : Metric::d2h;
}

std::vector<Row> usable_pool(const Dataset& ds) {
    std::vector<Row> pool;
    for (const Row& row : ds.rows())
        if (ds.goals_complete(row)) pool.push_back(row);
    if (pool.empty()) throw DataError("no rows with complete goal cells");
    return pool;
}

BudgetPolicy policy_for(const Dataset& ds, const Common& options, long basis) {
    BudgetPolicy policy;
    if (options.budget > 0)
        policy.stop = options.budget;
    else
        policy = BudgetPolicy::pick(ds).resolved(basis);
    policy.check_budget = options.check;
    return policy;
}

std::string row_csv(const Row& row) {
    std::string out;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
        if (i) out += ",";
        const Value& cell = row.cells[i];
        if (is_missing(cell)) {
            out += "?";
        } else if (is_number(cell)) {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.8g", number(cell));
            out += buf;
        } else {
            out += symbol(cell);
        }
    }
    return out;
}

nlohmann::ordered_json row_json(const Row& row, const Dataset& ds) {
    nlohmann::ordered_json out;
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
        const Value& cell = row.cells[i];
        const std::string& name = ds.schema()[i].name;
        if (is_missing(cell))
            out[name] = nullptr;
        else if (is_number(cell))
            out[name] = number(cell);
        else
            out[name] = symbol(cell);
    }
    return out;
}

int run_optimize(const Common& options) {
    const Dataset ds = Dataset::load_file(options.file);
    const Metric metric = metric_of(options);
    std::vector<Row> pool = usable_pool(ds);
    const GoalStats stats = pool_goal_stats(ds, pool, metric);
    if (stats.degenerate())
        throw DegenerateError("pool objective median equals its minimum");

    const BudgetPolicy policy = policy_for(ds, options, static_cast<long>(pool.size()));
    Rng rng(options.seed);
    OptimizeResult result = two_stage_optimize(ds, std::move(pool), policy, rng, metric);
    const Row& selected = result.state.pool[result.selected];
    const double objective = result.state.scores[result.selected];
    const double score = win(objective, stats);

    if (options.format == "records") {
        nlohmann::ordered_json j;
        j["selected"] = row_json(selected, ds);
        j["objective"] = objective;
        j["win"] = score;
        j["labels_spent"] = result.labels_spent;
        std::cout << j.dump() << "\n";
        return 0;
    }
    std::cout << "selected: " << row_csv(selected) << "\n";
    std::cout << "goals:";
    for (int col : ds.goal_columns()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, " %s=%.8g", ds.schema()[col].name.c_str(),
                      number(selected.cells[col]));
        std::cout << buf;
    }
    std::printf("\n%s: %.4f\nwin: %.1f\nlabels spent: %ld\n", options.metric.c_str(),
                objective, score, result.labels_spent);
    return 0;
}

// Label a small sample by active learning and grow the explanation tree over
// it. Files too small to warm-start are labeled outright.
std::unique_ptr<TreeNode> trained_tree(const Dataset& ds, const Common& options,
                                       const GoalStats& stats,
                                       std::vector<Row>* labeled_out) {
    std::vector<Row> pool = usable_pool(ds);
    const Metric metric = metric_of(options);
    std::vector<Row> sample;
    BudgetPolicy policy = policy_for(ds, options, static_cast<long>(pool.size()));
    if (static_cast<long>(pool.size()) <= policy.warm_start) {
        for (Row& row : pool) row.labeled = true;
        sample = std::move(pool);
    } else {
        policy.check_budget = 0;
        policy.stop = std::min(policy.stop, static_cast<long>(pool.size()));
        Rng rng(options.seed);
        LearnState st = active_learn(ds, std::move(pool), policy, rng, metric);
        sample = st.labeled_rows();
    }
    GrowOptions grow;
    grow.min_leaf = options.min_leaf;
    grow.metric = metric;
    auto tree = grow_tree(sample, ds, stats, grow);
    if (labeled_out) *labeled_out = std::move(sample);
    return tree;
}

int run_tree(const Common& options, const std::string& export_path) {
    const Dataset ds = Dataset::load_file(options.file);
    const GoalStats stats = pool_goal_stats(ds, usable_pool(ds), metric_of(options));
    if (stats.degenerate())
        throw DegenerateError("pool objective median equals its minimum");
    const auto tree = trained_tree(ds, options, stats, nullptr);
    if (!export_path.empty()) {
        std::ofstream out(export_path);
        if (!out) throw DataError("cannot write " + export_path);
        out << tree_to_json(*tree, ds).dump(2) << "\n";
    }
    if (options.format == "records")
        std::cout << tree_to_json(*tree, ds).dump() << "\n";
    else
        std::cout << render_tree(*tree, ds);
    return 0;
}

int run_importance(const Common& options, const std::string& method, long repeats) {
    const Dataset ds = Dataset::load_file(options.file);
    const GoalStats stats = pool_goal_stats(ds, usable_pool(ds), metric_of(options));
    if (stats.degenerate())
        throw DegenerateError("pool objective median equals its minimum");
    std::vector<Row> labeled;
    const auto tree = trained_tree(ds, options, stats, &labeled);

    std::vector<std::pair<std::string, FeatureImportance>> tables;
    if (method == "mdi" || method == "both")
        tables.emplace_back("mdi", mdi_importance(*tree, ds));
    if (method == "permutation" || method == "both") {
        Rng rng(options.seed + 1);
        tables.emplace_back("permutation",
                            permutation_importance(*tree, labeled, ds, repeats, rng,
                                                   metric_of(options)));
    }
    for (const auto& [name, table] : tables) {
        const auto order = table.ranking(ds);
        if (options.format == "records") {
            for (std::size_t rank = 0; rank < order.size(); ++rank) {
                nlohmann::ordered_json j;
                j["method"] = name;
                j["feature"] = ds.schema()[order[rank]].name;
                j["score"] = table.scores[order[rank]];
                j["rank"] = rank + 1;
                std::cout << j.dump() << "\n";
            }
            continue;
        }
        std::printf("%s importance\n%-16s %12s %6s\n", name.c_str(), "feature", "score",
                    "rank");
        for (std::size_t rank = 0; rank < order.size(); ++rank)
            std::printf("%-16s %12.6f %6zu\n", ds.schema()[order[rank]].name.c_str(),
                        table.scores[order[rank]], rank + 1);
        std::printf("\n");
    }
    return 0;
}

Row instance_row(const Dataset& ds, const std::string& instance_path, long row_index) {
    if (!instance_path.empty()) {
        const Dataset inst = Dataset::load_file(instance_path);
        if (inst.n_cols() != ds.n_cols())
            throw DataError("instance schema does not match the dataset");
        for (std::size_t c = 0; c < ds.n_cols(); ++c)
            if (inst.schema()[c].name != ds.schema()[c].name)
                throw DataError("instance schema does not match the dataset");
        if (inst.n_rows() < 1) throw DataError("instance file has no rows");
        return inst.rows().front();
    }
    if (row_index < 0 || row_index >= static_cast<long>(ds.n_rows()))
        throw DataError("row index out of range");
    return ds.rows()[static_cast<std::size_t>(row_index)];
}

int run_explain(const Common& options, const std::string& tree_path,
                const std::string& instance_path, long row_index, bool nearest) {
    const Dataset ds = Dataset::load_file(options.file);
    std::unique_ptr<TreeNode> tree;
    if (!tree_path.empty()) {
        std::ifstream in(tree_path);
        if (!in) throw DataError("cannot open tree file: " + tree_path);
        tree = tree_from_json(nlohmann::json::parse(in), ds);
    } else {
        const GoalStats stats = pool_goal_stats(ds, usable_pool(ds), metric_of(options));
        if (stats.degenerate())
            throw DegenerateError("pool objective median equals its minimum");
        tree = trained_tree(ds, options, stats, nullptr);
    }

    const Row row = instance_row(ds, instance_path, row_index);
    const DecisionPath path = route(*tree, row);
    const auto what_if = counterfactual(*tree, row, nearest);

    if (options.format == "records") {
        nlohmann::ordered_json j;
        j["instance"] = row_json(row, ds);
        j["path"] = nlohmann::ordered_json::array();
        for (const PathStep& step : path.steps) j["path"].push_back(step.taken.text(ds));
        j["leaf_win"] = path.terminal->win_score;
        j["leaf_n"] = path.terminal->n;
        if (what_if) {
            j["counterfactual"] = nlohmann::ordered_json::array();
            for (const Split& edit : what_if->edits)
                j["counterfactual"].push_back(edit.text(ds));
            j["win_gain"] = what_if->win_gain;
            j["target_win"] = what_if->target->win_score;
        }
        std::cout << j.dump() << "\n";
        return 0;
    }
    std::cout << render_path(*tree, path, ds);
    if (what_if) {
        std::printf("\ncounterfactual: reach win %.0f (n=%ld) via\n",
                    what_if->target->win_score, what_if->target->n);
        for (const Split& edit : what_if->edits)
            std::cout << "  " << edit.text(ds) << "\n";
        std::printf("win gain: %+.0f\n", what_if->win_gain);
    } else {
        std::cout << "\ncounterfactual: none (already in the target leaf)\n";
    }
    return 0;
}

int run_select_features(const Common& options) {
    const Dataset ds = Dataset::load_file(options.file);
    std::vector<Row> pool = usable_pool(ds);
    std::optional<BudgetPolicy> policy;
    if (options.budget > 0) {
        BudgetPolicy p;
        p.stop = options.budget;
        p.check_budget = 0;
        policy = p;
    }
    GrowOptions grow;
    grow.min_leaf = options.min_leaf;
    grow.metric = metric_of(options);
    Rng rng(options.seed);
    const FeatureSelection selection =
        select_features(ds, std::move(pool), rng, grow, policy);

    if (options.format == "records") {
        for (std::size_t rank = 0; rank < selection.ranked.size(); ++rank) {
            nlohmann::ordered_json j;
            j["feature"] = ds.schema()[selection.ranked[rank].first].name;
            j["score"] = selection.ranked[rank].second;
            j["rank"] = rank + 1;
            j["k"] = selection.k;
            std::cout << j.dump() << "\n";
        }
    } else {
        std::printf("k: %ld  (labels spent: %ld)\n", selection.k, selection.labels_spent);
        std::printf("%4s %-16s %12s\n", "rank", "feature", "mdi");
        for (std::size_t rank = 0; rank < selection.ranked.size(); ++rank)
            std::printf("%4zu %-16s %12.6f\n", rank + 1,
                        ds.schema()[selection.ranked[rank].first].name.c_str(),
                        selection.ranked[rank].second);
    }
    return selection.k == 0 ? 3 : 0;
}

int run_bench(const Common& options, long repeats, double train_fraction,
              const std::string& reference, int jobs) {
    const Dataset ds = Dataset::load_file(options.file);
    ExperimentConfig config;
    config.repeats = repeats;
    config.train_fraction = train_fraction;
    config.metric = metric_of(options);
    config.seed = options.seed;
    config.reference = reference;
    config.jobs = jobs;
    if (options.budget > 0)
        config.policy.stop = options.budget;
    else
        config.policy = BudgetPolicy::pick(ds);
    config.policy.check_budget = options.check;

    ExperimentReport report = run_experiment(ds, config);
    report.dataset = options.file;
    std::cout << (options.format == "records" ? report.to_records() : report.to_text());
    return report.degenerate ? 3 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"label-efficient multi-objective optimization with explanations"};
    app.require_subcommand(1);

    Common optimize_opts, tree_opts, importance_opts, explain_opts, select_opts,
        bench_opts;

    auto* optimize = app.add_subcommand("optimize", "pick a strong row under a budget");
    add_common(optimize, optimize_opts);
    optimize->add_option("--budget", optimize_opts.budget, "stage-one labels (0 = auto)");
    optimize->add_option("--check", optimize_opts.check, "stage-two labels");

    auto* tree = app.add_subcommand("tree", "print the explanation tree");
    add_common(tree, tree_opts);
    tree->add_option("--budget", tree_opts.budget, "labels to spend (0 = auto)");
    tree->add_option("--min-leaf", tree_opts.min_leaf, "smallest leaf size");
    std::string export_path;
    tree->add_option("--export", export_path, "also write the tree as JSON records");

    auto* importance = app.add_subcommand("importance", "feature importance tables");
    add_common(importance, importance_opts);
    importance->add_option("--budget", importance_opts.budget, "labels to spend (0 = auto)");
    importance->add_option("--min-leaf", importance_opts.min_leaf, "smallest leaf size");
    std::string method = "both";
    long perm_repeats = 5;
    importance->add_option("--method", method, "mdi, permutation, or both")
        ->check(CLI::IsMember({"mdi", "permutation", "both"}));
    importance->add_option("--repeats", perm_repeats, "permutation repeats");

    auto* explain = app.add_subcommand("explain", "decision path and counterfactual");
    add_common(explain, explain_opts);
    explain->add_option("--budget", explain_opts.budget, "labels to spend (0 = auto)");
    explain->add_option("--min-leaf", explain_opts.min_leaf, "smallest leaf size");
    std::string tree_path, instance_path;
    long row_index = -1;
    bool nearest = false;
    explain->add_option("--tree", tree_path, "use this exported tree instead of training");
    explain->add_option("--row", row_index, "0-based data row to explain");
    explain->add_option("--instance", instance_path, "one-row CSV with the same header");
    explain->add_flag("--nearest", nearest, "target the nearest better leaf");

    auto* select = app.add_subcommand("select-features", "budgeted feature selection");
    add_common(select, select_opts);
    select->add_option("--budget", select_opts.budget,
                       "labels to spend (0 = min(150, 40% of rows))");
    select->add_option("--min-leaf", select_opts.min_leaf, "smallest leaf size");

    auto* bench = app.add_subcommand("bench", "seeded repeats against baselines");
    add_common(bench, bench_opts);
    bench->add_option("--budget", bench_opts.budget, "stage-one labels (0 = auto)");
    bench->add_option("--check", bench_opts.check, "stage-two labels");
    long repeats = 20;
    double train_fraction = 0.8;
    std::string reference = "oracle";
    int jobs = 1;
    bench->add_option("--repeats", repeats, "number of seeded repeats");
    bench->add_option("--train", train_fraction, "train fraction of the split");
    bench->add_option("--reference", reference, "relative-score denominator treatment");
    bench->add_option("--jobs", jobs, "parallel repeats");

    auto* samples = app.add_subcommand("samples", "sample-size calculators");
    double confidence = -1.0, probability = -1.0;
    long trials = -1, pivot_pool = -1;
    samples->add_option("--confidence", confidence, "target confidence in (0,1)");
    samples->add_option("--p", probability, "event probability in (0,1)");
    samples->add_option("--n", trials, "trials already made (prints confidence)");
    samples->add_option("--pivot", pivot_pool, "pool size (prints query estimate)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return 1;
    }

    try {
        if (optimize->parsed()) return run_optimize(optimize_opts);
        if (tree->parsed()) return run_tree(tree_opts, export_path);
        if (importance->parsed())
            return run_importance(importance_opts, method, perm_repeats);
        if (explain->parsed()) {
            if (instance_path.empty() && row_index < 0)
                throw std::invalid_argument("explain needs --row or --instance");
            return run_explain(explain_opts, tree_path, instance_path, row_index, nearest);
        }
        if (select->parsed()) return run_select_features(select_opts);
        if (bench->parsed())
            return run_bench(bench_opts, repeats, train_fraction, reference, jobs);
        if (samples->parsed()) {
            if (pivot_pool >= 0) {
                std::printf("%ld\n", pivot_query_estimate(pivot_pool));
            } else if (trials >= 0) {
                if (probability < 0) throw std::invalid_argument("--n needs --p as well");
                std::printf("%.6g\n", confidence_of(trials, probability));
            } else {
                if (confidence < 0 || probability < 0)
                    throw std::invalid_argument("samples needs --confidence and --p");
                std::printf("%ld\n", samples_required(confidence, probability));
            }
            return 0;
        }
    } catch (const DegenerateError& e) {
        std::cerr << "ezr: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "ezr: " << e.what() << "\n";
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "ezr: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ezr: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
