#include "ezr/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <sstream>

#include <json.hpp>

namespace ezr {

namespace {

double round_to(double v, int decimals) {
    const double scale = std::pow(10.0, decimals);
    return std::round(v * scale) / scale;
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

template <class T>
std::map<std::string, double> aggregate(const std::vector<RepeatRecord>& records,
                                        T RepeatRecord::* field) {
    std::map<std::string, std::vector<double>> grouped;
    for (const RepeatRecord& r : records)
        grouped[r.treatment].push_back(static_cast<double>(r.*field));
    std::map<std::string, double> out;
    for (auto& [treatment, values] : grouped)
        out[treatment] = median_of(std::move(values));
    return out;
}

}  // namespace

std::map<std::string, double> ExperimentReport::median_win() const {
    return aggregate(records, &RepeatRecord::win);
}

std::map<std::string, double> ExperimentReport::median_objective() const {
    return aggregate(records, &RepeatRecord::objective);
}

std::map<std::string, long> ExperimentReport::median_labels() const {
    std::map<std::string, long> out;
    for (const auto& [treatment, v] : aggregate(records, &RepeatRecord::labels))
        out[treatment] = std::lround(v);
    return out;
}

double ExperimentReport::relative_score() const {
    const auto wins = median_win();
    const auto it = wins.find(config.reference);
    const auto ezr_it = wins.find("ezr");
    if (it == wins.end() || ezr_it == wins.end() || !(it->second > 0.0))
        return std::numeric_limits<double>::quiet_NaN();
    return 100.0 * ezr_it->second / it->second;
}

std::string ExperimentReport::to_text() const {
    std::ostringstream out;
    char buf[160];
    out << "data: " << dataset << "\n";
    std::snprintf(buf, sizeof buf, "rows: %ld  x: %ld  y: %ld  metric: %s\n", rows,
                  x_cols, y_cols, config.metric == Metric::d2h ? "d2h" : "chebyshev");
    out << buf;
    std::snprintf(buf, sizeof buf,
                  "repeats: %ld  seed: %llu  budget: %ld+%ld  train_fraction: %.2f\n",
                  config.repeats, static_cast<unsigned long long>(config.seed),
                  resolved_stop, config.policy.check_budget, config.train_fraction);
    out << buf;
    if (degenerate) {
        out << "skipped: " << note << "\n";
        return out.str();
    }
    out << "\n";
    std::snprintf(buf, sizeof buf, "%-10s %10s %12s %8s\n", "treatment", "median_win",
                  "median_d2h", "labels");
    out << buf;
    const auto wins = median_win();
    const auto objectives = median_objective();
    const auto labels = median_labels();
    for (const char* treatment : {"oracle", "ezr", "asis"}) {
        if (!wins.count(treatment)) continue;
        std::snprintf(buf, sizeof buf, "%-10s %10.1f %12.4f %8ld\n", treatment,
                      wins.at(treatment), objectives.at(treatment), labels.at(treatment));
        out << buf;
    }
    const double rel = relative_score();
    if (!std::isnan(rel)) {
        std::snprintf(buf, sizeof buf, "\nrelative score (ezr vs %s): %.1f\n",
                      config.reference.c_str(), rel);
        out << buf;
    }
    if (!note.empty()) out << "note: " << note << "\n";
    out << "note: oracle labels are charged to the harness, not the optimizer\n";
    return out.str();
}

std::string ExperimentReport::to_records() const {
    std::ostringstream out;
    if (degenerate) {
        nlohmann::ordered_json j;
        j["dataset"] = dataset;
        j["degenerate"] = true;
        j["note"] = note;
        out << j.dump() << "\n";
        return out.str();
    }
    for (const RepeatRecord& r : records) {
        nlohmann::ordered_json j;
        j["repeat"] = r.repeat;
        j["treatment"] = r.treatment;
        j["win"] = round_to(r.win, 1);
        j["d2h"] = round_to(r.objective, 4);
        j["labels"] = r.labels;
        out << j.dump() << "\n";
    }
    const auto wins = median_win();
    const auto objectives = median_objective();
    const auto labels = median_labels();
    for (const auto& [treatment, w] : wins) {
        nlohmann::ordered_json j;
        j["treatment"] = treatment;
        j["median_win"] = round_to(w, 1);
        j["median_d2h"] = round_to(objectives.at(treatment), 4);
        j["median_labels"] = labels.at(treatment);
        out << j.dump() << "\n";
    }
    const double rel = relative_score();
    if (!std::isnan(rel)) {
        nlohmann::ordered_json j;
        j["relative_score"] = round_to(rel, 1);
        j["reference"] = config.reference;
        out << j.dump() << "\n";
    }
    return out.str();
}

std::size_t random_baseline(const std::vector<Row>& pool, Rng& rng) {
    if (pool.empty()) throw DataError("random pick from an empty pool");
    return rng.below(pool.size());
}

std::size_t exhaustive_oracle(const Dataset& ds, const std::vector<Row>& pool,
                              Metric metric) {
    if (pool.empty()) throw DataError("oracle scan of an empty pool");
    std::size_t best = 0;
    double best_score = ds.true_score(pool[0], metric);
    for (std::size_t i = 1; i < pool.size(); ++i) {
        const double s = ds.true_score(pool[i], metric);
        if (s < best_score) {
            best = i;
            best_score = s;
        }
    }
    return best;
}

namespace {

struct RepeatOutcome {
    std::vector<RepeatRecord> records;
    bool degenerate = false;
};

// Stage one learns from the train split; stage two lets the learned model
// nominate test configurations and pays to verify the top check_budget of
// them. The treatment's answer is the best verified test row.
std::pair<double, long> ezr_treatment(const Dataset& ds, const BudgetPolicy& policy,
                                      std::vector<Row> train, std::vector<Row>& test,
                                      Rng& rng, Metric metric) {
    BudgetPolicy stage_one = policy;
    stage_one.check_budget = 0;
    LearnState st = active_learn(ds, std::move(train), stage_one, rng, metric);

    std::vector<std::size_t> order(test.size());
    std::vector<double> acquisition(test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
        order[i] = i;
        acquisition[i] = xploit(test[i], st.best, st.rest, ds).score;
    }
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (acquisition[a] != acquisition[b]) return acquisition[a] > acquisition[b];
        return a < b;
    });

    const long check = std::min<long>(policy.check_budget, static_cast<long>(test.size()));
    double best = std::numeric_limits<double>::infinity();
    for (long i = 0; i < check; ++i) {
        Row& candidate = test[order[static_cast<std::size_t>(i)]];
        candidate.labeled = true;
        best = std::min(best, ds.score(candidate, metric));
    }
    return {best, st.labels_spent + check};
}

RepeatOutcome run_repeat(const Dataset& ds, const ExperimentConfig& config,
                         const std::vector<Row>& base_rows, long repeat) {
    Rng rng(config.seed + static_cast<std::uint64_t>(repeat));
    std::vector<Row> rows = base_rows;
    rng.shuffle(rows);

    const long train_n = static_cast<long>(
        std::floor(config.train_fraction * static_cast<double>(rows.size())));
    std::vector<Row> train(rows.begin(), rows.begin() + train_n);
    std::vector<Row> test(rows.begin() + train_n, rows.end());

    const GoalStats stats = pool_goal_stats(ds, test, config.metric);
    RepeatOutcome outcome;
    if (stats.degenerate()) {
        outcome.degenerate = true;
        return outcome;
    }
    const BudgetPolicy policy = config.policy.resolved(train_n);

    const auto [ezr_objective, ezr_labels] =
        ezr_treatment(ds, policy, std::move(train), test, rng, config.metric);
    outcome.records.push_back(
        {repeat, "ezr", ezr_objective, win(ezr_objective, stats), ezr_labels});

    const std::size_t pick = random_baseline(test, rng);
    const double asis_objective = ds.true_score(test[pick], config.metric);
    outcome.records.push_back(
        {repeat, "asis", asis_objective, win(asis_objective, stats), 1});

    const std::size_t best = exhaustive_oracle(ds, test, config.metric);
    const double oracle_objective = ds.true_score(test[best], config.metric);
    outcome.records.push_back({repeat, "oracle", oracle_objective,
                               win(oracle_objective, stats),
                               static_cast<long>(test.size())});
    return outcome;
}

}  // namespace

ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& config) {
    if (config.repeats < 1) throw DataError("need at least one repeat");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw DataError("train fraction must lie inside (0, 1)");

    ExperimentReport report;
    report.config = config;
    report.rows = static_cast<long>(ds.n_rows());
    for (const ColumnSpec& spec : ds.schema())
        report.x_cols += spec.role != Role::goal ? 1 : 0;
    report.y_cols = static_cast<long>(ds.goal_columns().size());

    std::vector<Row> base_rows;
    base_rows.reserve(ds.n_rows());
    long dropped = 0;
    for (const Row& row : ds.rows()) {
        if (ds.goals_complete(row))
            base_rows.push_back(row);
        else
            ++dropped;
    }
    if (dropped > 0)
        report.note = std::to_string(dropped) + " rows dropped for missing goal cells";

    const long train_n = static_cast<long>(
        std::floor(config.train_fraction * static_cast<double>(base_rows.size())));
    const long test_n = static_cast<long>(base_rows.size()) - train_n;
    report.resolved_stop = config.policy.resolved(train_n).stop;
    if (test_n < 1) throw DataError("empty test pool");
    if (train_n < config.policy.warm_start + 1)
        throw DataError("train pool too small for the warm start");
    if (report.resolved_stop > train_n)
        throw DataError("budget exceeds the train pool size");

    std::vector<RepeatOutcome> outcomes(static_cast<std::size_t>(config.repeats));
    const int jobs = std::max(1, config.jobs);
    if (jobs == 1) {
        for (long i = 0; i < config.repeats; ++i)
            outcomes[static_cast<std::size_t>(i)] = run_repeat(ds, config, base_rows, i);
    } else {
        std::vector<std::future<RepeatOutcome>> futures;
        futures.reserve(static_cast<std::size_t>(config.repeats));
        for (long i = 0; i < config.repeats; ++i)
            futures.push_back(std::async(std::launch::async, [&, i] {
                return run_repeat(ds, config, base_rows, i);
            }));
        for (long i = 0; i < config.repeats; ++i)
            outcomes[static_cast<std::size_t>(i)] = futures[static_cast<std::size_t>(i)].get();
    }

    for (long i = 0; i < config.repeats; ++i) {
        RepeatOutcome& outcome = outcomes[static_cast<std::size_t>(i)];
        if (outcome.degenerate) {
            report.degenerate = true;
            report.records.clear();
            report.note = "test pool objective median equals its minimum (repeat " +
                          std::to_string(i) + "); win is undefined";
            return report;
        }
        for (RepeatRecord& r : outcome.records) report.records.push_back(std::move(r));
    }
    return report;
}

}  // namespace ezr
