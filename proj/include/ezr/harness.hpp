#pragma once

#include <cstdint>
#include <map>

#include "ezr/active.hpp"

namespace ezr {

struct ExperimentConfig {
    long repeats = 20;
    double train_fraction = 0.8;
    BudgetPolicy policy;
    Metric metric = Metric::d2h;
    std::uint64_t seed = 1;
    std::string reference = "oracle";  // denominator of the relative score
    int jobs = 1;
};

struct RepeatRecord {
    long repeat = 0;
    std::string treatment;  // "ezr", "asis", "oracle"
    double objective = 0.0;
    double win = 0.0;
    long labels = 0;
};

struct ExperimentReport {
    std::string dataset;
    ExperimentConfig config;
    long rows = 0;
    long x_cols = 0;
    long y_cols = 0;
    long resolved_stop = 0;
    std::vector<RepeatRecord> records;
    bool degenerate = false;
    std::string note;

    std::map<std::string, double> median_win() const;
    std::map<std::string, double> median_objective() const;
    std::map<std::string, long> median_labels() const;
    double relative_score() const;  // 100 * win(ezr) / win(reference)

    std::string to_text() const;
    std::string to_records() const;  // line-delimited JSON, same rounding as text
};

// uniform pick; costs exactly one label
std::size_t random_baseline(const std::vector<Row>& pool, Rng& rng);

// ground-truth argmin of the objective, ties to the lowest index; its labels
// are charged to the harness, not an optimizer
std::size_t exhaustive_oracle(const Dataset& ds, const std::vector<Row>& pool,
                              Metric metric = Metric::d2h);

// Seeded repeats of shuffle and 80/20 split, then three treatments scored
// against the test pool: the two-stage optimizer (learns on train, verifies
// its top test picks), a one-label random pick, and the exhaustive oracle.
// Pools whose objective median equals the minimum are skipped with a note,
// since the win rescaling is undefined there.
ExperimentReport run_experiment(const Dataset& ds, const ExperimentConfig& config);

}  // namespace ezr
