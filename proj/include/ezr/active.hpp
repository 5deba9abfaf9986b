#pragma once

#include <functional>
#include <span>

#include "ezr/data.hpp"
#include "ezr/likelihood.hpp"
#include "ezr/rng.hpp"

namespace ezr {

// Labeling budgets. Fixed mode spends a constant number of stage-one labels;
// fraction mode spends a share of the training pool (wide schemas), plus a
// constant check stage either way.
struct BudgetPolicy {
    enum class Mode { fixed, fraction };

    Mode mode = Mode::fixed;
    long stop = 50;
    long warm_start = 4;
    long check_budget = 10;
    double fraction = 0.10;

    // turn a fraction-mode policy into a concrete one for a given train size
    BudgetPolicy resolved(long train_size) const;

    static BudgetPolicy light() { return {}; }
    static BudgetPolicy heavy();
    static BudgetPolicy feature_selection(long train_size);
    // wide schemas (>= 20 learnable columns) get the fraction policy
    static BudgetPolicy pick(const Dataset& ds);
};

// Working state of the budgeted search. `pool` holds this run's private row
// copies; all other members index into it. `ranked` lists the labeled rows by
// ascending objective; the first `cut` are the elite, the remainder the rest.
struct LearnState {
    std::vector<Row> pool;
    std::vector<double> scores;    // objective per row, NaN until labeled
    std::vector<std::size_t> ranked;
    std::size_t cut = 0;
    std::vector<std::size_t> todo;
    std::vector<std::size_t> archive;  // every labeled row, in labeling order
    long labels_spent = 0;
    Cohort best, rest;
    Metric metric = Metric::d2h;

    std::span<const std::size_t> best_ids() const {
        return {ranked.data(), cut};
    }
    std::span<const std::size_t> rest_ids() const {
        return {ranked.data() + cut, ranked.size() - cut};
    }

    // reveal a row's goals, at the cost of one label
    void label(std::size_t index, const Dataset& ds);

    // copies of every labeled row, in labeling order
    std::vector<Row> labeled_rows() const;
};

using IterationHook = std::function<void(const LearnState&)>;

// Budgeted elite search: warm-start on a few random labels, then repeatedly
// label the unlabeled row that looks most like the elite and least like the
// remainder, keeping the elite at round(sqrt(labels)) members.
LearnState active_learn(const Dataset& ds, std::vector<Row> pool,
                        const BudgetPolicy& policy, Rng& rng,
                        Metric metric = Metric::d2h,
                        const IterationHook& hook = {});

struct OptimizeResult {
    LearnState state;
    std::size_t selected = 0;  // index into state.pool
    long labels_spent = 0;
};

// Stage one: active_learn. Stage two: label the acquisition model's top
// check_budget picks from the remaining pool, then return the best row seen
// across everything labeled.
OptimizeResult two_stage_optimize(const Dataset& ds, std::vector<Row> pool,
                                  const BudgetPolicy& policy, Rng& rng,
                                  Metric metric = Metric::d2h);

// Trials needed to hit an event of probability p with confidence c (nearest
// integer of the exact solution).
long samples_required(double c, double p);

// Confidence of seeing an event of probability p at least once in n trials.
double confidence_of(long n, double p);

// Pivot-and-partition query estimate: about 2*log2(n) labels isolate a
// near-optimal candidate out of n.
long pivot_query_estimate(long n);

}  // namespace ezr
