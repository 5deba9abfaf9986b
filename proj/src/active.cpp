#include "ezr/active.hpp"

#include <algorithm>
#include <cmath>

namespace ezr {

BudgetPolicy BudgetPolicy::resolved(long train_size) const {
    BudgetPolicy out = *this;
    if (mode == Mode::fraction) {
        out.mode = Mode::fixed;
        out.stop = static_cast<long>(
            std::ceil(fraction * static_cast<double>(train_size)));
        out.stop = std::max(out.stop, warm_start);
    }
    return out;
}

BudgetPolicy BudgetPolicy::heavy() {
    BudgetPolicy policy;
    policy.mode = Mode::fraction;
    return policy;
}

BudgetPolicy BudgetPolicy::feature_selection(long train_size) {
    BudgetPolicy policy;
    policy.stop = std::min<long>(150, std::lround(0.4 * static_cast<double>(train_size)));
    policy.stop = std::max(policy.stop, policy.warm_start);
    policy.check_budget = 0;
    return policy;
}

BudgetPolicy BudgetPolicy::pick(const Dataset& ds) {
    return ds.x_columns().size() >= 20 ? heavy() : light();
}

void LearnState::label(std::size_t index, const Dataset& ds) {
    Row& row = pool.at(index);
    if (row.labeled) throw DataError("row labeled twice");
    row.labeled = true;
    scores[index] = ds.score(row, metric);
    archive.push_back(index);
    ++labels_spent;
}

std::vector<Row> LearnState::labeled_rows() const {
    std::vector<Row> rows;
    rows.reserve(archive.size());
    for (std::size_t i : archive) rows.push_back(pool[i]);
    return rows;
}

namespace {

std::size_t elite_cut(long labels_spent) {
    return static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(labels_spent))));
}

void rebuild_cohorts(LearnState& st, const Dataset& ds) {
    st.best.clear();
    st.rest.clear();
    for (std::size_t pos = 0; pos < st.ranked.size(); ++pos) {
        const Row& row = st.pool[st.ranked[pos]];
        if (pos < st.cut)
            st.best.add(row, ds);
        else
            st.rest.add(row, ds);
    }
}

std::size_t insert_ranked(LearnState& st, std::size_t index) {
    const auto before = [&](std::size_t a, std::size_t b) {
        if (st.scores[a] != st.scores[b]) return st.scores[a] < st.scores[b];
        return a < b;
    };
    auto at = std::lower_bound(st.ranked.begin(), st.ranked.end(), index, before);
    const std::size_t position = static_cast<std::size_t>(at - st.ranked.begin());
    st.ranked.insert(at, index);
    return position;
}

}  // namespace

LearnState active_learn(const Dataset& ds, std::vector<Row> pool,
                        const BudgetPolicy& policy, Rng& rng, Metric metric,
                        const IterationHook& hook) {
    if (policy.mode != BudgetPolicy::Mode::fixed)
        throw DataError("budget policy must be resolved before learning");
    const long stop = policy.stop;
    const long warm = policy.warm_start;
    if (pool.empty()) throw DataError("empty candidate pool");
    if (static_cast<long>(pool.size()) < warm + 1)
        throw DataError("pool too small for warm start");
    if (stop > static_cast<long>(pool.size()))
        throw DataError("budget exceeds pool size");
    if (stop < warm) throw DataError("budget below warm start size");

    LearnState st;
    st.metric = metric;
    st.pool = std::move(pool);
    rng.shuffle(st.pool);
    st.scores.assign(st.pool.size(), std::numeric_limits<double>::quiet_NaN());
    st.best = Cohort(ds.n_cols());
    st.rest = Cohort(ds.n_cols());

    for (long i = 0; i < warm; ++i) st.label(static_cast<std::size_t>(i), ds);
    for (long i = 0; i < warm; ++i) insert_ranked(st, static_cast<std::size_t>(i));
    st.cut = elite_cut(st.labels_spent);

    st.todo.reserve(st.pool.size() - warm);
    for (std::size_t i = warm; i < st.pool.size(); ++i) st.todo.push_back(i);

    rebuild_cohorts(st, ds);
    if (hook) hook(st);

    while (st.labels_spent < stop && !st.todo.empty()) {
        std::size_t pick_pos = 0;
        double pick_score = -std::numeric_limits<double>::infinity();
        for (std::size_t pos = 0; pos < st.todo.size(); ++pos) {
            const double s = xploit(st.pool[st.todo[pos]], st.best, st.rest, ds).score;
            if (s > pick_score) {  // ties keep the lowest row index
                pick_score = s;
                pick_pos = pos;
            }
        }
        const std::size_t index = st.todo[pick_pos];
        st.todo.erase(st.todo.begin() + static_cast<std::ptrdiff_t>(pick_pos));

        st.label(index, ds);
        const std::size_t position = insert_ranked(st, index);

        // The elite is always the top round(sqrt(n)) labeled rows, so at most
        // one row crosses the boundary per label: the new row pushes the
        // elite's weakest out, or a growing cut pulls the remainder's
        // strongest in. Cohort statistics follow those moves.
        const std::size_t new_cut = elite_cut(st.labels_spent);
        if (position < st.cut)
            st.best.add(st.pool[index], ds);
        else
            st.rest.add(st.pool[index], ds);
        if (new_cut == st.cut) {
            if (position < st.cut) {
                const Row& demoted = st.pool[st.ranked[st.cut]];
                st.best.remove(demoted, ds);
                st.rest.add(demoted, ds);
            }
        } else {
            st.cut = new_cut;
            if (position >= st.cut - 1) {
                const Row& promoted = st.pool[st.ranked[st.cut - 1]];
                st.rest.remove(promoted, ds);
                st.best.add(promoted, ds);
            }
        }

        if (hook) hook(st);
    }
    return st;
}

OptimizeResult two_stage_optimize(const Dataset& ds, std::vector<Row> pool,
                                  const BudgetPolicy& policy, Rng& rng,
                                  Metric metric) {
    LearnState st = active_learn(ds, std::move(pool), policy, rng, metric);

    // stage two: let the final model nominate candidates, then pay to verify
    std::vector<std::size_t> nominated = st.todo;
    std::vector<double> acquisition(st.pool.size(), 0.0);
    for (std::size_t i : nominated)
        acquisition[i] = xploit(st.pool[i], st.best, st.rest, ds).score;
    std::sort(nominated.begin(), nominated.end(), [&](std::size_t a, std::size_t b) {
        if (acquisition[a] != acquisition[b]) return acquisition[a] > acquisition[b];
        return a < b;
    });

    const long check = std::min<long>(policy.check_budget,
                                      static_cast<long>(nominated.size()));
    for (long i = 0; i < check; ++i) {
        const std::size_t index = nominated[static_cast<std::size_t>(i)];
        st.label(index, ds);
        st.todo.erase(std::find(st.todo.begin(), st.todo.end(), index));
    }

    OptimizeResult out;
    out.selected = st.archive.front();
    for (std::size_t i : st.archive) {
        if (st.scores[i] < st.scores[out.selected] ||
            (st.scores[i] == st.scores[out.selected] && i < out.selected))
            out.selected = i;
    }
    out.labels_spent = st.labels_spent;
    out.state = std::move(st);
    return out;
}

long samples_required(double c, double p) {
    if (!(c > 0.0 && c < 1.0) || !(p > 0.0 && p < 1.0))
        throw std::domain_error("probabilities must lie inside (0, 1)");
    const double trials = std::log1p(-c) / std::log1p(-p);
    if (!(trials < 9.0e18)) throw std::domain_error("required sample count overflows");
    return std::llround(trials);
}

double confidence_of(long n, double p) {
    if (n < 0) throw std::domain_error("trial count must be non-negative");
    if (!(p > 0.0 && p < 1.0))
        throw std::domain_error("probability must lie inside (0, 1)");
    return -std::expm1(static_cast<double>(n) * std::log1p(-p));
}

long pivot_query_estimate(long n) {
    if (n < 1) throw std::domain_error("pool size must be positive");
    return static_cast<long>(std::ceil(2.0 * std::log2(static_cast<double>(n))));
}

}  // namespace ezr
