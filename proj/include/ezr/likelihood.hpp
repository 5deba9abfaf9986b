#pragma once

#include "ezr/data.hpp"

namespace ezr {

struct LikeParams {
    double k = 1.0;  // prior smoothing
    double m = 2.0;  // m-estimate strength for symbolic likelihoods
};

// A labeled sub-population ("best" or "rest") summarized by per-column
// sufficient statistics, enough to evaluate Naive-Bayes likelihoods.
struct Cohort {
    std::vector<NumStats> num;  // per column; only numeric x slots used
    std::vector<SymStats> sym;
    long n = 0;

    explicit Cohort(std::size_t n_cols = 0) : num(n_cols), sym(n_cols) {}

    void add(const Row& row, const Dataset& ds);
    void remove(const Row& row, const Dataset& ds);
    void clear();
};

// per-column pieces, exposed for direct testing
double sym_likelihood(long count, long cohort_n, double prior, double m);
double num_likelihood(double v, double mu, double sd);

// log(prior) + sum of per-column log likelihoods over the row's non-missing
// independent cells; every factor is floored so the result is always finite.
double like(const Row& row, const Cohort& cohort, long n_all, int n_classes,
            const Dataset& ds, const LikeParams& params = {});

struct AcquisitionScore {
    double log_like_best = 0.0;
    double log_like_rest = 0.0;
    double score = 0.0;  // log_like_best - log_like_rest
};

// greedy acquisition: rows that look like "best" and unlike "rest" score high
AcquisitionScore xploit(const Row& row, const Cohort& best, const Cohort& rest,
                        const Dataset& ds, const LikeParams& params = {});

}  // namespace ezr
