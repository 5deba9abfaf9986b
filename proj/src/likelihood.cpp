#include "ezr/likelihood.hpp"

#include <cmath>

namespace ezr {

namespace {
constexpr double kLikeFloor = 1e-32;
constexpr double kSdFloorScale = 1e-9;
const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * M_PI);
}  // namespace

void Cohort::add(const Row& row, const Dataset& ds) {
    for (int col : ds.x_columns()) {
        const Value& cell = row.cells.at(col);
        if (is_missing(cell)) continue;
        if (ds.schema()[col].kind == Kind::numeric)
            num[col].add(number(cell));
        else
            sym[col].add(symbol(cell));
    }
    ++n;
}

void Cohort::remove(const Row& row, const Dataset& ds) {
    if (n <= 0) throw DataError("remove from empty cohort");
    for (int col : ds.x_columns()) {
        const Value& cell = row.cells.at(col);
        if (is_missing(cell)) continue;
        if (ds.schema()[col].kind == Kind::numeric)
            num[col].remove(number(cell));
        else
            sym[col].remove(symbol(cell));
    }
    --n;
}

void Cohort::clear() {
    for (auto& s : num) s = NumStats{};
    for (auto& s : sym) s = SymStats{};
    n = 0;
}

double sym_likelihood(long count, long cohort_n, double prior, double m) {
    return (static_cast<double>(count) + m * prior) / (static_cast<double>(cohort_n) + m);
}

double num_likelihood(double v, double mu, double sd) {
    const double z = (v - mu) / sd;
    return kInvSqrt2Pi / sd * std::exp(-0.5 * z * z);
}

double like(const Row& row, const Cohort& cohort, long n_all, int n_classes,
            const Dataset& ds, const LikeParams& params) {
    const double prior = (static_cast<double>(cohort.n) + params.k) /
                         (static_cast<double>(n_all) + params.k * n_classes);
    double ll = std::log(prior);
    for (int col : ds.x_columns()) {
        const Value& cell = row.cells.at(col);
        if (is_missing(cell)) continue;  // absence of evidence is skipped, not penalized
        double l;
        if (ds.schema()[col].kind == Kind::numeric) {
            const NumStats& stats = cohort.num[col];
            if (stats.n < 1) continue;
            const double sd =
                std::max(stats.sd(), kSdFloorScale * (ds.num_stats(col).span() + 1.0));
            l = num_likelihood(number(cell), stats.mu, sd);
        } else {
            l = sym_likelihood(cohort.sym[col].count(symbol(cell)), cohort.n, prior,
                               params.m);
        }
        ll += std::log(std::max(l, kLikeFloor));
    }
    return ll;
}

AcquisitionScore xploit(const Row& row, const Cohort& best, const Cohort& rest,
                        const Dataset& ds, const LikeParams& params) {
    const long n_all = best.n + rest.n;
    AcquisitionScore out;
    out.log_like_best = like(row, best, n_all, 2, ds, params);
    out.log_like_rest = like(row, rest, n_all, 2, ds, params);
    // the best/rest likelihood ratio, kept in log space to survive wide schemas
    out.score = out.log_like_best - out.log_like_rest;
    return out;
}

}  // namespace ezr
