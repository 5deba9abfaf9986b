#include <doctest.h>

#include <algorithm>

#include "ezr/harness.hpp"
#include "helpers.hpp"

using namespace ezr;

TEST_CASE("oracle equals a straight scan") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dataset ds = test::load_csv(test::random_csv(60, 2, seed + 70));
        const std::vector<Row>& pool = ds.rows();
        const std::size_t picked = exhaustive_oracle(ds, pool);
        std::size_t expect = 0;
        for (std::size_t i = 1; i < pool.size(); ++i)
            if (ds.true_d2h(pool[i]) < ds.true_d2h(pool[expect])) expect = i;
        CHECK(picked == expect);
    }
    // ties resolve to the lowest index
    const Dataset flat = test::load_csv("A-\n3\n3\n3\n");
    CHECK(exhaustive_oracle(flat, flat.rows()) == 0);
    CHECK_THROWS_AS(exhaustive_oracle(flat, {}), DataError);
}

TEST_CASE("random baseline") {
    const Dataset ds = test::load_csv("A-\n1\n2\n3\n");
    std::vector<Row> one{ds.rows()[0]};
    Rng rng(5);
    CHECK(random_baseline(one, rng) == 0);
    Rng a(9), b(9);
    CHECK(random_baseline(ds.rows(), a) == random_baseline(ds.rows(), b));
    CHECK_THROWS_AS(random_baseline({}, rng), DataError);
}

TEST_CASE("random picks average a win near zero") {
    // a pool with evenly spread objectives: the median element wins 0
    std::ostringstream csv;
    csv << "A-\n";
    for (int i = 0; i <= 100; ++i) csv << i << "\n";
    const Dataset ds = test::load_csv(csv.str());
    const std::vector<Row>& pool = ds.rows();
    const GoalStats stats = pool_goal_stats(ds, pool, Metric::d2h);
    Rng rng(31);
    double total = 0.0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i)
        total += win(ds.true_d2h(pool[random_baseline(pool, rng)]), stats);
    CHECK(std::fabs(total / draws) <= 3.0);
}

TEST_CASE("relative score follows the reference treatment") {
    ExperimentReport report;
    report.config.reference = "oracle";
    for (long r = 0; r < 5; ++r) {
        report.records.push_back({r, "ezr", 0.2, 93.0, 60});
        report.records.push_back({r, "oracle", 0.1, 97.0, 80});
    }
    CHECK(report.relative_score() == doctest::Approx(100.0 * 93.0 / 97.0));  // 95.876
    report.config.reference = "nonesuch";
    CHECK(std::isnan(report.relative_score()));
}

TEST_CASE("aggregates ignore record order") {
    ExperimentReport report;
    for (long r = 0; r < 7; ++r) {
        report.records.push_back({r, "ezr", 0.1 * r, 10.0 * r, 60});
        report.records.push_back({r, "asis", 0.2 * r, 5.0 * r, 1});
    }
    const auto before = report.median_win();
    Rng rng(4);
    rng.shuffle(report.records);
    CHECK(report.median_win() == before);
}

TEST_CASE("experiment report on a small benchmark") {
    const Dataset ds = Dataset::load_file(test::data_file("pom_sim.csv"));
    ExperimentConfig config;
    config.repeats = 5;
    config.seed = 11;
    ExperimentReport report = run_experiment(ds, config);
    report.dataset = "pom_sim.csv";

    CHECK(!report.degenerate);
    CHECK(report.records.size() == 15);
    CHECK(report.median_win().at("oracle") == 100.0);
    CHECK(report.median_win().at("ezr") > report.median_win().at("asis"));
    for (const RepeatRecord& r : report.records) {
        if (r.treatment == "ezr") CHECK(r.labels == 60);
        if (r.treatment == "asis") CHECK(r.labels == 1);
        if (r.treatment == "oracle") CHECK(r.labels == 101);  // test pool size
    }
    CHECK(report.resolved_stop == 50);

    // identical seeds give byte-identical reports, in either format
    ExperimentReport again = run_experiment(ds, config);
    again.dataset = "pom_sim.csv";
    CHECK(report.to_records() == again.to_records());
    CHECK(report.to_text() == again.to_text());

    // parallel repeats do not change the outcome
    config.jobs = 2;
    ExperimentReport parallel = run_experiment(ds, config);
    parallel.dataset = "pom_sim.csv";
    CHECK(parallel.to_records() == report.to_records());
}

TEST_CASE("chebyshev changes wins but not the oracle anchor") {
    const Dataset ds = Dataset::load_file(test::data_file("pom_sim.csv"));
    ExperimentConfig config;
    config.repeats = 3;
    config.seed = 2;
    config.metric = Metric::chebyshev;
    const ExperimentReport report = run_experiment(ds, config);
    CHECK(report.median_win().at("oracle") == 100.0);
}

TEST_CASE("degenerate pools are skipped with a note") {
    std::ostringstream csv;
    csv << "A,G-\n";
    for (int i = 0; i < 80; ++i) csv << i << ",5\n";
    const Dataset ds = test::load_csv(csv.str());
    ExperimentConfig config;
    config.repeats = 2;
    const ExperimentReport report = run_experiment(ds, config);
    CHECK(report.degenerate);
    CHECK(!report.note.empty());
    CHECK(report.records.empty());
    CHECK(report.to_text().find("skipped") != std::string::npos);
}

TEST_CASE("oversized budgets are rejected up front") {
    const Dataset ds = test::load_csv(test::monotone_csv(40, 1));
    ExperimentConfig config;
    config.policy.stop = 33;  // train split holds 32 rows
    CHECK_THROWS_AS(run_experiment(ds, config), DataError);
    config.policy.stop = 10;
    config.repeats = 0;
    CHECK_THROWS_AS(run_experiment(ds, config), DataError);
}
