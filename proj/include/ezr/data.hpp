#pragma once

#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace ezr {

// malformed input: bad CSV, schema violations, protocol misuse
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// a pool whose statistics make the requested computation meaningless
struct DegenerateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { numeric, symbolic };
enum class Role { independent, goal, ignored };
enum class Direction { none, minimize, maximize };

// Column conventions, read off the header name alone:
//   first alphabetic character uppercase  -> numeric, else symbolic
//   trailing '+' / '-'                    -> goal to maximize / minimize
//   trailing 'X' (checked after goals)    -> loaded but excluded from learning
struct ColumnSpec {
    std::string name;
    Kind kind = Kind::symbolic;
    Role role = Role::independent;
    Direction direction = Direction::none;
    int position = -1;

    static ColumnSpec classify(const std::string& name, int position,
                               bool honor_ignored_suffix = true);
};

struct NumStats {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    double mu = 0.0;
    double m2 = 0.0;
    long n = 0;

    void add(double v);
    void remove(double v);
    double sd() const;  // sample standard deviation, 0 when n < 2
    double span() const { return n > 0 ? hi - lo : 0.0; }
};

struct SymStats {
    std::map<std::string, long> counts;
    long n = 0;

    void add(const std::string& v);
    void remove(const std::string& v);
    long count(const std::string& v) const;
    std::string mode() const;  // highest count, ties broken lexicographically
};

// a cell is a number, a symbol, or missing ("?")
using Value = std::variant<std::monostate, double, std::string>;

inline bool is_missing(const Value& v) { return std::holds_alternative<std::monostate>(v); }
inline bool is_number(const Value& v) { return std::holds_alternative<double>(v); }
inline double number(const Value& v) { return std::get<double>(v); }
inline const std::string& symbol(const Value& v) { return std::get<std::string>(v); }

struct Row {
    std::vector<Value> cells;
    bool labeled = false;  // goal cells may be read only once this is set
};

enum class Metric { d2h, chebyshev };

// min and median of the scalarized objective over a ground-truth pool
struct GoalStats {
    double min_score = 0.0;
    double median_score = 0.0;
    bool degenerate() const { return !(median_score > min_score); }
};

// Rescales an objective value against a pool: 100 at the pool minimum, 0 at
// the pool median, negative beyond it. Throws DegenerateError when the pool
// has median == min.
double win(double x, const GoalStats& stats);

class Dataset;

// Ground-truth min/median of the scalarized objective over a pool. This is
// bench-side accounting; it reads goals without spending labels.
GoalStats pool_goal_stats(const Dataset& ds, const std::vector<Row>& pool, Metric metric);

struct LoadOptions {
    bool honor_ignored_suffix = true;
};

class Dataset {
public:
    static Dataset load(std::istream& in, const LoadOptions& options = {});
    static Dataset load_file(const std::string& path, const LoadOptions& options = {});

    const std::vector<ColumnSpec>& schema() const { return schema_; }
    const std::vector<Row>& rows() const { return rows_; }
    std::size_t n_rows() const { return rows_.size(); }
    std::size_t n_cols() const { return schema_.size(); }

    // independent columns that take part in learning (ignored ones excluded)
    const std::vector<int>& x_columns() const { return x_columns_; }
    const std::vector<int>& goal_columns() const { return goal_columns_; }

    const NumStats& num_stats(int col) const;
    const SymStats& sym_stats(int col) const;

    // ideal per goal ordinal, in normalized space: 1 to maximize, 0 to minimize
    double heaven(std::size_t goal_ordinal) const { return heaven_.at(goal_ordinal); }

    // map value into [0,1] using the column's full-file bounds
    double normalize(int col, double v) const;

    // scalarized objectives; require row.labeled (the optimizer's view)
    double d2h(const Row& row) const;
    double chebyshev(const Row& row) const;
    double score(const Row& row, Metric metric) const;

    // same computations without the label guard, for bench-side accounting
    double true_d2h(const Row& row) const;
    double true_chebyshev(const Row& row) const;
    double true_score(const Row& row, Metric metric) const;

    bool goals_complete(const Row& row) const;
    int column_index(const std::string& name) const;  // -1 if absent

private:
    double goal_distance(const Row& row, Metric metric) const;

    std::vector<ColumnSpec> schema_;
    std::vector<Row> rows_;
    std::vector<int> x_columns_;
    std::vector<int> goal_columns_;
    std::vector<double> heaven_;
    std::vector<NumStats> num_stats_;  // per column; unused slots stay empty
    std::vector<SymStats> sym_stats_;
};

}  // namespace ezr
