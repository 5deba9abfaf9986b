#include "ezr/data.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ezr {

namespace {

constexpr double kRangeEps = 1e-32;

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size();
}

}  // namespace

ColumnSpec ColumnSpec::classify(const std::string& raw, int position,
                                bool honor_ignored_suffix) {
    ColumnSpec spec;
    spec.name = raw;
    spec.position = position;

    spec.kind = Kind::symbolic;
    for (char ch : raw) {
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            if (std::isupper(static_cast<unsigned char>(ch))) spec.kind = Kind::numeric;
            break;
        }
    }

    if (!raw.empty() && raw.back() == '+') {
        spec.role = Role::goal;
        spec.direction = Direction::maximize;
    } else if (!raw.empty() && raw.back() == '-') {
        spec.role = Role::goal;
        spec.direction = Direction::minimize;
    } else if (honor_ignored_suffix && !raw.empty() && raw.back() == 'X') {
        spec.role = Role::ignored;
    }
    return spec;
}

void NumStats::add(double v) {
    ++n;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    const double delta = v - mu;
    mu += delta / static_cast<double>(n);
    m2 += delta * (v - mu);
}

void NumStats::remove(double v) {
    if (n <= 0) throw DataError("remove from empty stats");
    if (n == 1) {
        // bounds are kept; they only matter as full-population envelopes
        n = 0;
        mu = 0.0;
        m2 = 0.0;
        return;
    }
    const double old_mu = mu;
    mu = (mu * static_cast<double>(n) - v) / static_cast<double>(n - 1);
    m2 -= (v - old_mu) * (v - mu);
    if (m2 < 0.0) m2 = 0.0;
    --n;
}

double NumStats::sd() const {
    if (n < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(n - 1));
}

void SymStats::add(const std::string& v) {
    ++counts[v];
    ++n;
}

void SymStats::remove(const std::string& v) {
    auto it = counts.find(v);
    if (it == counts.end() || it->second <= 0) throw DataError("remove of unseen symbol");
    if (--it->second == 0) counts.erase(it);
    --n;
}

long SymStats::count(const std::string& v) const {
    auto it = counts.find(v);
    return it == counts.end() ? 0 : it->second;
}

std::string SymStats::mode() const {
    std::string best;
    long best_count = -1;
    for (const auto& [value, c] : counts) {
        if (c > best_count) {
            best = value;
            best_count = c;
        }
    }
    return best;
}

double win(double x, const GoalStats& stats) {
    if (stats.degenerate()) throw DegenerateError("win undefined: pool median equals min");
    return 100.0 * (1.0 - (x - stats.min_score) / (stats.median_score - stats.min_score));
}

GoalStats pool_goal_stats(const Dataset& ds, const std::vector<Row>& pool, Metric metric) {
    if (pool.empty()) throw DataError("goal stats over an empty pool");
    std::vector<double> scores;
    scores.reserve(pool.size());
    for (const Row& row : pool) scores.push_back(ds.true_score(row, metric));
    std::sort(scores.begin(), scores.end());
    GoalStats stats;
    stats.min_score = scores.front();
    const std::size_t n = scores.size();
    stats.median_score =
        n % 2 == 1 ? scores[n / 2] : 0.5 * (scores[n / 2 - 1] + scores[n / 2]);
    return stats;
}

Dataset Dataset::load(std::istream& in, const LoadOptions& options) {
    Dataset ds;
    std::string line;

    if (!std::getline(in, line)) throw DataError("empty csv");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB &&
        static_cast<unsigned char>(line[2]) == 0xBF)
        line.erase(0, 3);

    const auto header = split_record(line);
    if (header.empty() || (header.size() == 1 && header[0].empty()))
        throw DataError("empty csv header");

    for (std::size_t i = 0; i < header.size(); ++i)
        ds.schema_.push_back(ColumnSpec::classify(header[i], static_cast<int>(i),
                                                  options.honor_ignored_suffix));

    int goal_ordinal = 0;
    for (const auto& spec : ds.schema_) {
        if (spec.role == Role::goal) {
            if (spec.kind != Kind::numeric)
                throw DataError("categorical goal column not supported: " + spec.name);
            ds.goal_columns_.push_back(spec.position);
            ds.heaven_.push_back(spec.direction == Direction::maximize ? 1.0 : 0.0);
            ++goal_ordinal;
        } else if (spec.role == Role::independent) {
            ds.x_columns_.push_back(spec.position);
        }
    }
    if (ds.goal_columns_.empty()) throw DataError("no goal column");

    ds.num_stats_.resize(ds.schema_.size());
    ds.sym_stats_.resize(ds.schema_.size());

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_record(line);
        if (cells.size() != ds.schema_.size())
            throw DataError("record arity mismatch at line " + std::to_string(line_no) +
                            ": expected " + std::to_string(ds.schema_.size()) + " cells, got " +
                            std::to_string(cells.size()));

        Row row;
        row.cells.reserve(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            const std::string& text = cells[c];
            if (text == "?" || text.empty()) {
                row.cells.emplace_back(std::monostate{});
                continue;
            }
            if (ds.schema_[c].kind == Kind::numeric) {
                double v = 0.0;
                if (!parse_number(text, v))
                    throw DataError("unparseable numeric cell '" + text + "' in column " +
                                    ds.schema_[c].name + " at line " + std::to_string(line_no));
                row.cells.emplace_back(v);
                ds.num_stats_[c].add(v);
            } else {
                row.cells.emplace_back(text);
                ds.sym_stats_[c].add(text);
            }
        }
        ds.rows_.push_back(std::move(row));
    }
    return ds;
}

Dataset Dataset::load_file(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    return load(in, options);
}

const NumStats& Dataset::num_stats(int col) const {
    if (schema_.at(col).kind != Kind::numeric)
        throw DataError("no numeric stats for symbolic column " + schema_.at(col).name);
    return num_stats_.at(col);
}

const SymStats& Dataset::sym_stats(int col) const {
    if (schema_.at(col).kind != Kind::symbolic)
        throw DataError("no symbol stats for numeric column " + schema_.at(col).name);
    return sym_stats_.at(col);
}

double Dataset::normalize(int col, double v) const {
    const NumStats& stats = num_stats(col);
    const double z = (v - stats.lo) / (stats.hi - stats.lo + kRangeEps);
    return std::clamp(z, 0.0, 1.0);
}

double Dataset::goal_distance(const Row& row, Metric metric) const {
    double acc = 0.0;
    for (std::size_t g = 0; g < goal_columns_.size(); ++g) {
        const int col = goal_columns_[g];
        const Value& cell = row.cells.at(col);
        if (is_missing(cell))
            throw DataError("missing goal cell in column " + schema_[col].name);
        const double d = std::fabs(heaven_[g] - normalize(col, number(cell)));
        if (metric == Metric::d2h)
            acc += d * d;
        else
            acc = std::max(acc, d);
    }
    if (metric == Metric::d2h)
        return std::sqrt(acc / static_cast<double>(goal_columns_.size()));
    return acc;
}

double Dataset::d2h(const Row& row) const {
    if (!row.labeled) throw DataError("goal access on unlabeled row");
    return goal_distance(row, Metric::d2h);
}

double Dataset::chebyshev(const Row& row) const {
    if (!row.labeled) throw DataError("goal access on unlabeled row");
    return goal_distance(row, Metric::chebyshev);
}

double Dataset::score(const Row& row, Metric metric) const {
    return metric == Metric::d2h ? d2h(row) : chebyshev(row);
}

double Dataset::true_d2h(const Row& row) const { return goal_distance(row, Metric::d2h); }

double Dataset::true_chebyshev(const Row& row) const {
    return goal_distance(row, Metric::chebyshev);
}

double Dataset::true_score(const Row& row, Metric metric) const {
    return goal_distance(row, metric);
}

bool Dataset::goals_complete(const Row& row) const {
    for (int col : goal_columns_)
        if (is_missing(row.cells.at(col))) return false;
    return true;
}

int Dataset::column_index(const std::string& name) const {
    for (const auto& spec : schema_)
        if (spec.name == name) return spec.position;
    return -1;
}

}  // namespace ezr
