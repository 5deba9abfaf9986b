#include "ezr/tree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>

namespace ezr {

namespace {

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.8g", v);
    return buf;
}

double population_sd(double sum, double sum2, long n) {
    if (n < 1) return 0.0;
    const double mean = sum / static_cast<double>(n);
    const double var = sum2 / static_cast<double>(n) - mean * mean;
    // below the cancellation noise of the sums, the spread is genuinely zero
    if (var <= 1e-13 * (sum2 / static_cast<double>(n))) return 0.0;
    return std::sqrt(var);
}

double median_of(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n == 0) return std::numeric_limits<double>::quiet_NaN();
    if (n % 2 == 1) return values[n / 2];
    return 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

}  // namespace

bool Split::matches(const Value& cell) const {
    if (is_missing(cell)) return false;
    switch (relation) {
        case Relation::le: return number(cell) <= threshold;
        case Relation::gt: return number(cell) > threshold;
        case Relation::eq: return symbol(cell) == value;
        case Relation::ne: return symbol(cell) != value;
    }
    return false;
}

Split Split::flipped() const {
    Split out = *this;
    switch (relation) {
        case Relation::le: out.relation = Relation::gt; break;
        case Relation::gt: out.relation = Relation::le; break;
        case Relation::eq: out.relation = Relation::ne; break;
        case Relation::ne: out.relation = Relation::eq; break;
    }
    return out;
}

std::string Split::text(const Dataset& ds) const {
    const std::string& name = ds.schema().at(feature).name;
    switch (relation) {
        case Relation::le: return name + " <= " + format_number(threshold);
        case Relation::gt: return name + " >  " + format_number(threshold);
        case Relation::eq: return name + "  = '" + value + "'";
        case Relation::ne: return name + " != '" + value + "'";
    }
    return name;
}

std::optional<SplitQuality> best_split(std::span<const std::size_t> ids,
                                       const std::vector<Row>& rows,
                                       const std::vector<double>& scores, int feature,
                                       const Dataset& ds, long min_leaf) {
    std::optional<SplitQuality> found;
    const bool numeric = ds.schema().at(feature).kind == Kind::numeric;

    if (numeric) {
        std::vector<std::pair<double, double>> points;  // (value, objective)
        points.reserve(ids.size());
        for (std::size_t id : ids) {
            const Value& cell = rows[id].cells[feature];
            if (!is_missing(cell)) points.emplace_back(number(cell), scores[id]);
        }
        const long routable = static_cast<long>(points.size());
        if (routable < 2 * min_leaf) return std::nullopt;
        std::sort(points.begin(), points.end());

        // Center the objectives and keep true prefix and suffix sums, so
        // neither side's statistics come from differencing large totals.
        double center = 0.0;
        for (const auto& [value, objective] : points) center += objective;
        center /= static_cast<double>(routable);
        const std::size_t m = points.size();
        std::vector<double> l1(m + 1, 0.0), l2(m + 1, 0.0), r1(m + 1, 0.0), r2(m + 1, 0.0);
        for (std::size_t i = 0; i < m; ++i) {
            const double c = points[i].second - center;
            l1[i + 1] = l1[i] + c;
            l2[i + 1] = l2[i] + c * c;
        }
        for (std::size_t i = m; i > 0; --i) {
            const double c = points[i - 1].second - center;
            r1[i - 1] = r1[i] + c;
            r2[i - 1] = r2[i] + c * c;
        }
        for (long i = min_leaf - 1; i <= routable - min_leaf - 1; ++i) {
            if (!(points[i].first < points[i + 1].first)) continue;
            const long nl = i + 1;
            const long nr = routable - nl;
            const double sdl = population_sd(l1[nl], l2[nl], nl);
            const double sdr = population_sd(r1[nl], r2[nl], nr);
            const double weighted =
                (static_cast<double>(nl) * sdl + static_cast<double>(nr) * sdr) /
                static_cast<double>(routable);
            if (!found || weighted < found->weighted_impurity) {
                Split split;
                split.feature = feature;
                split.relation = Relation::le;
                split.threshold = 0.5 * (points[i].first + points[i + 1].first);
                found = SplitQuality{split, weighted};
            }
        }
    } else {
        struct Group {
            long n = 0;
            double sum = 0.0, sum2 = 0.0;
        };
        std::map<std::string, Group> groups;
        Group total;
        double center = 0.0;
        long present = 0;
        for (std::size_t id : ids) {
            if (is_missing(rows[id].cells[feature])) continue;
            center += scores[id];
            ++present;
        }
        if (present < 2 * min_leaf) return std::nullopt;
        center /= static_cast<double>(present);
        for (std::size_t id : ids) {
            const Value& cell = rows[id].cells[feature];
            if (is_missing(cell)) continue;
            Group& g = groups[symbol(cell)];
            const double c = scores[id] - center;
            ++g.n; g.sum += c; g.sum2 += c * c;
            ++total.n; total.sum += c; total.sum2 += c * c;
        }
        for (const auto& [value, g] : groups) {
            const long nl = g.n;
            const long nr = total.n - g.n;
            if (nl < min_leaf || nr < min_leaf) continue;
            const double sdl = population_sd(g.sum, g.sum2, nl);
            const double sdr = population_sd(total.sum - g.sum, total.sum2 - g.sum2, nr);
            const double weighted =
                (static_cast<double>(nl) * sdl + static_cast<double>(nr) * sdr) /
                static_cast<double>(total.n);
            if (!found || weighted < found->weighted_impurity) {
                Split split;
                split.feature = feature;
                split.relation = Relation::eq;
                split.value = value;
                found = SplitQuality{split, weighted};
            }
        }
    }
    return found;
}

namespace {

struct Grower {
    const std::vector<Row>& rows;
    const Dataset& ds;
    const GoalStats& stats;
    const GrowOptions& options;
    std::vector<double> scores;

    std::unique_ptr<TreeNode> build(std::vector<std::size_t> ids, int depth) {
        auto node = std::make_unique<TreeNode>();
        node->depth = depth;
        node->n = static_cast<long>(ids.size());
        std::vector<double> local;
        local.reserve(ids.size());
        double mean = 0.0;
        for (std::size_t id : ids) {
            mean += scores[id];
            local.push_back(scores[id]);
        }
        mean /= static_cast<double>(node->n);
        double sum = 0.0, sum2 = 0.0;
        for (std::size_t id : ids) {
            const double c = scores[id] - mean;
            sum += c;
            sum2 += c * c;
        }
        node->impurity = population_sd(sum, sum2, node->n);
        node->median_score = median_of(std::move(local));
        node->win_score = win(node->median_score, stats);
        node->members = std::move(ids);

        if (node->n < 2 * options.min_leaf) return node;

        std::optional<SplitQuality> best;
        for (int feature : ds.x_columns()) {
            auto candidate =
                best_split(node->members, rows, scores, feature, ds, options.min_leaf);
            if (candidate &&
                (!best || candidate->weighted_impurity < best->weighted_impurity))
                best = candidate;  // ties keep the lowest feature, lowest threshold
        }
        if (!best || best->weighted_impurity >= node->impurity) return node;

        std::vector<std::size_t> left_ids, right_ids;
        for (std::size_t id : node->members) {
            const Value& cell = rows[id].cells[best->split.feature];
            if (is_missing(cell)) continue;  // unroutable rows stay here
            (best->split.matches(cell) ? left_ids : right_ids).push_back(id);
        }
        node->split = best->split;
        node->left = build(std::move(left_ids), depth + 1);
        node->right = build(std::move(right_ids), depth + 1);
        return node;
    }
};

}  // namespace

std::unique_ptr<TreeNode> grow_tree(const std::vector<Row>& rows, const Dataset& ds,
                                    const GoalStats& stats, const GrowOptions& options) {
    if (rows.empty()) throw DataError("cannot grow a tree from zero rows");
    Grower grower{rows, ds, stats, options, {}};
    grower.scores.reserve(rows.size());
    for (const Row& row : rows) grower.scores.push_back(ds.score(row, options.metric));
    std::vector<std::size_t> ids(rows.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    return grower.build(std::move(ids), 0);
}

DecisionPath route(const TreeNode& root, const Row& row) {
    DecisionPath path;
    const TreeNode* node = &root;
    while (node->split) {
        const Value& cell = row.cells.at(node->split->feature);
        if (is_missing(cell)) break;
        const bool matched = node->split->matches(cell);
        const TreeNode* next = matched ? node->left.get() : node->right.get();
        path.steps.push_back({matched ? *node->split : node->split->flipped(), next});
        node = next;
    }
    path.terminal = node;
    return path;
}

namespace {

struct Line {
    long win = 0;
    long n = 0;
    int depth = 0;
    std::string condition;
    bool leaf = false;
};

// children ordered by descending win, the matching branch first on ties
std::vector<std::pair<const TreeNode*, Split>> ordered_children(const TreeNode& node) {
    std::vector<std::pair<const TreeNode*, Split>> kids;
    if (node.is_leaf()) return kids;
    kids.emplace_back(node.left.get(), *node.split);
    kids.emplace_back(node.right.get(), node.split->flipped());
    if (kids[1].first->win_score > kids[0].first->win_score)
        std::swap(kids[0], kids[1]);
    return kids;
}

void collect_lines(const TreeNode& node, const Dataset& ds, const std::string& condition,
                   std::vector<Line>& lines) {
    lines.push_back({std::lround(node.win_score), node.n, node.depth, condition,
                     node.is_leaf()});
    for (const auto& [child, split] : ordered_children(node))
        collect_lines(*child, ds, split.text(ds), lines);
}

std::string layout(const std::vector<Line>& lines) {
    int win_width = 4, n_width = 4;
    char buf[64];
    for (const Line& line : lines) {
        win_width = std::max(win_width, std::snprintf(buf, sizeof buf, "%ld", line.win));
        n_width = std::max(n_width, std::snprintf(buf, sizeof buf, "%ld", line.n));
    }
    std::string out;
    std::snprintf(buf, sizeof buf, "%*s %*s\n", win_width, "win", n_width, "n");
    out += buf;
    out += std::string(win_width, '-') + " " + std::string(n_width, '-') + "\n";
    for (const Line& line : lines) {
        std::snprintf(buf, sizeof buf, "%*ld %*ld", win_width, line.win, n_width, line.n);
        out += buf;
        if (!line.condition.empty()) {
            out += "  ";
            for (int d = 1; d < line.depth; ++d) out += "|  ";
            out += line.condition;
            if (line.leaf) out += " ;";
        }
        out += "\n";
    }
    return out;
}

}  // namespace

std::string render_tree(const TreeNode& root, const Dataset& ds) {
    std::vector<Line> lines;
    collect_lines(root, ds, "", lines);
    return layout(lines);
}

std::string render_path(const TreeNode& root, const DecisionPath& path, const Dataset& ds) {
    std::vector<Line> lines;
    lines.push_back({std::lround(root.win_score), root.n, root.depth, "", root.is_leaf()});
    for (const PathStep& step : path.steps)
        lines.push_back({std::lround(step.node->win_score), step.node->n,
                         step.node->depth, step.taken.text(ds), step.node->is_leaf()});
    return layout(lines);
}

namespace {

const char* relation_name(Relation r) {
    switch (r) {
        case Relation::le: return "le";
        case Relation::gt: return "gt";
        case Relation::eq: return "eq";
        case Relation::ne: return "ne";
    }
    return "";
}

Relation relation_from(const std::string& name) {
    if (name == "le") return Relation::le;
    if (name == "gt") return Relation::gt;
    if (name == "eq") return Relation::eq;
    if (name == "ne") return Relation::ne;
    throw DataError("unknown relation: " + name);
}

void export_nodes(const TreeNode& node, const Dataset& ds, int parent,
                  const std::optional<Split>& incoming, nlohmann::ordered_json& nodes) {
    const int id = static_cast<int>(nodes.size());
    nlohmann::ordered_json record;
    record["id"] = id;
    record["parent"] = parent;
    if (incoming) {
        record["feature"] = ds.schema().at(incoming->feature).name;
        record["relation"] = relation_name(incoming->relation);
        if (incoming->numeric())
            record["value"] = incoming->threshold;
        else
            record["value"] = incoming->value;
    }
    record["n"] = node.n;
    record["win"] = node.win_score;
    record["impurity"] = node.impurity;
    if (!std::isnan(node.median_score)) record["median"] = node.median_score;
    nodes.push_back(std::move(record));
    for (const auto& [child, split] : ordered_children(node))
        export_nodes(*child, ds, id, split, nodes);
}

}  // namespace

nlohmann::ordered_json tree_to_json(const TreeNode& root, const Dataset& ds) {
    nlohmann::ordered_json doc;
    doc["nodes"] = nlohmann::ordered_json::array();
    export_nodes(root, ds, -1, std::nullopt, doc["nodes"]);
    return doc;
}

std::unique_ptr<TreeNode> tree_from_json(const nlohmann::json& doc, const Dataset& ds) {
    if (!doc.contains("nodes") || !doc["nodes"].is_array() || doc["nodes"].empty())
        throw DataError("tree document has no nodes");

    std::map<int, TreeNode*> by_id;
    std::map<int, Split> incoming;
    std::unique_ptr<TreeNode> root;

    for (const auto& record : doc["nodes"]) {
        const int id = record.at("id").get<int>();
        const int parent = record.at("parent").get<int>();
        auto node = std::make_unique<TreeNode>();
        node->n = record.at("n").get<long>();
        node->win_score = record.at("win").get<double>();
        node->impurity = record.value("impurity", 0.0);
        node->median_score = record.value("median",
                                          std::numeric_limits<double>::quiet_NaN());

        if (parent < 0) {
            if (root) throw DataError("tree document has two roots");
            node->depth = 0;
            by_id[id] = node.get();
            root = std::move(node);
            continue;
        }
        auto parent_it = by_id.find(parent);
        if (parent_it == by_id.end())
            throw DataError("node " + std::to_string(id) + " appears before its parent");
        TreeNode* up = parent_it->second;

        Split split;
        const std::string feature = record.at("feature").get<std::string>();
        split.feature = ds.column_index(feature);
        if (split.feature < 0) throw DataError("unknown feature in tree: " + feature);
        split.relation = relation_from(record.at("relation").get<std::string>());
        if (split.numeric())
            split.threshold = record.at("value").get<double>();
        else
            split.value = record.at("value").get<std::string>();

        node->depth = up->depth + 1;
        by_id[id] = node.get();
        incoming[id] = split;

        const bool canonical =
            split.relation == Relation::le || split.relation == Relation::eq;
        auto& slot = canonical ? up->left : up->right;
        if (slot) throw DataError("node " + std::to_string(parent) + " has duplicate branches");
        if (!up->split) {
            up->split = canonical ? split : split.flipped();
        } else {
            const Split expected = canonical ? *up->split : up->split->flipped();
            if (expected.feature != split.feature || expected.relation != split.relation ||
                (split.numeric() ? expected.threshold != split.threshold
                                 : expected.value != split.value))
                throw DataError("branches of node " + std::to_string(parent) +
                                " are not complementary");
        }
        slot = std::move(node);
    }
    if (!root) throw DataError("tree document has no root");
    for (const auto& [id, node] : by_id)
        if (static_cast<bool>(node->left) != static_cast<bool>(node->right))
            throw DataError("node " + std::to_string(id) + " has a single child");
    return root;
}

}  // namespace ezr
