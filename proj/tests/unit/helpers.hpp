#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "ezr/data.hpp"
#include "ezr/rng.hpp"

namespace ezr::test {

inline Dataset load_csv(const std::string& text, const LoadOptions& options = {}) {
    std::istringstream in(text);
    return Dataset::load(in, options);
}

inline std::vector<Row> labeled_copy(const Dataset& ds) {
    std::vector<Row> rows = ds.rows();
    for (Row& row : rows) row.labeled = true;
    return rows;
}

// One informative numeric feature (Key) monotonically drives the goal; the
// rest is noise. Handy for tests that need a known ground truth.
inline std::string monotone_csv(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::ostringstream out;
    out << "Key,Pad,junk,Goal-\n";
    for (std::size_t i = 0; i < n; ++i) {
        const double key = rng.uniform() * 10.0;
        const double pad = rng.uniform() * 5.0;
        const char* junk = rng.below(2) == 0 ? "a" : "b";
        out << key << "," << pad << "," << junk << "," << key << "\n";
    }
    return out.str();
}

// Random mixed-schema CSV for property tests: numeric and symbolic inputs,
// the requested number of goals with random directions.
inline std::string random_csv(std::size_t rows, std::size_t goals, std::uint64_t seed) {
    Rng rng(seed);
    std::ostringstream out;
    out << "Num1,Num2,cat";
    for (std::size_t g = 0; g < goals; ++g)
        out << ",G" << g << (rng.below(2) == 0 ? "+" : "-");
    out << "\n";
    for (std::size_t i = 0; i < rows; ++i) {
        out << rng.uniform() * 100.0 << "," << rng.uniform() * 3.0 - 1.5 << ","
            << (rng.below(3) == 0 ? "x" : rng.below(2) == 0 ? "y" : "z");
        for (std::size_t g = 0; g < goals; ++g) out << "," << rng.uniform() * 50.0;
        out << "\n";
    }
    return out.str();
}

inline std::string data_file(const std::string& name) {
    return std::string(EZR_DATA_DIR) + "/" + name;
}

}  // namespace ezr::test
