#pragma once

// Numeric CSV tables: one header row, comma separated, dot decimals.

#include "dpconic/conic.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace dpconic {

struct NumericTable {
    std::vector<std::string> header;
    /// rows x header.size()
    Matrix values;

    /// Index of a named column; ValidationError when absent.
    Index column(const std::string& name) const;
};

/// Throws ValidationError on ragged rows or cells that are not numbers.
NumericTable parse_numeric_csv(const std::string& text);
NumericTable read_numeric_csv(const std::filesystem::path& path);

/// Shortest round-trip text for finite values; "nan", "inf", "-inf" otherwise.
std::string format_number(double value);

/// Quotes a cell when it holds a comma, quote or line break.
std::string csv_cell(const std::string& text);

}  // namespace dpconic
