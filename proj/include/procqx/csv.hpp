#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <vector>

namespace procqx {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line per row
};

/// Reads a comma-separated table with a mandatory header row. Fields may be
/// double-quoted; embedded quotes are doubled per RFC 4180. Every row must
/// have exactly as many fields as the header, otherwise ValidationError
/// naming the offending line.
CsvTable read_csv(std::istream& in, const std::string& source_name);

/// Throws ValidationError unless the header matches `expected` exactly.
void require_header(const CsvTable& table, const std::vector<std::string>& expected,
                    const std::string& source_name);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

} // namespace procqx
