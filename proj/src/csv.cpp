#include "procqx/csv.hpp"

#include "procqx/errors.hpp"

#include <istream>
#include <ostream>

namespace procqx {

namespace {

std::vector<std::string> split_line(const std::string& line, std::size_t line_no,
                                    const std::string& source_name) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"' && cur.empty()) {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) {
        throw ValidationError(source_name + " line " + std::to_string(line_no) +
                              ": unterminated quoted field");
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

CsvTable read_csv(std::istream& in, const std::string& source_name) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line, line_no, source_name);
        if (table.header.empty()) {
            table.header = std::move(fields);
        } else {
            if (fields.size() != table.header.size()) {
                throw ValidationError(source_name + " line " + std::to_string(line_no) +
                                      ": expected " + std::to_string(table.header.size()) +
                                      " fields, got " + std::to_string(fields.size()));
            }
            table.rows.push_back(std::move(fields));
            table.line_numbers.push_back(line_no);
        }
    }
    if (table.header.empty()) {
        throw ValidationError(source_name + ": empty file, header row required");
    }
    return table;
}

void require_header(const CsvTable& table, const std::vector<std::string>& expected,
                    const std::string& source_name) {
    if (table.header != expected) {
        std::string want;
        for (const auto& h : expected) {
            if (!want.empty()) want += ",";
            want += h;
        }
        throw ValidationError(source_name + ": unexpected header, want '" + want + "'");
    }
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            out << '"';
            for (char c : f) {
                if (c == '"') out << "\"\"";
                else out << c;
            }
            out << '"';
        } else {
            out << f;
        }
    }
    out << '\n';
}

} // namespace procqx
