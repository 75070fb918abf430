#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace travel::csv {

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws InputError naming the column when absent.
    std::size_t column(const std::string& name) const;
};

// RFC-4180-ish reader: quoted fields, embedded commas/quotes/newlines.
// Requires a header row. Throws InputError with file/line context.
Table read_file(const std::string& path);
Table parse(const std::string& text, const std::string& origin);

// Writer quotes only when needed; fields are written verbatim otherwise.
std::string format(const std::vector<std::string>& header,
                   const std::vector<std::vector<std::string>>& rows);
void write_file(const std::string& path, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows);

// Shortest round-trip decimal text for a double (std::to_chars).
std::string format_double(double x);

}  // namespace travel::csv
