#ifndef FORMULAB_CSV_HPP_
#define FORMULAB_CSV_HPP_

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace formulab {

// Shortest decimal representation that round-trips the exact double, so
// persisted logs can be re-parsed bit-exactly.
std::string format_double(double v);

// Parses what format_double emits (plus nan/inf).
double parse_double(const std::string& s);

// RFC 4180 quoting: fields containing comma, quote or newline get wrapped,
// inner quotes doubled.
std::string csv_escape(const std::string& field);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

// Whole-file reader, RFC quoting rules. Throws IoError if unreadable.
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& path);

// Writes to <path>.tmp then renames, so a file at `path` is always complete.
void write_file_atomic(const std::filesystem::path& path,
                       const std::string& contents);

}  // namespace formulab

#endif  // FORMULAB_CSV_HPP_
