#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace crlab::csv {

// 12 significant digits, '.' decimal separator, "nan"/"inf" spelled out.
std::string num(double x);
std::string num(long long x);
inline std::string num(int x) { return num(static_cast<long long>(x)); }

// RFC-4180 field quoting: quotes only when needed, doubled inner quotes.
std::string quote(const std::string& field);

void write_row(std::ostream& out, const std::vector<std::string>& fields);

// Minimal reader for files produced by write_row.
std::vector<std::vector<std::string>> parse(const std::string& text);

}  // namespace crlab::csv
