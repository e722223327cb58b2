#pragma once

#include <initializer_list>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cbp::csv {

/// Fixed 12 significant digits, independent of
/// the global locale. Non-finite values print as inf, -inf or nan.
std::string number(double v);

/// Quotes a field when it contains a comma, quote or newline.
std::string field(std::string_view text);

void write_row(std::ostream& os, const std::vector<std::string>& fields);
void write_row(std::ostream& os, std::initializer_list<std::string> fields);

}  // namespace cbp::csv
