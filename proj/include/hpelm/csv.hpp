#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace hpelm::csv {

// Reads one record, honouring double-quoted fields (which may contain commas,
// doubled quotes and line breaks). Returns false at end of input. `line` is
// advanced by the number of physical lines consumed.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line);

// Quotes a field when it contains a comma, quote or line break.
std::string field(std::string_view text);

}  // namespace hpelm::csv
