#include "hpelm/csv.hpp"

#include "hpelm/error.hpp"

namespace hpelm::csv {

bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string text;
  if (!std::getline(in, text)) return false;
  ++line;
  if (!text.empty() && text.back() == '\r') text.pop_back();

  std::string current;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i == text.size()) {
      if (!quoted) break;
      // Quoted field spans a line break.
      std::string more;
      if (!std::getline(in, more)) throw ParseError("unterminated quoted field", line);
      ++line;
      if (!more.empty() && more.back() == '\r') more.pop_back();
      current += '\n';
      text = std::move(more);
      i = 0;
      continue;
    }
    const char c = text[i++];
    if (quoted) {
      if (c == '"') {
        if (i < text.size() && text[i] == '"') {
          current += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return true;
}

std::string field(std::string_view text) {
  if (text.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(text);
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace hpelm::csv
