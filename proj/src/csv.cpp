#include "wlm/csv.hpp"

#include <cstdint>
#include <ostream>
#include <stdexcept>

namespace wlm::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos)
    return std::string(field);
  std::string out;
  out.reserve(field.size() + 2);
  out.push_back('"');
  for (char c : field) {
    if (c == '"')
      out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_row(const Row &row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i != 0)
      out.push_back(',');
    out += escape(row[i]);
  }
  out += "\r\n";
  return out;
}

std::vector<Row> parse(std::string_view text) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  bool quoted = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
    case '"':
      quoted = true;
      field_started = true;
      break;
    case ',':
      end_field();
      field_started = true;
      break;
    case '\r':
      if (i + 1 < text.size() && text[i + 1] == '\n')
        ++i;
      end_row();
      break;
    case '\n':
      end_row();
      break;
    default:
      field.push_back(c);
      field_started = true;
    }
  }
  if (quoted)
    throw std::runtime_error("csv: unterminated quoted field");
  if (field_started || !row.empty())
    end_row();
  return rows;
}

void Writer::row(const Row &fields) {
  const auto line = format_row(fields);
  out_ << line;
  bytes_ += line.size();
}

} // namespace wlm::csv
