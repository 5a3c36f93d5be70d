#ifndef WLM_CSV_HPP
#define WLM_CSV_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace wlm::csv {

using Row = std::vector<std::string>;

// RFC 4180: fields containing a comma, quote, CR or LF are quoted, embedded
// quotes doubled, records end in CRLF.
std::string escape(std::string_view field);
std::string format_row(const Row &row);

/// Parses a whole RFC 4180 document. Throws std::runtime_error on an
/// unterminated quoted field.
std::vector<Row> parse(std::string_view text);

class Writer {
public:
  explicit Writer(std::ostream &out) : out_(out) {}
  void row(const Row &fields);
  std::uint64_t bytes_written() const { return bytes_; }

private:
  std::ostream &out_;
  std::uint64_t bytes_ = 0;
};

} // namespace wlm::csv

#endif // WLM_CSV_HPP
