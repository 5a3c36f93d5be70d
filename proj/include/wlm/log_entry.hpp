#ifndef WLM_LOG_ENTRY_HPP
#define WLM_LOG_ENTRY_HPP

#include <chrono>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wlm {

using Instant = std::chrono::sys_seconds;

/// One request line of a CLF or ECLF access log.
///
/// `timestamp` is UTC; `utc_offset` keeps the zone the server wrote so the
/// line can be reproduced. `referrer` and `user_agent` are set exactly when
/// the source line carried the two trailing ECLF fields.
struct LogEntry {
  std::string server_id;
  std::string remote_host;
  std::optional<std::string> ident;
  std::optional<std::string> auth_user;
  Instant timestamp{};
  std::chrono::minutes utc_offset{0};
  std::string method;
  std::string url;
  std::string protocol;
  int status = 0;
  std::optional<std::uint64_t> bytes;
  std::optional<std::string> referrer;
  std::optional<std::string> user_agent;

  bool is_extended() const { return user_agent.has_value(); }

  friend bool operator==(const LogEntry &, const LogEntry &) = default;
};

enum class RejectReason {
  blank,
  structure,
  quoting,
  date,
  request,
  status,
  bytes,
  url,
};

std::string_view to_string(RejectReason reason);

struct Rejection {
  RejectReason reason;
  std::string detail;
};

using ParseResult = std::variant<LogEntry, Rejection>;

struct RejectSample {
  std::size_t line_number; // 1-based
  std::string line;
  Rejection rejection;
};

struct ParseOutcome {
  std::string server_id;
  std::vector<LogEntry> entries;
  std::size_t rejected = 0;
  std::vector<RejectSample> reject_samples;
  /// Raw bytes consumed, newline terminators included.
  std::uint64_t input_bytes = 0;

  std::size_t line_count() const { return entries.size() + rejected; }
};

inline constexpr std::size_t kMaxRejectSamples = 10;

/// Parses `dd/Mon/yyyy:HH:MM:SS +zzzz`. Returns the UTC instant and offset.
std::optional<std::pair<Instant, std::chrono::minutes>>
parse_clf_date(std::string_view text);

std::string format_clf_date(Instant utc, std::chrono::minutes offset);

/// Drops a `#fragment`, collapses runs of `/` in the path and decodes
/// percent-escapes of unreserved characters. The query string is kept.
std::string normalize_url(std::string_view raw);

ParseResult parse_line(std::string_view line, std::string_view server_id);

ParseOutcome parse_stream(std::span<const std::string> lines,
                          std::string_view server_id);

/// Reads a log file (gzip when the name ends in `.gz`) and parses it.
/// Throws std::runtime_error when the file cannot be opened.
ParseOutcome parse_file(const std::string &path, std::string_view server_id);

/// Renders the entry back in CLF, or ECLF when it carries a user agent.
std::string format_line(const LogEntry &entry);

} // namespace wlm

#endif // WLM_LOG_ENTRY_HPP
