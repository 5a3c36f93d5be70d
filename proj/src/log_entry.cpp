#include "wlm/log_entry.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <memory>
#include <stdexcept>

#include <zlib.h>

namespace wlm {

namespace {

using namespace std::chrono;

constexpr std::array<std::string_view, 12> kMonths = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun",
    "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool all_digits(std::string_view s) {
  if (s.empty())
    return false;
  for (char c : s)
    if (c < '0' || c > '9')
      return false;
  return true;
}

template <typename T> std::optional<T> to_number(std::string_view s) {
  if (!all_digits(s))
    return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    return std::nullopt;
  return value;
}

int hex_value(char c) {
  if (c >= '0' && c <= '9')
    return c - '0';
  if (c >= 'a' && c <= 'f')
    return c - 'a' + 10;
  if (c >= 'A' && c <= 'F')
    return c - 'A' + 10;
  return -1;
}

bool is_unreserved(unsigned char c) {
  return std::isalnum(c) || c == '-' || c == '.' || c == '_' || c == '~';
}

Rejection reject(RejectReason reason, std::string detail) {
  return Rejection{reason, std::move(detail)};
}

// Cursor over one log line. Fields are separated by runs of spaces.
class LineScanner {
public:
  explicit LineScanner(std::string_view line) : line_(line) {}

  bool at_end() const { return pos_ >= line_.size(); }
  char peek() const { return line_[pos_]; }

  void skip_spaces() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t'))
      ++pos_;
  }

  std::string_view token() {
    const auto start = pos_;
    while (pos_ < line_.size() && line_[pos_] != ' ' && line_[pos_] != '\t')
      ++pos_;
    return line_.substr(start, pos_ - start);
  }

  std::optional<std::string_view> bracketed() {
    if (at_end() || line_[pos_] != '[')
      return std::nullopt;
    const auto close = line_.find(']', pos_ + 1);
    if (close == std::string_view::npos)
      return std::nullopt;
    auto inner = line_.substr(pos_ + 1, close - pos_ - 1);
    pos_ = close + 1;
    return inner;
  }

  // Double-quoted field; `\"` and `\\` are escapes, any other backslash is
  // literal. The closing quote must be followed by a space or end of line.
  std::optional<std::string> quoted() {
    if (at_end() || line_[pos_] != '"')
      return std::nullopt;
    std::string out;
    for (auto i = pos_ + 1; i < line_.size(); ++i) {
      const char c = line_[i];
      if (c == '\\' && i + 1 < line_.size() &&
          (line_[i + 1] == '"' || line_[i + 1] == '\\')) {
        out.push_back(line_[++i]);
      } else if (c == '"') {
        if (i + 1 < line_.size() && line_[i + 1] != ' ' && line_[i + 1] != '\t')
          return std::nullopt;
        pos_ = i + 1;
        return out;
      } else {
        out.push_back(c);
      }
    }
    return std::nullopt;
  }

private:
  std::string_view line_;
  std::size_t pos_ = 0;
};

std::optional<std::string> dash_to_empty(std::string_view token) {
  if (token == "-")
    return std::nullopt;
  return std::string(token);
}

void append_quoted(std::string &out, std::string_view text) {
  out.push_back('"');
  for (char c : text) {
    if (c == '"' || c == '\\')
      out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
}

std::string_view trim_line_end(std::string_view line) {
  while (!line.empty() &&
         (line.back() == '\r' || line.back() == '\n' || line.back() == ' ' ||
          line.back() == '\t'))
    line.remove_suffix(1);
  return line;
}

class OutcomeBuilder {
public:
  explicit OutcomeBuilder(std::string_view server_id) {
    outcome_.server_id = std::string(server_id);
  }

  void add(std::string_view line, std::uint64_t raw_bytes) {
    ++line_number_;
    outcome_.input_bytes += raw_bytes;
    auto result = parse_line(line, outcome_.server_id);
    if (auto *entry = std::get_if<LogEntry>(&result)) {
      outcome_.entries.push_back(std::move(*entry));
      return;
    }
    ++outcome_.rejected;
    if (outcome_.reject_samples.size() < kMaxRejectSamples)
      outcome_.reject_samples.push_back(
          {line_number_, std::string(line), std::get<Rejection>(result)});
  }

  ParseOutcome take() { return std::move(outcome_); }

private:
  ParseOutcome outcome_;
  std::size_t line_number_ = 0;
};

// Splits a byte stream pulled in chunks into lines. `read` returns the
// number of bytes written to the buffer, 0 at end of input.
void for_each_line(const std::function<std::size_t(char *, std::size_t)> &read,
                   const std::function<void(std::string_view, std::uint64_t)> &sink) {
  std::vector<char> buffer(1 << 16);
  std::string pending;
  for (;;) {
    const auto got = read(buffer.data(), buffer.size());
    if (got == 0)
      break;
    std::string_view chunk(buffer.data(), got);
    while (!chunk.empty()) {
      const auto nl = chunk.find('\n');
      if (nl == std::string_view::npos) {
        pending.append(chunk);
        break;
      }
      pending.append(chunk.substr(0, nl));
      sink(pending, pending.size() + 1);
      pending.clear();
      chunk.remove_prefix(nl + 1);
    }
  }
  if (!pending.empty())
    sink(pending, pending.size());
}

} // namespace

std::string_view to_string(RejectReason reason) {
  switch (reason) {
  case RejectReason::blank:
    return "blank";
  case RejectReason::structure:
    return "structure";
  case RejectReason::quoting:
    return "quoting";
  case RejectReason::date:
    return "date";
  case RejectReason::request:
    return "request";
  case RejectReason::status:
    return "status";
  case RejectReason::bytes:
    return "bytes";
  case RejectReason::url:
    return "url";
  }
  return "unknown";
}

std::optional<std::pair<Instant, minutes>> parse_clf_date(std::string_view s) {
  // 01/Jul/1995:00:00:06 -0400
  if (s.size() != 26 || s[2] != '/' || s[6] != '/' || s[11] != ':' ||
      s[14] != ':' || s[17] != ':' || s[20] != ' ' ||
      (s[21] != '+' && s[21] != '-'))
    return std::nullopt;

  const auto d = to_number<unsigned>(s.substr(0, 2));
  const auto y = to_number<int>(s.substr(7, 4));
  const auto hh = to_number<int>(s.substr(12, 2));
  const auto mm = to_number<int>(s.substr(15, 2));
  const auto ss = to_number<int>(s.substr(18, 2));
  const auto zh = to_number<int>(s.substr(22, 2));
  const auto zm = to_number<int>(s.substr(24, 2));
  if (!d || !y || !hh || !mm || !ss || !zh || !zm)
    return std::nullopt;

  unsigned month = 0;
  for (unsigned i = 0; i < kMonths.size(); ++i)
    if (kMonths[i] == s.substr(3, 3))
      month = i + 1;
  if (month == 0)
    return std::nullopt;

  const year_month_day ymd{year{*y}, std::chrono::month{month}, day{*d}};
  if (!ymd.ok() || *hh > 23 || *mm > 59 || *ss > 59 || *zh > 23 || *zm > 59)
    return std::nullopt;

  const minutes offset{(s[21] == '-' ? -1 : 1) * (*zh * 60 + *zm)};
  const auto local = sys_days{ymd} + hours{*hh} + minutes{*mm} + seconds{*ss};
  return std::pair{Instant{local - offset}, offset};
}

std::string format_clf_date(Instant utc, minutes offset) {
  const auto local = utc + offset;
  const auto day_point = floor<days>(local);
  const year_month_day ymd{day_point};
  const hh_mm_ss tod{local - day_point};
  const auto abs_offset = offset < minutes{0} ? -offset.count() : offset.count();

  char buf[40];
  std::snprintf(buf, sizeof buf, "%02u/%s/%04d:%02d:%02d:%02d %c%02d%02d",
                static_cast<unsigned>(ymd.day()),
                kMonths[static_cast<unsigned>(ymd.month()) - 1].data(),
                static_cast<int>(ymd.year()),
                static_cast<int>(tod.hours().count()),
                static_cast<int>(tod.minutes().count()),
                static_cast<int>(tod.seconds().count()),
                offset < minutes{0} ? '-' : '+',
                static_cast<int>(abs_offset / 60),
                static_cast<int>(abs_offset % 60));
  return buf;
}

std::string normalize_url(std::string_view raw) {
  if (const auto hash = raw.find('#'); hash != std::string_view::npos)
    raw = raw.substr(0, hash);

  std::string decoded;
  decoded.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == '%' && i + 2 < raw.size()) {
      const int hi = hex_value(raw[i + 1]);
      const int lo = hex_value(raw[i + 2]);
      if (hi >= 0 && lo >= 0) {
        const auto c = static_cast<unsigned char>(hi * 16 + lo);
        if (is_unreserved(c)) {
          decoded.push_back(static_cast<char>(c));
          i += 2;
          continue;
        }
      }
    }
    decoded.push_back(raw[i]);
  }

  const auto query = decoded.find('?');
  const auto path_end = query == std::string::npos ? decoded.size() : query;
  std::string out;
  out.reserve(decoded.size());
  for (std::size_t i = 0; i < path_end; ++i) {
    if (decoded[i] == '/' && !out.empty() && out.back() == '/')
      continue;
    out.push_back(decoded[i]);
  }
  out.append(decoded, path_end, std::string::npos);
  return out;
}

ParseResult parse_line(std::string_view raw_line, std::string_view server_id) {
  const auto line = trim_line_end(raw_line);
  LineScanner scan(line);
  scan.skip_spaces();
  if (scan.at_end())
    return reject(RejectReason::blank, "empty line");

  LogEntry entry;
  entry.server_id = std::string(server_id);
  entry.remote_host = std::string(scan.token());
  scan.skip_spaces();
  const auto ident = scan.token();
  scan.skip_spaces();
  const auto auth = scan.token();
  scan.skip_spaces();
  if (ident.empty() || auth.empty() || scan.at_end())
    return reject(RejectReason::structure, "expected host ident authuser [date]");
  entry.ident = dash_to_empty(ident);
  entry.auth_user = dash_to_empty(auth);

  const auto date_text = scan.bracketed();
  if (!date_text)
    return reject(RejectReason::structure, "missing [date]");
  const auto when = parse_clf_date(*date_text);
  if (!when)
    return reject(RejectReason::date, std::string(*date_text));
  entry.timestamp = when->first;
  entry.utc_offset = when->second;

  scan.skip_spaces();
  if (scan.at_end() || scan.peek() != '"')
    return reject(RejectReason::structure, "missing quoted request");
  const auto request = scan.quoted();
  if (!request)
    return reject(RejectReason::quoting, "unterminated or malformed request quote");

  {
    std::string_view req(*request);
    const auto sp = req.find(' ');
    if (sp == std::string_view::npos || sp == 0)
      return reject(RejectReason::request, "expected \"method url [protocol]\"");
    const auto method = req.substr(0, sp);
    for (char c : method)
      if (!std::isalpha(static_cast<unsigned char>(c)))
        return reject(RejectReason::request, "bad method token");
    auto rest = req.substr(sp + 1);
    const auto last_sp = rest.rfind(' ');
    if (last_sp != std::string_view::npos &&
        rest.substr(last_sp + 1).starts_with("HTTP/")) {
      entry.protocol = std::string(rest.substr(last_sp + 1));
      rest = rest.substr(0, last_sp);
    }
    entry.method = std::string(method);
    entry.url = normalize_url(rest);
    if (entry.url.empty())
      return reject(RejectReason::url, "empty url after normalization");
  }

  scan.skip_spaces();
  const auto status_text = scan.token();
  const auto status = status_text.size() == 3 ? to_number<int>(status_text)
                                              : std::nullopt;
  if (!status || *status < 100 || *status > 599)
    return reject(RejectReason::status, std::string(status_text));
  entry.status = *status;

  scan.skip_spaces();
  const auto bytes_text = scan.token();
  if (bytes_text.empty())
    return reject(RejectReason::structure, "missing bytes field");
  if (bytes_text != "-") {
    const auto bytes = to_number<std::uint64_t>(bytes_text);
    if (!bytes)
      return reject(RejectReason::bytes, std::string(bytes_text));
    entry.bytes = *bytes;
  }

  scan.skip_spaces();
  if (scan.at_end())
    return entry;

  auto referrer = scan.quoted();
  scan.skip_spaces();
  auto agent = scan.quoted();
  scan.skip_spaces();
  if (!referrer || !agent)
    return reject(RejectReason::quoting, "malformed referrer/user-agent fields");
  if (!scan.at_end())
    return reject(RejectReason::structure, "trailing data after user agent");
  entry.referrer = std::move(referrer);
  entry.user_agent = std::move(agent);
  return entry;
}

ParseOutcome parse_stream(std::span<const std::string> lines,
                          std::string_view server_id) {
  OutcomeBuilder builder(server_id);
  for (const auto &line : lines)
    builder.add(line, line.size() + 1);
  return builder.take();
}

ParseOutcome parse_file(const std::string &path, std::string_view server_id) {
  OutcomeBuilder builder(server_id);
  auto sink = [&](std::string_view line, std::uint64_t raw) {
    builder.add(line, raw);
  };

  if (path.ends_with(".gz")) {
    gzFile file = gzopen(path.c_str(), "rb");
    if (file == nullptr)
      throw std::runtime_error("cannot open " + path);
    std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(file, &gzclose);
    for_each_line(
        [&](char *buf, std::size_t cap) -> std::size_t {
          const int got = gzread(file, buf, static_cast<unsigned>(cap));
          if (got < 0)
            throw std::runtime_error("gzip read error in " + path);
          return static_cast<std::size_t>(got);
        },
        sink);
    return builder.take();
  }

  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::runtime_error("cannot open " + path);
  for_each_line(
      [&](char *buf, std::size_t cap) -> std::size_t {
        in.read(buf, static_cast<std::streamsize>(cap));
        return static_cast<std::size_t>(in.gcount());
      },
      sink);
  return builder.take();
}

std::string format_line(const LogEntry &e) {
  std::string out;
  out.reserve(128);
  out += e.remote_host;
  out += ' ';
  out += e.ident.value_or("-");
  out += ' ';
  out += e.auth_user.value_or("-");
  out += " [";
  out += format_clf_date(e.timestamp, e.utc_offset);
  out += "] ";
  std::string request = e.method + ' ' + e.url;
  if (!e.protocol.empty())
    request += ' ' + e.protocol;
  append_quoted(out, request);
  out += ' ';
  out += std::to_string(e.status);
  out += ' ';
  out += e.bytes ? std::to_string(*e.bytes) : std::string("-");
  if (e.user_agent) {
    out += ' ';
    append_quoted(out, e.referrer.value_or("-"));
    out += ' ';
    append_quoted(out, *e.user_agent);
  }
  return out;
}

} // namespace wlm
