#ifndef WLM_PREPROCESS_HPP
#define WLM_PREPROCESS_HPP

#include "wlm/log_entry.hpp"

#include <chrono>
#include <compare>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wlm {

// ---------------------------------------------------------------------------
// Merging
// ---------------------------------------------------------------------------

/// Per-server clock correction, added to every timestamp from that server.
using ClockSkews = std::map<std::string, std::chrono::seconds, std::less<>>;

/// Joins the parsed logs of several servers on one clock. The result is
/// sorted by (adjusted timestamp, server_id, position in its own log) and
/// then by line content, so it does not depend on the order of `outcomes`.
/// Throws std::invalid_argument when a server has no skew entry.
std::vector<LogEntry> merge(std::span<const ParseOutcome> outcomes,
                            const ClockSkews &skews);

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

enum class RemovalReason { suffix, status, method, excluded };

std::string_view to_string(RemovalReason reason);

struct CleaningPolicy {
  std::string name = "default";
  int version = 1;
  /// Lower-case resource suffixes, matched against the path without query.
  std::vector<std::string> suffixes;
  /// Drop anything outside 2xx/3xx.
  bool status_filter = true;
  std::vector<std::string> methods;
  /// ECMAScript regexes searched case-insensitively in the url.
  std::vector<std::string> exclusions;

  static CleaningPolicy defaults();
};

struct CleanResult {
  std::vector<LogEntry> kept;
  std::map<RemovalReason, std::size_t> removed;

  std::size_t removed_total() const;
};

/// Applies the policy rules in order suffix, status, method, exclusion and
/// reports the first one that fires.
class Cleaner {
public:
  explicit Cleaner(CleaningPolicy policy);

  std::optional<RemovalReason> removal_reason(const LogEntry &entry) const;
  const CleaningPolicy &policy() const { return policy_; }

private:
  struct Impl;
  CleaningPolicy policy_;
  std::shared_ptr<const Impl> impl_;
};

CleanResult clean(std::vector<LogEntry> entries, const CleaningPolicy &policy);

// ---------------------------------------------------------------------------
// Users, sessions, visits
// ---------------------------------------------------------------------------

/// Entries with a login are keyed by the login alone; the rest by
/// (remote_host, user_agent). Plain CLF entries have no agent, so every
/// client behind one host collapses into a single user.
struct UserKey {
  std::string remote_host;
  std::optional<std::string> user_agent;
  std::optional<std::string> login;

  static UserKey of(const LogEntry &entry);

  /// Printable key used as `host_key` in pattern files.
  std::string label() const;

  friend auto operator<=>(const UserKey &, const UserKey &) = default;
  friend bool operator==(const UserKey &, const UserKey &) = default;
};

struct UserRequests {
  UserKey key;
  std::vector<LogEntry> entries;
};

/// Users in order of first appearance.
using UserTable = std::vector<UserRequests>;

/// Groups time-ordered entries by user. Throws std::invalid_argument when the
/// input is not sorted by timestamp.
UserTable identify_users(std::span<const LogEntry> entries);

struct SessionTimeouts {
  std::chrono::seconds session{std::chrono::minutes{30}};
  std::chrono::seconds visit{std::chrono::minutes{10}};
};

/// Half-open range [first, last) of a session's requests.
struct Visit {
  std::size_t first = 0;
  std::size_t last = 0;

  std::size_t size() const { return last - first; }
};

struct Session {
  UserKey user;
  std::vector<LogEntry> requests;
  Instant start{};
  Instant end{};
  std::vector<Visit> visits;

  std::span<const LogEntry> visit_requests(const Visit &v) const {
    return std::span(requests).subspan(v.first, v.size());
  }
};

/// Splits each user's requests whenever the gap to the previous request is
/// strictly greater than the timeout. Sessions are ordered by user, then time.
/// Throws std::invalid_argument if visit timeout exceeds session timeout or a
/// user's requests are out of order.
std::vector<Session> sessionize(const UserTable &users,
                                SessionTimeouts timeouts = {});

// ---------------------------------------------------------------------------
// Summarization into keyed record sets
// ---------------------------------------------------------------------------

struct UserRecord {
  std::uint64_t user_id;
  UserKey key;
  std::uint64_t n_sessions;
};

struct SessionRecord {
  std::uint64_t session_id;
  std::uint64_t user_id;
  Instant start;
  Instant end;
  std::uint64_t n_requests;
  std::uint64_t n_visits;
};

struct VisitRecord {
  std::uint64_t visit_id;
  std::uint64_t session_id;
  Instant start;
  Instant end;
  std::uint64_t n_requests;
};

struct RequestRecord {
  std::uint64_t request_id;
  std::uint64_t visit_id;
  std::string server_id;
  Instant timestamp;
  std::string method;
  std::string url;
  int status;
  std::optional<std::uint64_t> bytes;
};

struct PreprocessStats {
  std::uint64_t input_bytes = 0;
  std::uint64_t output_bytes = 0;
  std::uint64_t input_lines = 0;
  std::uint64_t cleaned_lines = 0;
  double reduction_percent = 0.0;
  std::uint64_t n_users = 0;
  std::uint64_t n_sessions = 0;
  std::uint64_t n_visits = 0;
};

/// 100 * (1 - output/input); 0 when there was no input.
double reduction_percent(std::uint64_t input_bytes, std::uint64_t output_bytes);

struct Summary {
  std::vector<UserRecord> users;
  std::vector<SessionRecord> sessions;
  std::vector<VisitRecord> visits;
  std::vector<RequestRecord> requests;
  PreprocessStats stats;
};

/// Flattens sessions into four record sets with 1-based surrogate keys.
/// `stats.output_bytes` is the byte size of requests_csv().
Summary summarize(std::span<const Session> sessions, std::uint64_t input_bytes,
                  std::uint64_t input_lines);

std::string users_csv(const Summary &summary);
std::string sessions_csv(const Summary &summary);
std::string visits_csv(const Summary &summary);
std::string requests_csv(const Summary &summary);

/// stats.json body with the keys in their documented order.
std::string stats_json(const PreprocessStats &stats);
PreprocessStats parse_stats_json(std::string_view text);

} // namespace wlm

#endif // WLM_PREPROCESS_HPP
