#include "wlm/preprocess.hpp"

#include "wlm/csv.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <stdexcept>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

namespace wlm {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string epoch(Instant t) {
  return std::to_string(t.time_since_epoch().count());
}

struct Tagged {
  const LogEntry *entry;
  Instant adjusted;
  std::size_t position;
};

} // namespace

// ---------------------------------------------------------------------------

std::vector<LogEntry> merge(std::span<const ParseOutcome> outcomes,
                            const ClockSkews &skews) {
  std::vector<Tagged> tagged;
  std::size_t total = 0;
  for (const auto &o : outcomes)
    total += o.entries.size();
  tagged.reserve(total);

  for (const auto &outcome : outcomes) {
    for (std::size_t i = 0; i < outcome.entries.size(); ++i) {
      const auto &e = outcome.entries[i];
      const auto skew = skews.find(e.server_id);
      if (skew == skews.end())
        throw std::invalid_argument("no clock skew given for server '" +
                                    e.server_id + "'");
      tagged.push_back({&e, e.timestamp + skew->second, i});
    }
  }

  std::sort(tagged.begin(), tagged.end(), [](const Tagged &a, const Tagged &b) {
    const auto ka = std::tie(a.adjusted, a.entry->server_id, a.position);
    const auto kb = std::tie(b.adjusted, b.entry->server_id, b.position);
    if (ka != kb)
      return ka < kb;
    // Same server, same slot in two different files: fall back to content.
    return format_line(*a.entry) < format_line(*b.entry);
  });

  std::vector<LogEntry> merged;
  merged.reserve(tagged.size());
  for (const auto &t : tagged) {
    merged.push_back(*t.entry);
    merged.back().timestamp = t.adjusted;
  }
  return merged;
}

// ---------------------------------------------------------------------------

std::string_view to_string(RemovalReason reason) {
  switch (reason) {
  case RemovalReason::suffix:
    return "suffix";
  case RemovalReason::status:
    return "status";
  case RemovalReason::method:
    return "method";
  case RemovalReason::excluded:
    return "excluded";
  }
  return "unknown";
}

CleaningPolicy CleaningPolicy::defaults() {
  CleaningPolicy p;
  p.suffixes = {".gif", ".jpg", ".jpeg", ".png", ".bmp", ".ico", ".css",
                ".js",  ".swf", ".mp3",  ".mpg", ".mpeg", ".avi", ".wav"};
  p.status_filter = true;
  p.methods = {"GET"};
  p.exclusions = {R"(^/robots\.txt$)"};
  return p;
}

struct Cleaner::Impl {
  std::vector<std::string> suffixes;
  std::vector<std::regex> exclusions;
};

Cleaner::Cleaner(CleaningPolicy policy) : policy_(std::move(policy)) {
  auto impl = std::make_shared<Impl>();
  for (const auto &s : policy_.suffixes)
    impl->suffixes.push_back(lower(s));
  for (const auto &pattern : policy_.exclusions)
    impl->exclusions.emplace_back(pattern, std::regex::ECMAScript |
                                               std::regex::icase |
                                               std::regex::optimize);
  impl_ = std::move(impl);
}

std::optional<RemovalReason> Cleaner::removal_reason(const LogEntry &e) const {
  const auto path = lower(std::string_view(e.url).substr(0, e.url.find('?')));
  for (const auto &suffix : impl_->suffixes)
    if (path.ends_with(suffix))
      return RemovalReason::suffix;

  if (policy_.status_filter && (e.status < 200 || e.status > 399))
    return RemovalReason::status;

  if (std::find(policy_.methods.begin(), policy_.methods.end(), e.method) ==
      policy_.methods.end())
    return RemovalReason::method;

  for (const auto &re : impl_->exclusions)
    if (std::regex_search(e.url, re))
      return RemovalReason::excluded;

  return std::nullopt;
}

std::size_t CleanResult::removed_total() const {
  std::size_t total = 0;
  for (const auto &[reason, count] : removed)
    total += count;
  return total;
}

CleanResult clean(std::vector<LogEntry> entries, const CleaningPolicy &policy) {
  const Cleaner cleaner(policy);
  CleanResult result;
  result.kept.reserve(entries.size());
  for (auto &e : entries) {
    if (const auto reason = cleaner.removal_reason(e))
      ++result.removed[*reason];
    else
      result.kept.push_back(std::move(e));
  }
  return result;
}

// ---------------------------------------------------------------------------

UserKey UserKey::of(const LogEntry &e) {
  if (e.auth_user)
    return UserKey{{}, std::nullopt, e.auth_user};
  return UserKey{e.remote_host, e.user_agent, std::nullopt};
}

std::string UserKey::label() const {
  if (login)
    return "login:" + *login;
  if (user_agent)
    return remote_host + '|' + *user_agent;
  return remote_host;
}

UserTable identify_users(std::span<const LogEntry> entries) {
  UserTable table;
  std::map<UserKey, std::size_t> slot;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto &e = entries[i];
    if (i > 0 && e.timestamp < entries[i - 1].timestamp)
      throw std::invalid_argument("identify_users: entries are not time-ordered");
    auto key = UserKey::of(e);
    auto [it, fresh] = slot.try_emplace(key, table.size());
    if (fresh)
      table.push_back({std::move(key), {}});
    table[it->second].entries.push_back(e);
  }
  return table;
}

std::vector<Session> sessionize(const UserTable &users, SessionTimeouts timeouts) {
  if (timeouts.visit > timeouts.session)
    throw std::invalid_argument("visit timeout exceeds session timeout");
  if (timeouts.visit.count() < 0)
    throw std::invalid_argument("timeouts must be non-negative");

  std::vector<Session> sessions;
  for (const auto &user : users) {
    Session *current = nullptr;
    for (const auto &e : user.entries) {
      if (current != nullptr && e.timestamp < current->end)
        throw std::invalid_argument("sessionize: user requests are not time-ordered");

      if (current == nullptr || e.timestamp - current->end > timeouts.session) {
        sessions.push_back(Session{user.key, {}, e.timestamp, e.timestamp, {}});
        current = &sessions.back();
        current->visits.push_back({0, 0});
      } else if (e.timestamp - current->end > timeouts.visit) {
        const auto n = current->requests.size();
        current->visits.push_back({n, n});
      }
      current->requests.push_back(e);
      current->end = e.timestamp;
      current->visits.back().last = current->requests.size();
    }
  }
  return sessions;
}

// ---------------------------------------------------------------------------

double reduction_percent(std::uint64_t input_bytes, std::uint64_t output_bytes) {
  if (input_bytes == 0)
    return 0.0;
  return 100.0 * (1.0 - static_cast<double>(output_bytes) /
                            static_cast<double>(input_bytes));
}

Summary summarize(std::span<const Session> sessions, std::uint64_t input_bytes,
                  std::uint64_t input_lines) {
  Summary out;
  std::map<UserKey, std::size_t> user_slot;

  for (const auto &s : sessions) {
    auto [it, fresh] = user_slot.try_emplace(s.user, out.users.size());
    if (fresh)
      out.users.push_back({out.users.size() + 1, s.user, 0});
    auto &user = out.users[it->second];
    ++user.n_sessions;

    const auto session_id = out.sessions.size() + 1;
    out.sessions.push_back({session_id, user.user_id, s.start, s.end,
                            s.requests.size(), s.visits.size()});

    for (const auto &v : s.visits) {
      const auto visit_id = out.visits.size() + 1;
      const auto reqs = s.visit_requests(v);
      out.visits.push_back({visit_id, session_id, reqs.front().timestamp,
                            reqs.back().timestamp, reqs.size()});
      for (const auto &e : reqs)
        out.requests.push_back({out.requests.size() + 1, visit_id, e.server_id,
                                e.timestamp, e.method, e.url, e.status, e.bytes});
    }
  }

  auto &st = out.stats;
  st.input_bytes = input_bytes;
  st.input_lines = input_lines;
  st.cleaned_lines = out.requests.size();
  st.n_users = out.users.size();
  st.n_sessions = out.sessions.size();
  st.n_visits = out.visits.size();
  st.output_bytes = requests_csv(out).size();
  st.reduction_percent = reduction_percent(st.input_bytes, st.output_bytes);
  return out;
}

std::string users_csv(const Summary &s) {
  std::string out = csv::format_row(
      {"user_id", "remote_host", "user_agent", "login", "n_sessions"});
  for (const auto &u : s.users)
    out += csv::format_row({std::to_string(u.user_id), u.key.remote_host,
                            u.key.user_agent.value_or(""),
                            u.key.login.value_or(""),
                            std::to_string(u.n_sessions)});
  return out;
}

std::string sessions_csv(const Summary &s) {
  std::string out = csv::format_row(
      {"session_id", "user_id", "start", "end", "n_requests", "n_visits"});
  for (const auto &r : s.sessions)
    out += csv::format_row({std::to_string(r.session_id), std::to_string(r.user_id),
                            epoch(r.start), epoch(r.end),
                            std::to_string(r.n_requests),
                            std::to_string(r.n_visits)});
  return out;
}

std::string visits_csv(const Summary &s) {
  std::string out = csv::format_row(
      {"visit_id", "session_id", "start", "end", "n_requests"});
  for (const auto &r : s.visits)
    out += csv::format_row({std::to_string(r.visit_id), std::to_string(r.session_id),
                            epoch(r.start), epoch(r.end),
                            std::to_string(r.n_requests)});
  return out;
}

std::string requests_csv(const Summary &s) {
  std::string out = csv::format_row({"request_id", "visit_id", "server_id", "time",
                                     "method", "url", "status", "bytes"});
  for (const auto &r : s.requests)
    out += csv::format_row({std::to_string(r.request_id), std::to_string(r.visit_id),
                            r.server_id, epoch(r.timestamp), r.method, r.url,
                            std::to_string(r.status),
                            r.bytes ? std::to_string(*r.bytes) : std::string("-")});
  return out;
}

std::string stats_json(const PreprocessStats &st) {
  nlohmann::ordered_json j;
  j["input_bytes"] = st.input_bytes;
  j["output_bytes"] = st.output_bytes;
  j["input_lines"] = st.input_lines;
  j["cleaned_lines"] = st.cleaned_lines;
  j["reduction_percent"] = st.reduction_percent;
  j["n_users"] = st.n_users;
  j["n_sessions"] = st.n_sessions;
  j["n_visits"] = st.n_visits;
  return j.dump(2) + "\n";
}

PreprocessStats parse_stats_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  PreprocessStats st;
  st.input_bytes = j.at("input_bytes").get<std::uint64_t>();
  st.output_bytes = j.at("output_bytes").get<std::uint64_t>();
  st.input_lines = j.at("input_lines").get<std::uint64_t>();
  st.cleaned_lines = j.at("cleaned_lines").get<std::uint64_t>();
  st.reduction_percent = j.at("reduction_percent").get<double>();
  st.n_users = j.at("n_users").get<std::uint64_t>();
  st.n_sessions = j.at("n_sessions").get<std::uint64_t>();
  st.n_visits = j.at("n_visits").get<std::uint64_t>();
  return st;
}

} // namespace wlm
