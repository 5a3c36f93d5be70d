#include "wlm/preprocess.hpp"

#include "support/synthetic_log.hpp"
#include "wlm/csv.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <random>
#include <set>

using namespace wlm;
using namespace std::chrono;

namespace {

LogEntry entry(std::string host, std::int64_t t, std::string url = "/index.html",
               std::string server = "www") {
  LogEntry e;
  e.server_id = std::move(server);
  e.remote_host = std::move(host);
  e.timestamp = Instant{seconds{t}};
  e.method = "GET";
  e.url = std::move(url);
  e.protocol = "HTTP/1.0";
  e.status = 200;
  e.bytes = 100;
  return e;
}

ParseOutcome outcome_of(std::string server, std::vector<LogEntry> entries) {
  ParseOutcome o;
  o.server_id = server;
  for (auto &e : entries)
    e.server_id = server;
  o.entries = std::move(entries);
  return o;
}

std::vector<ParseOutcome> random_outcomes(std::mt19937 &rng, std::size_t servers,
                                          std::size_t per_server, ClockSkews &skews) {
  std::vector<ParseOutcome> out;
  for (std::size_t s = 0; s < servers; ++s) {
    const auto id = "srv" + std::to_string(s);
    skews[id] = seconds{static_cast<int>(rng() % 121) - 60};
    test_support::SyntheticLogOptions opt;
    opt.lines = per_server;
    opt.seed = static_cast<std::uint32_t>(rng());
    opt.hosts = 20;
    out.push_back(parse_stream(test_support::synthetic_log(opt), id));
  }
  return out;
}

} // namespace

// --- merge -----------------------------------------------------------------

TEST(Merge, SingleServerZeroSkewIsIdentity) {
  std::vector<ParseOutcome> outs = {
      outcome_of("a", {entry("h1", 10), entry("h2", 20), entry("h3", 20), entry("h1", 30)})};
  const auto merged = merge(outs, {{"a", seconds{0}}});
  EXPECT_EQ(merged, outs[0].entries);
}

TEST(Merge, NegativeSkewMovesServerEarlier) {
  const std::int64_t ten = 36000;
  std::vector<ParseOutcome> outs = {outcome_of("A", {entry("x", ten)}),
                                    outcome_of("B", {entry("y", ten + 1)})};
  const auto merged = merge(outs, {{"A", seconds{0}}, {"B", seconds{-2}}});
  ASSERT_EQ(merged.size(), 2u);
  EXPECT_EQ(merged[0].server_id, "B");
  EXPECT_EQ(merged[0].timestamp, Instant{seconds{ten - 1}});
  EXPECT_EQ(merged[1].server_id, "A");
}

TEST(Merge, MissingSkewThrows) {
  std::vector<ParseOutcome> outs = {outcome_of("A", {entry("x", 1)}),
                                    outcome_of("B", {entry("y", 2)})};
  EXPECT_THROW(merge(outs, {{"A", seconds{0}}}), std::invalid_argument);
}

TEST(Merge, MatchesMaterializeThenSortOracle) {
  std::mt19937 rng(31);
  for (int round = 0; round < 5; ++round) {
    ClockSkews skews;
    const auto outs = random_outcomes(rng, 3, 1000, skews);

    // Oracle: materialize every adjusted entry with its key, sort the keys.
    using Key = std::tuple<std::int64_t, std::string, std::size_t, std::string>;
    std::vector<Key> keys;
    for (const auto &o : outs)
      for (std::size_t i = 0; i < o.entries.size(); ++i) {
        auto e = o.entries[i];
        e.timestamp += skews.at(e.server_id);
        keys.emplace_back(e.timestamp.time_since_epoch().count(), e.server_id, i,
                          format_line(e));
      }
    std::sort(keys.begin(), keys.end());

    const auto merged = merge(outs, skews);
    ASSERT_EQ(merged.size(), keys.size());
    for (std::size_t i = 0; i < merged.size(); ++i) {
      EXPECT_EQ(merged[i].timestamp.time_since_epoch().count(), std::get<0>(keys[i]));
      EXPECT_EQ(merged[i].server_id, std::get<1>(keys[i]));
      EXPECT_EQ(format_line(merged[i]), std::get<3>(keys[i]));
    }
  }
}

TEST(Merge, InvariantToInputOrder) {
  std::mt19937 rng(5);
  for (int round = 0; round < 20; ++round) {
    ClockSkews skews;
    auto outs = random_outcomes(rng, 4, 200, skews);
    // A second file from an existing server, as after log rotation.
    test_support::SyntheticLogOptions opt;
    opt.lines = 200;
    opt.seed = static_cast<std::uint32_t>(rng());
    outs.push_back(parse_stream(test_support::synthetic_log(opt), "srv0"));

    const auto reference = merge(outs, skews);
    std::shuffle(outs.begin(), outs.end(), rng);
    EXPECT_EQ(merge(outs, skews), reference);
  }
}

// --- clean -----------------------------------------------------------------

TEST(Clean, ImageRemovedPageKept) {
  auto img = entry("h", 1, "/images/ksclogo-medium.gif");
  auto page = entry("h", 2, "/shuttle/countdown/");
  const auto r = clean({img, page}, CleaningPolicy::defaults());
  ASSERT_EQ(r.kept.size(), 1u);
  EXPECT_EQ(r.kept[0].url, "/shuttle/countdown/");
  EXPECT_EQ(r.removed.at(RemovalReason::suffix), 1u);
}

TEST(Clean, RuleDetails) {
  const Cleaner cleaner(CleaningPolicy::defaults());
  EXPECT_EQ(cleaner.removal_reason(entry("h", 1, "/IMAGES/LOGO.GIF?size=2")),
            RemovalReason::suffix);
  EXPECT_EQ(cleaner.removal_reason(entry("h", 1, "/gif/list.html")), std::nullopt);
  EXPECT_EQ(cleaner.removal_reason(entry("h", 1, "/page.html?file=a.gif")), std::nullopt);

  auto missing = entry("h", 1, "/nothing.html");
  missing.status = 404;
  EXPECT_EQ(cleaner.removal_reason(missing), RemovalReason::status);
  auto redirect = entry("h", 1, "/moved.html");
  redirect.status = 302;
  EXPECT_EQ(cleaner.removal_reason(redirect), std::nullopt);

  auto head = entry("h", 1, "/a.html");
  head.method = "HEAD";
  EXPECT_EQ(cleaner.removal_reason(head), RemovalReason::method);

  EXPECT_EQ(cleaner.removal_reason(entry("h", 1, "/robots.txt")), RemovalReason::excluded);
  EXPECT_EQ(cleaner.removal_reason(entry("h", 1, "/ROBOTS.TXT")), RemovalReason::excluded);

  auto policy = CleaningPolicy::defaults();
  policy.status_filter = false;
  policy.exclusions.push_back("^/cgi-bin/");
  const Cleaner custom(policy);
  EXPECT_EQ(custom.removal_reason(missing), std::nullopt);
  EXPECT_EQ(custom.removal_reason(entry("h", 1, "/cgi-bin/imagemap/countdown?1,2")),
            RemovalReason::excluded);
}

TEST(Clean, Idempotent) {
  std::mt19937 rng(11);
  for (int round = 0; round < 30; ++round) {
    test_support::SyntheticLogOptions opt;
    opt.lines = 500;
    opt.seed = static_cast<std::uint32_t>(rng());
    const auto entries = parse_stream(test_support::synthetic_log(opt), "www").entries;
    const auto once = clean(entries, CleaningPolicy::defaults());
    const auto twice = clean(once.kept, CleaningPolicy::defaults());
    EXPECT_EQ(twice.kept, once.kept);
    EXPECT_EQ(twice.removed_total(), 0u);
    EXPECT_EQ(once.kept.size() + once.removed_total(), entries.size());
  }
}

// --- users -----------------------------------------------------------------

TEST(IdentifyUsers, UserAgentSeparatesUsers) {
  auto a = entry("proxy.net", 1);
  a.user_agent = "Mozilla/2.0";
  a.referrer = "-";
  auto b = entry("proxy.net", 2);
  b.user_agent = "Lynx/2.4";
  b.referrer = "-";
  auto c = entry("proxy.net", 3);
  c.user_agent = "Mozilla/2.0";
  c.referrer = "-";
  const std::vector<LogEntry> entries = {a, b, c};
  const auto users = identify_users(entries);
  ASSERT_EQ(users.size(), 2u);
  EXPECT_EQ(users[0].entries.size(), 2u);
  EXPECT_EQ(users[1].key.user_agent, "Lynx/2.4");
}

TEST(IdentifyUsers, SingleEntry) {
  const std::vector<LogEntry> entries = {entry("h", 1)};
  EXPECT_EQ(identify_users(entries).size(), 1u);
}

TEST(IdentifyUsers, LoginOverridesHost) {
  auto a = entry("home.net", 1);
  a.auth_user = "alice";
  auto b = entry("work.net", 2);
  b.auth_user = "alice";
  auto c = entry("home.net", 3);
  const std::vector<LogEntry> entries = {a, b, c};
  const auto users = identify_users(entries);
  ASSERT_EQ(users.size(), 2u);
  EXPECT_EQ(users[0].key.login, "alice");
  EXPECT_EQ(users[0].entries.size(), 2u);
  EXPECT_EQ(users[0].key.label(), "login:alice");
  EXPECT_EQ(users[1].key.label(), "home.net");
}

TEST(IdentifyUsers, RejectsUnorderedInput) {
  const std::vector<LogEntry> entries = {entry("h", 5), entry("h", 4)};
  EXPECT_THROW(identify_users(entries), std::invalid_argument);
}

// --- sessions --------------------------------------------------------------

TEST(Sessionize, ThirtyMinuteRule) {
  const std::vector<LogEntry> entries = {entry("u", 0), entry("u", 600), entry("u", 2700)};
  const auto sessions = sessionize(identify_users(entries));
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].requests.size(), 2u);
  EXPECT_EQ(sessions[0].start, Instant{seconds{0}});
  EXPECT_EQ(sessions[0].end, Instant{seconds{600}});
  EXPECT_EQ(sessions[1].requests.size(), 1u);
}

TEST(Sessionize, SingleRequest) {
  const std::vector<LogEntry> entries = {entry("u", 42)};
  const auto sessions = sessionize(identify_users(entries));
  ASSERT_EQ(sessions.size(), 1u);
  ASSERT_EQ(sessions[0].visits.size(), 1u);
  EXPECT_EQ(sessions[0].visits[0].size(), 1u);
}

TEST(Sessionize, GapEqualToTimeoutStaysInSession) {
  const std::vector<LogEntry> entries = {entry("u", 0), entry("u", 1800), entry("u", 3601)};
  const auto sessions = sessionize(identify_users(entries));
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].requests.size(), 2u);
  // 1800 s > 10 min visit timeout.
  EXPECT_EQ(sessions[0].visits.size(), 2u);
}

TEST(Sessionize, VisitTimeoutMustNotExceedSession) {
  const std::vector<LogEntry> entries = {entry("u", 0)};
  EXPECT_THROW(sessionize(identify_users(entries), {minutes{10}, minutes{20}}),
               std::invalid_argument);
}

TEST(Sessionize, MatchesScanOracle) {
  std::mt19937 rng(77);
  std::uniform_int_distribution<int> gap(0, 3000);
  for (int round = 0; round < 500; ++round) {
    const auto session_timeout = seconds{60 + rng() % 2000};
    const auto visit_timeout = seconds{rng() % (session_timeout.count() + 1)};
    std::vector<LogEntry> entries;
    std::vector<std::int64_t> times;
    std::int64_t t = 0;
    const auto count = 1 + rng() % 40;
    for (std::size_t i = 0; i < count; ++i) {
      t += gap(rng);
      times.push_back(t);
      entries.push_back(entry("u", t));
    }

    // Oracle: indices where a new session / visit begins.
    std::vector<std::size_t> session_starts = {0}, visit_starts = {0};
    for (std::size_t i = 1; i < times.size(); ++i) {
      const auto d = times[i] - times[i - 1];
      if (d > session_timeout.count())
        session_starts.push_back(i);
      if (d > visit_timeout.count())
        visit_starts.push_back(i);
    }

    const auto sessions =
        sessionize(identify_users(entries), {session_timeout, visit_timeout});
    std::vector<std::size_t> got_sessions, got_visits;
    std::size_t offset = 0;
    for (const auto &s : sessions) {
      got_sessions.push_back(offset);
      for (const auto &v : s.visits)
        got_visits.push_back(offset + v.first);
      offset += s.requests.size();
    }
    EXPECT_EQ(got_sessions, session_starts);
    EXPECT_EQ(got_visits, visit_starts);
    EXPECT_EQ(offset, times.size());
  }
}

// --- summarize -------------------------------------------------------------

TEST(Summarize, Empty) {
  const auto s = summarize({}, 0, 0);
  EXPECT_TRUE(s.users.empty());
  EXPECT_TRUE(s.sessions.empty());
  EXPECT_TRUE(s.visits.empty());
  EXPECT_TRUE(s.requests.empty());
  EXPECT_EQ(s.stats.n_users, 0u);
  EXPECT_EQ(s.stats.reduction_percent, 0.0);
}

TEST(Summarize, ReferentialIntegrityOneSessionTwoVisits) {
  const std::vector<LogEntry> entries = {entry("u", 0), entry("u", 60), entry("u", 1000)};
  const auto sessions = sessionize(identify_users(entries));
  ASSERT_EQ(sessions.size(), 1u);
  ASSERT_EQ(sessions[0].visits.size(), 2u);
  const auto s = summarize(sessions, 1000, 3);

  std::set<std::uint64_t> session_ids, visit_ids, user_ids;
  for (const auto &u : s.users)
    user_ids.insert(u.user_id);
  for (const auto &r : s.sessions) {
    session_ids.insert(r.session_id);
    EXPECT_TRUE(user_ids.count(r.user_id));
  }
  for (const auto &v : s.visits) {
    visit_ids.insert(v.visit_id);
    EXPECT_TRUE(session_ids.count(v.session_id));
  }
  for (const auto &r : s.requests)
    EXPECT_TRUE(visit_ids.count(r.visit_id));
  EXPECT_EQ(s.stats.n_users, 1u);
  EXPECT_EQ(s.stats.n_sessions, 1u);
  EXPECT_EQ(s.stats.n_visits, 2u);
  EXPECT_EQ(s.visits[0].n_requests, 2u);
  EXPECT_EQ(s.visits[1].n_requests, 1u);
}

TEST(Summarize, ConservationAndStats) {
  std::mt19937 rng(123);
  for (int round = 0; round < 30; ++round) {
    test_support::SyntheticLogOptions opt;
    opt.lines = 200 + rng() % 800;
    opt.seed = static_cast<std::uint32_t>(rng());
    opt.extended = round % 2 == 0;
    const auto lines = test_support::synthetic_log(opt);
    const auto parsed = parse_stream(lines, "www");
    const auto cleaned = clean(parsed.entries, CleaningPolicy::defaults());
    const auto users = identify_users(cleaned.kept);
    const auto sessions = sessionize(users);
    const auto s = summarize(sessions, parsed.input_bytes, parsed.line_count());

    std::size_t per_user = 0, per_session = 0, per_visit = 0;
    for (const auto &u : users)
      per_user += u.entries.size();
    for (const auto &sess : sessions) {
      per_session += sess.requests.size();
      for (const auto &v : sess.visits)
        per_visit += v.size();
      for (std::size_t i = 1; i < sess.requests.size(); ++i)
        EXPECT_LE(sess.requests[i].timestamp - sess.requests[i - 1].timestamp,
                  minutes{30});
    }
    EXPECT_EQ(s.stats.cleaned_lines, cleaned.kept.size());
    EXPECT_EQ(per_user, cleaned.kept.size());
    EXPECT_EQ(per_session, cleaned.kept.size());
    EXPECT_EQ(per_visit, cleaned.kept.size());
    EXPECT_GE(s.stats.n_visits, s.stats.n_sessions);
    EXPECT_GE(s.stats.n_sessions, 1u);
    EXPECT_EQ(s.stats.output_bytes, requests_csv(s).size());
    EXPECT_EQ(s.stats.reduction_percent,
              100.0 * (1.0 - static_cast<double>(s.stats.output_bytes) /
                                 static_cast<double>(s.stats.input_bytes)));
  }
}

TEST(Summarize, CsvShapesAndStatsKeys) {
  const std::vector<LogEntry> entries = {entry("a,b", 0, "/x,\"y\""), entry("c", 5)};
  const auto s = summarize(sessionize(identify_users(entries)), 500, 2);

  const auto users = csv::parse(users_csv(s));
  ASSERT_EQ(users.size(), 3u);
  EXPECT_EQ(users[1][1], "a,b");
  const auto reqs = csv::parse(requests_csv(s));
  ASSERT_EQ(reqs.size(), 3u);
  EXPECT_EQ(reqs[1][5], "/x,\"y\"");
  EXPECT_EQ(csv::parse(sessions_csv(s)).size(), 3u);
  EXPECT_EQ(csv::parse(visits_csv(s)).size(), 3u);

  const auto j = nlohmann::ordered_json::parse(stats_json(s.stats));
  std::vector<std::string> keys;
  for (const auto &[k, v] : j.items())
    keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"input_bytes", "output_bytes", "input_lines",
                                            "cleaned_lines", "reduction_percent",
                                            "n_users", "n_sessions", "n_visits"}));
  const auto back = parse_stats_json(stats_json(s.stats));
  EXPECT_EQ(back.reduction_percent, s.stats.reduction_percent);
  EXPECT_EQ(back.output_bytes, s.stats.output_bytes);
}
