// Deterministic NASA-style access log generator for tests.
#ifndef WLM_TESTS_SYNTHETIC_LOG_HPP
#define WLM_TESTS_SYNTHETIC_LOG_HPP

#include "wlm/log_entry.hpp"

#include <array>
#include <random>
#include <string>
#include <vector>

namespace wlm::test_support {

struct SyntheticLogOptions {
  std::size_t lines = 2000;
  std::size_t hosts = 60;
  std::uint32_t seed = 1;
  bool extended = false;
  /// Every k-th line is garbage; 0 disables.
  std::size_t malformed_every = 0;
  std::int64_t start_epoch = 804571200; // 1995-07-01T04:00:00Z
};

inline const std::array<const char *, 12> kPages = {
    "/shuttle/countdown/",          "/shuttle/missions/sts-71/mission-sts-71.html",
    "/history/apollo/",             "/history/apollo/apollo-13/apollo-13.html",
    "/shuttle/missions/missions.html", "/facilities/lc39a.html",
    "/ksc.html",                    "/shuttle/countdown/liftoff.html",
    "/history/history.html",        "/software/winvn/winvn.html",
    "/shuttle/technology/sts-newsref/stsref-toc.html", "/elv/elvpage.htm"};

inline const std::array<const char *, 6> kAssets = {
    "/images/NASA-logosmall.gif", "/images/KSC-logosmall.gif",
    "/images/ksclogo-medium.gif", "/shuttle/countdown/count.gif",
    "/images/MOSAIC-logosmall.gif", "/images/USA-logosmall.gif"};

/// Lines are in time order. Each host prefers a small group of pages so the
/// resulting patterns have cluster structure.
inline std::vector<std::string> synthetic_log(const SyntheticLogOptions &o) {
  std::mt19937 rng(o.seed);
  std::uniform_int_distribution<std::size_t> pick_host(0, o.hosts - 1);
  std::uniform_int_distribution<int> gap(0, 40);
  std::uniform_int_distribution<int> coin(0, 99);
  std::uniform_int_distribution<std::size_t> any_page(0, kPages.size() - 1);
  std::uniform_int_distribution<std::size_t> any_asset(0, kAssets.size() - 1);

  std::vector<std::string> lines;
  lines.reserve(o.lines);
  std::int64_t t = o.start_epoch;
  for (std::size_t i = 0; i < o.lines; ++i) {
    if (o.malformed_every != 0 && (i + 1) % o.malformed_every == 0) {
      lines.emplace_back("garbage line " + std::to_string(i));
      continue;
    }
    t += gap(rng);
    if (coin(rng) == 0)
      t += 3600; // quiet period, forces new sessions

    const auto host = pick_host(rng);
    const auto group = host % 3;
    std::string url;
    const int roll = coin(rng);
    if (roll < 55)
      url = kAssets[any_asset(rng)];
    else if (roll < 90)
      url = kPages[group * 4 + static_cast<std::size_t>(coin(rng) % 4)];
    else
      url = kPages[any_page(rng)];

    int status = 200;
    const int s = coin(rng);
    if (s < 6)
      status = 304;
    else if (s < 8)
      status = 404;
    const char *method = coin(rng) < 3 ? "HEAD" : "GET";
    const auto bytes = status == 304 ? std::string("0")
                       : status == 404 ? std::string("-")
                                       : std::to_string(200 + coin(rng) * 97);

    LogEntry e;
    e.remote_host = "host" + std::to_string(host) + ".example.net";
    e.timestamp = Instant{std::chrono::seconds{t}};
    e.utc_offset = std::chrono::minutes{-240};
    e.method = method;
    e.url = url;
    e.protocol = "HTTP/1.0";
    e.status = status;
    if (bytes != "-")
      e.bytes = std::stoull(bytes);
    if (o.extended) {
      e.referrer = "-";
      e.user_agent = host % 2 == 0 ? "Mozilla/1.1N (X11)" : "NCSA Mosaic/2.0";
    }
    lines.push_back(format_line(e));
  }
  return lines;
}

} // namespace wlm::test_support

#endif
