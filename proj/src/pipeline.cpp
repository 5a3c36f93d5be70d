#include "wlm/pipeline.hpp"

#include "wlm/art1.hpp"
#include "wlm/csv.hpp"
#include "wlm/patterns.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace wlm {

namespace {

constexpr const char *kUsersFile = "users.csv";
constexpr const char *kSessionsFile = "sessions.csv";
constexpr const char *kVisitsFile = "visits.csv";
constexpr const char *kRequestsFile = "requests.csv";
constexpr const char *kStatsFile = "stats.json";
constexpr const char *kPatternsFile = "patterns.csv";
constexpr const char *kUrlIndexFile = "url_index.json";
constexpr const char *kClustersPrefix = "clusters_rho_";

[[noreturn]] void fail(ExitCode code, const std::string &what) {
  throw PipelineError(code, what);
}

std::string read_file(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    fail(ExitCode::missing_input, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out)
    fail(ExitCode::missing_input, "cannot write " + path.string());
}

std::vector<csv::Row> read_table(const fs::path &path,
                                 const csv::Row &expected_header) {
  std::vector<csv::Row> rows;
  try {
    rows = csv::parse(read_file(path));
  } catch (const std::runtime_error &e) {
    if (dynamic_cast<const PipelineError *>(&e) != nullptr)
      throw;
    fail(ExitCode::format_error, path.string() + ": " + e.what());
  }
  if (rows.empty() || rows.front() != expected_header)
    fail(ExitCode::format_error, path.string() + ": unexpected header");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].size() != expected_header.size())
      fail(ExitCode::format_error,
           path.string() + ": row " + std::to_string(i) + " has " +
               std::to_string(rows[i].size()) + " fields");
  rows.erase(rows.begin());
  return rows;
}

std::uint64_t to_u64(const std::string &field, const fs::path &source) {
  try {
    std::size_t used = 0;
    const auto v = std::stoull(field, &used);
    if (used == field.size())
      return v;
  } catch (const std::exception &) {
  }
  fail(ExitCode::format_error, source.string() + ": bad integer '" + field + "'");
}

std::string utc_date(std::int64_t epoch_seconds) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(sys_seconds{seconds{epoch_seconds}})};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string md_cell(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == '|' || c == '\\')
      out.push_back('\\');
    out.push_back(c == '\n' ? ' ' : c);
  }
  return out;
}

std::string md_row(const std::vector<std::string> &cells) {
  std::string out = "|";
  for (const auto &c : cells)
    out += " " + md_cell(c) + " |";
  return out + "\n";
}

std::string md_rule(std::size_t columns) {
  std::string out = "|";
  for (std::size_t i = 0; i < columns; ++i)
    out += " --- |";
  return out + "\n";
}

// Converts exceptions into exit codes and a one-line diagnostic.
int run_guarded(std::string_view name, std::ostream &log,
                const std::function<void()> &body) {
  try {
    body();
    return static_cast<int>(ExitCode::ok);
  } catch (const PipelineError &e) {
    log << "wlm " << name << ": " << e.what() << "\n";
    return static_cast<int>(e.code());
  } catch (const std::invalid_argument &e) {
    log << "wlm " << name << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::usage);
  } catch (const std::exception &e) {
    log << "wlm " << name << ": " << e.what() << "\n";
    return static_cast<int>(ExitCode::format_error);
  }
}

void ensure_out_dir(const fs::path &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    fail(ExitCode::missing_input, "cannot create output directory " + dir.string());
}

} // namespace

std::string format_number(double value) {
  return nlohmann::json(value).dump();
}

fs::path clusters_file_name(double vigilance) {
  return kClustersPrefix + format_number(vigilance) + ".json";
}

// ---------------------------------------------------------------------------

int cmd_preprocess(const PipelineConfig &config, std::ostream &log) {
  return run_guarded("preprocess", log, [&] {
    if (config.inputs.empty())
      fail(ExitCode::usage, "at least one --input is required");
    for (const auto &in : config.inputs)
      if (!fs::is_regular_file(in.path))
        fail(ExitCode::missing_input, "input not found: " + in.path.string());
    ensure_out_dir(config.out_dir);
    fs::remove(config.out_dir / kStatsFile);

    std::vector<ParseOutcome> outcomes;
    ClockSkews skews = config.skews;
    std::uint64_t input_bytes = 0;
    std::uint64_t input_lines = 0;
    for (const auto &in : config.inputs) {
      try {
        outcomes.push_back(parse_file(in.path.string(), in.server_id));
      } catch (const std::runtime_error &e) {
        fail(ExitCode::missing_input, e.what());
      }
      const auto &o = outcomes.back();
      input_bytes += o.input_bytes;
      input_lines += o.line_count();
      skews.try_emplace(in.server_id, std::chrono::seconds{0});
      log << in.path.string() << ": " << o.entries.size() << " entries, "
          << o.rejected << " rejected\n";
      for (const auto &s : o.reject_samples)
        log << "  line " << s.line_number << " [" << to_string(s.rejection.reason)
            << "] " << s.rejection.detail << "\n";
    }

    auto merged = merge(outcomes, skews);
    outcomes.clear();
    auto cleaned = clean(std::move(merged), config.policy);
    for (const auto &[reason, count] : cleaned.removed)
      log << "removed " << count << " (" << to_string(reason) << ")\n";

    const auto users = identify_users(cleaned.kept);
    const auto sessions = sessionize(users, config.timeouts);
    const auto summary = summarize(sessions, input_bytes, input_lines);

    write_file(config.out_dir / kUsersFile, users_csv(summary));
    write_file(config.out_dir / kSessionsFile, sessions_csv(summary));
    write_file(config.out_dir / kVisitsFile, visits_csv(summary));
    write_file(config.out_dir / kRequestsFile, requests_csv(summary));
    // Written last: its presence marks a complete run.
    write_file(config.out_dir / kStatsFile, stats_json(summary.stats));

    const auto &st = summary.stats;
    log << "users " << st.n_users << ", sessions " << st.n_sessions << ", visits "
        << st.n_visits << ", reduction " << format_number(st.reduction_percent)
        << "%\n";
  });
}

int cmd_pattern(const PipelineConfig &config, std::ostream &log) {
  return run_guarded("pattern", log, [&] {
    const auto dir = config.out_dir;
    const auto users = read_table(dir / kUsersFile, {"user_id", "remote_host",
                                                     "user_agent", "login",
                                                     "n_sessions"});
    const auto sessions = read_table(dir / kSessionsFile,
                                     {"session_id", "user_id", "start", "end",
                                      "n_requests", "n_visits"});
    const auto visits = read_table(dir / kVisitsFile, {"visit_id", "session_id",
                                                       "start", "end", "n_requests"});
    const auto requests = read_table(dir / kRequestsFile,
                                     {"request_id", "visit_id", "server_id", "time",
                                      "method", "url", "status", "bytes"});

    std::map<std::uint64_t, std::string> user_label;
    for (const auto &r : users) {
      UserKey key;
      key.remote_host = r[1];
      if (!r[2].empty())
        key.user_agent = r[2];
      if (!r[3].empty())
        key.login = r[3];
      user_label[to_u64(r[0], kUsersFile)] = key.label();
    }
    std::map<std::uint64_t, std::string> session_label;
    for (const auto &r : sessions) {
      const auto user = user_label.find(to_u64(r[1], kSessionsFile));
      if (user == user_label.end())
        fail(ExitCode::format_error, "sessions.csv references an unknown user");
      session_label[to_u64(r[0], kSessionsFile)] =
          config.per_session ? user->second + "#" + r[0] : user->second;
    }
    std::map<std::uint64_t, const std::string *> visit_label;
    for (const auto &r : visits) {
      const auto session = session_label.find(to_u64(r[1], kVisitsFile));
      if (session == session_label.end())
        fail(ExitCode::format_error, "visits.csv references an unknown session");
      visit_label[to_u64(r[0], kVisitsFile)] = &session->second;
    }

    std::vector<HostRequest> stream;
    std::vector<std::string> urls;
    stream.reserve(requests.size());
    urls.reserve(requests.size());
    for (const auto &r : requests) {
      const auto visit = visit_label.find(to_u64(r[1], kRequestsFile));
      if (visit == visit_label.end())
        fail(ExitCode::format_error, "requests.csv references an unknown visit");
      stream.push_back({*visit->second, r[5]});
      urls.push_back(r[5]);
    }
    if (urls.empty())
      fail(ExitCode::format_error, "no cleaned requests to build patterns from");

    const auto index = build_url_index(urls, config.top_n);
    const auto hosts = count_requests(stream);
    const auto set = gen_pattern(hosts, index, config.min_count);

    write_file(dir / kUrlIndexFile, url_index_json(index));
    write_file(dir / kPatternsFile, patterns_csv(set.vectors));
    log << "patterns " << set.vectors.size() << " (n=" << index.size()
        << "), omitted hosts " << set.omitted << "\n";
  });
}

int cmd_cluster(const PipelineConfig &config, std::ostream &log) {
  return run_guarded("cluster", log, [&] {
    if (config.vigilance.empty())
      fail(ExitCode::usage, "at least one --vigilance value is required");
    for (double rho : config.vigilance)
      if (!(rho >= 0.0 && rho < 1.0))
        fail(ExitCode::usage, "vigilance " + format_number(rho) +
                                  " outside [0, 1)");

    const auto dir = config.out_dir;
    std::vector<PatternVector> patterns;
    UrlIndex index;
    try {
      patterns = parse_patterns_csv(read_file(dir / kPatternsFile));
      index = parse_url_index_json(read_file(dir / kUrlIndexFile));
    } catch (const PipelineError &) {
      throw;
    } catch (const std::exception &e) {
      fail(ExitCode::format_error, e.what());
    }
    for (const auto &p : patterns)
      if (p.bits.size() != index.size())
        fail(ExitCode::format_error,
             "patterns.csv width " + std::to_string(p.bits.size()) +
                 " does not match url_index.json n=" + std::to_string(index.size()));

    for (const auto &entry : fs::directory_iterator(dir))
      if (entry.path().filename().string().starts_with(kClustersPrefix))
        fs::remove(entry.path());

    for (double rho : config.vigilance) {
      auto model = art1::Model::init(
          index.size(), {rho, config.max_clusters, config.max_epochs});
      const auto result = model.train(patterns);
      write_file(dir / clusters_file_name(rho), art1::clusters_json(model, result));

      log << "rho " << format_number(rho) << ": " << model.cluster_count()
          << " clusters, " << result.epochs_used << " epochs"
          << (result.converged ? "" : " (not converged)") << ", forced "
          << result.forced_count << "\n";
      if (const auto zero = model.zero_prototype_count(); zero > 0)
        log << "warning: rho " << format_number(rho) << ": " << zero
            << " cluster(s) ended with an all-zero prototype\n";
    }
  });
}

int cmd_report(const PipelineConfig &config, std::ostream &log) {
  return run_guarded("report", log, [&] {
    const auto dir = config.out_dir;
    Report report;
    try {
      report.stats = parse_stats_json(read_file(dir / kStatsFile));
    } catch (const PipelineError &) {
      throw;
    } catch (const std::exception &e) {
      fail(ExitCode::format_error, std::string("stats.json: ") + e.what());
    }

    const auto sessions = read_table(dir / kSessionsFile,
                                     {"session_id", "user_id", "start", "end",
                                      "n_requests", "n_visits"});
    if (!sessions.empty()) {
      std::int64_t first = std::numeric_limits<std::int64_t>::max();
      std::int64_t last = std::numeric_limits<std::int64_t>::min();
      for (const auto &r : sessions) {
        first = std::min<std::int64_t>(first, std::stoll(r[2]));
        last = std::max<std::int64_t>(last, std::stoll(r[3]));
      }
      report.duration = utc_date(first) + " to " + utc_date(last);
    }

    report.source = config.source_label;
    if (report.source.empty()) {
      for (const auto &in : config.inputs)
        report.source += (report.source.empty() ? "" : " + ") +
                         in.path.filename().string();
      if (report.source.empty())
        report.source = fs::absolute(dir).lexically_normal().filename().string();
    }

    for (const auto &entry : fs::directory_iterator(dir)) {
      const auto name = entry.path().filename().string();
      if (!name.starts_with(kClustersPrefix) || !name.ends_with(".json"))
        continue;
      try {
        const auto j = nlohmann::json::parse(read_file(entry.path()));
        ClusterRow row;
        row.vigilance = j.at("vigilance").get<double>();
        row.n_clusters = j.at("n_clusters").get<std::size_t>();
        row.forced_count = j.at("forced_count").get<std::size_t>();
        row.epochs_used = j.at("epochs_used").get<std::size_t>();
        for (const auto &c : j.at("clusters"))
          row.largest_cluster =
              std::max(row.largest_cluster, c.at("member_count").get<std::size_t>());
        report.clusters.push_back(row);
      } catch (const PipelineError &) {
        throw;
      } catch (const std::exception &e) {
        fail(ExitCode::format_error, name + ": " + e.what());
      }
    }
    if (report.clusters.empty())
      fail(ExitCode::missing_input, "no clusters_rho_*.json in " + dir.string());
    std::sort(report.clusters.begin(), report.clusters.end(),
              [](const ClusterRow &a, const ClusterRow &b) {
                return a.vigilance < b.vigilance;
              });

    write_file(dir / "report.md", report_markdown(report));
    write_file(dir / "report.csv", report_csv(report));
    log << "wrote report.md and report.csv (" << report.clusters.size()
        << " vigilance rows)\n";
  });
}

// ---------------------------------------------------------------------------

std::string report_markdown(const Report &r) {
  const auto &st = r.stats;
  std::string out = "# Web usage mining report\n\n## Preprocessing\n\n";
  out += md_row({"Source", "Duration", "Original size (bytes)",
                 "Size after preprocessing (bytes)", "% Reduction in size",
                 "No. of sessions", "No. of users"});
  out += md_rule(7);
  out += md_row({r.source, r.duration, std::to_string(st.input_bytes),
                 std::to_string(st.output_bytes), format_number(st.reduction_percent),
                 std::to_string(st.n_sessions), std::to_string(st.n_users)});
  out += "\n## ART1 clustering\n\n";
  out += md_row({"Vigilance", "Clusters", "Largest cluster", "Forced assignments",
                 "Epochs"});
  out += md_rule(5);
  for (const auto &c : r.clusters)
    out += md_row({format_number(c.vigilance), std::to_string(c.n_clusters),
                   std::to_string(c.largest_cluster), std::to_string(c.forced_count),
                   std::to_string(c.epochs_used)});
  return out;
}

std::string report_csv(const Report &r) {
  const auto &st = r.stats;
  std::string out = csv::format_row(
      {"source", "duration", "original_bytes", "preprocessed_bytes",
       "reduction_percent", "n_sessions", "n_users", "vigilance", "n_clusters",
       "largest_cluster", "forced_count", "epochs_used"});
  for (const auto &c : r.clusters)
    out += csv::format_row(
        {r.source, r.duration, std::to_string(st.input_bytes),
         std::to_string(st.output_bytes), format_number(st.reduction_percent),
         std::to_string(st.n_sessions), std::to_string(st.n_users),
         format_number(c.vigilance), std::to_string(c.n_clusters),
         std::to_string(c.largest_cluster), std::to_string(c.forced_count),
         std::to_string(c.epochs_used)});
  return out;
}

} // namespace wlm
