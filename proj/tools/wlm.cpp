// wlm: web log mining pipeline driver.
//
//   wlm preprocess --input access.log [--server www] [--skew www=-2] --out-dir out
//   wlm pattern    --out-dir out [--top-urls 64] [--min-count 2]
//   wlm cluster    --out-dir out --vigilance 0.3 --vigilance 0.4
//   wlm report     --out-dir out
//
// Every option may also come from a key=value file given with --config;
// options on the command line take precedence over the file.

#include "wlm/pipeline.hpp"

#include <CLI11.hpp>

#include <iostream>

namespace {

std::vector<std::string> split_list(const std::string &text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto end = comma == std::string::npos ? text.size() : comma;
    if (end > start)
      out.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  return out;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Web access log preprocessing and ART1 clustering of users"};
  app.set_config("--config", "", "Read options from a key=value file");
  app.require_subcommand(1);
  app.fallthrough();

  std::vector<std::string> inputs;
  std::vector<std::string> servers;
  std::vector<std::string> skews;
  int session_minutes = 30;
  int visit_minutes = 10;
  std::size_t top_urls = 64;
  std::uint64_t min_count = 2;
  std::vector<double> vigilance;
  std::size_t max_clusters = 0;
  std::size_t max_epochs = 10;
  bool per_session = false;
  std::string out_dir = ".";
  std::string source_label;
  std::string suffixes;
  std::string methods;
  std::vector<std::string> excludes;
  bool no_status_filter = false;
  std::string policy_name;

  app.add_option("--input", inputs, "Access log file (.gz is decompressed)");
  app.add_option("--server", servers,
                 "Server id for the matching --input (default: file name)");
  app.add_option("--skew", skews, "Clock correction SERVER=SECONDS");
  app.add_option("--session-timeout", session_minutes, "Session gap in minutes")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--visit-timeout", visit_minutes, "Visit gap in minutes")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--top-urls", top_urls, "Pattern dimension n")
      ->check(CLI::PositiveNumber);
  app.add_option("--min-count", min_count,
                 "A bit is set when a URL was requested more than this often");
  app.add_option("--vigilance", vigilance, "Vigilance value, repeat to sweep");
  app.add_option("--max-clusters", max_clusters, "Cap on clusters (0 = unbounded)");
  app.add_option("--max-epochs", max_epochs, "Training epochs limit")
      ->check(CLI::PositiveNumber);
  app.add_flag("--per-session", per_session, "One pattern per session");
  app.add_option("--out-dir", out_dir, "Working directory for all artifacts");
  app.add_option("--source-label", source_label, "Source column of the report");
  app.add_option("--suffixes", suffixes, "Comma list of removed resource suffixes");
  app.add_option("--methods", methods, "Comma list of kept HTTP methods");
  app.add_option("--exclude", excludes, "Regex of urls to drop, repeatable");
  app.add_flag("--no-status-filter", no_status_filter, "Keep non-2xx/3xx requests");
  app.add_option("--policy-name", policy_name, "Name recorded for the cleaning policy");

  auto *preprocess = app.add_subcommand("preprocess", "Merge, clean and sessionize logs");
  auto *pattern = app.add_subcommand("pattern", "Build binary access patterns");
  auto *cluster = app.add_subcommand("cluster", "Run ART1 for each vigilance value");
  auto *report = app.add_subcommand("report", "Write report.md and report.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(wlm::ExitCode::usage);
  }

  wlm::PipelineConfig config;
  if (!servers.empty() && servers.size() != inputs.size()) {
    std::cerr << "wlm: --server must be given once per --input\n";
    return static_cast<int>(wlm::ExitCode::usage);
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    std::filesystem::path path(inputs[i]);
    config.inputs.push_back(
        {path, servers.empty() ? path.filename().string() : servers[i]});
  }
  for (const auto &s : skews) {
    const auto eq = s.rfind('=');
    try {
      std::size_t used = 0;
      if (eq == std::string::npos)
        throw std::invalid_argument(s);
      const auto value = s.substr(eq + 1);
      const long long secs = std::stoll(value, &used);
      if (used != value.size())
        throw std::invalid_argument(s);
      config.skews[s.substr(0, eq)] = std::chrono::seconds{secs};
    } catch (const std::exception &) {
      std::cerr << "wlm: --skew expects SERVER=SECONDS, got '" << s << "'\n";
      return static_cast<int>(wlm::ExitCode::usage);
    }
  }
  config.timeouts.session = std::chrono::minutes{session_minutes};
  config.timeouts.visit = std::chrono::minutes{visit_minutes};
  if (config.timeouts.visit > config.timeouts.session) {
    std::cerr << "wlm: --visit-timeout must not exceed --session-timeout\n";
    return static_cast<int>(wlm::ExitCode::usage);
  }
  if (!suffixes.empty())
    config.policy.suffixes = split_list(suffixes);
  if (!methods.empty())
    config.policy.methods = split_list(methods);
  if (!excludes.empty())
    config.policy.exclusions = excludes;
  if (no_status_filter)
    config.policy.status_filter = false;
  if (!policy_name.empty())
    config.policy.name = policy_name;
  config.top_n = top_urls;
  config.min_count = min_count;
  config.per_session = per_session;
  if (!vigilance.empty())
    config.vigilance = vigilance;
  if (max_clusters > 0)
    config.max_clusters = max_clusters;
  config.max_epochs = max_epochs;
  config.out_dir = out_dir;
  config.source_label = source_label;

  if (*preprocess)
    return wlm::cmd_preprocess(config, std::cerr);
  if (*pattern)
    return wlm::cmd_pattern(config, std::cerr);
  if (*cluster)
    return wlm::cmd_cluster(config, std::cerr);
  if (*report)
    return wlm::cmd_report(config, std::cerr);
  return static_cast<int>(wlm::ExitCode::usage);
}
