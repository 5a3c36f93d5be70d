#ifndef WLM_PIPELINE_HPP
#define WLM_PIPELINE_HPP

#include "wlm/preprocess.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wlm {

enum class ExitCode : int {
  ok = 0,
  usage = 1,
  missing_input = 2,
  format_error = 3,
};

class PipelineError : public std::runtime_error {
public:
  PipelineError(ExitCode code, const std::string &what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

private:
  ExitCode code_;
};

struct InputSpec {
  std::filesystem::path path;
  std::string server_id;
};

struct PipelineConfig {
  std::vector<InputSpec> inputs;
  /// Servers without an entry get zero skew.
  ClockSkews skews;
  CleaningPolicy policy = CleaningPolicy::defaults();
  SessionTimeouts timeouts;
  std::size_t top_n = 64;
  std::uint64_t min_count = 2;
  /// Build one pattern per session instead of one per host.
  bool per_session = false;
  std::vector<double> vigilance = {0.3, 0.4, 0.5};
  std::optional<std::size_t> max_clusters;
  std::size_t max_epochs = 10;
  std::filesystem::path out_dir = ".";
  /// Label for the report's source column; defaults to the input names.
  std::string source_label;
};

int cmd_preprocess(const PipelineConfig &config, std::ostream &log);
int cmd_pattern(const PipelineConfig &config, std::ostream &log);
int cmd_cluster(const PipelineConfig &config, std::ostream &log);
int cmd_report(const PipelineConfig &config, std::ostream &log);

/// Shortest decimal that reads back as the same double, as used in JSON
/// output and in `clusters_rho_<value>.json` file names.
std::string format_number(double value);

std::filesystem::path clusters_file_name(double vigilance);

struct ClusterRow {
  double vigilance = 0.0;
  std::size_t n_clusters = 0;
  std::size_t largest_cluster = 0;
  std::size_t forced_count = 0;
  std::size_t epochs_used = 0;
};

struct Report {
  std::string source;
  std::string duration;
  PreprocessStats stats;
  std::vector<ClusterRow> clusters;
};

std::string report_markdown(const Report &report);
std::string report_csv(const Report &report);

} // namespace wlm

#endif // WLM_PIPELINE_HPP
