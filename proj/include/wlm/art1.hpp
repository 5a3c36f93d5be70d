#ifndef WLM_ART1_HPP
#define WLM_ART1_HPP

#include "wlm/patterns.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace wlm::art1 {

struct Config {
  /// Similarity threshold rho in [0, 1). The vigilance test is strict, so
  /// rho = 1 would turn away even an uncommitted node.
  double vigilance = 0.4;
  /// Upper bound on committed clusters; unset means the network grows freely.
  std::optional<std::size_t> max_clusters;
  std::size_t max_epochs = 10;

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

/// One F2 category. `bottom_up` is the column of w that feeds the matching
/// score; `prototype` is the binary top-down expectation v.
struct ClusterNode {
  std::vector<double> bottom_up;
  BitVector prototype;
  bool committed = false;
  std::size_t member_count = 0;
};

struct VigilanceResult {
  double ratio = 0.0;
  bool pass = false;
};

/// ratio = |prototype AND p| / |p|, pass iff ratio > rho. `p` must have at
/// least one set bit.
VigilanceResult vigilance_test(const BitVector &prototype, const BitVector &p,
                               double rho);

/// Matching scores y_k = sum_i w_ik p_i over the active nodes. Entry k is
/// committed node k; when the network still has room, one trailing entry
/// scores the uncommitted candidate.
struct MatchScores {
  std::vector<double> scores;
  bool has_candidate = false;
  std::size_t winner = 0;
};

/// Outcome of presenting one pattern.
struct Presentation {
  std::size_t cluster = 0;
  /// Assigned without passing vigilance because it was the last active node.
  bool forced = false;
  /// Similarity ratio of the accepted node before its update.
  double ratio = 0.0;
  /// Nodes deactivated during the search.
  std::size_t resets = 0;
  bool created = false;
  bool prototype_changed = false;
  /// The update left the prototype with no set bit.
  bool degenerate = false;
};

struct Member {
  std::string host_key;
  std::size_t cluster = 0;
  double ratio = 0.0;
  bool forced = false;
};

struct TrainResult {
  /// Cluster of every pattern in presentation order, from the last epoch.
  std::vector<Member> assignment;
  std::size_t epochs_used = 0;
  bool converged = false;
  std::size_t forced_count = 0;
};

/// Scores closer than this are treated as a tie and go to the lowest index.
inline constexpr double kTieTolerance = 1e-12;

/// ART1 network over binary inputs of a fixed dimension with lazily
/// committed F2 nodes.
///
/// Uncommitted nodes all look the same (w = 2/(1+n), v = 1), so only one
/// virtual candidate is offered per search; it becomes a real node when it
/// wins. A search deactivates each node that fails vigilance until one
/// passes. Under a capacity cap the last remaining node takes the pattern
/// unconditionally and the presentation is flagged as forced.
class Model {
public:
  /// Throws std::invalid_argument when n is zero or the config is invalid.
  static Model init(std::size_t n, Config config);

  std::size_t dimension() const { return n_; }
  const Config &config() const { return config_; }
  std::span<const ClusterNode> nodes() const { return nodes_; }
  std::size_t cluster_count() const { return nodes_.size(); }

  bool has_uncommitted() const;
  double uncommitted_weight() const { return 2.0 / (1.0 + static_cast<double>(n_)); }
  /// The template every new node starts from.
  ClusterNode uncommitted_node() const;

  std::size_t zero_prototype_count() const;

  MatchScores match_scores(const BitVector &p) const;

  /// Applies the learning rule to node j, materializing it first when
  /// j == cluster_count(). Returns true if the prototype changed or the node
  /// was created.
  bool commit_update(std::size_t j, const BitVector &p);

  Presentation present(const BitVector &p);

  /// Runs the same search as present() without learning. Returns the
  /// committed node that would accept `p`, or nullopt when the search would
  /// open a new cluster or force an assignment.
  std::optional<std::size_t> assign_only(const BitVector &p) const;

  /// Presents the patterns in order, epoch after epoch, until an epoch leaves
  /// every prototype and every assignment unchanged or max_epochs is hit.
  /// Throws std::invalid_argument on a dimension mismatch or an all-zero
  /// pattern.
  TrainResult train(std::span<const PatternVector> patterns);

private:
  struct Search {
    std::size_t node = 0;
    bool forced = false;
    double ratio = 0.0;
    std::size_t resets = 0;
  };

  Model(std::size_t n, Config config) : n_(n), config_(config) {}

  void check_input(const BitVector &p) const;
  Search search(const BitVector &p) const;

  std::size_t n_;
  Config config_;
  std::vector<ClusterNode> nodes_;
};

/// clusters.json body: run metadata followed by one object per cluster.
std::string clusters_json(const Model &model, const TrainResult &result);

} // namespace wlm::art1

#endif // WLM_ART1_HPP
