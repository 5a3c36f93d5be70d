#include "wlm/art1.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include <json.hpp>

namespace wlm::art1 {

namespace {

double dot(std::span<const double> weights, const BitVector &p) {
  double y = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i)
    if (p.test(i))
      y += weights[i];
  return y;
}

std::size_t pick_winner(std::span<const double> scores,
                        const std::vector<bool> &active) {
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (active[k])
      best = std::max(best, scores[k]);
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (active[k] && scores[k] >= best - kTieTolerance)
      return k;
  return scores.size();
}

} // namespace

void Config::validate() const {
  if (!(vigilance >= 0.0 && vigilance < 1.0))
    throw std::invalid_argument("vigilance must lie in [0, 1)");
  if (max_clusters && *max_clusters == 0)
    throw std::invalid_argument("max_clusters must be at least 1");
  if (max_epochs == 0)
    throw std::invalid_argument("max_epochs must be at least 1");
}

VigilanceResult vigilance_test(const BitVector &prototype, const BitVector &p,
                               double rho) {
  const auto norm = p.count();
  if (norm == 0)
    throw std::invalid_argument("vigilance_test: input has no set bit");
  const double ratio =
      static_cast<double>(prototype.overlap(p)) / static_cast<double>(norm);
  return {ratio, ratio > rho};
}

Model Model::init(std::size_t n, Config config) {
  if (n == 0)
    throw std::invalid_argument("ART1 input dimension must be at least 1");
  config.validate();
  return Model(n, config);
}

bool Model::has_uncommitted() const {
  return !config_.max_clusters || nodes_.size() < *config_.max_clusters;
}

ClusterNode Model::uncommitted_node() const {
  return ClusterNode{std::vector<double>(n_, uncommitted_weight()),
                     BitVector(n_, true), false, 0};
}

std::size_t Model::zero_prototype_count() const {
  return static_cast<std::size_t>(std::count_if(
      nodes_.begin(), nodes_.end(),
      [](const ClusterNode &node) { return node.prototype.none(); }));
}

void Model::check_input(const BitVector &p) const {
  if (p.size() != n_)
    throw std::invalid_argument("pattern has " + std::to_string(p.size()) +
                                " bits, network expects " + std::to_string(n_));
  if (p.none())
    throw std::invalid_argument("pattern has no set bit");
}

MatchScores Model::match_scores(const BitVector &p) const {
  check_input(p);
  MatchScores out;
  out.scores.reserve(nodes_.size() + 1);
  for (const auto &node : nodes_)
    out.scores.push_back(dot(node.bottom_up, p));
  out.has_candidate = has_uncommitted();
  if (out.has_candidate)
    out.scores.push_back(dot(uncommitted_node().bottom_up, p));
  out.winner = pick_winner(out.scores, std::vector<bool>(out.scores.size(), true));
  return out;
}

Model::Search Model::search(const BitVector &p) const {
  const auto scores = match_scores(p).scores;
  const BitVector all_ones(n_, true);

  // Deactivated nodes stay out for the rest of this presentation.
  std::vector<bool> active(scores.size(), true);
  auto remaining = scores.size();

  Search s;
  for (;;) {
    const auto k = pick_winner(scores, active);
    const auto &prototype = k < nodes_.size() ? nodes_[k].prototype : all_ones;
    const auto test = vigilance_test(prototype, p, config_.vigilance);
    s.node = k;
    s.ratio = test.ratio;
    if (test.pass)
      return s;
    if (remaining == 1) {
      s.forced = true;
      return s;
    }
    active[k] = false;
    --remaining;
    ++s.resets;
  }
}

bool Model::commit_update(std::size_t j, const BitVector &p) {
  check_input(p);
  bool created = false;
  if (j == nodes_.size()) {
    if (!has_uncommitted())
      throw std::out_of_range("no uncommitted node left to commit");
    nodes_.push_back(uncommitted_node());
    created = true;
  } else if (j > nodes_.size()) {
    throw std::out_of_range("cluster index out of range");
  }

  auto &node = nodes_[j];
  const BitVector next = node.prototype & p;
  // w_ij = v_ij p_i / (0.5 + sum_i v_ij p_i), v_ij = p_i v_ij
  const double denom = 0.5 + static_cast<double>(next.count());
  for (std::size_t i = 0; i < n_; ++i)
    node.bottom_up[i] = next.test(i) ? 1.0 / denom : 0.0;

  const bool changed = created || next != node.prototype;
  node.prototype = next;
  node.committed = true;
  ++node.member_count;
  return changed;
}

Presentation Model::present(const BitVector &p) {
  const auto s = search(p);
  Presentation out;
  out.cluster = s.node;
  out.forced = s.forced;
  out.ratio = s.ratio;
  out.resets = s.resets;
  out.created = s.node == nodes_.size();
  out.prototype_changed = commit_update(s.node, p);
  out.degenerate = nodes_[s.node].prototype.none();
  return out;
}

std::optional<std::size_t> Model::assign_only(const BitVector &p) const {
  const auto s = search(p);
  if (s.forced || s.node >= nodes_.size())
    return std::nullopt;
  return s.node;
}

TrainResult Model::train(std::span<const PatternVector> patterns) {
  for (const auto &pattern : patterns)
    check_input(pattern.bits);

  TrainResult result;
  std::vector<std::size_t> previous(patterns.size(),
                                    std::numeric_limits<std::size_t>::max());
  for (std::size_t epoch = 1; epoch <= config_.max_epochs; ++epoch) {
    for (auto &node : nodes_)
      node.member_count = 0;

    bool changed = false;
    result.assignment.clear();
    result.forced_count = 0;
    for (std::size_t i = 0; i < patterns.size(); ++i) {
      const auto pres = present(patterns[i].bits);
      changed = changed || pres.prototype_changed || pres.cluster != previous[i];
      previous[i] = pres.cluster;
      result.forced_count += pres.forced ? 1 : 0;
      result.assignment.push_back(
          {patterns[i].host_key, pres.cluster, pres.ratio, pres.forced});
    }
    result.epochs_used = epoch;
    if (!changed) {
      result.converged = true;
      break;
    }
  }
  return result;
}

std::string clusters_json(const Model &model, const TrainResult &result) {
  const auto nodes = model.nodes();
  std::vector<std::vector<const Member *>> members(nodes.size());
  for (const auto &m : result.assignment)
    members.at(m.cluster).push_back(&m);

  nlohmann::ordered_json j;
  j["vigilance"] = model.config().vigilance;
  j["n"] = model.dimension();
  j["max_clusters"] = model.config().max_clusters
                          ? nlohmann::ordered_json(*model.config().max_clusters)
                          : nlohmann::ordered_json(nullptr);
  j["n_patterns"] = result.assignment.size();
  j["n_clusters"] = nodes.size();
  j["epochs_used"] = result.epochs_used;
  j["converged"] = result.converged;
  j["forced_count"] = result.forced_count;
  j["zero_prototype_count"] = model.zero_prototype_count();

  auto clusters = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    nlohmann::ordered_json c;
    c["index"] = k;
    c["prototype"] = nodes[k].prototype.to_string();
    c["member_count"] = members[k].size();
    if (members[k].empty()) {
      c["mean_ratio"] = nullptr;
    } else {
      double sum = 0.0;
      for (const auto *m : members[k])
        sum += m->ratio;
      c["mean_ratio"] = sum / static_cast<double>(members[k].size());
    }
    auto keys = nlohmann::ordered_json::array();
    for (const auto *m : members[k])
      keys.push_back(m->host_key);
    c["members"] = std::move(keys);
    clusters.push_back(std::move(c));
  }
  j["clusters"] = std::move(clusters);
  return j.dump(2) + "\n";
}

} // namespace wlm::art1
