#ifndef WLM_PATTERNS_HPP
#define WLM_PATTERNS_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace wlm {

/// Fixed-length binary vector, one byte per position.
class BitVector {
public:
  BitVector() = default;
  explicit BitVector(std::size_t n, bool value = false)
      : bits_(n, value ? 1 : 0) {}

  /// Parses a string over {0,1}. Throws std::invalid_argument otherwise.
  static BitVector from_string(std::string_view text);

  std::size_t size() const { return bits_.size(); }
  bool test(std::size_t i) const { return bits_[i] != 0; }
  void set(std::size_t i, bool value = true) { bits_[i] = value ? 1 : 0; }

  /// L1 norm.
  std::size_t count() const;
  bool none() const { return count() == 0; }
  std::size_t overlap(const BitVector &other) const;

  BitVector operator&(const BitVector &other) const;

  std::string to_string() const;

  friend bool operator==(const BitVector &, const BitVector &) = default;

private:
  std::vector<std::uint8_t> bits_;
};

/// The ordered URL list that defines pattern dimensions.
struct UrlIndex {
  std::vector<std::string> urls;
  std::unordered_map<std::string, std::size_t> position;

  std::size_t size() const { return urls.size(); }

  /// Throws std::invalid_argument on an empty or duplicated list.
  static UrlIndex from_urls(std::vector<std::string> urls);
};

/// Keeps the `top_n` most requested URLs, most frequent first, ties in
/// lexicographic order. Throws std::invalid_argument when `request_urls` is
/// empty or `top_n` is zero.
UrlIndex build_url_index(std::span<const std::string> request_urls,
                         std::size_t top_n);

struct HostRequest {
  std::string host_key;
  std::string url;
};

struct HostCounts {
  std::string host_key;
  std::unordered_map<std::string, std::uint64_t> counts;
};

/// Tallies requests per host; hosts keep their order of first appearance.
std::vector<HostCounts> count_requests(std::span<const HostRequest> requests);

struct PatternVector {
  std::string host_key;
  BitVector bits;
};

struct PatternSet {
  std::vector<PatternVector> vectors;
  /// Hosts dropped because no indexed URL passed the threshold.
  std::size_t omitted = 0;
};

/// bits[i] = 1 iff the host requested urls[i] more than `threshold` times.
PatternSet gen_pattern(std::span<const HostCounts> hosts, const UrlIndex &index,
                       std::uint64_t threshold = 2);

std::string patterns_csv(std::span<const PatternVector> patterns);
/// Throws std::runtime_error on a bad header, ragged bit strings or
/// characters other than 0/1.
std::vector<PatternVector> parse_patterns_csv(std::string_view text);

std::string url_index_json(const UrlIndex &index);
UrlIndex parse_url_index_json(std::string_view text);

} // namespace wlm

#endif // WLM_PATTERNS_HPP
