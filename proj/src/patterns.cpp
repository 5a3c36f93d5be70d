#include "wlm/patterns.hpp"

#include "wlm/csv.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace wlm {

BitVector BitVector::from_string(std::string_view text) {
  BitVector v(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '1')
      v.set(i);
    else if (text[i] != '0')
      throw std::invalid_argument("bit string may only contain 0 and 1");
  }
  return v;
}

std::size_t BitVector::count() const {
  return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
}

std::size_t BitVector::overlap(const BitVector &other) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < bits_.size(); ++i)
    n += bits_[i] & other.bits_[i];
  return n;
}

BitVector BitVector::operator&(const BitVector &other) const {
  BitVector out(bits_.size());
  for (std::size_t i = 0; i < bits_.size(); ++i)
    out.bits_[i] = bits_[i] & other.bits_[i];
  return out;
}

std::string BitVector::to_string() const {
  std::string s(bits_.size(), '0');
  for (std::size_t i = 0; i < bits_.size(); ++i)
    if (bits_[i])
      s[i] = '1';
  return s;
}

UrlIndex UrlIndex::from_urls(std::vector<std::string> urls) {
  if (urls.empty())
    throw std::invalid_argument("url index must not be empty");
  UrlIndex index;
  for (std::size_t i = 0; i < urls.size(); ++i)
    if (!index.position.emplace(urls[i], i).second)
      throw std::invalid_argument("duplicate url in index: " + urls[i]);
  index.urls = std::move(urls);
  return index;
}

UrlIndex build_url_index(std::span<const std::string> request_urls,
                         std::size_t top_n) {
  if (top_n == 0)
    throw std::invalid_argument("top_n must be at least 1");
  if (request_urls.empty())
    throw std::invalid_argument("cannot build a url index without requests");

  std::unordered_map<std::string_view, std::uint64_t> freq;
  for (const auto &u : request_urls)
    ++freq[u];

  std::vector<std::pair<std::string_view, std::uint64_t>> ranked(freq.begin(),
                                                                 freq.end());
  const auto keep = std::min(top_n, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep),
                    ranked.end(), [](const auto &a, const auto &b) {
                      if (a.second != b.second)
                        return a.second > b.second;
                      return a.first < b.first;
                    });

  std::vector<std::string> urls;
  urls.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i)
    urls.emplace_back(ranked[i].first);
  return UrlIndex::from_urls(std::move(urls));
}

std::vector<HostCounts> count_requests(std::span<const HostRequest> requests) {
  std::vector<HostCounts> hosts;
  std::unordered_map<std::string, std::size_t> slot;
  for (const auto &r : requests) {
    auto [it, fresh] = slot.try_emplace(r.host_key, hosts.size());
    if (fresh)
      hosts.push_back({r.host_key, {}});
    ++hosts[it->second].counts[r.url];
  }
  return hosts;
}

PatternSet gen_pattern(std::span<const HostCounts> hosts, const UrlIndex &index,
                       std::uint64_t threshold) {
  PatternSet out;
  for (const auto &host : hosts) {
    BitVector bits(index.size());
    for (const auto &[url, count] : host.counts) {
      const auto pos = index.position.find(url);
      if (pos != index.position.end() && count > threshold)
        bits.set(pos->second);
    }
    if (bits.none()) {
      ++out.omitted;
      continue;
    }
    out.vectors.push_back({host.host_key, std::move(bits)});
  }
  return out;
}

std::string patterns_csv(std::span<const PatternVector> patterns) {
  std::string out = csv::format_row({"host_key", "bits"});
  for (const auto &p : patterns)
    out += csv::format_row({p.host_key, p.bits.to_string()});
  return out;
}

std::vector<PatternVector> parse_patterns_csv(std::string_view text) {
  const auto rows = csv::parse(text);
  if (rows.empty() || rows.front() != csv::Row{"host_key", "bits"})
    throw std::runtime_error("patterns.csv: expected header host_key,bits");

  std::vector<PatternVector> patterns;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto &row = rows[i];
    if (row.size() != 2)
      throw std::runtime_error("patterns.csv: row " + std::to_string(i) +
                               " does not have two fields");
    BitVector bits;
    try {
      bits = BitVector::from_string(row[1]);
    } catch (const std::invalid_argument &e) {
      throw std::runtime_error("patterns.csv: row " + std::to_string(i) + ": " +
                               e.what());
    }
    if (!patterns.empty() && bits.size() != patterns.front().bits.size())
      throw std::runtime_error("patterns.csv: row " + std::to_string(i) +
                               " has a different width");
    patterns.push_back({row[0], std::move(bits)});
  }
  return patterns;
}

std::string url_index_json(const UrlIndex &index) {
  nlohmann::ordered_json j;
  j["n"] = index.size();
  j["urls"] = index.urls;
  return j.dump(2) + "\n";
}

UrlIndex parse_url_index_json(std::string_view text) {
  const auto j = nlohmann::json::parse(text);
  auto urls = j.at("urls").get<std::vector<std::string>>();
  if (j.at("n").get<std::size_t>() != urls.size())
    throw std::runtime_error("url_index.json: n does not match the url list");
  return UrlIndex::from_urls(std::move(urls));
}

} // namespace wlm
