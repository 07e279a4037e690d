#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "exgraph/attachment.hpp"
#include "exgraph/common.hpp"
#include "exgraph/graph.hpp"

namespace exgraph {

struct Rating {
  int user;  // dense 0-based id
  int item;  // dense 0-based id
  double value;
};

/// Sparse user-item ratings with dense ids; raw ids are kept so reports can
/// be audited against the source file.
struct RatingsDataset {
  int num_users = 0;
  int num_items = 0;
  std::vector<Rating> triples;
  std::vector<long> user_raw_ids;  // dense -> raw
  std::vector<long> item_raw_ids;

  std::vector<int> user_rating_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(num_users), 0);
    for (const auto& t : triples) ++counts[static_cast<std::size_t>(t.user)];
    return counts;
  }

  std::vector<int> item_rating_counts() const {
    std::vector<int> counts(static_cast<std::size_t>(num_items), 0);
    for (const auto& t : triples) ++counts[static_cast<std::size_t>(t.item)];
    return counts;
  }
};

/// Parse `user<TAB>item<TAB>rating<TAB>timestamp` lines; timestamps are
/// dropped. Dense ids are assigned in first-appearance order.
inline RatingsDataset load_movielens(std::istream& in) {
  RatingsDataset d;
  std::unordered_map<long, int> user_ids, item_ids;
  std::unordered_set<std::uint64_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream fields(line);
    long user_raw, item_raw, timestamp;
    double rating;
    if (!(fields >> user_raw >> item_raw >> rating >> timestamp))
      throw ParseError("expected user, item, rating, timestamp", line_no);
    if (rating != 1 && rating != 2 && rating != 3 && rating != 4 &&
        rating != 5)
      throw ParseError("rating must be an integer in 1..5", line_no);
    auto [uit, u_new] = user_ids.try_emplace(
        user_raw, static_cast<int>(d.user_raw_ids.size()));
    if (u_new) d.user_raw_ids.push_back(user_raw);
    auto [iit, i_new] = item_ids.try_emplace(
        item_raw, static_cast<int>(d.item_raw_ids.size()));
    if (i_new) d.item_raw_ids.push_back(item_raw);
    std::uint64_t key = (static_cast<std::uint64_t>(uit->second) << 32) |
                        static_cast<std::uint64_t>(iit->second);
    if (!seen.insert(key).second)
      throw DuplicateRatingError("duplicate rating for user " +
                                 std::to_string(user_raw) + ", item " +
                                 std::to_string(item_raw));
    d.triples.push_back({uit->second, iit->second, rating});
  }
  d.num_users = static_cast<int>(d.user_raw_ids.size());
  d.num_items = static_cast<int>(d.item_raw_ids.size());
  return d;
}

inline RatingsDataset load_movielens(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return load_movielens(in);
}

/// Iteratively drop users and items with fewer than min_count ratings until
/// nothing changes, then reindex densely (ascending old ids).
inline RatingsDataset filter_min_ratings(const RatingsDataset& d,
                                         int min_count) {
  if (min_count < 0)
    throw std::invalid_argument("filter_min_ratings: min_count must be >= 0");
  std::vector<char> keep_user(static_cast<std::size_t>(d.num_users), 1);
  std::vector<char> keep_item(static_cast<std::size_t>(d.num_items), 1);
  bool changed = true;
  while (changed) {
    changed = false;
    std::vector<int> user_counts(static_cast<std::size_t>(d.num_users), 0);
    std::vector<int> item_counts(static_cast<std::size_t>(d.num_items), 0);
    for (const auto& t : d.triples) {
      if (!keep_user[static_cast<std::size_t>(t.user)] ||
          !keep_item[static_cast<std::size_t>(t.item)])
        continue;
      ++user_counts[static_cast<std::size_t>(t.user)];
      ++item_counts[static_cast<std::size_t>(t.item)];
    }
    for (int u = 0; u < d.num_users; ++u)
      if (keep_user[static_cast<std::size_t>(u)] &&
          user_counts[static_cast<std::size_t>(u)] < min_count) {
        keep_user[static_cast<std::size_t>(u)] = 0;
        changed = true;
      }
    for (int i = 0; i < d.num_items; ++i)
      if (keep_item[static_cast<std::size_t>(i)] &&
          item_counts[static_cast<std::size_t>(i)] < min_count) {
        keep_item[static_cast<std::size_t>(i)] = 0;
        changed = true;
      }
  }
  RatingsDataset out;
  std::vector<int> user_map(static_cast<std::size_t>(d.num_users), -1);
  std::vector<int> item_map(static_cast<std::size_t>(d.num_items), -1);
  for (int u = 0; u < d.num_users; ++u)
    if (keep_user[static_cast<std::size_t>(u)]) {
      user_map[static_cast<std::size_t>(u)] =
          static_cast<int>(out.user_raw_ids.size());
      out.user_raw_ids.push_back(d.user_raw_ids[static_cast<std::size_t>(u)]);
    }
  for (int i = 0; i < d.num_items; ++i)
    if (keep_item[static_cast<std::size_t>(i)]) {
      item_map[static_cast<std::size_t>(i)] =
          static_cast<int>(out.item_raw_ids.size());
      out.item_raw_ids.push_back(d.item_raw_ids[static_cast<std::size_t>(i)]);
    }
  for (const auto& t : d.triples) {
    int u = user_map[static_cast<std::size_t>(t.user)];
    int i = item_map[static_cast<std::size_t>(t.item)];
    if (u >= 0 && i >= 0) out.triples.push_back({u, i, t.value});
  }
  out.num_users = static_cast<int>(out.user_raw_ids.size());
  out.num_items = static_cast<int>(out.item_raw_ids.size());
  return out;
}

// ---------------------------------------------------------------------------
// Item-item similarity: cosine over mean-centered rating vectors (zero where
// unrated), negatives clamped to zero downstream.
// ---------------------------------------------------------------------------

/// Per-item centered rating lists, sorted by user, plus norms.
class ItemVectors {
 public:
  explicit ItemVectors(const RatingsDataset& d)
      : entries_(static_cast<std::size_t>(d.num_items)),
        norms_(static_cast<std::size_t>(d.num_items), 0.0) {
    std::vector<double> sums(static_cast<std::size_t>(d.num_items), 0.0);
    std::vector<int> counts(static_cast<std::size_t>(d.num_items), 0);
    for (const auto& t : d.triples) {
      sums[static_cast<std::size_t>(t.item)] += t.value;
      ++counts[static_cast<std::size_t>(t.item)];
    }
    for (const auto& t : d.triples) {
      std::size_t i = static_cast<std::size_t>(t.item);
      double centered = t.value - sums[i] / counts[i];
      entries_[i].emplace_back(t.user, centered);
    }
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      std::sort(entries_[i].begin(), entries_[i].end());
      double sq = 0.0;
      for (const auto& [user, v] : entries_[i]) sq += v * v;
      norms_[i] = std::sqrt(sq);
    }
  }

  bool has_ratings(int item) const {
    return !entries_[static_cast<std::size_t>(item)].empty();
  }

  /// Cosine similarity; zero when either centered vector has zero norm.
  double cosine(int a, int b) const {
    const auto& va = entries_[static_cast<std::size_t>(a)];
    const auto& vb = entries_[static_cast<std::size_t>(b)];
    double na = norms_[static_cast<std::size_t>(a)];
    double nb = norms_[static_cast<std::size_t>(b)];
    if (na == 0.0 || nb == 0.0) return 0.0;
    double dot = 0.0;
    std::size_t i = 0, j = 0;
    while (i < va.size() && j < vb.size()) {
      if (va[i].first < vb[j].first)
        ++i;
      else if (va[i].first > vb[j].first)
        ++j;
      else {
        dot += va[i].second * vb[j].second;
        ++i;
        ++j;
      }
    }
    return dot / (na * nb);
  }

 private:
  std::vector<std::vector<std::pair<int, double>>> entries_;
  std::vector<double> norms_;
};

namespace detail {

/// Top-k positively similar items of `item` among `candidates` (excluding
/// itself); ties broken by lower dense item id.
inline std::vector<std::pair<int, double>> top_k_similar(
    const ItemVectors& vectors, int item, const std::vector<int>& candidates,
    int k) {
  std::vector<std::pair<int, double>> sims;
  sims.reserve(candidates.size());
  for (int c : candidates) {
    if (c == item) continue;
    double s = vectors.cosine(item, c);
    if (s > 0.0) sims.emplace_back(c, s);
  }
  std::sort(sims.begin(), sims.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (static_cast<int>(sims.size()) > k) sims.resize(static_cast<std::size_t>(k));
  return sims;
}

}  // namespace detail

/// Directed k-nearest-neighbour graph over node_items; node g-index equals
/// the position in node_items. Items without usable similarities end up
/// isolated.
inline Graph build_knn_item_graph(const RatingsDataset& d,
                                  const std::vector<int>& node_items, int k) {
  if (k < 1 || k >= static_cast<int>(node_items.size()))
    throw std::invalid_argument(
        "build_knn_item_graph: need 1 <= k < |node_items|");
  ItemVectors vectors(d);
  std::unordered_map<int, Index> position;
  for (std::size_t i = 0; i < node_items.size(); ++i)
    position[node_items[i]] = static_cast<Index>(i);
  std::vector<Eigen::Triplet<double>> edges;
  for (std::size_t i = 0; i < node_items.size(); ++i) {
    auto neighbors = detail::top_k_similar(vectors, node_items[i], node_items, k);
    for (const auto& [item, sim] : neighbors)
      edges.emplace_back(static_cast<Index>(i), position.at(item), sim);
  }
  return Graph(static_cast<Index>(node_items.size()), /*directed=*/true,
               edges);
}

/// Ground-truth attachment of a cold item towards the core: similarity
/// weights on its k nearest core items and the matching binary pattern.
/// This overload reuses precomputed item vectors (the cold start pipeline
/// calls it once per training item).
inline AttachmentSample attachment_from_ratings(
    const ItemVectors& vectors, int item, const std::vector<int>& core_items,
    int k) {
  std::unordered_map<int, Index> position;
  for (std::size_t i = 0; i < core_items.size(); ++i)
    position[core_items[i]] = static_cast<Index>(i);
  auto neighbors = detail::top_k_similar(vectors, item, core_items, k);
  Index n = static_cast<Index>(core_items.size());
  AttachmentSample out{Vector::Zero(n), Vector::Zero(n)};
  for (const auto& [core, sim] : neighbors) {
    Index i = position.at(core);
    out.a_plus[i] = sim;
    out.b_plus[i] = 1.0;
  }
  return out;
}

inline AttachmentSample attachment_from_ratings(
    const RatingsDataset& d, int item, const std::vector<int>& core_items,
    int k) {
  for (int c : core_items)
    if (c == item)
      throw std::invalid_argument(
          "attachment_from_ratings: item must not be a core item");
  ItemVectors vectors(d);
  if (!vectors.has_ratings(item))
    throw std::invalid_argument("attachment_from_ratings: item has no ratings");
  return attachment_from_ratings(vectors, item, core_items, k);
}

// ---------------------------------------------------------------------------
// Cold-start split: seeded partition of the item set into core / train /
// test (each section sorted by dense id).
// ---------------------------------------------------------------------------

struct ColdStartSplit {
  std::vector<int> core_items;
  std::vector<int> train_items;
  std::vector<int> test_items;
};

inline ColdStartSplit make_cold_start_split(const RatingsDataset& d,
                                            int core_size, int train_size,
                                            std::uint64_t seed) {
  if (core_size < 0 || train_size < 0 ||
      core_size + train_size > d.num_items)
    throw std::invalid_argument(
        "make_cold_start_split: core + train exceeds item count");
  std::vector<int> ids(static_cast<std::size_t>(d.num_items));
  for (int i = 0; i < d.num_items; ++i) ids[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  rng.shuffle(ids);
  ColdStartSplit split;
  split.core_items.assign(ids.begin(), ids.begin() + core_size);
  split.train_items.assign(ids.begin() + core_size,
                           ids.begin() + core_size + train_size);
  split.test_items.assign(ids.begin() + core_size + train_size, ids.end());
  std::sort(split.core_items.begin(), split.core_items.end());
  std::sort(split.train_items.begin(), split.train_items.end());
  std::sort(split.test_items.begin(), split.test_items.end());
  return split;
}

/// Manifest with raw item ids, one per line, under [core]/[train]/[test].
inline void save_split(const ColdStartSplit& split, const RatingsDataset& d,
                       const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  auto section = [&](const char* name, const std::vector<int>& items) {
    out << '[' << name << "]\n";
    for (int i : items)
      out << d.item_raw_ids[static_cast<std::size_t>(i)] << '\n';
  };
  section("core", split.core_items);
  section("train", split.train_items);
  section("test", split.test_items);
}

inline ColdStartSplit load_split(const RatingsDataset& d,
                                 const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::unordered_map<long, int> raw_to_dense;
  for (int i = 0; i < d.num_items; ++i)
    raw_to_dense[d.item_raw_ids[static_cast<std::size_t>(i)]] = i;
  ColdStartSplit split;
  std::vector<int>* current = nullptr;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line == "[core]")
      current = &split.core_items;
    else if (line == "[train]")
      current = &split.train_items;
    else if (line == "[test]")
      current = &split.test_items;
    else if (current) {
      auto it = raw_to_dense.find(std::stol(line));
      if (it == raw_to_dense.end())
        throw ParseError("unknown raw item id " + line, line_no);
      current->push_back(it->second);
    } else {
      throw ParseError("content before any section header", line_no);
    }
  }
  return split;
}

}  // namespace exgraph
