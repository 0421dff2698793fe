#pragma once

#include <algorithm>
#include <queue>
#include <tuple>
#include <vector>

#include "rcd/convex.hpp"

namespace rcd {

// Relative errors within this of τ still qualify; keeps τ = 0 meaningful under
// floating-point hull volumes.
inline constexpr double kMergeSlack = 1e-9;

// Greedy pairwise merge. Candidates are parts whose AABBs (expanded by 1e-6 of
// the overall diagonal) overlap; the pair with the smallest relative volume
// error is merged first. `allowed(merged)` may veto a merge, in which case
// the pair is dropped and the search continues.
template <class Allowed>
std::vector<ConvexPart> merge_neighbors_if(std::vector<ConvexPart> parts, double tau, Allowed allowed,
                                           std::vector<std::size_t>* origin = nullptr) {
  if (parts.size() < 2) {
    if (origin) {
      origin->resize(parts.size());
      for (std::size_t i = 0; i < parts.size(); ++i) (*origin)[i] = i;
    }
    return parts;
  }
  Aabb all;
  for (const auto& p : parts) all.expand(p.aabb());
  const double pad = 1e-6 * all.diagonal();

  // root[i] is the input index the part descends from; merges keep the smaller.
  std::vector<std::size_t> root(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) root[i] = i;
  std::vector<bool> alive(parts.size(), true);

  using Entry = std::tuple<double, std::size_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> heap;
  auto consider = [&](std::size_t i, std::size_t j) {
    if (!parts[i].aabb().overlaps(parts[j].aabb(), pad)) return;
    const double bound = parts[i].volume() + parts[j].volume();
    const MergeResult m = merge_pair(parts[i], parts[j]);
    const double rel = std::max(0.0, m.volume_error) / bound;
    if (rel <= tau + kMergeSlack) heap.emplace(rel, std::min(i, j), std::max(i, j));
  };
  for (std::size_t i = 0; i < parts.size(); ++i)
    for (std::size_t j = i + 1; j < parts.size(); ++j) consider(i, j);

  while (!heap.empty()) {
    const auto [rel, i, j] = heap.top();
    heap.pop();
    if (!alive[i] || !alive[j]) continue;
    MergeResult m = merge_pair(parts[i], parts[j]);
    if (!allowed(m.merged)) continue;
    alive[i] = alive[j] = false;
    parts.push_back(std::move(m.merged));
    root.push_back(std::min(root[i], root[j]));
    alive.push_back(true);
    const std::size_t k = parts.size() - 1;
    for (std::size_t o = 0; o < k; ++o)
      if (alive[o]) consider(o, k);
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < parts.size(); ++i)
    if (alive[i]) order.push_back(i);
  // Stable output order: by the earliest input each survivor descends from.
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return root[a] < root[b]; });
  std::vector<ConvexPart> out;
  out.reserve(order.size());
  if (origin) origin->clear();
  for (std::size_t i : order) {
    out.push_back(std::move(parts[i]));
    if (origin) origin->push_back(root[i]);
  }
  return out;
}

inline std::vector<ConvexPart> merge_neighbors(std::vector<ConvexPart> parts, double tau) {
  return merge_neighbors_if(std::move(parts), tau, [](const ConvexPart&) { return true; });
}

}  // namespace rcd
