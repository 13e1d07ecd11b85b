#include "riskcal/losses.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <unordered_map>

namespace riskcal {

const char* lambda_convention_name(LambdaConvention c) noexcept {
  switch (c) {
    case LambdaConvention::direct:
      return "direct";
    case LambdaConvention::negated:
      return "negated";
  }
  return "direct";
}

StepLoss miscoverage_loss(double score) {
  if (!std::isfinite(score)) {
    throw std::invalid_argument("miscoverage_loss: score must be finite");
  }
  StepLoss out;
  out.breakpoints = {score};
  out.values = {1.0, 0.0};
  return out;
}

StepLoss fnr_loss(const std::vector<double>& class_scores,
                  const std::vector<std::size_t>& label_set) {
  if (label_set.empty()) {
    throw std::invalid_argument("fnr_loss: label_set must be nonempty");
  }
  for (double s : class_scores) {
    if (!std::isfinite(s) || s < 0.0 || s > 1.0) {
      throw std::invalid_argument("fnr_loss: scores must lie in [0, 1]");
    }
  }
  std::vector<std::size_t> labels = label_set;
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw std::invalid_argument("fnr_loss: label_set has duplicates");
  }
  if (labels.back() >= class_scores.size()) {
    throw std::invalid_argument("fnr_loss: label id out of range");
  }

  // Class k joins the prediction set once lambda reaches 1 - f_k.
  std::vector<double> thresholds;
  thresholds.reserve(labels.size());
  for (std::size_t k : labels) thresholds.push_back(1.0 - class_scores[k]);
  std::sort(thresholds.begin(), thresholds.end());

  const double m = static_cast<double>(labels.size());
  StepLoss out;
  out.values.push_back(1.0);
  std::size_t covered = 0;
  std::size_t i = 0;
  while (i < thresholds.size()) {
    const double t = thresholds[i];
    while (i < thresholds.size() && thresholds[i] == t) {
      ++covered;
      ++i;
    }
    out.breakpoints.push_back(t);
    out.values.push_back(1.0 - static_cast<double>(covered) / m);
  }
  return out.canonical();
}

ClassTree::ClassTree(std::vector<std::int64_t> parent)
    : parent_(std::move(parent)) {
  const std::size_t v = parent_.size();
  if (v == 0) throw std::invalid_argument("ClassTree: empty node set");
  children_.assign(v, {});
  std::size_t roots = 0;
  for (std::size_t i = 0; i < v; ++i) {
    const std::int64_t p = parent_[i];
    if (p == -1) {
      ++roots;
      root_ = i;
      continue;
    }
    if (p < 0 || p >= static_cast<std::int64_t>(v) ||
        p == static_cast<std::int64_t>(i)) {
      throw std::invalid_argument("ClassTree: invalid parent for node " +
                                  std::to_string(i));
    }
    children_[static_cast<std::size_t>(p)].push_back(i);
  }
  if (roots != 1) {
    throw std::invalid_argument("ClassTree: exactly one root required, found " +
                                std::to_string(roots));
  }
  // BFS from the root assigns depths and proves every node is reachable
  // (reachability + |E| = V-1 rules out cycles).
  depth_.assign(v, 0);
  std::vector<bool> seen(v, false);
  std::deque<std::size_t> queue{root_};
  seen[root_] = true;
  std::size_t visited = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    ++visited;
    max_depth_ = std::max(max_depth_, depth_[u]);
    for (std::size_t c : children_[u]) {
      if (seen[c]) throw std::invalid_argument("ClassTree: cycle detected");
      seen[c] = true;
      depth_[c] = depth_[u] + 1;
      queue.push_back(c);
    }
  }
  if (visited != v) {
    throw std::invalid_argument("ClassTree: nodes disconnected from the root");
  }
  for (std::size_t i = 0; i < v; ++i) {
    if (children_[i].empty()) leaves_.push_back(i);
  }
}

std::vector<std::size_t> ClassTree::ancestors_or_self(std::size_t v) const {
  if (v >= size()) throw std::invalid_argument("ClassTree: node out of range");
  std::vector<std::size_t> chain{v};
  while (parent_[chain.back()] != -1) {
    chain.push_back(static_cast<std::size_t>(parent_[chain.back()]));
  }
  return chain;
}

std::vector<std::size_t> ClassTree::leaves_under(std::size_t v) const {
  if (v >= size()) throw std::invalid_argument("ClassTree: node out of range");
  std::vector<std::size_t> out;
  std::vector<std::size_t> stack{v};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    if (children_[u].empty()) {
      out.push_back(u);
    } else {
      stack.insert(stack.end(), children_[u].begin(), children_[u].end());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

// Undirected BFS distances from `start` over the tree's edges.
std::vector<std::size_t> tree_distances(const ClassTree& tree,
                                        std::size_t start,
                                        const std::vector<std::int64_t>& parent) {
  std::vector<std::size_t> dist(tree.size(), static_cast<std::size_t>(-1));
  std::deque<std::size_t> queue{start};
  dist[start] = 0;
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    const auto visit = [&](std::size_t w) {
      if (dist[w] == static_cast<std::size_t>(-1)) {
        dist[w] = dist[u] + 1;
        queue.push_back(w);
      }
    };
    if (parent[u] != -1) visit(static_cast<std::size_t>(parent[u]));
    for (std::size_t c : tree.children(u)) visit(c);
  }
  return dist;
}

}  // namespace

StepLoss graph_distance_loss(const ClassTree& tree,
                             const std::vector<double>& leaf_scores,
                             std::size_t true_leaf) {
  if (leaf_scores.size() != tree.size()) {
    throw std::invalid_argument(
        "graph_distance_loss: leaf_scores must be indexed by node id");
  }
  for (std::size_t i = 0; i < leaf_scores.size(); ++i) {
    if (!std::isfinite(leaf_scores[i]) || leaf_scores[i] < 0.0) {
      throw std::invalid_argument(
          "graph_distance_loss: scores must be finite and >= 0");
    }
    if (!tree.is_leaf(i) && leaf_scores[i] != 0.0) {
      throw std::invalid_argument(
          "graph_distance_loss: internal node " + std::to_string(i) +
          " carries score mass (scores live on leaves)");
    }
  }
  if (true_leaf >= tree.size() || !tree.is_leaf(true_leaf)) {
    throw std::invalid_argument("graph_distance_loss: true_leaf must be a leaf");
  }

  // Predicted leaf: argmax score, smallest id on ties.
  const std::vector<std::size_t>& leaves = tree.leaves();
  std::size_t y_hat = leaves.front();
  for (std::size_t leaf : leaves) {
    if (leaf_scores[leaf] > leaf_scores[y_hat]) y_hat = leaf;
  }

  const std::size_t depth_cap = tree.max_depth();
  if (depth_cap == 0) return StepLoss::constant(0.0);
  const double d_norm = static_cast<double>(depth_cap);

  // One-sided distance from the true leaf: min over its ancestors of plain
  // tree distance, computed per ancestor by BFS.
  std::vector<std::int64_t> parent(tree.size());
  for (std::size_t i = 0; i < tree.size(); ++i) {
    parent[i] = (i == tree.root())
                    ? -1
                    : static_cast<std::int64_t>(tree.ancestors_or_self(i)[1]);
  }
  std::vector<std::size_t> hdist(tree.size(), static_cast<std::size_t>(-1));
  for (std::size_t a : tree.ancestors_or_self(true_leaf)) {
    const std::vector<std::size_t> dist = tree_distances(tree, a, parent);
    for (std::size_t s = 0; s < tree.size(); ++s) {
      hdist[s] = std::min(hdist[s], dist[s]);
    }
  }

  // Walk the predicted leaf's ancestor chain. At threshold lambda the
  // prediction is the leaf set of the deepest chain node whose subtree mass
  // strictly exceeds lambda (the whole leaf set when none does). Masses
  // nest, so each distinct g_j is a breakpoint: as lambda grows the binding
  // node walks toward the root, the set expands, and the loss steps down.
  const std::vector<std::size_t> chain = tree.ancestors_or_self(y_hat);
  std::vector<double> g(chain.size());
  std::vector<double> regime_value(chain.size() + 1);
  for (std::size_t j = 0; j < chain.size(); ++j) {
    double mass = 0.0;
    std::size_t best = static_cast<std::size_t>(-1);
    for (std::size_t s : tree.leaves_under(chain[j])) {
      mass += leaf_scores[s];
      best = std::min(best, hdist[s]);
    }
    g[j] = mass;
    regime_value[j] = static_cast<double>(best) / d_norm;
  }
  regime_value[chain.size()] = 0.0;  // nothing exceeds lambda: full leaf set

  // Breakpoints at g_j ascending j; on [g_j, g_{j+1}) the deepest node with
  // g > lambda is chain[j+1] (strict >, so the value at a breakpoint is the
  // expanded set's: right-continuous). Equal masses collapse to the loosest
  // regime of the tie.
  StepLoss out;
  out.values.push_back(regime_value[0]);
  for (std::size_t j = 0; j < chain.size(); ++j) {
    const double t = g[j];
    if (!out.breakpoints.empty() && out.breakpoints.back() == t) {
      out.values.back() = regime_value[j + 1];
    } else {
      out.breakpoints.push_back(t);
      out.values.push_back(regime_value[j + 1]);
    }
  }
  return out.canonical();
}

std::vector<std::string> normalize_tokens(const std::string& text) {
  // ASCII-only on purpose: locale-independent and deterministic. Bytes >=
  // 0x80 (multi-byte UTF-8) pass through unmodified.
  const auto is_space = [](unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' ||
           c == '\f';
  };
  const auto is_punct = [](unsigned char c) {
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
           (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
  };
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty() && current != "a" && current != "an" &&
        current != "the") {
      tokens.push_back(current);
    }
    current.clear();
  };
  for (unsigned char c : text) {
    if (is_space(c)) {
      flush();
    } else if (!is_punct(c)) {
      current.push_back(static_cast<char>(
          (c >= 'A' && c <= 'Z') ? c + ('a' - 'A') : c));
    }
  }
  flush();
  return tokens;
}

double token_f1(const std::vector<std::string>& pred,
                const std::vector<std::string>& gold) {
  if (pred.empty() && gold.empty()) return 1.0;
  if (pred.empty() || gold.empty()) return 0.0;
  std::unordered_map<std::string, std::size_t> counts;
  for (const std::string& t : gold) ++counts[t];
  std::size_t common = 0;
  for (const std::string& t : pred) {
    const auto it = counts.find(t);
    if (it != counts.end() && it->second > 0) {
      --it->second;
      ++common;
    }
  }
  if (common == 0) return 0.0;
  const double precision =
      static_cast<double>(common) / static_cast<double>(pred.size());
  const double recall =
      static_cast<double>(common) / static_cast<double>(gold.size());
  return 2.0 * precision * recall / (precision + recall);
}

StepLoss f1_loss(const std::vector<ScoredCandidate>& candidates,
                 const std::vector<std::string>& gold_answers) {
  if (candidates.empty()) {
    throw std::invalid_argument("f1_loss: candidate list must be nonempty");
  }
  if (gold_answers.empty()) {
    throw std::invalid_argument("f1_loss: gold_answers must be nonempty");
  }
  std::vector<std::vector<std::string>> gold_bags;
  gold_bags.reserve(gold_answers.size());
  for (const std::string& g : gold_answers) gold_bags.push_back(normalize_tokens(g));

  // Candidate c enters the set once lambda reaches -score_c; the best
  // achievable F1 is a running max in that order.
  struct Entry {
    double lambda;
    double f1;
  };
  std::vector<Entry> entries;
  entries.reserve(candidates.size());
  for (const ScoredCandidate& cand : candidates) {
    if (!std::isfinite(cand.score)) {
      throw std::invalid_argument("f1_loss: candidate score must be finite");
    }
    const std::vector<std::string> bag = normalize_tokens(cand.text);
    double best = 0.0;
    for (const auto& gold : gold_bags) best = std::max(best, token_f1(bag, gold));
    entries.push_back({-cand.score, best});
  }
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.lambda < b.lambda; });

  StepLoss out;
  out.values.push_back(1.0);  // empty candidate set
  double best = 0.0;
  std::size_t i = 0;
  while (i < entries.size()) {
    const double t = entries[i].lambda;
    while (i < entries.size() && entries[i].lambda == t) {
      best = std::max(best, entries[i].f1);
      ++i;
    }
    out.breakpoints.push_back(t);
    out.values.push_back(1.0 - best);
  }
  return out.canonical();
}

}  // namespace riskcal
