#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riskcal/step_loss.hpp"

// Constructors that turn model outputs and labels into StepLoss rows for the
// four built-in loss families: prediction-set miscoverage, multilabel false
// negative rate, hierarchical (label-tree) distance, and token-F1 for
// extractive QA.
//
// Every constructor emits a loss that is non-increasing in its lambda: larger
// lambda always means a more permissive prediction and a smaller-or-equal
// loss. Two of the families are naturally parameterized the other way around
// (their native threshold shrinks the prediction as it grows), so those
// constructors emit the loss over the negated native threshold;
// lambda_convention() records the mapping so deployments can translate a
// calibrated lambda back to a native cutoff.

namespace riskcal {

enum class LossKind : int {
  miscoverage,
  false_negative_rate,
  graph_distance,
  token_f1,
};

enum class LambdaConvention : int {
  direct,   // lambda is the native threshold
  negated,  // lambda = -(native threshold); deploy with cutoff = -lambda_hat
};

constexpr LambdaConvention lambda_convention(LossKind kind) noexcept {
  switch (kind) {
    case LossKind::miscoverage:
    case LossKind::false_negative_rate:
      return LambdaConvention::direct;
    case LossKind::graph_distance:
    case LossKind::token_f1:
      return LambdaConvention::negated;
  }
  return LambdaConvention::direct;
}

const char* lambda_convention_name(LambdaConvention c) noexcept;

// Indicator loss 1{score > lambda}: breakpoint at the conformal score with
// values [1, 0]. Reduces risk calibration to split-conformal prediction.
StepLoss miscoverage_loss(double score);

// False-negative proportion for a multilabel sample: with per-class scores
// f_k in [0,1] and the (nonempty, duplicate-free) true label set Y, the
// prediction set at lambda is C = {k : f_k >= 1 - lambda} and the loss is
// 1 - |Y & C| / |Y|. Breakpoints sit at {1 - f_k : k in Y}; the loss steps
// down by 1/|Y| as each true class enters C and reaches 0 once all are in.
StepLoss fnr_loss(const std::vector<double>& class_scores,
                  const std::vector<std::size_t>& label_set);

// Rooted tree over node ids 0..V-1 given as a parent array (parent[root] is
// -1). Validates that exactly one root exists, every parent id is in range,
// and the structure is a tree (no cycles).
class ClassTree {
 public:
  explicit ClassTree(std::vector<std::int64_t> parent);

  std::size_t size() const noexcept { return parent_.size(); }
  std::size_t root() const noexcept { return root_; }
  bool is_leaf(std::size_t v) const { return children_.at(v).empty(); }
  const std::vector<std::size_t>& children(std::size_t v) const {
    return children_.at(v);
  }
  std::size_t depth(std::size_t v) const { return depth_.at(v); }
  // Longest root-to-node distance: the normalizer for graph distances.
  std::size_t max_depth() const noexcept { return max_depth_; }
  // v, parent(v), ..., root.
  std::vector<std::size_t> ancestors_or_self(std::size_t v) const;
  // Leaf ids in v's subtree (v itself when v is a leaf), ascending.
  std::vector<std::size_t> leaves_under(std::size_t v) const;
  // All leaf ids, ascending.
  const std::vector<std::size_t>& leaves() const noexcept { return leaves_; }

 private:
  std::vector<std::int64_t> parent_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> depth_;
  std::vector<std::size_t> leaves_;
  std::size_t root_ = 0;
  std::size_t max_depth_ = 0;
};

// Hierarchical-distance loss for single-label classification over a label
// tree.
//
// leaf_scores is indexed by node id; entries for internal nodes must be 0
// (scores live on leaves; missing or negative entries are errors). The
// predicted leaf is the argmax over leaves (ties: smallest node id). With
// g(a) = total leaf score in a's subtree, the prediction at lambda is the
// leaf set of the deepest ancestor a of the predicted leaf with
// g(a) > lambda (the whole leaf set when none qualifies), and the loss is
// the smallest normalized one-sided tree distance from true_leaf to that
// set: min over set members s of min over ancestors a of true_leaf of
// dist(a, s) / max_depth.
//
// Subtree masses nest, so the set expands toward the root as lambda grows
// and the loss is non-increasing; the strict inequality makes it
// right-continuous. The native parameterization compares masses against a
// cutoff that tightens the prediction as lambda would relax it, hence
// LambdaConvention::negated: translate a calibrated lambda back to the
// native cutoff as -lambda_hat. A tree of max_depth 0 (a single node)
// yields the constant-0 loss.
StepLoss graph_distance_loss(const ClassTree& tree,
                             const std::vector<double>& leaf_scores,
                             std::size_t true_leaf);

// One scored candidate answer for token-F1 calibration.
struct ScoredCandidate {
  std::string text;
  double score = 0.0;
};

// ASCII normalization shared by f1_loss and its consumers: lowercase,
// strip punctuation characters, split on whitespace, drop the articles
// {a, an, the}. Tokens keep multiplicity (bag semantics).
std::vector<std::string> normalize_tokens(const std::string& text);

// Bag-of-tokens F1 between two already-normalized token sequences: harmonic
// mean of precision and recall with multiset overlap counts. Two empty bags
// give 1 (exact-match convention); exactly one empty bag gives 0.
double token_f1(const std::vector<std::string>& pred,
                const std::vector<std::string>& gold);

// Best-achievable-F1 loss for extractive QA: at native cutoff c the
// candidate set is {candidates with score >= c} and the loss is
// 1 - max{token_f1(candidate, gold) : candidate in set, gold in gold_answers}
// (1 when the set is empty). Non-increasing over lambda = -c
// (LambdaConvention::negated). candidates and gold_answers must be nonempty;
// candidate scores finite.
StepLoss f1_loss(const std::vector<ScoredCandidate>& candidates,
                 const std::vector<std::string>& gold_answers);

}  // namespace riskcal
