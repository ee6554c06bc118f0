#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include <json.hpp>

#include "cryptext/matrix.hpp"

namespace cryptext {

struct GbtHyper {
  int rounds = 100;
  int max_depth = 6;
  double eta = 0.3;
  double lambda = 1.0;            // L2 on leaf weights
  double gamma = 0.0;             // minimum split gain
  double min_child_weight = 1.0;  // minimum hessian sum per child
  double base_score = 0.0;        // uniform prior margins
  int threads = 1;                // per-round class trees; output is thread-count invariant
};

// Internal node when feature >= 0, leaf otherwise. default_left is kept for
// format stability; features here are always dense so it is never consulted.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double leaf = 0.0;
  bool default_left = true;

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  std::vector<TreeNode> nodes;  // root at index 0

  // Leaf weight for x (raw Newton weight; eta is applied at accumulation).
  double predict(std::span<const double> x) const;
  int depth() const;
};

struct TreeEnsemble {
  GbtHyper hyper;
  int n_classes = 0;
  int n_features = 0;
  // rounds * n_classes trees; tree for (round r, class c) at r * n_classes + c.
  std::vector<Tree> trees;
  // Training multiclass log loss: entry 0 is the loss at zero margins,
  // entry r+1 the loss after round r.
  std::vector<double> train_mlogloss;

  int rounds_trained() const {
    return n_classes == 0 ? 0 : static_cast<int>(trees.size()) / n_classes;
  }
};

// Newton boosting with a softmax objective and exact greedy splits:
// gradients p - 1[y=c], hessians p(1-p) floored at 1e-16, split gain
// 0.5*(GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)) - gamma, leaf -G/(H+l).
// Ties break to the lowest feature index, then the lowest threshold.
TreeEnsemble gbt_fit(const Matrix& features, std::span<const int> labels, int n_classes,
                     const GbtHyper& hyper);

// Softmax over accumulated margins; each row sums to 1.
Matrix gbt_predict_proba(const TreeEnsemble& model, const Matrix& features);
// Argmax of the probabilities; ties to the lowest class index.
std::vector<int> gbt_predict(const TreeEnsemble& model, const Matrix& features);

// -(1/N) sum ln(max(p[i, y_i], 1e-15)). `proba` rows must be normalized.
double mlogloss(const Matrix& proba, std::span<const int> labels);

nlohmann::json gbt_to_json(const TreeEnsemble& model);
TreeEnsemble gbt_from_json(const nlohmann::json& j);
void gbt_save(const TreeEnsemble& model, const std::filesystem::path& path);
TreeEnsemble gbt_load(const std::filesystem::path& path);

}  // namespace cryptext
