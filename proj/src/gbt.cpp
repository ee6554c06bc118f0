#include "cryptext/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

namespace cryptext {

namespace {

constexpr double kHessianFloor = 1e-16;
constexpr double kProbFloor = 1e-15;

void softmax_row(std::span<const double> margins, std::span<double> out) {
  double max_margin = margins[0];
  for (double m : margins) max_margin = std::max(max_margin, m);
  double total = 0.0;
  for (size_t c = 0; c < margins.size(); ++c) {
    out[c] = std::exp(margins[c] - max_margin);
    total += out[c];
  }
  for (auto& p : out) p /= total;
}

// Split threshold between adjacent distinct values. The midpoint can round
// onto the lower value for adjacent doubles; fall back to the upper value so
// that "x < threshold" keeps the scanned prefix on the left.
double split_threshold(double lo, double hi) {
  const double mid = 0.5 * (lo + hi);
  return mid > lo ? mid : hi;
}

struct BuildNode {
  double grad_sum = 0.0;
  double hess_sum = 0.0;
  int depth = 0;
  // chosen split
  double best_gain = 0.0;
  int best_feature = -1;
  double best_threshold = 0.0;
  // outcome
  int left = -1;
  int right = -1;
  double leaf = 0.0;
  bool finalized = false;
};

struct ScanState {
  double grad = 0.0;
  double hess = 0.0;
  double last_value = 0.0;
  int64_t seen = 0;
};

double split_gain(double gl, double hl, double gr, double hr, double lambda,
                  double gamma) {
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };
  return 0.5 * (score(gl, hl) + score(gr, hr) - score(gl + gr, hl + hr)) - gamma;
}

// Grows one regression tree on (grad, hess) with exact greedy splits over
// pre-sorted feature orders. Returns the tree and leaves the per-instance
// leaf assignment in node_of for the margin update.
Tree grow_tree(const Matrix& features, std::span<const std::vector<int>> sorted_order,
               std::span<const double> grad, std::span<const double> hess,
               const GbtHyper& hyper, std::vector<int>& node_of) {
  const size_t n = features.rows;
  const int n_features = static_cast<int>(features.cols);

  std::vector<BuildNode> nodes(1);
  nodes[0].depth = 0;
  for (size_t i = 0; i < n; ++i) {
    nodes[0].grad_sum += grad[i];
    nodes[0].hess_sum += hess[i];
  }
  node_of.assign(n, 0);

  std::vector<int> active{0};
  while (!active.empty()) {
    const int depth = nodes[active[0]].depth;
    if (depth >= hyper.max_depth) break;  // active nodes become leaves

    // slot index per active node for the scan states
    std::vector<int> slot_of(nodes.size(), -1);
    for (size_t s = 0; s < active.size(); ++s) slot_of[active[s]] = static_cast<int>(s);
    std::vector<ScanState> states(active.size());

    for (int f = 0; f < n_features; ++f) {
      std::fill(states.begin(), states.end(), ScanState{});
      for (int i : sorted_order[f]) {
        const int nd = node_of[i];
        const int s = slot_of[nd];
        if (s < 0) continue;
        ScanState& st = states[s];
        const double value = features.at(i, f);
        if (st.seen > 0 && value > st.last_value) {
          BuildNode& bn = nodes[nd];
          const double gl = st.grad, hl = st.hess;
          const double gr = bn.grad_sum - gl, hr = bn.hess_sum - hl;
          if (hl >= hyper.min_child_weight && hr >= hyper.min_child_weight) {
            const double gain = split_gain(gl, hl, gr, hr, hyper.lambda, hyper.gamma);
            if (gain > bn.best_gain) {
              bn.best_gain = gain;
              bn.best_feature = f;
              bn.best_threshold = split_threshold(st.last_value, value);
            }
          }
        }
        st.grad += grad[i];
        st.hess += hess[i];
        st.last_value = value;
        st.seen++;
      }
    }

    std::vector<int> next_active;
    for (int nd : active) {
      if (nodes[nd].best_feature >= 0 && nodes[nd].best_gain > 0.0) {
        const int left = static_cast<int>(nodes.size());
        BuildNode child;
        child.depth = depth + 1;
        nodes.push_back(child);  // may reallocate; index nodes[] afresh below
        nodes.push_back(child);
        nodes[nd].left = left;
        nodes[nd].right = left + 1;
        next_active.push_back(left);
        next_active.push_back(left + 1);
      } else {
        BuildNode& bn = nodes[nd];
        bn.leaf = -bn.grad_sum / (bn.hess_sum + hyper.lambda);
        bn.finalized = true;
      }
    }
    if (next_active.empty()) break;

    // Route instances to the new children and recompute child stats from
    // scratch (avoids accumulating the G-GL subtraction error).
    for (size_t i = 0; i < n; ++i) {
      const BuildNode& bn = nodes[node_of[i]];
      if (bn.finalized || bn.best_feature < 0) continue;
      node_of[i] = features.at(i, bn.best_feature) < bn.best_threshold ? bn.left : bn.right;
    }
    for (int nd : next_active) {
      nodes[nd].grad_sum = 0.0;
      nodes[nd].hess_sum = 0.0;
    }
    for (size_t i = 0; i < n; ++i) {
      BuildNode& bn = nodes[node_of[i]];
      if (bn.finalized) continue;
      bn.grad_sum += grad[i];
      bn.hess_sum += hess[i];
    }
    active = std::move(next_active);
  }
  for (int nd : active) {
    BuildNode& bn = nodes[nd];
    bn.leaf = -bn.grad_sum / (bn.hess_sum + hyper.lambda);
    bn.finalized = true;
  }

  Tree tree;
  tree.nodes.resize(nodes.size());
  for (size_t i = 0; i < nodes.size(); ++i) {
    TreeNode& tn = tree.nodes[i];
    if (nodes[i].left >= 0) {
      tn.feature = nodes[i].best_feature;
      tn.threshold = nodes[i].best_threshold;
      tn.left = nodes[i].left;
      tn.right = nodes[i].right;
    } else {
      tn.leaf = nodes[i].leaf;
    }
  }
  return tree;
}

void validate_features(const Matrix& features) {
  for (size_t i = 0; i < features.rows; ++i) {
    for (size_t j = 0; j < features.cols; ++j) {
      if (!std::isfinite(features.at(i, j))) {
        throw std::invalid_argument("non-finite feature at row " + std::to_string(i) +
                                    " column " + std::to_string(j));
      }
    }
  }
}

}  // namespace

double Tree::predict(std::span<const double> x) const {
  int idx = 0;
  while (!nodes[idx].is_leaf()) {
    const TreeNode& nd = nodes[idx];
    idx = x[nd.feature] < nd.threshold ? nd.left : nd.right;
  }
  return nodes[idx].leaf;
}

int Tree::depth() const {
  std::vector<std::pair<int, int>> stack{{0, 0}};
  int max_depth = 0;
  while (!stack.empty()) {
    auto [idx, d] = stack.back();
    stack.pop_back();
    max_depth = std::max(max_depth, d);
    if (!nodes[idx].is_leaf()) {
      stack.push_back({nodes[idx].left, d + 1});
      stack.push_back({nodes[idx].right, d + 1});
    }
  }
  return max_depth;
}

TreeEnsemble gbt_fit(const Matrix& features, std::span<const int> labels, int n_classes,
                     const GbtHyper& hyper) {
  const size_t n = features.rows;
  if (n == 0) throw std::invalid_argument("gbt_fit: empty training set");
  if (n_classes < 2) throw std::invalid_argument("gbt_fit: need at least 2 classes");
  if (labels.size() != n) throw std::invalid_argument("gbt_fit: labels/features mismatch");
  for (size_t i = 0; i < n; ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw std::invalid_argument("gbt_fit: label out of range at row " + std::to_string(i));
    }
  }
  validate_features(features);

  TreeEnsemble model;
  model.hyper = hyper;
  model.n_classes = n_classes;
  model.n_features = static_cast<int>(features.cols);

  // One global pre-sort per feature; ties resolved by instance index.
  std::vector<std::vector<int>> sorted_order(features.cols);
  for (size_t f = 0; f < features.cols; ++f) {
    auto& order = sorted_order[f];
    order.resize(n);
    for (size_t i = 0; i < n; ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      const double va = features.at(a, f), vb = features.at(b, f);
      return va < vb || (va == vb && a < b);
    });
  }

  Matrix margins(n, n_classes, hyper.base_score);
  Matrix proba(n, n_classes);
  auto refresh_proba = [&] {
    for (size_t i = 0; i < n; ++i) softmax_row(margins.row(i), proba.row(i));
  };
  refresh_proba();
  model.train_mlogloss.push_back(mlogloss(proba, labels));

  const int n_threads = std::max(1, std::min(hyper.threads, n_classes));
  std::vector<Tree> round_trees(n_classes);
  std::vector<std::vector<int>> round_leaf_of(n_classes);
  std::vector<double> grad(n), hess(n);

  for (int round = 0; round < hyper.rounds; ++round) {
    auto grow_class = [&](int c, std::vector<double>& g, std::vector<double>& h) {
      for (size_t i = 0; i < n; ++i) {
        const double p = proba.at(i, c);
        g[i] = p - (labels[i] == c ? 1.0 : 0.0);
        h[i] = std::max(p * (1.0 - p), kHessianFloor);
      }
      round_trees[c] = grow_tree(features, sorted_order, g, h, hyper, round_leaf_of[c]);
    };

    if (n_threads == 1) {
      for (int c = 0; c < n_classes; ++c) grow_class(c, grad, hess);
    } else {
      std::vector<std::thread> workers;
      for (int t = 0; t < n_threads; ++t) {
        workers.emplace_back([&, t] {
          std::vector<double> g(n), h(n);
          for (int c = t; c < n_classes; c += n_threads) grow_class(c, g, h);
        });
      }
      for (auto& w : workers) w.join();
    }

    // All C trees of a round are grown against the same probabilities;
    // margins move only after the round completes.
    for (int c = 0; c < n_classes; ++c) {
      const Tree& tree = round_trees[c];
      const auto& leaf_of = round_leaf_of[c];
      for (size_t i = 0; i < n; ++i) {
        margins.at(i, c) += hyper.eta * tree.nodes[leaf_of[i]].leaf;
      }
      model.trees.push_back(std::move(round_trees[c]));
    }
    refresh_proba();
    model.train_mlogloss.push_back(mlogloss(proba, labels));
  }
  return model;
}

Matrix gbt_predict_proba(const TreeEnsemble& model, const Matrix& features) {
  if (static_cast<int>(features.cols) != model.n_features) {
    throw std::invalid_argument("gbt_predict_proba: expected " +
                                std::to_string(model.n_features) + " columns, got " +
                                std::to_string(features.cols));
  }
  const size_t n = features.rows;
  Matrix margins(n, model.n_classes, model.hyper.base_score);
  const int rounds = model.rounds_trained();
  for (size_t i = 0; i < n; ++i) {
    auto x = features.row(i);
    for (int r = 0; r < rounds; ++r) {
      for (int c = 0; c < model.n_classes; ++c) {
        margins.at(i, c) +=
            model.hyper.eta * model.trees[r * model.n_classes + c].predict(x);
      }
    }
  }
  Matrix proba(n, model.n_classes);
  for (size_t i = 0; i < n; ++i) softmax_row(margins.row(i), proba.row(i));
  return proba;
}

std::vector<int> gbt_predict(const TreeEnsemble& model, const Matrix& features) {
  Matrix proba = gbt_predict_proba(model, features);
  std::vector<int> labels(proba.rows);
  for (size_t i = 0; i < proba.rows; ++i) {
    auto row = proba.row(i);
    int best = 0;
    for (int c = 1; c < model.n_classes; ++c) {
      if (row[c] > row[best]) best = c;  // ties keep the lowest index
    }
    labels[i] = best;
  }
  return labels;
}

double mlogloss(const Matrix& proba, std::span<const int> labels) {
  if (proba.rows != labels.size()) {
    throw std::invalid_argument("mlogloss: probability/label count mismatch");
  }
  double total = 0.0;
  for (size_t i = 0; i < proba.rows; ++i) {
    total += -std::log(std::max(proba.at(i, labels[i]), kProbFloor));
  }
  return total / static_cast<double>(proba.rows);
}

nlohmann::json gbt_to_json(const TreeEnsemble& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& tree : model.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& nd : tree.nodes) {
      nodes.push_back({{"feature", nd.feature},
                       {"threshold", nd.threshold},
                       {"left", nd.left},
                       {"right", nd.right},
                       {"leaf", nd.leaf},
                       {"default_left", nd.default_left}});
    }
    trees.push_back({{"nodes", nodes}});
  }
  return {{"hyper",
           {{"rounds", model.hyper.rounds},
            {"max_depth", model.hyper.max_depth},
            {"eta", model.hyper.eta},
            {"lambda", model.hyper.lambda},
            {"gamma", model.hyper.gamma},
            {"min_child_weight", model.hyper.min_child_weight},
            {"base_score", model.hyper.base_score}}},
          {"n_classes", model.n_classes},
          {"n_features", model.n_features},
          {"trees", trees},
          {"train_mlogloss", model.train_mlogloss}};
}

TreeEnsemble gbt_from_json(const nlohmann::json& j) {
  TreeEnsemble model;
  const auto& hyper = j.at("hyper");
  model.hyper.rounds = hyper.at("rounds").get<int>();
  model.hyper.max_depth = hyper.at("max_depth").get<int>();
  model.hyper.eta = hyper.at("eta").get<double>();
  model.hyper.lambda = hyper.at("lambda").get<double>();
  model.hyper.gamma = hyper.at("gamma").get<double>();
  model.hyper.min_child_weight = hyper.at("min_child_weight").get<double>();
  model.hyper.base_score = hyper.at("base_score").get<double>();
  model.n_classes = j.at("n_classes").get<int>();
  model.n_features = j.at("n_features").get<int>();
  for (const auto& tj : j.at("trees")) {
    Tree tree;
    for (const auto& nj : tj.at("nodes")) {
      TreeNode nd;
      nd.feature = nj.at("feature").get<int>();
      nd.threshold = nj.at("threshold").get<double>();
      nd.left = nj.at("left").get<int>();
      nd.right = nj.at("right").get<int>();
      nd.leaf = nj.at("leaf").get<double>();
      nd.default_left = nj.at("default_left").get<bool>();
      tree.nodes.push_back(nd);
    }
    model.trees.push_back(std::move(tree));
  }
  if (j.contains("train_mlogloss")) {
    model.train_mlogloss = j.at("train_mlogloss").get<std::vector<double>>();
  }
  return model;
}

void gbt_save(const TreeEnsemble& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model: " + path.string());
  out << gbt_to_json(model).dump(2) << '\n';
}

TreeEnsemble gbt_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model: " + path.string());
  nlohmann::json j;
  in >> j;
  return gbt_from_json(j);
}

}  // namespace cryptext
