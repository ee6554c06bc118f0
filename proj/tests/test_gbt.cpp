#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>

#include "cryptext/gbt.hpp"
#include "cryptext/rng.hpp"

using namespace cryptext;
namespace fs = std::filesystem;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
  Matrix m(rows.size(), rows[0].size());
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy(rows[i].begin(), rows[i].end(), m.data.begin() + i * m.cols);
  }
  return m;
}

// 40 points, 2 features, separable by x0 < 0 vs x0 > 0.
void separable_toy(Matrix& features, std::vector<int>& labels) {
  Rng rng(101);
  features = Matrix(40, 2);
  labels.resize(40);
  for (int i = 0; i < 40; ++i) {
    const int cls = i % 2;
    features.at(i, 0) = (cls == 0 ? -1.0 : 1.0) * (0.5 + rng.next_double());
    features.at(i, 1) = rng.uniform(-1.0, 1.0);  // noise feature
    labels[i] = cls;
  }
}

}  // namespace

TEST_CASE("mlogloss oracles") {
  // uniform over 20 classes
  Matrix uniform20(3, 20, 1.0 / 20.0);
  std::vector<int> y20 = {0, 7, 19};
  CHECK(std::fabs(mlogloss(uniform20, y20) - 2.995732) < 1e-6);
  CHECK(mlogloss(uniform20, y20) == doctest::Approx(std::log(20.0)).epsilon(1e-12));

  Matrix uniform2(5, 2, 0.5);
  std::vector<int> y2 = {0, 1, 0, 1, 1};
  CHECK(std::fabs(mlogloss(uniform2, y2) - 0.693147) < 1e-6);

  // perfect one-hot predictions: loss bounded only by the clipping floor
  Matrix onehot(2, 3, 0.0);
  onehot.at(0, 1) = 1.0;
  onehot.at(1, 2) = 1.0;
  std::vector<int> yperfect = {1, 2};
  CHECK(mlogloss(onehot, yperfect) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("empty ensemble predicts the uniform distribution") {
  TreeEnsemble model;
  model.n_classes = 4;
  model.n_features = 3;
  Matrix x(5, 3, 0.7);
  Matrix proba = gbt_predict_proba(model, x);
  for (size_t i = 0; i < proba.rows; ++i) {
    double total = 0.0;
    for (int c = 0; c < 4; ++c) {
      CHECK(proba.at(i, c) == doctest::Approx(0.25).epsilon(1e-12));
      total += proba.at(i, c);
    }
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
  // uniform rows argmax to the lowest class index
  auto labels = gbt_predict(model, x);
  for (int label : labels) CHECK(label == 0);
}

TEST_CASE("hand-computed single split on four points") {
  // x = 0,1,2,3; y = 0,0,1,1; C=2; zero margins -> p = 0.5 everywhere.
  // class-0 tree: g = (-.5,-.5,.5,.5), h = .25 each.
  // best split at 1.5: GL=-1, HL=.5, GR=1, HR=.5, lambda=1
  //   gain = .5*(1/1.5 + 1/1.5 - 0/3) = 2/3
  //   leaves: -GL/(HL+1) = 2/3 (left), -2/3 (right)
  Matrix x = from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  std::vector<int> y = {0, 0, 1, 1};
  GbtHyper hyper;
  hyper.rounds = 1;
  hyper.max_depth = 1;
  hyper.min_child_weight = 0.0;  // hessian sums here are only 0.5 per side

  TreeEnsemble model = gbt_fit(x, y, 2, hyper);
  REQUIRE(model.trees.size() == 2);

  const Tree& t0 = model.trees[0];
  REQUIRE(t0.nodes.size() == 3);
  CHECK(t0.nodes[0].feature == 0);
  CHECK(t0.nodes[0].threshold == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(t0.nodes[t0.nodes[0].left].leaf == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(t0.nodes[t0.nodes[0].right].leaf == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));

  // class-1 tree mirrors class 0
  const Tree& t1 = model.trees[1];
  CHECK(t1.nodes[t1.nodes[0].left].leaf == doctest::Approx(-2.0 / 3.0).epsilon(1e-9));
  CHECK(t1.nodes[t1.nodes[0].right].leaf == doctest::Approx(2.0 / 3.0).epsilon(1e-9));

  // the round must reduce the training loss from ln 2
  REQUIRE(model.train_mlogloss.size() == 2);
  CHECK(model.train_mlogloss[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(model.train_mlogloss[1] < model.train_mlogloss[0]);
}

TEST_CASE("min_child_weight = 1 blocks the same split") {
  Matrix x = from_rows({{0.0}, {1.0}, {2.0}, {3.0}});
  std::vector<int> y = {0, 0, 1, 1};
  GbtHyper hyper;
  hyper.rounds = 1;
  hyper.max_depth = 3;  // depth is not the limiting factor
  // default min_child_weight = 1.0; each child would have H = 0.5
  TreeEnsemble model = gbt_fit(x, y, 2, hyper);
  for (const auto& tree : model.trees) {
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].leaf == doctest::Approx(0.0).epsilon(1e-12));  // -G/(H+1), G=0
  }
}

TEST_CASE("all-one-class training set predicts that class everywhere") {
  Matrix x(12, 3);
  Rng rng(7);
  for (auto& v : x.data) v = rng.uniform(-1, 1);
  std::vector<int> y(12, 2);
  GbtHyper hyper;
  hyper.rounds = 5;
  TreeEnsemble model = gbt_fit(x, y, 4, hyper);
  auto pred = gbt_predict(model, x);
  for (int p : pred) CHECK(p == 2);
}

TEST_CASE("separable 40-point toy set reaches 100% training accuracy in 10 rounds") {
  Matrix features;
  std::vector<int> labels;
  separable_toy(features, labels);
  GbtHyper hyper;
  hyper.rounds = 10;
  TreeEnsemble model = gbt_fit(features, labels, 2, hyper);
  auto pred = gbt_predict(model, features);
  int correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (pred[i] == labels[i]) correct++;
  }
  CHECK(correct == 40);
  CHECK(model.train_mlogloss.back() < model.train_mlogloss.front());
}

TEST_CASE("predicted probability rows sum to one") {
  Matrix features;
  std::vector<int> labels;
  separable_toy(features, labels);
  GbtHyper hyper;
  hyper.rounds = 4;
  TreeEnsemble model = gbt_fit(features, labels, 2, hyper);
  Matrix proba = gbt_predict_proba(model, features);
  for (size_t i = 0; i < proba.rows; ++i) {
    double total = 0.0;
    for (size_t c = 0; c < proba.cols; ++c) total += proba.at(i, c);
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
}

TEST_CASE("fit is deterministic and thread-count invariant") {
  Rng rng(77);
  Matrix x(60, 5);
  for (auto& v : x.data) v = rng.uniform(-2, 2);
  std::vector<int> y(60);
  for (size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(rng.next_below(3));

  GbtHyper hyper;
  hyper.rounds = 6;
  hyper.max_depth = 4;
  TreeEnsemble a = gbt_fit(x, y, 3, hyper);
  TreeEnsemble b = gbt_fit(x, y, 3, hyper);
  hyper.threads = 3;
  TreeEnsemble c = gbt_fit(x, y, 3, hyper);
  CHECK(gbt_to_json(a).dump() == gbt_to_json(b).dump());

  auto strip_threads = [](TreeEnsemble& m) { m.hyper.threads = 1; };
  strip_threads(c);
  CHECK(gbt_to_json(a).dump() == gbt_to_json(c).dump());
}

TEST_CASE("trees respect the depth bound") {
  Rng rng(88);
  Matrix x(200, 4);
  for (auto& v : x.data) v = rng.uniform(0, 1);
  std::vector<int> y(200);
  for (size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(rng.next_below(4));
  GbtHyper hyper;
  hyper.rounds = 3;
  hyper.max_depth = 3;
  hyper.min_child_weight = 0.0;
  TreeEnsemble model = gbt_fit(x, y, 4, hyper);
  for (const auto& tree : model.trees) {
    CHECK(tree.depth() <= 3);
  }
}

TEST_CASE("JSON round trip preserves predictions exactly") {
  Matrix features;
  std::vector<int> labels;
  separable_toy(features, labels);
  GbtHyper hyper;
  hyper.rounds = 5;
  TreeEnsemble model = gbt_fit(features, labels, 2, hyper);

  const fs::path path = fs::temp_directory_path() /
                        ("cryptext_gbt_" + std::to_string(::getpid()) + ".json");
  gbt_save(model, path);
  TreeEnsemble loaded = gbt_load(path);
  fs::remove(path);

  Matrix pa = gbt_predict_proba(model, features);
  Matrix pb = gbt_predict_proba(loaded, features);
  CHECK(pa.data == pb.data);  // bitwise
}

TEST_CASE("input validation errors") {
  Matrix empty(0, 3);
  std::vector<int> none;
  GbtHyper hyper;
  CHECK_THROWS_AS(gbt_fit(empty, none, 2, hyper), std::invalid_argument);

  Matrix x(2, 2, 1.0);
  std::vector<int> y = {0, 1};
  CHECK_THROWS_AS(gbt_fit(x, y, 1, hyper), std::invalid_argument);

  Matrix bad = x;
  bad.at(1, 1) = std::nan("");
  CHECK_THROWS_AS(gbt_fit(bad, y, 2, hyper), std::invalid_argument);

  std::vector<int> out_of_range = {0, 5};
  CHECK_THROWS_AS(gbt_fit(x, out_of_range, 2, hyper), std::invalid_argument);

  TreeEnsemble model = gbt_fit(x, y, 2, hyper);
  Matrix wrong_cols(2, 3, 0.0);
  CHECK_THROWS_AS(gbt_predict_proba(model, wrong_cols), std::invalid_argument);
}
