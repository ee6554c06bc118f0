#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptext/matrix.hpp"

namespace cryptext {

// One LSTM layer: per gate (input i, forget f, cell g, output o) an input
// kernel d_in x h, a recurrent kernel h x h and a bias of length h.
struct LstmLayerParams {
  int d_in = 0;
  int h = 0;
  Matrix wi, wf, wg, wo;  // d_in x h
  Matrix ui, uf, ug, uo;  // h x h
  std::vector<double> bi, bf, bg, bo;

  long param_count() const {
    return 4L * (static_cast<long>(h) * (d_in + h) + h);
  }
};

// Every trainable tensor of the network; also reused as the gradient and
// Adam moment holders, which keeps the shapes aligned by construction.
struct LstmTensors {
  LstmLayerParams layer1, layer2;
  Matrix dense_w;               // h2 x C
  std::vector<double> dense_b;  // C
};

struct LstmHyper {
  int epochs = 10;
  int batch = 64;
  double val_split = 0.1;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  double dropout = 0.5;
  int hidden1 = 128;
  int hidden2 = 64;
  uint64_t seed = 1;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;
};

struct LstmModel {
  LstmTensors params;
  int input_dim = 0;
  int n_classes = 0;
  LstmHyper hyper;
  std::vector<EpochStats> history;

  long param_count() const {
    return params.layer1.param_count() + params.layer2.param_count() +
           static_cast<long>(params.dense_w.rows * params.dense_w.cols) +
           static_cast<long>(params.dense_b.size());
  }
};

// Glorot-uniform kernels, zero biases except forget bias = 1, zero dense
// bias; all draws come from the seed in `hyper`.
LstmModel lstm_init(int input_dim, int n_classes, const LstmHyper& hyper);

// Inference probabilities for one input (treated as a length-1 sequence,
// zero initial states, no dropout). Sums to 1.
std::vector<double> lstm_forward(const LstmModel& model, std::span<const double> x);

// Mean cross-entropy of a batch. `dropout_mask` (rows = batch, cols = h2)
// holds 0 or 1/keep entries applied to the second layer's output; pass
// nullptr for no dropout. When `grads` is non-null the full analytic
// gradients (evaluated at the current parameters) are accumulated into it.
double lstm_batch_loss(const LstmModel& model, const Matrix& inputs,
                       std::span<const int> labels, const Matrix* dropout_mask,
                       LstmTensors* grads);

// Seeded shuffle, last val_split fraction held out, Adam on the rest in
// mini-batches. Appends one EpochStats per epoch. Deterministic given seed.
void lstm_fit(LstmModel& model, const Matrix& inputs, std::span<const int> labels);

// Argmax of lstm_forward; ties to the lowest class index.
std::vector<int> lstm_predict(const LstmModel& model, const Matrix& inputs);

// Fixed tensor traversal order shared by Adam, the weight dump and the
// gradient check.
template <typename F>
void visit_tensors(LstmTensors& t, F&& fn) {
  auto layer = [&](const std::string& prefix, LstmLayerParams& l) {
    fn(prefix + ".wi", l.wi.data, l.wi.rows, l.wi.cols);
    fn(prefix + ".wf", l.wf.data, l.wf.rows, l.wf.cols);
    fn(prefix + ".wg", l.wg.data, l.wg.rows, l.wg.cols);
    fn(prefix + ".wo", l.wo.data, l.wo.rows, l.wo.cols);
    fn(prefix + ".ui", l.ui.data, l.ui.rows, l.ui.cols);
    fn(prefix + ".uf", l.uf.data, l.uf.rows, l.uf.cols);
    fn(prefix + ".ug", l.ug.data, l.ug.rows, l.ug.cols);
    fn(prefix + ".uo", l.uo.data, l.uo.rows, l.uo.cols);
    fn(prefix + ".bi", l.bi, l.bi.size(), size_t{1});
    fn(prefix + ".bf", l.bf, l.bf.size(), size_t{1});
    fn(prefix + ".bg", l.bg, l.bg.size(), size_t{1});
    fn(prefix + ".bo", l.bo, l.bo.size(), size_t{1});
  };
  layer("layer1", t.layer1);
  layer("layer2", t.layer2);
  fn("dense.w", t.dense_w.data, t.dense_w.rows, t.dense_w.cols);
  fn("dense.b", t.dense_b, t.dense_b.size(), size_t{1});
}

// Zero-initialized tensors with the same shapes as the model's parameters.
LstmTensors make_like(const LstmModel& model);

void lstm_save(const LstmModel& model, const std::filesystem::path& manifest_path,
               const std::filesystem::path& weights_path);
LstmModel lstm_load(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& weights_path);
nlohmann::json history_to_json(const LstmModel& model);

}  // namespace cryptext
