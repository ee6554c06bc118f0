#include "cryptext/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "cryptext/rng.hpp"
#include "cryptext/tokenfile.hpp"

namespace cryptext {

namespace {

constexpr double kProbFloor = 1e-15;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// out (n x m) = a (n x k) * b (k x m) + bias (broadcast row, optional)
void matmul(const Matrix& a, const Matrix& b, const std::vector<double>* bias,
            Matrix& out) {
  out = Matrix(a.rows, b.cols);
  for (size_t i = 0; i < a.rows; ++i) {
    double* out_row = out.data.data() + i * out.cols;
    if (bias) {
      for (size_t j = 0; j < b.cols; ++j) out_row[j] = (*bias)[j];
    }
    const double* a_row = a.data.data() + i * a.cols;
    for (size_t k = 0; k < a.cols; ++k) {
      const double av = a_row[k];
      if (av == 0.0) continue;
      const double* b_row = b.data.data() + k * b.cols;
      for (size_t j = 0; j < b.cols; ++j) out_row[j] += av * b_row[j];
    }
  }
}

// acc (k x m) += a^T (k x n) * d (n x m), a is n x k
void acc_At_B(const Matrix& a, const Matrix& d, Matrix& acc) {
  for (size_t i = 0; i < a.rows; ++i) {
    const double* a_row = a.data.data() + i * a.cols;
    const double* d_row = d.data.data() + i * d.cols;
    for (size_t k = 0; k < a.cols; ++k) {
      const double av = a_row[k];
      if (av == 0.0) continue;
      double* acc_row = acc.data.data() + k * acc.cols;
      for (size_t j = 0; j < d.cols; ++j) acc_row[j] += av * d_row[j];
    }
  }
}

// acc (n x k) += d (n x m) * w^T (m x k), w is k x m
void acc_A_Bt(const Matrix& d, const Matrix& w, Matrix& acc) {
  for (size_t i = 0; i < d.rows; ++i) {
    const double* d_row = d.data.data() + i * d.cols;
    double* acc_row = acc.data.data() + i * acc.cols;
    for (size_t k = 0; k < w.rows; ++k) {
      const double* w_row = w.data.data() + k * w.cols;
      double sum = 0.0;
      for (size_t j = 0; j < d.cols; ++j) sum += d_row[j] * w_row[j];
      acc_row[k] += sum;
    }
  }
}

void acc_colsum(const Matrix& d, std::vector<double>& acc) {
  for (size_t i = 0; i < d.rows; ++i) {
    const double* row = d.data.data() + i * d.cols;
    for (size_t j = 0; j < d.cols; ++j) acc[j] += row[j];
  }
}

struct CellCache {
  Matrix input;             // batch x d_in
  Matrix gate_i, gate_f, gate_g, gate_o;
  Matrix cell, cell_tanh;   // c, tanh(c)
  Matrix hidden;            // batch x h
};

// Single LSTM step with zero initial states (inputs here are length-1
// sequences). The recurrent kernels therefore contribute nothing to the
// forward value and receive zero gradient, but they stay part of the
// parameter set.
void cell_forward(const LstmLayerParams& l, const Matrix& x, CellCache& cache) {
  cache.input = x;
  matmul(x, l.wi, &l.bi, cache.gate_i);
  matmul(x, l.wf, &l.bf, cache.gate_f);
  matmul(x, l.wg, &l.bg, cache.gate_g);
  matmul(x, l.wo, &l.bo, cache.gate_o);
  const size_t n = x.rows, h = l.h;
  cache.cell = Matrix(n, h);
  cache.cell_tanh = Matrix(n, h);
  cache.hidden = Matrix(n, h);
  for (size_t idx = 0; idx < n * h; ++idx) {
    const double gi = sigmoid(cache.gate_i.data[idx]);
    const double gf = sigmoid(cache.gate_f.data[idx]);
    const double gg = std::tanh(cache.gate_g.data[idx]);
    const double go = sigmoid(cache.gate_o.data[idx]);
    cache.gate_i.data[idx] = gi;
    cache.gate_f.data[idx] = gf;
    cache.gate_g.data[idx] = gg;
    cache.gate_o.data[idx] = go;
    const double c = gi * gg;  // f * c_prev vanishes with c_prev = 0
    const double ct = std::tanh(c);
    cache.cell.data[idx] = c;
    cache.cell_tanh.data[idx] = ct;
    cache.hidden.data[idx] = go * ct;
  }
}

// dH -> gradients for this layer; returns dX. c_prev = 0 makes the forget
// gate's pre-activation gradient vanish (df = dc * c_prev = 0), so wf/uf/bf
// receive zero — consistent with the loss being flat in them here.
Matrix cell_backward(const LstmLayerParams& l, const CellCache& cache, const Matrix& dh,
                     LstmLayerParams& grads) {
  const size_t n = dh.rows, h = l.h;
  Matrix dz_i(n, h), dz_f(n, h), dz_g(n, h), dz_o(n, h);
  for (size_t idx = 0; idx < n * h; ++idx) {
    const double gi = cache.gate_i.data[idx];
    const double gg = cache.gate_g.data[idx];
    const double go = cache.gate_o.data[idx];
    const double ct = cache.cell_tanh.data[idx];
    const double dhv = dh.data[idx];
    const double dov = dhv * ct;
    const double dc = dhv * go * (1.0 - ct * ct);
    const double div = dc * gg;
    const double dgv = dc * gi;
    dz_i.data[idx] = div * gi * (1.0 - gi);
    dz_f.data[idx] = 0.0;
    dz_g.data[idx] = dgv * (1.0 - gg * gg);
    dz_o.data[idx] = dov * go * (1.0 - go);
  }
  acc_At_B(cache.input, dz_i, grads.wi);
  acc_At_B(cache.input, dz_f, grads.wf);
  acc_At_B(cache.input, dz_g, grads.wg);
  acc_At_B(cache.input, dz_o, grads.wo);
  acc_colsum(dz_i, grads.bi);
  acc_colsum(dz_f, grads.bf);
  acc_colsum(dz_g, grads.bg);
  acc_colsum(dz_o, grads.bo);
  // recurrent kernels: h_prev = 0, so their gradient is identically zero
  Matrix dx(n, static_cast<size_t>(l.d_in));
  acc_A_Bt(dz_i, l.wi, dx);
  acc_A_Bt(dz_f, l.wf, dx);
  acc_A_Bt(dz_g, l.wg, dx);
  acc_A_Bt(dz_o, l.wo, dx);
  return dx;
}

LstmLayerParams layer_like(const LstmLayerParams& l) {
  LstmLayerParams g;
  g.d_in = l.d_in;
  g.h = l.h;
  g.wi = Matrix(l.d_in, l.h);
  g.wf = Matrix(l.d_in, l.h);
  g.wg = Matrix(l.d_in, l.h);
  g.wo = Matrix(l.d_in, l.h);
  g.ui = Matrix(l.h, l.h);
  g.uf = Matrix(l.h, l.h);
  g.ug = Matrix(l.h, l.h);
  g.uo = Matrix(l.h, l.h);
  g.bi.assign(l.h, 0.0);
  g.bf.assign(l.h, 0.0);
  g.bg.assign(l.h, 0.0);
  g.bo.assign(l.h, 0.0);
  return g;
}

Matrix glorot(size_t fan_in, size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (auto& x : m.data) x = rng.uniform(-limit, limit);
  return m;
}

LstmLayerParams init_layer(int d_in, int h, Rng& rng) {
  LstmLayerParams l;
  l.d_in = d_in;
  l.h = h;
  l.wi = glorot(d_in, h, rng);
  l.wf = glorot(d_in, h, rng);
  l.wg = glorot(d_in, h, rng);
  l.wo = glorot(d_in, h, rng);
  l.ui = glorot(h, h, rng);
  l.uf = glorot(h, h, rng);
  l.ug = glorot(h, h, rng);
  l.uo = glorot(h, h, rng);
  l.bi.assign(h, 0.0);
  l.bf.assign(h, 1.0);  // forget-gate bias starts at 1
  l.bg.assign(h, 0.0);
  l.bo.assign(h, 0.0);
  return l;
}

Matrix gather_rows(const Matrix& src, std::span<const int> rows) {
  Matrix out(rows.size(), src.cols);
  for (size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(src.data.data() + static_cast<size_t>(rows[i]) * src.cols, src.cols,
                out.data.data() + i * src.cols);
  }
  return out;
}

}  // namespace

LstmTensors make_like(const LstmModel& model) {
  LstmTensors t;
  t.layer1 = layer_like(model.params.layer1);
  t.layer2 = layer_like(model.params.layer2);
  t.dense_w = Matrix(model.params.dense_w.rows, model.params.dense_w.cols);
  t.dense_b.assign(model.params.dense_b.size(), 0.0);
  return t;
}

LstmModel lstm_init(int input_dim, int n_classes, const LstmHyper& hyper) {
  if (input_dim <= 0 || n_classes < 2) {
    throw std::invalid_argument("lstm_init: bad dimensions");
  }
  if (hyper.dropout < 0.0 || hyper.dropout >= 1.0) {
    throw std::invalid_argument("lstm_init: dropout must be in [0, 1)");
  }
  LstmModel model;
  model.input_dim = input_dim;
  model.n_classes = n_classes;
  model.hyper = hyper;
  Rng rng(derive_seed(hyper.seed, "lstm-init"));
  model.params.layer1 = init_layer(input_dim, hyper.hidden1, rng);
  model.params.layer2 = init_layer(hyper.hidden1, hyper.hidden2, rng);
  model.params.dense_w = glorot(hyper.hidden2, n_classes, rng);
  model.params.dense_b.assign(n_classes, 0.0);
  return model;
}

double lstm_batch_loss(const LstmModel& model, const Matrix& inputs,
                       std::span<const int> labels, const Matrix* dropout_mask,
                       LstmTensors* grads) {
  const size_t n = inputs.rows;
  if (n == 0 || n != labels.size()) {
    throw std::invalid_argument("lstm_batch_loss: bad batch");
  }
  if (static_cast<int>(inputs.cols) != model.input_dim) {
    throw std::invalid_argument("lstm_batch_loss: expected " +
                                std::to_string(model.input_dim) + " input columns");
  }

  CellCache cache1, cache2;
  cell_forward(model.params.layer1, inputs, cache1);
  cell_forward(model.params.layer2, cache1.hidden, cache2);

  Matrix dropped = cache2.hidden;
  if (dropout_mask) {
    for (size_t idx = 0; idx < dropped.data.size(); ++idx) {
      dropped.data[idx] *= dropout_mask->data[idx];
    }
  }

  Matrix logits;
  matmul(dropped, model.params.dense_w, &model.params.dense_b, logits);
  Matrix proba(n, logits.cols);
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    auto lrow = logits.row(i);
    auto prow = proba.row(i);
    double max_logit = lrow[0];
    for (double v : lrow) max_logit = std::max(max_logit, v);
    double total = 0.0;
    for (size_t c = 0; c < lrow.size(); ++c) {
      prow[c] = std::exp(lrow[c] - max_logit);
      total += prow[c];
    }
    for (auto& p : prow) p /= total;
    loss += -std::log(std::max(prow[labels[i]], kProbFloor));
  }
  loss /= static_cast<double>(n);
  if (!grads) return loss;

  Matrix dlogits = proba;
  const double inv_n = 1.0 / static_cast<double>(n);
  for (size_t i = 0; i < n; ++i) {
    dlogits.at(i, labels[i]) -= 1.0;
    for (size_t c = 0; c < dlogits.cols; ++c) dlogits.at(i, c) *= inv_n;
  }
  acc_At_B(dropped, dlogits, grads->dense_w);
  acc_colsum(dlogits, grads->dense_b);

  Matrix dh2(n, cache2.hidden.cols);
  acc_A_Bt(dlogits, model.params.dense_w, dh2);
  if (dropout_mask) {
    for (size_t idx = 0; idx < dh2.data.size(); ++idx) {
      dh2.data[idx] *= dropout_mask->data[idx];
    }
  }
  Matrix dh1 = cell_backward(model.params.layer2, cache2, dh2, grads->layer2);
  cell_backward(model.params.layer1, cache1, dh1, grads->layer1);
  return loss;
}

std::vector<double> lstm_forward(const LstmModel& model, std::span<const double> x) {
  if (static_cast<int>(x.size()) != model.input_dim) {
    throw std::invalid_argument("lstm_forward: expected input of length " +
                                std::to_string(model.input_dim));
  }
  Matrix input(1, x.size());
  std::copy(x.begin(), x.end(), input.data.begin());
  CellCache cache1, cache2;
  cell_forward(model.params.layer1, input, cache1);
  cell_forward(model.params.layer2, cache1.hidden, cache2);
  Matrix logits;
  matmul(cache2.hidden, model.params.dense_w, &model.params.dense_b, logits);
  std::vector<double> proba(model.n_classes);
  double max_logit = logits.data[0];
  for (double v : logits.data) max_logit = std::max(max_logit, v);
  double total = 0.0;
  for (int c = 0; c < model.n_classes; ++c) {
    proba[c] = std::exp(logits.data[c] - max_logit);
    total += proba[c];
  }
  for (auto& p : proba) p /= total;
  return proba;
}

void lstm_fit(LstmModel& model, const Matrix& inputs, std::span<const int> labels) {
  const size_t n = inputs.rows;
  const LstmHyper& hyper = model.hyper;
  if (n != labels.size()) throw std::invalid_argument("lstm_fit: labels/inputs mismatch");
  const size_t val_n = static_cast<size_t>(std::floor(hyper.val_split * n));
  if (val_n == 0 || val_n >= n) {
    throw std::invalid_argument("lstm_fit: training set too small for validation split");
  }
  for (int label : labels) {
    if (label < 0 || label >= model.n_classes) {
      throw std::invalid_argument("lstm_fit: label out of range");
    }
  }

  Rng rng(derive_seed(hyper.seed, "lstm-train"));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::vector<int> train_idx(order.begin(), order.end() - val_n);
  std::vector<int> val_idx(order.end() - val_n, order.end());

  Matrix val_x = gather_rows(inputs, val_idx);
  std::vector<int> val_y;
  for (int i : val_idx) val_y.push_back(labels[i]);

  LstmTensors adam_m = make_like(model);
  LstmTensors adam_v = make_like(model);
  int64_t step = 0;
  const double keep = 1.0 - hyper.dropout;

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    shuffle(train_idx, rng);
    double loss_sum = 0.0;
    long correct = 0;
    for (size_t start = 0; start < train_idx.size(); start += hyper.batch) {
      const size_t stop = std::min(train_idx.size(), start + hyper.batch);
      std::span<const int> batch_idx(train_idx.data() + start, stop - start);
      Matrix bx = gather_rows(inputs, batch_idx);
      std::vector<int> by;
      by.reserve(batch_idx.size());
      for (int i : batch_idx) by.push_back(labels[i]);

      Matrix mask(bx.rows, model.params.layer2.h, 1.0);
      if (hyper.dropout > 0.0) {
        for (auto& m : mask.data) m = rng.next_double() < hyper.dropout ? 0.0 : 1.0 / keep;
      }

      LstmTensors grads = make_like(model);
      const double loss = lstm_batch_loss(model, bx, by, &mask, &grads);
      loss_sum += loss * static_cast<double>(bx.rows);

      // batch accuracy, dropout active (matches the loss being reported)
      {
        CellCache c1, c2;
        cell_forward(model.params.layer1, bx, c1);
        cell_forward(model.params.layer2, c1.hidden, c2);
        for (size_t idx = 0; idx < c2.hidden.data.size(); ++idx) {
          c2.hidden.data[idx] *= mask.data[idx];
        }
        Matrix logits;
        matmul(c2.hidden, model.params.dense_w, &model.params.dense_b, logits);
        for (size_t i = 0; i < logits.rows; ++i) {
          auto row = logits.row(i);
          int best = 0;
          for (size_t c = 1; c < row.size(); ++c) {
            if (row[c] > row[best]) best = static_cast<int>(c);
          }
          if (best == by[i]) correct++;
        }
      }

      ++step;
      const double bc1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(step));
      auto update = [&](std::vector<double>& theta, const std::vector<double>& g,
                        std::vector<double>& m, std::vector<double>& v) {
        for (size_t k = 0; k < theta.size(); ++k) {
          m[k] = hyper.beta1 * m[k] + (1.0 - hyper.beta1) * g[k];
          v[k] = hyper.beta2 * v[k] + (1.0 - hyper.beta2) * g[k] * g[k];
          theta[k] -= hyper.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + hyper.epsilon);
        }
      };
      // Walk all four tensor bundles in lockstep.
      {
        std::vector<std::vector<double>*> tp, gp, mp, vp;
        auto collect = [](LstmTensors& t, std::vector<std::vector<double>*>& out) {
          visit_tensors(t, [&](const std::string&, std::vector<double>& vec, size_t,
                               size_t) { out.push_back(&vec); });
        };
        collect(model.params, tp);
        collect(grads, gp);
        collect(adam_m, mp);
        collect(adam_v, vp);
        for (size_t k = 0; k < tp.size(); ++k) update(*tp[k], *gp[k], *mp[k], *vp[k]);
      }
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(train_idx.size());
    stats.train_acc = static_cast<double>(correct) / static_cast<double>(train_idx.size());
    stats.val_loss = lstm_batch_loss(model, val_x, val_y, nullptr, nullptr);
    auto val_pred = lstm_predict(model, val_x);
    long val_correct = 0;
    for (size_t i = 0; i < val_y.size(); ++i) {
      if (val_pred[i] == val_y[i]) val_correct++;
    }
    stats.val_acc = static_cast<double>(val_correct) / static_cast<double>(val_y.size());
    model.history.push_back(stats);
  }
}

std::vector<int> lstm_predict(const LstmModel& model, const Matrix& inputs) {
  std::vector<int> out(inputs.rows);
  for (size_t i = 0; i < inputs.rows; ++i) {
    auto proba = lstm_forward(model, inputs.row(i));
    int best = 0;
    for (int c = 1; c < model.n_classes; ++c) {
      if (proba[c] > proba[best]) best = c;
    }
    out[i] = best;
  }
  return out;
}

void lstm_save(const LstmModel& model, const std::filesystem::path& manifest_path,
               const std::filesystem::path& weights_path) {
  nlohmann::json tensors = nlohmann::json::array();
  std::ofstream weights(weights_path, std::ios::binary);
  if (!weights) throw std::runtime_error("cannot write weights: " + weights_path.string());
  visit_tensors(const_cast<LstmModel&>(model).params,
                [&](const std::string& name, std::vector<double>& data, size_t rows,
                    size_t cols) {
                  tensors.push_back({{"name", name}, {"rows", rows}, {"cols", cols}});
                  for (size_t r = 0; r < rows; ++r) {
                    for (size_t c = 0; c < cols; ++c) {
                      if (c > 0) weights << ' ';
                      weights << format_double(data[r * cols + c]);
                    }
                    weights << '\n';
                  }
                });
  nlohmann::json manifest = {
      {"input_dim", model.input_dim},
      {"n_classes", model.n_classes},
      {"layout", "row-major"},
      {"hyper",
       {{"epochs", model.hyper.epochs},
        {"batch", model.hyper.batch},
        {"val_split", model.hyper.val_split},
        {"lr", model.hyper.lr},
        {"beta1", model.hyper.beta1},
        {"beta2", model.hyper.beta2},
        {"epsilon", model.hyper.epsilon},
        {"dropout", model.hyper.dropout},
        {"hidden1", model.hyper.hidden1},
        {"hidden2", model.hyper.hidden2},
        {"seed", model.hyper.seed}}},
      {"tensors", tensors}};
  std::ofstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot write manifest: " + manifest_path.string());
  mf << manifest.dump(2) << '\n';
}

LstmModel lstm_load(const std::filesystem::path& manifest_path,
                    const std::filesystem::path& weights_path) {
  std::ifstream mf(manifest_path, std::ios::binary);
  if (!mf) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  nlohmann::json manifest;
  mf >> manifest;

  LstmHyper hyper;
  const auto& h = manifest.at("hyper");
  hyper.epochs = h.at("epochs").get<int>();
  hyper.batch = h.at("batch").get<int>();
  hyper.val_split = h.at("val_split").get<double>();
  hyper.lr = h.at("lr").get<double>();
  hyper.beta1 = h.at("beta1").get<double>();
  hyper.beta2 = h.at("beta2").get<double>();
  hyper.epsilon = h.at("epsilon").get<double>();
  hyper.dropout = h.at("dropout").get<double>();
  hyper.hidden1 = h.at("hidden1").get<int>();
  hyper.hidden2 = h.at("hidden2").get<int>();
  hyper.seed = h.at("seed").get<uint64_t>();

  LstmModel model = lstm_init(manifest.at("input_dim").get<int>(),
                              manifest.at("n_classes").get<int>(), hyper);

  std::ifstream weights(weights_path, std::ios::binary);
  if (!weights) throw std::runtime_error("cannot open weights: " + weights_path.string());
  size_t tensor_index = 0;
  const auto& tensor_list = manifest.at("tensors");
  visit_tensors(model.params, [&](const std::string& name, std::vector<double>& data,
                                  size_t rows, size_t cols) {
    const auto& tj = tensor_list.at(tensor_index++);
    if (tj.at("name").get<std::string>() != name ||
        tj.at("rows").get<size_t>() != rows || tj.at("cols").get<size_t>() != cols) {
      throw std::runtime_error("weights manifest does not match this model shape: " + name);
    }
    for (size_t k = 0; k < rows * cols; ++k) {
      if (!(weights >> data[k])) {
        throw std::runtime_error("weights file truncated in tensor " + name);
      }
    }
  });
  return model;
}

nlohmann::json history_to_json(const LstmModel& model) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : model.history) {
    out.push_back({{"train_loss", e.train_loss},
                   {"train_acc", e.train_acc},
                   {"val_loss", e.val_loss},
                   {"val_acc", e.val_acc}});
  }
  return out;
}

}  // namespace cryptext
