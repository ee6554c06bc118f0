#include "cryptext/embed.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "cryptext/tokenfile.hpp"

namespace cryptext {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// -ln sigmoid(x) without overflow for large |x|.
double softplus_neg(double x) {
  return x > 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

void validate_hyper(const EmbedHyper& hyper) {
  if (hyper.dim <= 0) throw std::invalid_argument("embed: dim must be positive");
  if (hyper.window < 1) throw std::invalid_argument("embed: window must be >= 1");
  if (hyper.epochs < 1) throw std::invalid_argument("embed: epochs must be >= 1");
  if (hyper.negatives < 1) throw std::invalid_argument("embed: negatives must be >= 1");
  if (!(hyper.initial_lr >= hyper.final_lr) || hyper.final_lr <= 0) {
    throw std::invalid_argument("embed: need initial_lr >= final_lr > 0");
  }
}

std::vector<std::vector<int>> encode_docs(std::span<const TokenizedDoc> docs,
                                          const Vocab& vocab) {
  std::vector<std::vector<int>> encoded;
  encoded.reserve(docs.size());
  for (const auto& doc : docs) {
    std::vector<int> ids;
    ids.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens) {
      int id = vocab.lookup(tok);
      if (id >= 0) ids.push_back(id);
    }
    encoded.push_back(std::move(ids));
  }
  return encoded;
}

// Shared core for training and inference. Gradients are all computed
// against the pre-update parameters; null w_in_rw / w_out_rw freeze the
// corresponding matrices.
void update_position_core(int dim, const double* w_in, const double* w_out,
                          double* w_in_rw, double* w_out_rw, double* doc_vec,
                          std::span<const int> context_ids,
                          const PositionTargets& targets, double lr,
                          std::vector<double>& hidden, std::vector<double>& err,
                          std::vector<double>& gains) {
  hidden.assign(dim, 0.0);
  const double inv_count = 1.0 / static_cast<double>(context_ids.size() + 1);
  for (int c : context_ids) {
    const double* row = w_in + static_cast<size_t>(c) * dim;
    for (int k = 0; k < dim; ++k) hidden[k] += row[k];
  }
  for (int k = 0; k < dim; ++k) hidden[k] = (hidden[k] + doc_vec[k]) * inv_count;

  const size_t n_targets = targets.negatives.size() + 1;
  gains.resize(n_targets);
  err.assign(dim, 0.0);
  for (size_t j = 0; j < n_targets; ++j) {
    const int target = j == 0 ? targets.positive : targets.negatives[j - 1];
    const double label = j == 0 ? 1.0 : 0.0;
    const double* row = w_out + static_cast<size_t>(target) * dim;
    double f = 0.0;
    for (int k = 0; k < dim; ++k) f += hidden[k] * row[k];
    const double g = label - sigmoid(f);
    gains[j] = g;
    for (int k = 0; k < dim; ++k) err[k] += g * row[k];
  }
  if (w_out_rw) {
    for (size_t j = 0; j < n_targets; ++j) {
      const int target = j == 0 ? targets.positive : targets.negatives[j - 1];
      double* row = w_out_rw + static_cast<size_t>(target) * dim;
      const double step = lr * gains[j];
      for (int k = 0; k < dim; ++k) row[k] += step * hidden[k];
    }
  }
  const double input_step = lr * inv_count;
  for (int k = 0; k < dim; ++k) doc_vec[k] += input_step * err[k];
  if (w_in_rw) {
    for (int c : context_ids) {
      double* row = w_in_rw + static_cast<size_t>(c) * dim;
      for (int k = 0; k < dim; ++k) row[k] += input_step * err[k];
    }
  }
}

// Context window around position t over the in-vocab id sequence; effective
// half-width b is sampled per position.
void collect_context(const std::vector<int>& ids, size_t t, int b,
                     std::vector<int>& out) {
  out.clear();
  const size_t lo = t >= static_cast<size_t>(b) ? t - b : 0;
  const size_t hi = std::min(ids.size() - 1, t + static_cast<size_t>(b));
  for (size_t p = lo; p <= hi; ++p) {
    if (p != t) out.push_back(ids[p]);
  }
}

PositionTargets draw_targets(int positive, int negatives, const NegativeSampler& sampler,
                             Rng& rng) {
  PositionTargets t;
  t.positive = positive;
  t.negatives.reserve(negatives);
  for (int j = 0; j < negatives; ++j) {
    int id = sampler.draw(rng);
    if (id == positive) continue;  // skip collisions, standard practice
    t.negatives.push_back(id);
  }
  return t;
}

struct ScratchBuffers {
  std::vector<double> hidden, err;
  std::vector<double> gains;
  std::vector<int> context;
};

void train_docs_range(EmbeddingModel& model, const std::vector<std::vector<int>>& encoded,
                      const NegativeSampler& sampler, size_t shard, size_t n_shards,
                      uint64_t shard_seed, std::atomic<int64_t>& global_position,
                      int64_t total_positions) {
  const EmbedHyper& hyper = model.hyper;
  const bool pv_dm = hyper.mode == EmbedMode::kPvDmMean;
  Rng rng(shard_seed);
  ScratchBuffers buf;
  std::vector<size_t> order;
  for (size_t n = shard; n < encoded.size(); n += n_shards) order.push_back(n);
  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    // Visit documents in a fresh seeded order each epoch. Corpora arrive
    // grouped by category, and streaming them in that order makes the
    // output weights drift topic by topic, turning document vectors into
    // stream-position encodings instead of content encodings.
    shuffle(order, rng);
    for (size_t n : order) {
      const auto& ids = encoded[n];
      double* doc_vec = model.d_docs.data() + n * static_cast<size_t>(hyper.dim);
      for (size_t t = 0; t < ids.size(); ++t) {
        const int64_t p = global_position.fetch_add(1, std::memory_order_relaxed);
        const double lr = learning_rate_at(hyper, p, total_positions);
        if (pv_dm) {
          const int b = 1 + static_cast<int>(rng.next_below(hyper.window));
          collect_context(ids, t, b, buf.context);
        } else {
          buf.context.clear();
        }
        PositionTargets targets = draw_targets(ids[t], hyper.negatives, sampler, rng);
        update_position_core(hyper.dim, model.w_in.data(), model.w_out.data(),
                             pv_dm ? model.w_in.data() : nullptr, model.w_out.data(),
                             doc_vec, buf.context, targets, lr, buf.hidden, buf.err,
                             buf.gains);
      }
    }
  }
}

}  // namespace

int64_t Vocab::total_count() const {
  int64_t total = 0;
  for (int64_t c : counts) total += c;
  return total;
}

int Vocab::lookup(const std::string& token) const {
  auto it = token_to_id.find(token);
  return it == token_to_id.end() ? -1 : it->second;
}

Vocab build_vocab(std::span<const TokenizedDoc> docs, int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::unordered_map<std::string, int64_t> raw_counts;
  for (const auto& doc : docs) {
    for (const auto& tok : doc.tokens) raw_counts[tok]++;
  }
  Vocab vocab;
  vocab.min_count = min_count;
  for (const auto& doc : docs) {
    for (const auto& tok : doc.tokens) {
      if (vocab.token_to_id.contains(tok)) continue;
      auto it = raw_counts.find(tok);
      if (it->second < min_count) continue;
      vocab.token_to_id.emplace(tok, vocab.size());
      vocab.id_to_token.push_back(tok);
      vocab.counts.push_back(it->second);
    }
  }
  return vocab;
}

std::string to_string(EmbedMode mode) {
  return mode == EmbedMode::kPvDmMean ? "pv-dm-mean" : "pv-dbow";
}

EmbedMode embed_mode_from_string(const std::string& s) {
  if (s == "pv-dm-mean" || s == "pv-dm") return EmbedMode::kPvDmMean;
  if (s == "pv-dbow") return EmbedMode::kPvDbow;
  throw std::invalid_argument("unknown embedding mode: " + s);
}

NegativeSampler NegativeSampler::build(const Vocab& vocab) {
  NegativeSampler sampler;
  sampler.cumulative.reserve(vocab.counts.size());
  double running = 0.0;
  for (int64_t count : vocab.counts) {
    running += std::pow(static_cast<double>(count), 0.75);
    sampler.cumulative.push_back(running);
  }
  return sampler;
}

int NegativeSampler::draw(Rng& rng) const {
  if (cumulative.empty()) {
    throw std::logic_error("negative sampler over empty vocabulary");
  }
  const double u = rng.next_double() * cumulative.back();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  if (it == cumulative.end()) --it;
  return static_cast<int>(it - cumulative.begin());
}

double learning_rate_at(const EmbedHyper& hyper, int64_t position, int64_t total) {
  if (total <= 0) return hyper.initial_lr;
  const double fraction = static_cast<double>(position) / static_cast<double>(total);
  const double lr = hyper.initial_lr + (hyper.final_lr - hyper.initial_lr) * fraction;
  return std::max(lr, hyper.final_lr);
}

double init_scale(int dim) { return 0.5 / static_cast<double>(dim); }

double position_loss(const EmbeddingModel& model, std::span<const double> doc_vec,
                     std::span<const int> context_ids, const PositionTargets& targets) {
  const int dim = model.hyper.dim;
  std::vector<double> hidden(dim, 0.0);
  for (int c : context_ids) {
    const double* row = model.w_in.data() + static_cast<size_t>(c) * dim;
    for (int k = 0; k < dim; ++k) hidden[k] += row[k];
  }
  const double inv_count = 1.0 / static_cast<double>(context_ids.size() + 1);
  for (int k = 0; k < dim; ++k) hidden[k] = (hidden[k] + doc_vec[k]) * inv_count;

  auto score = [&](int target) {
    const double* row = model.w_out.data() + static_cast<size_t>(target) * dim;
    double f = 0.0;
    for (int k = 0; k < dim; ++k) f += hidden[k] * row[k];
    return f;
  };
  double loss = softplus_neg(score(targets.positive));
  for (int neg : targets.negatives) loss += softplus_neg(-score(neg));
  return loss;
}

void apply_position_update(EmbeddingModel& model, std::span<double> doc_vec,
                           std::span<const int> context_ids,
                           const PositionTargets& targets, double lr,
                           bool update_words, bool update_outputs) {
  std::vector<double> hidden, err, gains;
  update_position_core(model.hyper.dim, model.w_in.data(), model.w_out.data(),
                       update_words ? model.w_in.data() : nullptr,
                       update_outputs ? model.w_out.data() : nullptr, doc_vec.data(),
                       context_ids, targets, lr, hidden, err, gains);
}

EmbeddingModel train_embeddings(std::span<const TokenizedDoc> docs, const Vocab& vocab,
                                const EmbedHyper& hyper) {
  validate_hyper(hyper);
  EmbeddingModel model;
  model.hyper = hyper;
  model.vocab = vocab;
  model.n_docs = static_cast<int>(docs.size());

  const size_t dim = hyper.dim;
  const size_t v = vocab.size();
  const double scale = init_scale(hyper.dim);
  Rng init_rng(derive_seed(hyper.seed, "embed-init"));
  model.w_in.resize(v * dim);
  for (auto& x : model.w_in) x = init_rng.uniform(-scale, scale);
  model.d_docs.resize(docs.size() * dim);
  for (auto& x : model.d_docs) x = init_rng.uniform(-scale, scale);
  model.w_out.assign(v * dim, 0.0);

  auto encoded = encode_docs(docs, vocab);
  int64_t positions_per_epoch = 0;
  for (const auto& ids : encoded) positions_per_epoch += static_cast<int64_t>(ids.size());
  const int64_t total_positions = positions_per_epoch * hyper.epochs;
  if (total_positions == 0 || v == 0) return model;

  const NegativeSampler sampler = NegativeSampler::build(vocab);
  std::atomic<int64_t> global_position{0};
  const uint64_t train_seed = derive_seed(hyper.seed, "embed-train");

  if (hyper.threads <= 1) {
    train_docs_range(model, encoded, sampler, 0, 1, train_seed, global_position,
                     total_positions);
  } else {
    // Hogwild sharding: concurrent unsynchronized updates. Explicitly
    // nondeterministic; never used by the comparison pipeline.
    std::vector<std::thread> workers;
    const size_t n_shards = std::min<size_t>(hyper.threads, std::max<size_t>(1, docs.size()));
    workers.reserve(n_shards);
    for (size_t s = 0; s < n_shards; ++s) {
      workers.emplace_back([&, s] {
        train_docs_range(model, encoded, sampler, s, n_shards,
                         derive_seed(train_seed, static_cast<uint64_t>(s)),
                         global_position, total_positions);
      });
    }
    for (auto& w : workers) w.join();
  }
  return model;
}

std::vector<double> infer_vector(const EmbeddingModel& model, const TokenizedDoc& doc,
                                 int epochs, uint64_t seed) {
  if (epochs <= 0) epochs = model.hyper.epochs;
  const EmbedHyper& hyper = model.hyper;
  const int dim = hyper.dim;
  Rng rng(seed);
  const double scale = init_scale(dim);
  std::vector<double> vec(dim);
  for (auto& x : vec) x = rng.uniform(-scale, scale);

  std::vector<int> ids;
  for (const auto& tok : doc.tokens) {
    int id = model.vocab.lookup(tok);
    if (id >= 0) ids.push_back(id);
  }
  if (ids.empty() || model.vocab.size() == 0) return vec;

  const NegativeSampler sampler = NegativeSampler::build(model.vocab);
  const int64_t total = static_cast<int64_t>(ids.size()) * epochs;
  const bool pv_dm = hyper.mode == EmbedMode::kPvDmMean;
  ScratchBuffers buf;
  int64_t p = 0;
  for (int epoch = 0; epoch < epochs; ++epoch) {
    for (size_t t = 0; t < ids.size(); ++t, ++p) {
      const double lr = learning_rate_at(hyper, p, total);
      if (pv_dm) {
        const int b = 1 + static_cast<int>(rng.next_below(hyper.window));
        collect_context(ids, t, b, buf.context);
      } else {
        buf.context.clear();
      }
      PositionTargets targets = draw_targets(ids[t], hyper.negatives, sampler, rng);
      update_position_core(dim, model.w_in.data(), model.w_out.data(), nullptr, nullptr,
                           vec.data(), buf.context, targets, lr, buf.hidden, buf.err,
                           buf.gains);
    }
  }
  return vec;
}

void dump_model(const EmbeddingModel& model, std::span<const TokenizedDoc> docs,
                const std::filesystem::path& path) {
  if (static_cast<int>(docs.size()) != model.n_docs) {
    throw std::invalid_argument("dump_model: document list does not match model");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write model dump: " + path.string());
  const int dim = model.hyper.dim;
  out << model.vocab.size() << ' ' << model.n_docs << ' ' << dim << ' '
      << to_string(model.hyper.mode) << '\n';
  for (int i = 0; i < model.vocab.size(); ++i) {
    out << model.vocab.id_to_token[i];
    const double* row = model.w_in.data() + static_cast<size_t>(i) * dim;
    for (int k = 0; k < dim; ++k) out << ' ' << format_double(row[k]);
    out << '\n';
  }
  for (int n = 0; n < model.n_docs; ++n) {
    out << docs[n].doc_id;
    const double* row = model.d_docs.data() + static_cast<size_t>(n) * dim;
    for (int k = 0; k < dim; ++k) out << ' ' << format_double(row[k]);
    out << '\n';
  }
}

}  // namespace cryptext
