#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cryptext/embed.hpp"
#include "cryptext/rng.hpp"
#include "cryptext/wordcrypt.hpp"

using namespace cryptext;

namespace {

TokenizedDoc doc(const std::string& id, std::vector<std::string> tokens) {
  return {id, 0, std::move(tokens)};
}

// 3 documents over the 5-token vocabulary {a, b, c, d, e}.
std::vector<TokenizedDoc> toy_corpus() {
  return {doc("d0", {"a", "b", "c", "a", "b"}), doc("d1", {"c", "d", "e"}),
          doc("d2", {"e", "a", "e", "d"})};
}

EmbeddingModel toy_model(EmbedMode mode, uint64_t seed) {
  auto docs = toy_corpus();
  Vocab vocab = build_vocab(docs, 1);
  EmbedHyper hyper;
  hyper.dim = 4;
  hyper.window = 2;
  hyper.epochs = 1;
  hyper.negatives = 2;
  hyper.mode = mode;
  hyper.seed = seed;

  EmbeddingModel model;
  model.hyper = hyper;
  model.vocab = vocab;
  model.n_docs = static_cast<int>(docs.size());
  Rng rng(seed);
  const size_t nw = static_cast<size_t>(vocab.size()) * hyper.dim;
  model.w_in.resize(nw);
  model.w_out.resize(nw);
  model.d_docs.resize(docs.size() * hyper.dim);
  for (auto& x : model.w_in) x = rng.uniform(-0.5, 0.5);
  for (auto& x : model.w_out) x = rng.uniform(-0.5, 0.5);  // nonzero so gradients flow
  for (auto& x : model.d_docs) x = rng.uniform(-0.5, 0.5);
  return model;
}

double relative_error(double a, double b) {
  const double scale = std::max(std::fabs(a), std::fabs(b));
  if (scale < 1e-6) return std::fabs(a - b) < 1e-8 ? 0.0 : 1.0;
  return std::fabs(a - b) / scale;
}

// Central-difference gradient of position_loss against the analytic update,
// over every parameter in the model.
void check_position_gradients(EmbedMode mode) {
  EmbeddingModel model = toy_model(mode, 99);
  const int dim = model.hyper.dim;
  const int doc_index = 0;

  std::vector<int> context;
  if (mode == EmbedMode::kPvDmMean) context = {0, 1, 0, 1};  // ids around position 2
  PositionTargets targets;
  targets.positive = 2;
  targets.negatives = {3, 4, 3};  // repeated row on purpose

  auto doc_span = [&](EmbeddingModel& m) {
    return std::span<double>(m.d_docs.data() + doc_index * dim, dim);
  };
  auto loss_of = [&](EmbeddingModel& m) {
    return position_loss(m, doc_span(m), context, targets);
  };

  // analytic gradient from one update step: delta = -lr * grad
  const double lr = 1e-3;
  EmbeddingModel updated = model;
  apply_position_update(updated, doc_span(updated), context, targets, lr, true, true);

  const double step = 1e-5;
  auto check_block = [&](std::vector<double> EmbeddingModel::* block) {
    auto& base = model.*block;
    const auto& after = updated.*block;
    for (size_t p = 0; p < base.size(); ++p) {
      const double analytic = -(after[p] - base[p]) / lr;
      EmbeddingModel plus = model;
      (plus.*block)[p] += step;
      EmbeddingModel minus = model;
      (minus.*block)[p] -= step;
      const double numeric = (loss_of(plus) - loss_of(minus)) / (2 * step);
      CHECK(relative_error(analytic, numeric) < 1e-4);
    }
  };
  check_block(&EmbeddingModel::w_in);
  check_block(&EmbeddingModel::w_out);
  check_block(&EmbeddingModel::d_docs);
}

std::vector<TokenizedDoc> synthetic_corpus(int n_docs, int vocab_size, int doc_len,
                                           uint64_t seed) {
  Rng rng(seed);
  std::vector<TokenizedDoc> docs;
  for (int d = 0; d < n_docs; ++d) {
    TokenizedDoc td;
    td.doc_id = "doc" + std::to_string(d);
    td.label_id = d % 3;
    for (int t = 0; t < doc_len; ++t) {
      // zipf-ish skew so counts differ
      const int w = static_cast<int>(rng.next_below(vocab_size) *
                                     rng.next_double());
      td.tokens.push_back("w" + std::to_string(w));
    }
    docs.push_back(std::move(td));
  }
  return docs;
}

}  // namespace

TEST_CASE("build_vocab assigns first-occurrence ids with exact counts") {
  std::vector<TokenizedDoc> docs = {doc("d", {"a", "b", "a"})};
  Vocab v1 = build_vocab(docs, 1);
  CHECK(v1.size() == 2);
  CHECK(v1.lookup("a") == 0);
  CHECK(v1.lookup("b") == 1);
  CHECK(v1.counts == std::vector<int64_t>{2, 1});
  CHECK(v1.id_to_token == std::vector<std::string>{"a", "b"});

  Vocab v2 = build_vocab(docs, 2);
  CHECK(v2.size() == 1);
  CHECK(v2.lookup("a") == 0);
  CHECK(v2.lookup("b") == -1);

  Vocab v0 = build_vocab(std::vector<TokenizedDoc>{}, 1);
  CHECK(v0.size() == 0);
}

TEST_CASE("vocab construction commutes with token renaming") {
  auto docs = synthetic_corpus(10, 40, 25, 7);
  const CipherContext ctx = derive_context("vocab-equivariance");
  auto encrypted = encrypt_corpus(ctx, docs);

  Vocab plain = build_vocab(docs, 2);
  Vocab cipher = build_vocab(encrypted, 2);
  REQUIRE(plain.size() == cipher.size());
  CHECK(plain.counts == cipher.counts);
  for (int id = 0; id < plain.size(); ++id) {
    CHECK(encrypt_token(ctx, plain.id_to_token[id]) == cipher.id_to_token[id]);
  }
}

TEST_CASE("sigmoid(0) = 0.5 drives the first update from zero outputs") {
  EmbeddingModel model = toy_model(EmbedMode::kPvDbow, 5);
  std::fill(model.w_out.begin(), model.w_out.end(), 0.0);
  const int dim = model.hyper.dim;
  std::vector<double> doc_vec(model.d_docs.begin(), model.d_docs.begin() + dim);

  PositionTargets targets;
  targets.positive = 1;
  targets.negatives = {3};
  const double lr = 0.1;
  apply_position_update(model, doc_vec, {}, targets, lr, false, true);

  // hidden = doc vector; g_pos = 1 - sigmoid(0) = 0.5, g_neg = -0.5
  for (int k = 0; k < dim; ++k) {
    CHECK(model.w_out[1 * dim + k] ==
          doctest::Approx(lr * 0.5 * model.d_docs[k]).epsilon(1e-12));
    CHECK(model.w_out[3 * dim + k] ==
          doctest::Approx(-lr * 0.5 * model.d_docs[k]).epsilon(1e-12));
  }
}

TEST_CASE("analytic gradients match central differences (PV-DM mean)") {
  check_position_gradients(EmbedMode::kPvDmMean);
}

TEST_CASE("analytic gradients match central differences (PV-DBOW)") {
  check_position_gradients(EmbedMode::kPvDbow);
}

TEST_CASE("training twice with one seed is bit-identical") {
  auto docs = synthetic_corpus(12, 30, 20, 13);
  Vocab vocab = build_vocab(docs, 1);
  EmbedHyper hyper;
  hyper.dim = 8;
  hyper.epochs = 3;
  hyper.seed = 42;
  hyper.min_count = 1;

  EmbeddingModel a = train_embeddings(docs, vocab, hyper);
  EmbeddingModel b = train_embeddings(docs, vocab, hyper);
  CHECK(a.d_docs == b.d_docs);
  CHECK(a.w_in == b.w_in);
  CHECK(a.w_out == b.w_out);
}

TEST_CASE("bijection equivariance: encrypted corpus trains to identical matrices") {
  auto docs = synthetic_corpus(14, 35, 22, 17);
  const CipherContext ctx = derive_context("train-equivariance");
  auto encrypted = encrypt_corpus(ctx, docs);

  EmbedHyper hyper;
  hyper.dim = 12;
  hyper.epochs = 2;
  hyper.seed = 1234;
  hyper.min_count = 2;

  for (EmbedMode mode : {EmbedMode::kPvDmMean, EmbedMode::kPvDbow}) {
    hyper.mode = mode;
    Vocab vp = build_vocab(docs, hyper.min_count);
    Vocab vc = build_vocab(encrypted, hyper.min_count);
    EmbeddingModel mp = train_embeddings(docs, vp, hyper);
    EmbeddingModel mc = train_embeddings(encrypted, vc, hyper);
    CHECK(mp.d_docs == mc.d_docs);
    CHECK(mp.w_in == mc.w_in);
    CHECK(mp.w_out == mc.w_out);

    // inference is equivariant as well
    TokenizedDoc plain_probe = docs[3];
    TokenizedDoc cipher_probe = encrypted[3];
    auto ip = infer_vector(mp, plain_probe, 5, 777);
    auto ic = infer_vector(mc, cipher_probe, 5, 777);
    CHECK(ip == ic);
  }
}

TEST_CASE("no NaN or Inf anywhere after training") {
  auto docs = synthetic_corpus(15, 25, 30, 19);
  Vocab vocab = build_vocab(docs, 1);
  EmbedHyper hyper;
  hyper.dim = 10;
  hyper.epochs = 5;
  hyper.seed = 3;
  EmbeddingModel m = train_embeddings(docs, vocab, hyper);
  for (const auto* block : {&m.w_in, &m.d_docs, &m.w_out}) {
    for (double x : *block) CHECK(std::isfinite(x));
  }
}

TEST_CASE("learning rate decays linearly and lands near final_lr") {
  EmbedHyper hyper;
  hyper.initial_lr = 0.025;
  hyper.final_lr = 1e-4;
  const int64_t total = 1000;
  double prev = learning_rate_at(hyper, 0, total);
  CHECK(prev == doctest::Approx(0.025));
  for (int64_t p = 1; p < total; ++p) {
    const double lr = learning_rate_at(hyper, p, total);
    CHECK(lr <= prev);
    CHECK(lr >= hyper.final_lr);
    prev = lr;
  }
  const double decrement = (hyper.initial_lr - hyper.final_lr) / total;
  CHECK(prev - hyper.final_lr <= decrement + 1e-15);
}

TEST_CASE("negative sampler matches count^0.75 within 1% total variation") {
  std::vector<TokenizedDoc> docs(1);
  docs[0].doc_id = "freq";
  auto add = [&](const std::string& tok, int n) {
    for (int i = 0; i < n; ++i) docs[0].tokens.push_back(tok);
  };
  add("alpha", 100);
  add("beta", 10);
  add("gamma", 1);
  add("delta", 47);
  add("epsilon", 3);
  const Vocab vocab = build_vocab(docs, 1);
  const NegativeSampler sampler = NegativeSampler::build(vocab);

  std::vector<double> expected(vocab.size());
  double total = 0.0;
  for (int i = 0; i < vocab.size(); ++i) {
    expected[i] = std::pow(static_cast<double>(vocab.counts[i]), 0.75);
    total += expected[i];
  }
  for (auto& e : expected) e /= total;

  const int draws = 1000000;
  std::vector<int64_t> hits(vocab.size(), 0);
  Rng rng(2718);
  for (int i = 0; i < draws; ++i) hits[sampler.draw(rng)]++;

  double tv = 0.0;
  for (int i = 0; i < vocab.size(); ++i) {
    tv += std::fabs(static_cast<double>(hits[i]) / draws - expected[i]);
  }
  tv *= 0.5;
  MESSAGE("total variation: ", tv);
  CHECK(tv < 0.01);
}

TEST_CASE("all-OOV documents contribute nothing and infer to their init") {
  auto docs = synthetic_corpus(8, 20, 15, 23);
  TokenizedDoc oov = doc("oov", {"zzz-unseen-1", "zzz-unseen-2"});
  docs.push_back(oov);
  Vocab vocab = build_vocab(docs, 2);  // singletons fall below min_count
  CHECK(vocab.lookup("zzz-unseen-1") == -1);

  EmbedHyper hyper;
  hyper.dim = 6;
  hyper.epochs = 2;
  hyper.seed = 31;
  hyper.min_count = 2;
  EmbeddingModel model = train_embeddings(docs, vocab, hyper);

  // the OOV doc's row must still be exactly its seeded initialization
  Rng init_rng(derive_seed(hyper.seed, "embed-init"));
  const double scale = init_scale(hyper.dim);
  std::vector<double> draws(model.w_in.size() + model.d_docs.size());
  for (auto& x : draws) x = init_rng.uniform(-scale, scale);
  const size_t oov_row = (docs.size() - 1) * hyper.dim;
  for (int k = 0; k < hyper.dim; ++k) {
    CHECK(model.d_docs[oov_row + k] == draws[model.w_in.size() + oov_row + k]);
  }

  // inference on an all-OOV doc returns the deterministic init
  auto v1 = infer_vector(model, oov, 3, 555);
  auto v2 = infer_vector(model, oov, 3, 555);
  CHECK(v1 == v2);
  double norm = 0.0;
  for (int k = 0; k < hyper.dim; ++k) {
    CHECK(std::fabs(v1[k]) <= scale);
    norm += v1[k] * v1[k];
  }
  CHECK(std::sqrt(norm) <= hyper.dim * scale);
}

TEST_CASE("inference is deterministic per seed") {
  auto docs = synthetic_corpus(10, 25, 18, 37);
  Vocab vocab = build_vocab(docs, 1);
  EmbedHyper hyper;
  hyper.dim = 8;
  hyper.epochs = 2;
  hyper.seed = 9;
  hyper.min_count = 1;
  EmbeddingModel model = train_embeddings(docs, vocab, hyper);
  CHECK(infer_vector(model, docs[0], 4, 100) == infer_vector(model, docs[0], 4, 100));
  CHECK(infer_vector(model, docs[0], 4, 100) != infer_vector(model, docs[0], 4, 101));
}

TEST_CASE("inferred training documents land nearest their own row") {
  // Each document draws from its own 4-word window of the topic vocabulary,
  // so documents are mutually distinguishable, not just their topics.
  Rng rng(43);
  std::vector<TokenizedDoc> docs;
  for (int topic = 0; topic < 3; ++topic) {
    for (int d = 0; d < 8; ++d) {
      TokenizedDoc td;
      td.doc_id = "t" + std::to_string(topic) + "d" + std::to_string(d);
      td.label_id = topic;
      for (int t = 0; t < 30; ++t) {
        const uint64_t w = 4 * d + rng.next_below(4);  // disjoint per-doc windows
        td.tokens.push_back("topic" + std::to_string(topic) + "_w" +
                            std::to_string(w));
      }
      docs.push_back(std::move(td));
    }
  }
  Vocab vocab = build_vocab(docs, 1);

  auto cosine = [&](std::span<const double> a, std::span<const double> b) {
    double dot = 0, na = 0, nb = 0;
    for (size_t k = 0; k < a.size(); ++k) {
      dot += a[k] * b[k];
      na += a[k] * a[k];
      nb += b[k] * b[k];
    }
    return dot / (std::sqrt(na) * std::sqrt(nb) + 1e-12);
  };

  auto hit_rate_for = [&](EmbedMode mode) {
    EmbedHyper hyper;
    hyper.dim = 16;
    hyper.epochs = 20;
    hyper.seed = 51;
    hyper.min_count = 1;
    hyper.mode = mode;
    EmbeddingModel model = train_embeddings(docs, vocab, hyper);
    int hits = 0;
    for (size_t d = 0; d < docs.size(); ++d) {
      auto inferred = infer_vector(model, docs[d], 20, derive_seed(1000, d));
      int best = -1;
      double best_sim = -2.0;
      for (int row = 0; row < model.n_docs; ++row) {
        const double sim = cosine(inferred, model.doc_vector(row));
        if (sim > best_sim) {
          best_sim = sim;
          best = row;
        }
      }
      if (best == static_cast<int>(d)) hits++;
    }
    return static_cast<double>(hits) / static_cast<double>(docs.size());
  };

  const double chance = 1.0 / static_cast<double>(docs.size());
  // PV-DBOW inference re-runs the exact training objective for the new
  // vector, so its own row dominates. PV-DM-mean contexts explain most of
  // the signal by themselves, leaving a weaker (but still above-chance)
  // pull on the document vector.
  const double dbow_rate = hit_rate_for(EmbedMode::kPvDbow);
  const double dm_rate = hit_rate_for(EmbedMode::kPvDmMean);
  MESSAGE("self nearest-neighbor hit rate: pv-dbow ", dbow_rate, ", pv-dm ", dm_rate);
  CHECK(dbow_rate > chance);
  CHECK(dbow_rate > 0.5);
  CHECK(dm_rate > chance);
}

TEST_CASE("hyperparameter validation") {
  auto docs = toy_corpus();
  Vocab vocab = build_vocab(docs, 1);
  EmbedHyper bad;
  bad.dim = 0;
  CHECK_THROWS_AS(train_embeddings(docs, vocab, bad), std::invalid_argument);
  bad = EmbedHyper{};
  bad.initial_lr = 1e-5;
  bad.final_lr = 1e-3;
  CHECK_THROWS_AS(train_embeddings(docs, vocab, bad), std::invalid_argument);
  CHECK_THROWS_AS(build_vocab(docs, 0), std::invalid_argument);
}
