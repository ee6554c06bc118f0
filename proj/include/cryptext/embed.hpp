#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "cryptext/rng.hpp"
#include "cryptext/textprep.hpp"

namespace cryptext {

// Vocabulary over a tokenized corpus. Ids are assigned in first-occurrence
// order among tokens whose final count reaches min_count, so any injective
// renaming of the tokens yields the exact same id sequence and counts. After
// this point nothing in training ever looks at token text again — that is
// the whole mechanism behind identical plaintext/encrypted models.
struct Vocab {
  std::unordered_map<std::string, int> token_to_id;
  std::vector<std::string> id_to_token;  // index = id, first-occurrence order
  std::vector<int64_t> counts;           // per id
  int min_count = 1;

  int size() const { return static_cast<int>(id_to_token.size()); }
  int64_t total_count() const;
  int lookup(const std::string& token) const;  // -1 when absent
};

Vocab build_vocab(std::span<const TokenizedDoc> docs, int min_count);

enum class EmbedMode { kPvDmMean, kPvDbow };

std::string to_string(EmbedMode mode);
EmbedMode embed_mode_from_string(const std::string& s);

struct EmbedHyper {
  int dim = 100;
  int window = 5;
  int epochs = 10;
  int negatives = 5;
  double initial_lr = 0.025;
  double final_lr = 1e-4;
  int min_count = 5;
  EmbedMode mode = EmbedMode::kPvDmMean;
  uint64_t seed = 1;
  int infer_epochs = 0;  // 0 = use `epochs`
  int threads = 1;       // >1 = hogwild sharding, nondeterministic
};

struct EmbeddingModel {
  EmbedHyper hyper;
  Vocab vocab;
  int n_docs = 0;
  // Row-major: w_in is V x d (word input vectors), d_docs is N x d
  // (document vectors), w_out is V x d (output weights).
  std::vector<double> w_in;
  std::vector<double> d_docs;
  std::vector<double> w_out;

  std::span<const double> doc_vector(int doc_index) const {
    return std::span<const double>(d_docs).subspan(
        static_cast<size_t>(doc_index) * hyper.dim, hyper.dim);
  }
};

// Draws token ids proportional to count^0.75 via a cumulative table.
struct NegativeSampler {
  std::vector<double> cumulative;

  static NegativeSampler build(const Vocab& vocab);
  int draw(Rng& rng) const;
};

// Deterministic when hyper.threads == 1: given equal document id structure,
// vocab and seed, the resulting matrices are bit-identical.
EmbeddingModel train_embeddings(std::span<const TokenizedDoc> docs, const Vocab& vocab,
                                const EmbedHyper& hyper);

// Trains a fresh document vector against the frozen model. Deterministic
// given (model, doc, epochs, seed). All-OOV docs return the seeded
// initialization unchanged.
std::vector<double> infer_vector(const EmbeddingModel& model, const TokenizedDoc& doc,
                                 int epochs, uint64_t seed);

// Text dump: "V N d mode", then word rows "token v1..vd", then doc rows
// "doc_id v1..vd".
void dump_model(const EmbeddingModel& model, std::span<const TokenizedDoc> docs,
                const std::filesystem::path& path);

// --- single-position machinery (train/infer are loops over these) ---

// One update site. The hidden vector is the mean of the document vector and
// the w_in rows named by context_ids (PV-DBOW passes no context, so the
// hidden vector is the document vector itself); it scores the positive
// target with label 1 and each negative with label 0 under a sigmoid.
// apply_position_update evaluates every gradient at the pre-update
// parameters, so the step equals exactly -lr * dL/dtheta for the loss
// computed by position_loss. Input-side gradients are scaled by
// 1/(|context|+1), the exact derivative through the mean.
struct PositionTargets {
  int positive = 0;
  std::vector<int> negatives;  // sampler draws, collisions with positive removed
};

double position_loss(const EmbeddingModel& model, std::span<const double> doc_vec,
                     std::span<const int> context_ids, const PositionTargets& targets);
void apply_position_update(EmbeddingModel& model, std::span<double> doc_vec,
                           std::span<const int> context_ids,
                           const PositionTargets& targets, double lr,
                           bool update_words, bool update_outputs);

// Linear decay from initial_lr to final_lr over `total` scheduled positions.
double learning_rate_at(const EmbedHyper& hyper, int64_t position, int64_t total);

// Initialization scale for word and document vectors: uniform in
// [-init_scale, init_scale) with init_scale = 0.5 / dim.
double init_scale(int dim);

}  // namespace cryptext
