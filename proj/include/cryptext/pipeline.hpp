#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "cryptext/embed.hpp"
#include "cryptext/gbt.hpp"
#include "cryptext/lstm.hpp"
#include "cryptext/metrics.hpp"

namespace cryptext {

enum class Arm { kPlain, kEncrypted };
std::string to_string(Arm arm);

enum class Classifier { kGbt, kLstm, kBoth };
std::string to_string(Classifier c);
Classifier classifier_from_string(const std::string& s);

// Everything a run needs, loadable from a flat key=value file with CLI
// overrides on top. The canonical rendering (sorted keys) is hashed into
// every artifact header, which is what makes re-runs byte-identical and
// auditable.
struct ExperimentConfig {
  std::filesystem::path corpus_root;
  std::vector<std::string> categories;  // empty = all
  std::string passphrase_env = "CRYPTEXT_PASSPHRASE";
  EmbedHyper embed;
  Classifier classifier = Classifier::kBoth;
  GbtHyper gbt;
  LstmHyper lstm;
  uint64_t seed = 1;
  bool deterministic = true;
  bool transductive = false;
  bool allow_drift = false;
  std::filesystem::path output_dir = "out";
  std::filesystem::path stopwords_path = "data/stopwords_en.txt";

  std::string canonical_text() const;
  std::string config_hash() const;
};

ExperimentConfig load_config_file(const std::filesystem::path& path);
// Applies one "key=value" entry; throws on unknown keys.
void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value);

std::filesystem::path arm_dir(const ExperimentConfig& cfg, Arm arm);

// Stage commands. Each reads the previous stage's artifacts from disk,
// validates them and writes its own, so single stages can be re-run and
// audited independently. All outputs carry config hash + seed meta.
void stage_prep(const ExperimentConfig& cfg);
void stage_encrypt(const ExperimentConfig& cfg);  // needs the passphrase
void stage_embed(const ExperimentConfig& cfg, Arm arm);
void stage_train(const ExperimentConfig& cfg, Arm arm);
void stage_evaluate(const ExperimentConfig& cfg, Arm arm);

// Reads the passphrase from the configured environment variable. Never
// accepted on the command line (visible in process listings).
std::string passphrase_from_env(const ExperimentConfig& cfg);

// Decrypt-verify: checks every ciphertoken in the encrypted arm round-trips
// to its plaintext twin. Returns the number of tokens checked.
size_t verify_encryption(const ExperimentConfig& cfg);

struct ComparisonOutcome {
  nlohmann::json report;
  std::string table;
  bool exact_equal_metrics = false;
  bool ok = false;  // equality gate result (always true with allow_drift)
};

// Runs prep -> [identity | encrypt] -> embed -> train -> evaluate for both
// arms under one seed, writes comparison_report.json and returns the
// outcome. In deterministic mode without allow_drift, ok=false means the
// exact-equality guarantee was violated.
ComparisonOutcome run_compare(const ExperimentConfig& cfg);

}  // namespace cryptext
