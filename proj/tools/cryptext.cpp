// Command-line front end: fetch/prep/encrypt/embed/train/evaluate stages,
// corpus stats, and the two-arm compare command.

#include <termios.h>
#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cryptext/corpus.hpp"
#include "cryptext/fetch.hpp"
#include "cryptext/metrics.hpp"
#include "cryptext/pipeline.hpp"

using namespace cryptext;

namespace {

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;  // key=value
  std::string corpus_root;
  std::string categories;
  std::string classifier;
  std::string output_dir;
  std::string stopwords;
  std::string passphrase_env;
  std::optional<uint64_t> seed;
  bool transductive = false;
  bool allow_drift = false;
  bool no_deterministic = false;
};

void add_common_options(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_file, "flat key=value config file");
  cmd->add_option("--set", args.overrides, "override any config key (key=value)");
  cmd->add_option("--corpus-root", args.corpus_root, "20news-bydate directory");
  cmd->add_option("--categories", args.categories,
                  "comma-separated category subset (default: all)");
  cmd->add_option("--classifier", args.classifier, "gbt | lstm | both");
  cmd->add_option("--seed", args.seed, "root seed for every stage");
  cmd->add_option("--out", args.output_dir, "output directory");
  cmd->add_option("--stopwords", args.stopwords, "stopword list file");
  cmd->add_option("--passphrase-env", args.passphrase_env,
                  "environment variable holding the passphrase");
  cmd->add_flag("--transductive", args.transductive,
                "train embeddings over train+test jointly");
  cmd->add_flag("--allow-drift", args.allow_drift,
                "do not fail compare when the arms diverge");
  cmd->add_flag("--no-deterministic", args.no_deterministic,
                "permit nondeterministic options (e.g. embed.threads > 1)");
}

ExperimentConfig build_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  if (!args.config_file.empty()) cfg = load_config_file(args.config_file);
  if (!args.corpus_root.empty()) apply_config_entry(cfg, "corpus_root", args.corpus_root);
  if (!args.categories.empty()) apply_config_entry(cfg, "categories", args.categories);
  if (!args.classifier.empty()) apply_config_entry(cfg, "classifier", args.classifier);
  if (!args.output_dir.empty()) apply_config_entry(cfg, "output_dir", args.output_dir);
  if (!args.stopwords.empty()) apply_config_entry(cfg, "stopwords", args.stopwords);
  if (!args.passphrase_env.empty()) {
    apply_config_entry(cfg, "passphrase_env", args.passphrase_env);
  }
  if (args.seed) cfg.seed = *args.seed;
  if (args.transductive) cfg.transductive = true;
  if (args.allow_drift) cfg.allow_drift = true;
  if (args.no_deterministic) cfg.deterministic = false;
  for (const auto& kv : args.overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got: " + kv);
    }
    apply_config_entry(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

// Reads the passphrase from the configured environment variable, falling
// back to a no-echo terminal prompt. The passphrase is never accepted as a
// command-line argument.
void ensure_passphrase(const ExperimentConfig& cfg) {
  if (const char* v = std::getenv(cfg.passphrase_env.c_str()); v && *v) return;
  if (!::isatty(STDIN_FILENO)) {
    throw std::runtime_error("passphrase environment variable " + cfg.passphrase_env +
                             " is not set and stdin is not a terminal");
  }
  std::cerr << "Passphrase (exported as " << cfg.passphrase_env << "): " << std::flush;
  termios before{};
  tcgetattr(STDIN_FILENO, &before);
  termios quiet = before;
  quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
  tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
  std::string passphrase;
  std::getline(std::cin, passphrase);
  tcsetattr(STDIN_FILENO, TCSANOW, &before);
  std::cerr << std::endl;
  if (passphrase.empty()) throw std::runtime_error("empty passphrase");
  ::setenv(cfg.passphrase_env.c_str(), passphrase.c_str(), 1);
}

Arm arm_from_string(const std::string& s) {
  if (s == "plain") return Arm::kPlain;
  if (s == "encrypted") return Arm::kEncrypted;
  throw std::invalid_argument("unknown arm '" + s + "' (plain|encrypted)");
}

int run(int argc, char** argv) {
  CLI::App app{"text classification on deterministically word-encrypted corpora"};
  app.require_subcommand(1);

  // fetch
  auto* fetch_cmd = app.add_subcommand("fetch", "download/unpack the 20news-bydate corpus");
  std::string fetch_url, fetch_archive, fetch_out = "data/20news-bydate";
  fetch_cmd->add_option("--url", fetch_url, "archive URL (http only)");
  fetch_cmd->add_option("--archive", fetch_archive, "local .tar.gz instead of downloading");
  fetch_cmd->add_option("--out", fetch_out, "destination directory");

  // corpus stats
  auto* corpus_cmd = app.add_subcommand("corpus", "corpus inspection commands");
  auto* stats_cmd = corpus_cmd->add_subcommand("stats", "per-category counts as JSON");
  CommonArgs stats_args;
  add_common_options(stats_cmd, stats_args);

  // stages
  CommonArgs prep_args, encrypt_args, embed_args, train_args, eval_args, compare_args;
  auto* prep_cmd = app.add_subcommand("prep", "clean + tokenize the corpus");
  add_common_options(prep_cmd, prep_args);
  auto* encrypt_cmd =
      app.add_subcommand("encrypt", "token file -> deterministic ciphertokens");
  add_common_options(encrypt_cmd, encrypt_args);
  bool encrypt_verify = false;
  encrypt_cmd->add_flag("--verify", encrypt_verify,
                        "decrypt everything back and check the round trip");

  auto* embed_cmd = app.add_subcommand("embed", "train document embeddings");
  std::string embed_arm = "plain";
  embed_cmd->add_option("--arm", embed_arm, "plain | encrypted");
  add_common_options(embed_cmd, embed_args);

  auto* train_cmd = app.add_subcommand("train", "fit the classifier(s)");
  std::string train_arm = "plain";
  train_cmd->add_option("--arm", train_arm, "plain | encrypted");
  add_common_options(train_cmd, train_args);

  auto* eval_cmd = app.add_subcommand("evaluate", "score the test split");
  std::string eval_arm = "plain";
  eval_cmd->add_option("--arm", eval_arm, "plain | encrypted");
  add_common_options(eval_cmd, eval_args);

  auto* compare_cmd =
      app.add_subcommand("compare", "run both arms under one seed and diff them");
  add_common_options(compare_cmd, compare_args);

  CLI11_PARSE(app, argc, argv);

  if (*fetch_cmd) {
    std::optional<std::string> url;
    std::optional<std::filesystem::path> archive;
    if (!fetch_url.empty()) url = fetch_url;
    if (!fetch_archive.empty()) archive = fetch_archive;
    fetch_corpus(url, archive, fetch_out);
    std::cout << "corpus unpacked under " << fetch_out << std::endl;
    return 0;
  }

  if (*stats_cmd) {
    ExperimentConfig cfg = build_config(stats_args);
    CorpusSplit corpus = load_corpus(cfg.corpus_root);
    if (!cfg.categories.empty()) corpus = subset(corpus, cfg.categories);
    nlohmann::json out = nlohmann::json::array();
    for (const auto& c : category_counts(corpus)) {
      out.push_back({{"category", c.label_name},
                     {"train", c.train_docs},
                     {"test", c.test_docs}});
    }
    std::cout << nlohmann::json{{"categories", out},
                                {"train_total", corpus.train.size()},
                                {"test_total", corpus.test.size()}}
                     .dump(2)
              << std::endl;
    return 0;
  }

  if (*prep_cmd) {
    ExperimentConfig cfg = build_config(prep_args);
    stage_prep(cfg);
    std::cout << "token files written under " << arm_dir(cfg, Arm::kPlain) << std::endl;
    return 0;
  }
  if (*encrypt_cmd) {
    ExperimentConfig cfg = build_config(encrypt_args);
    ensure_passphrase(cfg);
    stage_encrypt(cfg);
    std::cout << "ciphertoken files written under " << arm_dir(cfg, Arm::kEncrypted)
              << std::endl;
    if (encrypt_verify) {
      const size_t n = verify_encryption(cfg);
      std::cout << "decrypt-verify: 100% round trip over " << n << " tokens"
                << std::endl;
    }
    return 0;
  }
  if (*embed_cmd) {
    ExperimentConfig cfg = build_config(embed_args);
    stage_embed(cfg, arm_from_string(embed_arm));
    std::cout << "vector files written under "
              << arm_dir(cfg, arm_from_string(embed_arm)) << std::endl;
    return 0;
  }
  if (*train_cmd) {
    ExperimentConfig cfg = build_config(train_args);
    stage_train(cfg, arm_from_string(train_arm));
    std::cout << "models written under " << arm_dir(cfg, arm_from_string(train_arm))
              << std::endl;
    return 0;
  }
  if (*eval_cmd) {
    ExperimentConfig cfg = build_config(eval_args);
    const Arm arm = arm_from_string(eval_arm);
    stage_evaluate(cfg, arm);
    for (Classifier c : {Classifier::kGbt, Classifier::kLstm}) {
      if (cfg.classifier != Classifier::kBoth && cfg.classifier != c) continue;
      const auto path = arm_dir(cfg, arm) / (to_string(c) + "_report.json");
      std::ifstream in(path);
      nlohmann::json j;
      in >> j;
      std::cout << "== " << to_string(c) << " (" << to_string(arm) << ") ==\n"
                << render_report(report_from_json(j)) << std::endl;
    }
    return 0;
  }
  if (*compare_cmd) {
    ExperimentConfig cfg = build_config(compare_args);
    ensure_passphrase(cfg);
    ComparisonOutcome outcome = run_compare(cfg);
    std::cout << outcome.table;
    std::cout << "report: " << (cfg.output_dir / "comparison_report.json") << std::endl;
    if (!outcome.ok) {
      std::cerr << "deterministic-mode exact equality FAILED (use --allow-drift to "
                   "tolerate divergence)"
                << std::endl;
      return 2;
    }
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
}
