#include "cryptext/pipeline.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "cryptext/corpus.hpp"
#include "cryptext/hashing.hpp"
#include "cryptext/tokenfile.hpp"
#include "cryptext/wordcrypt.hpp"

namespace cryptext {

namespace fs = std::filesystem;

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out.push_back(sep);
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw std::invalid_argument("expected a boolean, got '" + v + "'");
}

FileMeta base_meta(const ExperimentConfig& cfg, const std::string& stage) {
  return {{"stage", stage},
          {"config-hash", cfg.config_hash()},
          {"seed", std::to_string(cfg.seed)}};
}

std::string meta_or_fail(const FileMeta& meta, const std::string& key,
                         const fs::path& source) {
  auto it = meta.find(key);
  if (it == meta.end()) {
    throw FormatError(source.string() + ": missing required meta key '" + key + "'");
  }
  return it->second;
}

struct LoadedVectors {
  std::vector<VecRecord> records;
  std::vector<std::string> label_names;
  Matrix features;
  std::vector<int> labels;
};

LoadedVectors load_vectors(const fs::path& path) {
  LoadedVectors out;
  FileMeta meta;
  out.records = read_vec_file(path, &meta);
  out.label_names = split(meta_or_fail(meta, "label-names", path), ',');
  if (out.records.empty()) throw FormatError(path.string() + ": no vectors");
  const size_t dim = out.records[0].values.size();
  out.features = Matrix(out.records.size(), dim);
  out.labels.reserve(out.records.size());
  for (size_t i = 0; i < out.records.size(); ++i) {
    std::copy(out.records[i].values.begin(), out.records[i].values.end(),
              out.features.data.begin() + i * dim);
    if (out.records[i].label_id < 0 ||
        out.records[i].label_id >= static_cast<int>(out.label_names.size())) {
      throw FormatError(path.string() + ": label out of range for " +
                        out.records[i].doc_id);
    }
    out.labels.push_back(out.records[i].label_id);
  }
  return out;
}

void write_predictions(const fs::path& path, const std::vector<VecRecord>& records,
                       const std::vector<int>& predicted, const FileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write predictions: " + path.string());
  for (const auto& [key, value] : meta) out << "# " << key << ": " << value << "\n";
  for (size_t i = 0; i < records.size(); ++i) {
    out << records[i].doc_id << '\t' << records[i].label_id << '\t' << predicted[i]
        << '\n';
  }
}

std::vector<std::pair<std::string, std::pair<int, int>>> read_predictions(
    const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open predictions: " + path.string());
  std::vector<std::pair<std::string, std::pair<int, int>>> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string doc_id;
    int truth = 0, pred = 0;
    if (!(row >> doc_id >> truth >> pred)) {
      throw FormatError(path.string() + ": bad prediction line: " + line);
    }
    out.push_back({doc_id, {truth, pred}});
  }
  return out;
}

std::vector<Classifier> selected_classifiers(const ExperimentConfig& cfg) {
  switch (cfg.classifier) {
    case Classifier::kGbt:
      return {Classifier::kGbt};
    case Classifier::kLstm:
      return {Classifier::kLstm};
    case Classifier::kBoth:
      return {Classifier::kGbt, Classifier::kLstm};
  }
  return {};
}

nlohmann::json file_hash_entry(const fs::path& path) {
  return {{"file", path.filename().string()}, {"sha256", file_sha256_hex(path)}};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

std::string to_string(Arm arm) { return arm == Arm::kPlain ? "plain" : "encrypted"; }

std::string to_string(Classifier c) {
  switch (c) {
    case Classifier::kGbt:
      return "gbt";
    case Classifier::kLstm:
      return "lstm";
    case Classifier::kBoth:
      return "both";
  }
  return "?";
}

Classifier classifier_from_string(const std::string& s) {
  if (s == "gbt") return Classifier::kGbt;
  if (s == "lstm") return Classifier::kLstm;
  if (s == "both") return Classifier::kBoth;
  throw std::invalid_argument("unknown classifier '" + s + "' (gbt|lstm|both)");
}

std::string ExperimentConfig::canonical_text() const {
  // output_dir is deliberately absent: where artifacts land has no bearing
  // on their contents, and re-runs into fresh directories must hash equal.
  std::map<std::string, std::string> kv;
  kv["corpus_root"] = corpus_root.string();
  kv["categories"] = join(categories, ',');
  kv["passphrase_env"] = passphrase_env;
  kv["classifier"] = to_string(classifier);
  kv["seed"] = std::to_string(seed);
  kv["deterministic"] = deterministic ? "true" : "false";
  kv["transductive"] = transductive ? "true" : "false";
  kv["stopwords"] = stopwords_path.string();
  kv["embed.dim"] = std::to_string(embed.dim);
  kv["embed.window"] = std::to_string(embed.window);
  kv["embed.epochs"] = std::to_string(embed.epochs);
  kv["embed.negatives"] = std::to_string(embed.negatives);
  kv["embed.initial_lr"] = format_double(embed.initial_lr);
  kv["embed.final_lr"] = format_double(embed.final_lr);
  kv["embed.min_count"] = std::to_string(embed.min_count);
  kv["embed.mode"] = cryptext::to_string(embed.mode);
  kv["embed.infer_epochs"] = std::to_string(embed.infer_epochs);
  kv["embed.threads"] = std::to_string(embed.threads);
  kv["gbt.rounds"] = std::to_string(gbt.rounds);
  kv["gbt.max_depth"] = std::to_string(gbt.max_depth);
  kv["gbt.eta"] = format_double(gbt.eta);
  kv["gbt.lambda"] = format_double(gbt.lambda);
  kv["gbt.gamma"] = format_double(gbt.gamma);
  kv["gbt.min_child_weight"] = format_double(gbt.min_child_weight);
  kv["gbt.threads"] = std::to_string(gbt.threads);
  kv["lstm.epochs"] = std::to_string(lstm.epochs);
  kv["lstm.batch"] = std::to_string(lstm.batch);
  kv["lstm.val_split"] = format_double(lstm.val_split);
  kv["lstm.lr"] = format_double(lstm.lr);
  kv["lstm.dropout"] = format_double(lstm.dropout);
  kv["lstm.hidden1"] = std::to_string(lstm.hidden1);
  kv["lstm.hidden2"] = std::to_string(lstm.hidden2);
  std::string out;
  for (const auto& [key, value] : kv) {
    out += key;
    out.push_back('=');
    out += value;
    out.push_back('\n');
  }
  return out;
}

std::string ExperimentConfig::config_hash() const { return sha256_hex(canonical_text()); }

void apply_config_entry(ExperimentConfig& cfg, const std::string& key,
                        const std::string& value) {
  if (key == "corpus_root") {
    cfg.corpus_root = value;
  } else if (key == "categories") {
    cfg.categories = split(value, ',');
  } else if (key == "passphrase_env") {
    cfg.passphrase_env = value;
  } else if (key == "classifier") {
    cfg.classifier = classifier_from_string(value);
  } else if (key == "seed") {
    cfg.seed = std::stoull(value);
  } else if (key == "deterministic") {
    cfg.deterministic = parse_bool(value);
  } else if (key == "transductive") {
    cfg.transductive = parse_bool(value);
  } else if (key == "output_dir") {
    cfg.output_dir = value;
  } else if (key == "stopwords") {
    cfg.stopwords_path = value;
  } else if (key == "embed.dim") {
    cfg.embed.dim = std::stoi(value);
  } else if (key == "embed.window") {
    cfg.embed.window = std::stoi(value);
  } else if (key == "embed.epochs") {
    cfg.embed.epochs = std::stoi(value);
  } else if (key == "embed.negatives") {
    cfg.embed.negatives = std::stoi(value);
  } else if (key == "embed.initial_lr") {
    cfg.embed.initial_lr = std::stod(value);
  } else if (key == "embed.final_lr") {
    cfg.embed.final_lr = std::stod(value);
  } else if (key == "embed.min_count") {
    cfg.embed.min_count = std::stoi(value);
  } else if (key == "embed.mode") {
    cfg.embed.mode = embed_mode_from_string(value);
  } else if (key == "embed.infer_epochs") {
    cfg.embed.infer_epochs = std::stoi(value);
  } else if (key == "embed.threads") {
    cfg.embed.threads = std::stoi(value);
  } else if (key == "gbt.rounds") {
    cfg.gbt.rounds = std::stoi(value);
  } else if (key == "gbt.max_depth") {
    cfg.gbt.max_depth = std::stoi(value);
  } else if (key == "gbt.eta") {
    cfg.gbt.eta = std::stod(value);
  } else if (key == "gbt.lambda") {
    cfg.gbt.lambda = std::stod(value);
  } else if (key == "gbt.gamma") {
    cfg.gbt.gamma = std::stod(value);
  } else if (key == "gbt.min_child_weight") {
    cfg.gbt.min_child_weight = std::stod(value);
  } else if (key == "gbt.threads") {
    cfg.gbt.threads = std::stoi(value);
  } else if (key == "lstm.epochs") {
    cfg.lstm.epochs = std::stoi(value);
  } else if (key == "lstm.batch") {
    cfg.lstm.batch = std::stoi(value);
  } else if (key == "lstm.val_split") {
    cfg.lstm.val_split = std::stod(value);
  } else if (key == "lstm.lr") {
    cfg.lstm.lr = std::stod(value);
  } else if (key == "lstm.dropout") {
    cfg.lstm.dropout = std::stod(value);
  } else if (key == "lstm.hidden1") {
    cfg.lstm.hidden1 = std::stoi(value);
  } else if (key == "lstm.hidden2") {
    cfg.lstm.hidden2 = std::stoi(value);
  } else {
    throw std::invalid_argument("unknown config key: " + key);
  }
}

ExperimentConfig load_config_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  ExperimentConfig cfg;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\r')) line.pop_back();
    size_t first = line.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    size_t eq = line.find('=', first);
    if (eq == std::string::npos) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": expected key=value");
    }
    apply_config_entry(cfg, line.substr(first, eq - first), line.substr(eq + 1));
  }
  return cfg;
}

fs::path arm_dir(const ExperimentConfig& cfg, Arm arm) {
  return cfg.output_dir / to_string(arm);
}

std::string passphrase_from_env(const ExperimentConfig& cfg) {
  const char* value = std::getenv(cfg.passphrase_env.c_str());
  if (!value || !*value) {
    throw std::runtime_error("passphrase environment variable " + cfg.passphrase_env +
                             " is not set");
  }
  return value;
}

void stage_prep(const ExperimentConfig& cfg) {
  CorpusSplit corpus = load_corpus(cfg.corpus_root);
  if (!cfg.categories.empty()) corpus = subset(corpus, cfg.categories);
  StopwordList stopwords = load_stopwords(cfg.stopwords_path);
  auto [train_docs, test_docs] = preprocess_corpus(corpus, stopwords);

  // Content hash over the raw corpus in deterministic order.
  std::string digest_input;
  for (const auto* docs : {&corpus.train, &corpus.test}) {
    for (const auto& doc : *docs) {
      digest_input += doc.doc_id;
      digest_input.push_back('\0');
      digest_input += sha256_hex(doc.text);
      digest_input.push_back('\n');
    }
  }

  FileMeta meta = base_meta(cfg, "prep");
  meta["label-names"] = join(corpus.label_names, ',');
  meta["corpus-hash"] = sha256_hex(digest_input);
  meta["stopwords-checksum"] = stopwords.source_checksum;

  const fs::path dir = arm_dir(cfg, Arm::kPlain);
  fs::create_directories(dir);
  write_token_file(dir / "tokens_train.tsv", train_docs, meta);
  write_token_file(dir / "tokens_test.tsv", test_docs, meta);
}

void stage_encrypt(const ExperimentConfig& cfg) {
  const fs::path src = arm_dir(cfg, Arm::kPlain);
  const fs::path dst = arm_dir(cfg, Arm::kEncrypted);
  fs::create_directories(dst);
  const CipherContext ctx = derive_context(passphrase_from_env(cfg));

  for (const char* name : {"tokens_train.tsv", "tokens_test.tsv"}) {
    FileMeta meta;
    auto docs = read_token_file(src / name, &meta);
    auto encrypted = encrypt_corpus(ctx, docs);
    FileMeta out_meta = base_meta(cfg, "encrypt");
    out_meta["label-names"] = meta_or_fail(meta, "label-names", src / name);
    out_meta["corpus-hash"] = meta_or_fail(meta, "corpus-hash", src / name);
    out_meta["plain-input-sha256"] = file_sha256_hex(src / name);
    write_token_file(dst / name, encrypted, out_meta);
  }
}

size_t verify_encryption(const ExperimentConfig& cfg) {
  const CipherContext ctx = derive_context(passphrase_from_env(cfg));
  size_t checked = 0;
  for (const char* name : {"tokens_train.tsv", "tokens_test.tsv"}) {
    auto plain = read_token_file(arm_dir(cfg, Arm::kPlain) / name);
    auto encrypted = read_token_file(arm_dir(cfg, Arm::kEncrypted) / name);
    if (plain.size() != encrypted.size()) {
      throw std::runtime_error("verify: arm document counts differ for " +
                               std::string(name));
    }
    for (size_t d = 0; d < plain.size(); ++d) {
      if (plain[d].tokens.size() != encrypted[d].tokens.size()) {
        throw std::runtime_error("verify: token counts differ in " + plain[d].doc_id);
      }
      for (size_t t = 0; t < plain[d].tokens.size(); ++t) {
        if (decrypt_token(ctx, encrypted[d].tokens[t]) != plain[d].tokens[t]) {
          throw std::runtime_error("verify: round-trip mismatch in " + plain[d].doc_id);
        }
        ++checked;
      }
    }
  }
  return checked;
}

void stage_embed(const ExperimentConfig& cfg, Arm arm) {
  if (cfg.deterministic && cfg.embed.threads > 1) {
    throw std::invalid_argument(
        "embed.threads > 1 is nondeterministic; set deterministic=false to use it");
  }
  const fs::path dir = arm_dir(cfg, arm);
  FileMeta train_meta, test_meta;
  auto train_docs = read_token_file(dir / "tokens_train.tsv", &train_meta);
  auto test_docs = read_token_file(dir / "tokens_test.tsv", &test_meta);
  const std::string label_names =
      meta_or_fail(train_meta, "label-names", dir / "tokens_train.tsv");

  EmbedHyper hyper = cfg.embed;
  hyper.seed = derive_seed(cfg.seed, "embed");

  std::vector<VecRecord> train_vecs, test_vecs;
  int vocab_size = 0;
  if (cfg.transductive) {
    std::vector<TokenizedDoc> all_docs = train_docs;
    all_docs.insert(all_docs.end(), test_docs.begin(), test_docs.end());
    Vocab vocab = build_vocab(all_docs, hyper.min_count);
    vocab_size = vocab.size();
    EmbeddingModel model = train_embeddings(all_docs, vocab, hyper);
    dump_model(model, all_docs, dir / "embed_model.txt");
    auto row_record = [&](size_t idx, const TokenizedDoc& doc) {
      auto row = model.doc_vector(static_cast<int>(idx));
      return VecRecord{doc.doc_id, doc.label_id, {row.begin(), row.end()}};
    };
    for (size_t i = 0; i < train_docs.size(); ++i) {
      train_vecs.push_back(row_record(i, train_docs[i]));
    }
    for (size_t i = 0; i < test_docs.size(); ++i) {
      test_vecs.push_back(row_record(train_docs.size() + i, test_docs[i]));
    }
  } else {
    Vocab vocab = build_vocab(train_docs, hyper.min_count);
    vocab_size = vocab.size();
    EmbeddingModel model = train_embeddings(train_docs, vocab, hyper);
    dump_model(model, train_docs, dir / "embed_model.txt");
    for (size_t i = 0; i < train_docs.size(); ++i) {
      auto row = model.doc_vector(static_cast<int>(i));
      train_vecs.push_back(
          {train_docs[i].doc_id, train_docs[i].label_id, {row.begin(), row.end()}});
    }
    const uint64_t infer_root = derive_seed(cfg.seed, "embed-infer");
    const int infer_epochs =
        cfg.embed.infer_epochs > 0 ? cfg.embed.infer_epochs : cfg.embed.epochs;
    for (size_t i = 0; i < test_docs.size(); ++i) {
      auto vec = infer_vector(model, test_docs[i], infer_epochs,
                              derive_seed(infer_root, static_cast<uint64_t>(i)));
      test_vecs.push_back({test_docs[i].doc_id, test_docs[i].label_id, std::move(vec)});
    }
  }

  FileMeta meta = base_meta(cfg, "embed");
  meta["label-names"] = label_names;
  meta["vocab-size"] = std::to_string(vocab_size);
  meta["mode"] = to_string(cfg.embed.mode);
  meta["transductive"] = cfg.transductive ? "true" : "false";
  meta["tokens-train-sha256"] = file_sha256_hex(dir / "tokens_train.tsv");
  meta["tokens-test-sha256"] = file_sha256_hex(dir / "tokens_test.tsv");
  write_vec_file(dir / "vectors_train.tsv", train_vecs, meta);
  write_vec_file(dir / "vectors_test.tsv", test_vecs, meta);
}

void stage_train(const ExperimentConfig& cfg, Arm arm) {
  const fs::path dir = arm_dir(cfg, arm);
  LoadedVectors train = load_vectors(dir / "vectors_train.tsv");
  const int n_classes = static_cast<int>(train.label_names.size());

  for (Classifier c : selected_classifiers(cfg)) {
    if (c == Classifier::kGbt) {
      TreeEnsemble model = gbt_fit(train.features, train.labels, n_classes, cfg.gbt);
      gbt_save(model, dir / "gbt_model.json");
    } else {
      LstmHyper hyper = cfg.lstm;
      hyper.seed = derive_seed(cfg.seed, "lstm");
      LstmModel model =
          lstm_init(static_cast<int>(train.features.cols), n_classes, hyper);
      lstm_fit(model, train.features, train.labels);
      lstm_save(model, dir / "lstm_manifest.json", dir / "lstm_weights.txt");
      std::ofstream hist(dir / "lstm_history.json", std::ios::binary);
      hist << history_to_json(model).dump(2) << '\n';
    }
  }
}

void stage_evaluate(const ExperimentConfig& cfg, Arm arm) {
  const fs::path dir = arm_dir(cfg, arm);
  LoadedVectors test = load_vectors(dir / "vectors_test.tsv");

  for (Classifier c : selected_classifiers(cfg)) {
    std::vector<int> predicted;
    if (c == Classifier::kGbt) {
      TreeEnsemble model = gbt_load(dir / "gbt_model.json");
      predicted = gbt_predict(model, test.features);
    } else {
      LstmModel model = lstm_load(dir / "lstm_manifest.json", dir / "lstm_weights.txt");
      predicted = lstm_predict(model, test.features);
    }
    MetricsReport report = compute_report(test.labels, predicted, test.label_names);

    const std::string name = to_string(c);
    FileMeta meta = base_meta(cfg, "evaluate");
    meta["classifier"] = name;
    meta["vectors-test-sha256"] = file_sha256_hex(dir / "vectors_test.tsv");
    write_predictions(dir / (name + "_predictions.tsv"), test.records, predicted, meta);
    std::ofstream rj(dir / (name + "_report.json"), std::ios::binary);
    rj << report_to_json(report).dump(2) << '\n';
  }
}

ComparisonOutcome run_compare(const ExperimentConfig& cfg) {
  using clock = std::chrono::steady_clock;
  nlohmann::json timings;

  auto t0 = clock::now();
  stage_prep(cfg);
  timings["prep"] = seconds_since(t0);

  t0 = clock::now();
  stage_encrypt(cfg);
  timings["encrypt"] = seconds_since(t0);

  for (Arm arm : {Arm::kPlain, Arm::kEncrypted}) {
    t0 = clock::now();
    stage_embed(cfg, arm);
    timings["embed-" + to_string(arm)] = seconds_since(t0);
    t0 = clock::now();
    stage_train(cfg, arm);
    timings["train-" + to_string(arm)] = seconds_since(t0);
    t0 = clock::now();
    stage_evaluate(cfg, arm);
    timings["evaluate-" + to_string(arm)] = seconds_since(t0);
  }

  const fs::path plain_dir = arm_dir(cfg, Arm::kPlain);
  const fs::path enc_dir = arm_dir(cfg, Arm::kEncrypted);

  // equivariance checks
  bool vocab_size_equal = true;
  bool doc_vectors_equal = true;
  for (const char* name : {"vectors_train.tsv", "vectors_test.tsv"}) {
    FileMeta meta_p, meta_e;
    auto vec_p = read_vec_file(plain_dir / name, &meta_p);
    auto vec_e = read_vec_file(enc_dir / name, &meta_e);
    vocab_size_equal = vocab_size_equal &&
                       meta_or_fail(meta_p, "vocab-size", plain_dir / name) ==
                           meta_or_fail(meta_e, "vocab-size", enc_dir / name);
    if (vec_p.size() != vec_e.size()) {
      doc_vectors_equal = false;
      continue;
    }
    for (size_t i = 0; i < vec_p.size(); ++i) {
      if (vec_p[i].doc_id != vec_e[i].doc_id ||
          vec_p[i].label_id != vec_e[i].label_id ||
          vec_p[i].values != vec_e[i].values) {
        doc_vectors_equal = false;
        break;
      }
    }
  }

  bool predictions_equal = true;
  bool exact_equal_metrics = true;
  nlohmann::json arm_plain, arm_encrypted, deltas;
  for (Classifier c : selected_classifiers(cfg)) {
    const std::string name = to_string(c);
    predictions_equal =
        predictions_equal && read_predictions(plain_dir / (name + "_predictions.tsv")) ==
                                 read_predictions(enc_dir / (name + "_predictions.tsv"));

    auto load_report = [](const fs::path& p) {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw std::runtime_error("missing report: " + p.string());
      nlohmann::json j;
      in >> j;
      return j;
    };
    nlohmann::json rp = load_report(plain_dir / (name + "_report.json"));
    nlohmann::json re = load_report(enc_dir / (name + "_report.json"));
    DeltaReport delta = compare_reports(report_from_json(rp), report_from_json(re));
    exact_equal_metrics = exact_equal_metrics && delta.exact_equal;
    arm_plain[name] = rp;
    arm_encrypted[name] = re;
    deltas[name] = delta_to_json(delta);
  }

  ComparisonOutcome outcome;
  outcome.exact_equal_metrics = exact_equal_metrics;
  const bool equal_everywhere =
      vocab_size_equal && doc_vectors_equal && predictions_equal && exact_equal_metrics;
  outcome.ok = !cfg.deterministic || cfg.allow_drift || equal_everywhere;

  nlohmann::json input_hashes = nlohmann::json::array();
  for (const auto& dir : {plain_dir, enc_dir}) {
    for (const char* name :
         {"tokens_train.tsv", "tokens_test.tsv", "vectors_train.tsv", "vectors_test.tsv"}) {
      nlohmann::json entry = file_hash_entry(dir / name);
      entry["arm"] = dir.filename().string();
      input_hashes.push_back(entry);
    }
  }

  outcome.report = {{"config", {{"text", cfg.canonical_text()},
                                {"hash", cfg.config_hash()},
                                {"seed", cfg.seed}}},
                    {"input_hashes", input_hashes},
                    {"arm_plain", arm_plain},
                    {"arm_encrypted", arm_encrypted},
                    {"deltas", deltas},
                    {"equivariance",
                     {{"vocab_size_equal", vocab_size_equal},
                      {"doc_vectors_equal", doc_vectors_equal},
                      {"predictions_equal", predictions_equal},
                      {"exact_equal_metrics", exact_equal_metrics}}},
                    {"timings", timings}};

  std::ofstream rj(cfg.output_dir / "comparison_report.json", std::ios::binary);
  rj << outcome.report.dump(2) << '\n';

  // side-by-side summary table
  std::ostringstream table;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-12s %12s %12s %12s %12s %12s\n", "classifier",
                "acc(plain)", "acc(enc)", "macroF1(p)", "macroF1(e)", "max|delta|");
  table << buf;
  for (Classifier c : selected_classifiers(cfg)) {
    const std::string name = to_string(c);
    const auto& rp = arm_plain[name];
    const auto& re = arm_encrypted[name];
    std::snprintf(buf, sizeof(buf), "%-12s %12.4f %12.4f %12.4f %12.4f %12g\n",
                  name.c_str(), rp["accuracy"].get<double>(), re["accuracy"].get<double>(),
                  rp["macro_avg"]["f1"].get<double>(), re["macro_avg"]["f1"].get<double>(),
                  deltas[name]["max_abs_delta"].get<double>());
    table << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "equivariance: vocab=%s vectors=%s predictions=%s metrics=%s\n",
                vocab_size_equal ? "equal" : "DIFFER",
                doc_vectors_equal ? "equal" : "DIFFER",
                predictions_equal ? "equal" : "DIFFER",
                exact_equal_metrics ? "equal" : "DIFFER");
  table << buf;
  outcome.table = table.str();
  return outcome;
}

}  // namespace cryptext
