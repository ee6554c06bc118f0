#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace cryptext {

class CorpusError : public std::runtime_error {
 public:
  explicit CorpusError(const std::string& what) : std::runtime_error(what) {}
};

struct RawDocument {
  std::string doc_id;  // "<split>/<category>/<filename>"
  int label_id = 0;
  std::string label_name;
  std::string text;  // raw bytes, leniently decoded to UTF-8
};

struct CorpusSplit {
  std::vector<RawDocument> train;
  std::vector<RawDocument> test;
  std::vector<std::string> label_names;  // sorted, shared by both splits
};

// Loads a <split>/<category>/<file> tree. Split directories may be named
// "train"/"test" or "20news-bydate-train"/"20news-bydate-test" (the layout
// inside the standard bydate archive). Documents are ordered by path;
// undecodable bytes become U+FFFD.
CorpusSplit load_corpus(const std::filesystem::path& root);

// Keeps only the given categories, re-indexing labels densely (still
// sorted). Unknown names raise CorpusError listing the valid ones.
CorpusSplit subset(const CorpusSplit& corpus, const std::vector<std::string>& categories);

struct CategoryCount {
  std::string label_name;
  size_t train_docs = 0;
  size_t test_docs = 0;
};
std::vector<CategoryCount> category_counts(const CorpusSplit& corpus);

// Replaces ill-formed UTF-8 byte sequences with U+FFFD. Total function.
std::string sanitize_utf8(std::string_view bytes);

}  // namespace cryptext
