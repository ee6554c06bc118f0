#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace cryptext {

struct CorpusSplit;

// One preprocessed document. Tokens are lowercase, whitespace-free, contain
// no ASCII punctuation or digits, and none of them is a stopword. A document
// may legitimately end up with zero tokens.
struct TokenizedDoc {
  std::string doc_id;
  int label_id = 0;
  std::vector<std::string> tokens;
};

struct StopwordList {
  std::unordered_set<std::string> words;
  std::string source_checksum;  // SHA-256 of the list file
};

// Loads a one-word-per-line UTF-8 file; '#' starts a comment, blank lines
// are skipped. Entries must be lowercase single tokens.
StopwordList load_stopwords(const std::filesystem::path& path);

// Cleaning rules, applied in this order:
//   1. delete substrings matching https?://\S+ or www\.\S+
//   2. ASCII punctuation -> space
//   3. ASCII digit -> space
//   4. ASCII lowercase
//   5. collapse whitespace runs to single spaces, trim
// Non-ASCII bytes pass through untouched. Idempotent.
std::string clean_text(std::string_view raw);

// Splits cleaned text on spaces and drops stopwords. Order and duplicates
// are preserved.
std::vector<std::string> tokenize(std::string_view cleaned, const StopwordList& stopwords);

// clean_text + tokenize over both splits. Documents whose tokens all get
// removed stay in place with an empty token list so that the plaintext and
// encrypted arms remain aligned row by row.
std::pair<std::vector<TokenizedDoc>, std::vector<TokenizedDoc>> preprocess_corpus(
    const CorpusSplit& corpus, const StopwordList& stopwords);

}  // namespace cryptext
