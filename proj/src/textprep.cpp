#include "cryptext/textprep.hpp"

#include <fstream>
#include <stdexcept>

#include "cryptext/corpus.hpp"
#include "cryptext/hashing.hpp"

namespace cryptext {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }

bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') ||
         (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

// Length of the URL starting at position i, or 0. Matches the literal
// prefixes of https?://\S+ and www\.\S+ and runs to the next whitespace.
// Case-sensitive, like the patterns.
size_t url_span(std::string_view s, size_t i) {
  size_t head = 0;
  if (s.compare(i, 7, "http://") == 0) {
    head = 7;
  } else if (s.compare(i, 8, "https://") == 0) {
    head = 8;
  } else if (s.compare(i, 4, "www.") == 0) {
    head = 4;
  } else {
    return 0;
  }
  // \S+ after the prefix: the last prefix char is itself non-space, but the
  // patterns require at least one more non-space character.
  size_t j = i + head;
  if (j >= s.size() || is_space(s[j])) return 0;
  while (j < s.size() && !is_space(s[j])) ++j;
  return j - i;
}

}  // namespace

std::string clean_text(std::string_view raw) {
  // URL removal, punctuation/digit -> space, lowercasing in one pass.
  std::string mid;
  mid.reserve(raw.size());
  size_t i = 0;
  while (i < raw.size()) {
    if (size_t span = url_span(raw, i); span > 0) {
      i += span;
      continue;
    }
    char c = raw[i++];
    if (is_ascii_punct(c) || is_ascii_digit(c)) {
      mid.push_back(' ');
    } else if (c >= 'A' && c <= 'Z') {
      mid.push_back(static_cast<char>(c - 'A' + 'a'));
    } else {
      mid.push_back(c);
    }
  }
  // Collapse whitespace runs and trim.
  std::string out;
  out.reserve(mid.size());
  bool pending_space = false;
  for (char c : mid) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view cleaned, const StopwordList& stopwords) {
  std::vector<std::string> tokens;
  size_t start = 0;
  while (start < cleaned.size()) {
    size_t end = cleaned.find(' ', start);
    if (end == std::string_view::npos) end = cleaned.size();
    if (end > start) {
      std::string tok(cleaned.substr(start, end - start));
      if (!stopwords.words.contains(tok)) {
        tokens.push_back(std::move(tok));
      }
    }
    start = end + 1;
  }
  return tokens;
}

StopwordList load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open stopword file: " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  StopwordList list;
  list.source_checksum = sha256_hex(content);

  size_t pos = 0;
  int lineno = 0;
  while (pos <= content.size()) {
    size_t eol = content.find('\n', pos);
    if (eol == std::string::npos) eol = content.size();
    std::string line = content.substr(pos, eol - pos);
    pos = eol + 1;
    ++lineno;
    if (size_t hash = line.find('#'); hash != std::string::npos) {
      line.resize(hash);
    }
    while (!line.empty() && is_space(line.back())) line.pop_back();
    size_t first = 0;
    while (first < line.size() && is_space(line[first])) ++first;
    line.erase(0, first);
    if (line.empty()) continue;
    for (char c : line) {
      if (is_space(c) || (c >= 'A' && c <= 'Z')) {
        throw std::runtime_error("stopword file " + path.string() + " line " +
                                 std::to_string(lineno) +
                                 ": entries must be lowercase single tokens");
      }
    }
    list.words.insert(std::move(line));
    if (pos > content.size()) break;
  }
  if (list.words.empty()) {
    throw std::runtime_error("stopword list is empty: " + path.string());
  }
  return list;
}

std::pair<std::vector<TokenizedDoc>, std::vector<TokenizedDoc>> preprocess_corpus(
    const CorpusSplit& corpus, const StopwordList& stopwords) {
  auto run = [&](const std::vector<RawDocument>& docs) {
    std::vector<TokenizedDoc> out;
    out.reserve(docs.size());
    for (const auto& doc : docs) {
      TokenizedDoc td;
      td.doc_id = doc.doc_id;
      td.label_id = doc.label_id;
      td.tokens = tokenize(clean_text(doc.text), stopwords);
      out.push_back(std::move(td));
    }
    return out;
  };
  return {run(corpus.train), run(corpus.test)};
}

}  // namespace cryptext
