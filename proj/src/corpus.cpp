#include "cryptext/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace cryptext {

namespace fs = std::filesystem;

namespace {

fs::path find_split_dir(const fs::path& root, const std::string& split) {
  fs::path direct = root / split;
  if (fs::is_directory(direct)) return direct;
  fs::path bydate = root / ("20news-bydate-" + split);
  if (fs::is_directory(bydate)) return bydate;
  throw CorpusError("missing split directory '" + split + "' under " + root.string() +
                    " (expected '" + split + "' or '20news-bydate-" + split + "')");
}

std::string read_file_lenient(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError("cannot read document file: " + path.string());
  }
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  return sanitize_utf8(bytes);
}

std::vector<std::string> sorted_subdirs(const fs::path& dir) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_directory()) {
      names.push_back(entry.path().filename().string());
    }
  }
  std::sort(names.begin(), names.end());
  return names;
}

void load_split(const fs::path& split_dir, const std::string& split_name,
                const std::vector<std::string>& label_names,
                std::vector<RawDocument>& out) {
  for (size_t label = 0; label < label_names.size(); ++label) {
    fs::path cat_dir = split_dir / label_names[label];
    if (!fs::is_directory(cat_dir)) continue;  // category may be empty in one split
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(cat_dir)) {
      if (entry.is_regular_file()) {
        files.push_back(entry.path().filename().string());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& fname : files) {
      RawDocument doc;
      doc.doc_id = split_name + "/" + label_names[label] + "/" + fname;
      doc.label_id = static_cast<int>(label);
      doc.label_name = label_names[label];
      doc.text = read_file_lenient(cat_dir / fname);
      out.push_back(std::move(doc));
    }
  }
}

}  // namespace

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xef\xbf\xbd";  // U+FFFD
  std::string out;
  out.reserve(bytes.size());
  size_t i = 0;
  while (i < bytes.size()) {
    uint8_t b = static_cast<uint8_t>(bytes[i]);
    if (b < 0x80) {
      out.push_back(static_cast<char>(b));
      ++i;
      continue;
    }
    size_t need;
    uint32_t cp;
    if ((b & 0xe0) == 0xc0) {
      need = 1;
      cp = b & 0x1f;
    } else if ((b & 0xf0) == 0xe0) {
      need = 2;
      cp = b & 0x0f;
    } else if ((b & 0xf8) == 0xf0) {
      need = 3;
      cp = b & 0x07;
    } else {
      out.append(kReplacement);
      ++i;
      continue;
    }
    if (i + need >= bytes.size()) {
      out.append(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    uint32_t decoded = cp;
    for (size_t k = 1; k <= need; ++k) {
      uint8_t c = static_cast<uint8_t>(bytes[i + k]);
      if ((c & 0xc0) != 0x80) {
        ok = false;
        break;
      }
      decoded = (decoded << 6) | (c & 0x3f);
    }
    if (ok) {
      if ((need == 1 && decoded < 0x80) || (need == 2 && decoded < 0x800) ||
          (need == 3 && decoded < 0x10000) || decoded > 0x10ffff ||
          (decoded >= 0xd800 && decoded <= 0xdfff)) {
        ok = false;  // overlong, surrogate or out of range
      }
    }
    if (ok) {
      out.append(bytes.substr(i, need + 1));
      i += need + 1;
    } else {
      out.append(kReplacement);
      ++i;  // resync on the next byte
    }
  }
  return out;
}

CorpusSplit load_corpus(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw CorpusError("corpus root is not a directory: " + root.string());
  }
  fs::path train_dir = find_split_dir(root, "train");
  fs::path test_dir = find_split_dir(root, "test");

  std::set<std::string> names;
  for (const auto& n : sorted_subdirs(train_dir)) names.insert(n);
  for (const auto& n : sorted_subdirs(test_dir)) names.insert(n);

  CorpusSplit corpus;
  corpus.label_names.assign(names.begin(), names.end());
  load_split(train_dir, "train", corpus.label_names, corpus.train);
  load_split(test_dir, "test", corpus.label_names, corpus.test);
  return corpus;
}

CorpusSplit subset(const CorpusSplit& corpus, const std::vector<std::string>& categories) {
  std::set<std::string> known(corpus.label_names.begin(), corpus.label_names.end());
  std::set<std::string> wanted;
  for (const auto& name : categories) {
    if (!known.contains(name)) {
      std::ostringstream msg;
      msg << "unknown category '" << name << "'; valid categories:";
      for (const auto& k : corpus.label_names) msg << " " << k;
      throw CorpusError(msg.str());
    }
    wanted.insert(name);
  }

  CorpusSplit out;
  out.label_names.assign(wanted.begin(), wanted.end());
  std::map<std::string, int> new_label;
  for (size_t i = 0; i < out.label_names.size(); ++i) {
    new_label[out.label_names[i]] = static_cast<int>(i);
  }
  auto filter = [&](const std::vector<RawDocument>& docs, std::vector<RawDocument>& dst) {
    for (const auto& doc : docs) {
      auto it = new_label.find(doc.label_name);
      if (it == new_label.end()) continue;
      RawDocument copy = doc;
      copy.label_id = it->second;
      dst.push_back(std::move(copy));
    }
  };
  filter(corpus.train, out.train);
  filter(corpus.test, out.test);
  return out;
}

std::vector<CategoryCount> category_counts(const CorpusSplit& corpus) {
  std::vector<CategoryCount> counts(corpus.label_names.size());
  for (size_t i = 0; i < corpus.label_names.size(); ++i) {
    counts[i].label_name = corpus.label_names[i];
  }
  for (const auto& doc : corpus.train) counts[doc.label_id].train_docs++;
  for (const auto& doc : corpus.test) counts[doc.label_id].test_docs++;
  return counts;
}

}  // namespace cryptext
