#include "cryptext/tokenfile.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>

namespace cryptext {

namespace {

void write_meta(std::ofstream& out, const FileMeta& meta) {
  for (const auto& [key, value] : meta) {
    if (key.find('\n') != std::string::npos || value.find('\n') != std::string::npos) {
      throw FormatError("meta entries must be single-line: " + key);
    }
    out << "# " << key << ": " << value << "\n";
  }
}

// Reads meta lines, leaving the stream at the first content line.
FileMeta read_meta(std::ifstream& in) {
  FileMeta meta;
  while (in.peek() == '#') {
    std::string line;
    std::getline(in, line);
    size_t colon = line.find(": ", 2);
    if (colon != std::string::npos) {
      meta[line.substr(2, colon - 2)] = line.substr(colon + 2);
    }
  }
  return meta;
}

int parse_int(std::string_view s, const std::string& what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad " + what + ": '" + std::string(s) + "'");
  }
  return value;
}

double parse_double(std::string_view s, const std::string& what) {
  double value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw FormatError("bad " + what + ": '" + std::string(s) + "'");
  }
  return value;
}

}  // namespace

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_token_file(const std::filesystem::path& path,
                      const std::vector<TokenizedDoc>& docs, const FileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write token file: " + path.string());
  write_meta(out, meta);
  for (const auto& doc : docs) {
    if (doc.doc_id.find_first_of("\t\n") != std::string::npos) {
      throw FormatError("doc_id contains tab or newline: " + doc.doc_id);
    }
    out << doc.doc_id << '\t' << doc.label_id << '\t';
    for (size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i > 0) out << ' ';
      out << doc.tokens[i];
    }
    out << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<TokenizedDoc> read_token_file(const std::filesystem::path& path,
                                          FileMeta* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open token file: " + path.string());
  FileMeta meta = read_meta(in);
  if (meta_out) *meta_out = std::move(meta);

  std::vector<TokenizedDoc> docs;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t tab1 = line.find('\t');
    size_t tab2 = tab1 == std::string::npos ? std::string::npos : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected doc_id<TAB>label<TAB>tokens");
    }
    TokenizedDoc doc;
    doc.doc_id = line.substr(0, tab1);
    doc.label_id = parse_int(std::string_view(line).substr(tab1 + 1, tab2 - tab1 - 1),
                             "label_id at line " + std::to_string(lineno));
    std::string_view rest = std::string_view(line).substr(tab2 + 1);
    size_t start = 0;
    while (start < rest.size()) {
      size_t end = rest.find(' ', start);
      if (end == std::string_view::npos) end = rest.size();
      if (end > start) doc.tokens.emplace_back(rest.substr(start, end - start));
      start = end + 1;
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

void write_vec_file(const std::filesystem::path& path,
                    const std::vector<VecRecord>& records, const FileMeta& meta) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vector file: " + path.string());
  write_meta(out, meta);
  const size_t dim = records.empty() ? 0 : records[0].values.size();
  out << records.size() << ' ' << dim << '\n';
  for (const auto& rec : records) {
    if (rec.values.size() != dim) {
      throw FormatError("inconsistent vector dimension for " + rec.doc_id);
    }
    out << rec.doc_id << ' ' << rec.label_id;
    for (double v : rec.values) out << ' ' << format_double(v);
    out << '\n';
  }
  if (!out) throw FormatError("write failed: " + path.string());
}

std::vector<VecRecord> read_vec_file(const std::filesystem::path& path,
                                     FileMeta* meta_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open vector file: " + path.string());
  FileMeta meta = read_meta(in);
  if (meta_out) *meta_out = std::move(meta);

  std::string line;
  if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
  size_t space = line.find(' ');
  if (space == std::string::npos) throw FormatError(path.string() + ": bad header: " + line);
  const int n = parse_int(std::string_view(line).substr(0, space), "row count");
  const int dim = parse_int(std::string_view(line).substr(space + 1), "dimension");
  if (n < 0 || dim < 0) throw FormatError(path.string() + ": negative header values");

  std::vector<VecRecord> records;
  records.reserve(n);
  size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    VecRecord rec;
    size_t start = 0;
    int field = 0;
    while (start <= line.size()) {
      size_t end = line.find(' ', start);
      if (end == std::string::npos) end = line.size();
      std::string_view tok = std::string_view(line).substr(start, end - start);
      if (!tok.empty()) {
        if (field == 0) {
          rec.doc_id = std::string(tok);
        } else if (field == 1) {
          rec.label_id = parse_int(tok, "label at line " + std::to_string(lineno));
        } else {
          rec.values.push_back(parse_double(tok, "value at line " + std::to_string(lineno)));
        }
        ++field;
      }
      if (end == line.size()) break;
      start = end + 1;
    }
    if (static_cast<int>(rec.values.size()) != dim) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected " + std::to_string(dim) + " values, got " +
                        std::to_string(rec.values.size()));
    }
    records.push_back(std::move(rec));
  }
  if (static_cast<int>(records.size()) != n) {
    throw FormatError(path.string() + ": header declares " + std::to_string(n) +
                      " rows, found " + std::to_string(records.size()));
  }
  return records;
}

}  // namespace cryptext
