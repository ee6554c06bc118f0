#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <fstream>

#include "cryptext/rng.hpp"
#include "cryptext/tokenfile.hpp"

using namespace cryptext;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() /
         ("cryptext_io_" + std::to_string(::getpid()) + "_" + name);
}

}  // namespace

TEST_CASE("token file round trip, including empty documents") {
  Rng rng(31);
  std::vector<TokenizedDoc> docs;
  for (int d = 0; d < 40; ++d) {
    TokenizedDoc doc;
    doc.doc_id = "split/cat/" + std::to_string(d);
    doc.label_id = static_cast<int>(rng.next_below(5));
    const size_t n = rng.next_below(6);  // sometimes zero tokens
    for (size_t t = 0; t < n; ++t) {
      doc.tokens.push_back("tok" + std::to_string(rng.next_below(30)));
    }
    docs.push_back(std::move(doc));
  }
  docs.push_back({"unicode/doc", 2, {"\xc3\xa9t\xc3\xa9", "\xd0\xbc\xd0\xb8\xd1\x80"}});

  const fs::path path = temp_file("tokens.tsv");
  const FileMeta meta = {{"stage", "test"}, {"config-hash", "deadbeef"}};
  write_token_file(path, docs, meta);

  FileMeta meta_in;
  auto loaded = read_token_file(path, &meta_in);
  CHECK(meta_in == meta);
  REQUIRE(loaded.size() == docs.size());
  for (size_t i = 0; i < docs.size(); ++i) {
    CHECK(loaded[i].doc_id == docs[i].doc_id);
    CHECK(loaded[i].label_id == docs[i].label_id);
    CHECK(loaded[i].tokens == docs[i].tokens);
  }
  fs::remove(path);
}

TEST_CASE("vector file round trips doubles bit-exactly") {
  Rng rng(37);
  std::vector<VecRecord> records;
  for (int i = 0; i < 25; ++i) {
    VecRecord rec;
    rec.doc_id = "doc" + std::to_string(i);
    rec.label_id = static_cast<int>(rng.next_below(3));
    for (int k = 0; k < 8; ++k) {
      // adversarial values: tiny, huge, negative, denormal-ish
      const double v = std::ldexp(rng.next_double() - 0.5, static_cast<int>(rng.next_below(80)) - 40);
      rec.values.push_back(v);
    }
    records.push_back(std::move(rec));
  }

  const fs::path path = temp_file("vecs.tsv");
  write_vec_file(path, records, {{"stage", "embed"}});
  auto loaded = read_vec_file(path);
  REQUIRE(loaded.size() == records.size());
  for (size_t i = 0; i < records.size(); ++i) {
    CHECK(loaded[i].doc_id == records[i].doc_id);
    CHECK(loaded[i].label_id == records[i].label_id);
    REQUIRE(loaded[i].values.size() == records[i].values.size());
    for (size_t k = 0; k < records[i].values.size(); ++k) {
      CHECK(loaded[i].values[k] == records[i].values[k]);  // bitwise
    }
  }
  fs::remove(path);
}

TEST_CASE("vector file header is validated") {
  const fs::path path = temp_file("bad.tsv");
  {
    std::ofstream out(path);
    out << "3 4\n";
    out << "doc0 0 1 2 3 4\n";  // only one row, header says 3
  }
  CHECK_THROWS_AS(read_vec_file(path), FormatError);
  {
    std::ofstream out(path);
    out << "1 2\n";
    out << "doc0 0 1 2 3\n";  // wrong dimension
  }
  CHECK_THROWS_AS(read_vec_file(path), FormatError);
  fs::remove(path);
}

TEST_CASE("token file rejects malformed rows and ids") {
  const fs::path path = temp_file("badtok.tsv");
  {
    std::ofstream out(path);
    out << "only-one-field\n";
  }
  CHECK_THROWS_AS(read_token_file(path), FormatError);
  {
    std::ofstream out(path);
    out << "doc\tnotanumber\ta b\n";
  }
  CHECK_THROWS_AS(read_token_file(path), FormatError);

  std::vector<TokenizedDoc> docs{{"has\ttab", 0, {}}};
  CHECK_THROWS_AS(write_token_file(path, docs, {}), FormatError);
  fs::remove(path);
}

TEST_CASE("format_double round trips through parsing") {
  Rng rng(41);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(rng.next_double() - 0.5, static_cast<int>(rng.next_below(120)) - 60);
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}
