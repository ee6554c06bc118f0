#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "cryptext/textprep.hpp"

namespace cryptext {

// Leading "# key: value" lines carried by every artifact file. Values are
// restricted to a single line; keys are written in sorted order so files
// are reproducible byte for byte.
using FileMeta = std::map<std::string, std::string>;

class FormatError : public std::runtime_error {
 public:
  explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

// Token file: one document per line, "doc_id<TAB>label_id<TAB>tok tok ...".
void write_token_file(const std::filesystem::path& path,
                      const std::vector<TokenizedDoc>& docs, const FileMeta& meta);
std::vector<TokenizedDoc> read_token_file(const std::filesystem::path& path,
                                          FileMeta* meta_out = nullptr);

// Doc-vector file: meta lines, then "N d", then "doc_id label_id v1 ... vd"
// per row. Values are printed with round-trip precision, so parsing them
// back yields bit-identical doubles.
struct VecRecord {
  std::string doc_id;
  int label_id = 0;
  std::vector<double> values;
};
void write_vec_file(const std::filesystem::path& path,
                    const std::vector<VecRecord>& records, const FileMeta& meta);
std::vector<VecRecord> read_vec_file(const std::filesystem::path& path,
                                     FileMeta* meta_out = nullptr);

// "%.17g" — shortest text that round-trips a double exactly is overkill;
// 17 significant digits always round-trip.
std::string format_double(double v);

}  // namespace cryptext
