#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace cryptext {

inline constexpr const char* kDefaultCorpusUrl =
    "http://qwone.com/~jason/20Newsgroups/20news-bydate.tar.gz";

// Extracts a gzip-compressed ustar archive under dest_dir. Rejects absolute
// paths and ".." components.
void extract_tar_gz(const std::filesystem::path& archive,
                    const std::filesystem::path& dest_dir);

// Plain-HTTP download to a file.
void download(const std::string& url, const std::filesystem::path& dest_file);

// Download (or reuse a local archive) and unpack into dest_dir, which then
// holds the 20news-bydate-train / 20news-bydate-test directories.
void fetch_corpus(const std::optional<std::string>& url,
                  const std::optional<std::filesystem::path>& archive,
                  const std::filesystem::path& dest_dir);

}  // namespace cryptext
