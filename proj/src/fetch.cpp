#include "cryptext/fetch.hpp"

#include <zlib.h>

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <httplib.h>

namespace cryptext {

namespace fs = std::filesystem;

namespace {

constexpr size_t kTarBlock = 512;

struct GzReader {
  gzFile file = nullptr;

  explicit GzReader(const fs::path& path) {
    file = gzopen(path.string().c_str(), "rb");
    if (!file) throw std::runtime_error("cannot open archive: " + path.string());
  }
  ~GzReader() {
    if (file) gzclose(file);
  }
  GzReader(const GzReader&) = delete;
  GzReader& operator=(const GzReader&) = delete;

  // Reads exactly n bytes; returns false on clean EOF at a block boundary.
  bool read_block(char* buf, size_t n) {
    int got = gzread(file, buf, static_cast<unsigned>(n));
    if (got == 0) return false;
    if (got < 0 || static_cast<size_t>(got) != n) {
      int errnum = 0;
      const char* msg = gzerror(file, &errnum);
      throw std::runtime_error(std::string("archive read error: ") +
                               (msg ? msg : "truncated"));
    }
    return true;
  }
};

uint64_t parse_octal(const char* field, size_t len) {
  uint64_t value = 0;
  for (size_t i = 0; i < len && field[i]; ++i) {
    const char c = field[i];
    if (c == ' ') continue;
    if (c < '0' || c > '7') break;
    value = value * 8 + static_cast<uint64_t>(c - '0');
  }
  return value;
}

bool is_zero_block(const char* block) {
  for (size_t i = 0; i < kTarBlock; ++i) {
    if (block[i] != 0) return false;
  }
  return true;
}

void check_safe_path(const std::string& name) {
  if (name.empty() || name[0] == '/') {
    throw std::runtime_error("archive entry has an absolute path: " + name);
  }
  size_t pos = 0;
  while (pos <= name.size()) {
    size_t slash = name.find('/', pos);
    if (slash == std::string::npos) slash = name.size();
    if (name.substr(pos, slash - pos) == "..") {
      throw std::runtime_error("archive entry escapes the target directory: " + name);
    }
    if (slash == name.size()) break;
    pos = slash + 1;
  }
}

}  // namespace

void extract_tar_gz(const fs::path& archive, const fs::path& dest_dir) {
  GzReader reader(archive);
  fs::create_directories(dest_dir);

  std::array<char, kTarBlock> block{};
  std::string pending_longname;
  while (reader.read_block(block.data(), kTarBlock)) {
    if (is_zero_block(block.data())) continue;  // end-of-archive padding

    char name_field[101] = {};
    std::memcpy(name_field, block.data(), 100);
    char prefix_field[156] = {};
    std::memcpy(prefix_field, block.data() + 345, 155);
    const uint64_t size = parse_octal(block.data() + 124, 12);
    const char typeflag = block[156];

    std::string name;
    if (!pending_longname.empty()) {
      name = std::move(pending_longname);
      pending_longname.clear();
    } else if (prefix_field[0]) {
      name = std::string(prefix_field) + "/" + name_field;
    } else {
      name = name_field;
    }

    const uint64_t padded = (size + kTarBlock - 1) / kTarBlock * kTarBlock;
    if (typeflag == 'L') {
      // GNU long name: payload is the real name of the next entry
      std::string longname;
      for (uint64_t off = 0; off < padded; off += kTarBlock) {
        if (!reader.read_block(block.data(), kTarBlock)) {
          throw std::runtime_error("archive truncated in long-name entry");
        }
        const size_t want = static_cast<size_t>(std::min<uint64_t>(kTarBlock, size - off));
        longname.append(block.data(), want);
      }
      while (!longname.empty() && longname.back() == '\0') longname.pop_back();
      pending_longname = std::move(longname);
      continue;
    }

    if (typeflag == '5') {
      check_safe_path(name);
      fs::create_directories(dest_dir / name);
      continue;
    }

    const bool regular = typeflag == '0' || typeflag == '\0';
    if (!regular) {
      // pax headers, links, devices: skip payload
      for (uint64_t off = 0; off < padded; off += kTarBlock) {
        if (!reader.read_block(block.data(), kTarBlock)) {
          throw std::runtime_error("archive truncated while skipping entry");
        }
      }
      continue;
    }

    check_safe_path(name);
    const fs::path target = dest_dir / name;
    fs::create_directories(target.parent_path());
    std::ofstream out(target, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write extracted file: " + target.string());
    uint64_t remaining = size;
    for (uint64_t off = 0; off < padded; off += kTarBlock) {
      if (!reader.read_block(block.data(), kTarBlock)) {
        throw std::runtime_error("archive truncated in file payload: " + name);
      }
      const size_t want = static_cast<size_t>(std::min<uint64_t>(kTarBlock, remaining));
      out.write(block.data(), static_cast<std::streamsize>(want));
      remaining -= want;
    }
  }
}

void download(const std::string& url, const fs::path& dest_file) {
  static constexpr std::string_view kScheme = "http://";
  if (url.rfind(kScheme.data(), 0) != 0) {
    throw std::runtime_error("only http:// downloads are supported, got: " + url);
  }
  const std::string rest = url.substr(kScheme.size());
  const size_t slash = rest.find('/');
  const std::string host = slash == std::string::npos ? rest : rest.substr(0, slash);
  const std::string path = slash == std::string::npos ? "/" : rest.substr(slash);

  httplib::Client client(host);
  client.set_follow_location(true);
  client.set_read_timeout(120, 0);

  std::ofstream out(dest_file, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write download target: " + dest_file.string());
  auto res = client.Get(path, [&](const char* data, size_t len) {
    out.write(data, static_cast<std::streamsize>(len));
    return static_cast<bool>(out);
  });
  if (!res || res->status != 200) {
    throw std::runtime_error("download failed (" +
                             (res ? std::to_string(res->status) : "no response") +
                             "): " + url);
  }
}

void fetch_corpus(const std::optional<std::string>& url,
                  const std::optional<fs::path>& archive, const fs::path& dest_dir) {
  fs::path tarball;
  if (archive) {
    tarball = *archive;
    if (!fs::exists(tarball)) {
      throw std::runtime_error("archive does not exist: " + tarball.string());
    }
  } else {
    fs::create_directories(dest_dir);
    tarball = dest_dir / "20news-bydate.tar.gz";
    download(url.value_or(kDefaultCorpusUrl), tarball);
  }
  extract_tar_gz(tarball, dest_dir);
}

}  // namespace cryptext
