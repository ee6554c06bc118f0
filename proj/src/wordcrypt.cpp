#include "cryptext/wordcrypt.hpp"

#include <openssl/evp.h>

#include <memory>
#include <unordered_map>

#include "cryptext/hashing.hpp"

namespace cryptext {

namespace {

constexpr size_t kBlock = 16;

using CipherCtxPtr = std::unique_ptr<EVP_CIPHER_CTX, decltype(&EVP_CIPHER_CTX_free)>;

std::vector<uint8_t> cbc_run(std::span<const uint8_t, 32> key,
                             std::span<const uint8_t, 16> iv,
                             std::span<const uint8_t> input, bool encrypt) {
  if (input.size() % kBlock != 0) {
    throw IntegrityError("CBC input not block aligned");
  }
  CipherCtxPtr ctx(EVP_CIPHER_CTX_new(), EVP_CIPHER_CTX_free);
  if (!ctx) throw std::runtime_error("EVP_CIPHER_CTX_new failed");
  if (EVP_CipherInit_ex(ctx.get(), EVP_aes_256_cbc(), nullptr, key.data(),
                        iv.data(), encrypt ? 1 : 0) != 1) {
    throw std::runtime_error("AES-256-CBC init failed");
  }
  // Padding is handled by pkcs7_pad/pkcs7_unpad so both directions of the
  // cipher core stay exactly inverse of each other.
  EVP_CIPHER_CTX_set_padding(ctx.get(), 0);

  std::vector<uint8_t> out(input.size() + kBlock);
  int len1 = 0, len2 = 0;
  if (EVP_CipherUpdate(ctx.get(), out.data(), &len1, input.data(),
                       static_cast<int>(input.size())) != 1 ||
      EVP_CipherFinal_ex(ctx.get(), out.data() + len1, &len2) != 1) {
    throw IntegrityError("AES-256-CBC operation failed");
  }
  out.resize(static_cast<size_t>(len1) + static_cast<size_t>(len2));
  return out;
}

bool is_valid_utf8(std::span<const uint8_t> bytes) {
  size_t i = 0;
  while (i < bytes.size()) {
    uint8_t b = bytes[i];
    size_t need;
    uint32_t cp;
    if (b < 0x80) {
      ++i;
      continue;
    } else if ((b & 0xe0) == 0xc0) {
      need = 1;
      cp = b & 0x1f;
    } else if ((b & 0xf0) == 0xe0) {
      need = 2;
      cp = b & 0x0f;
    } else if ((b & 0xf8) == 0xf0) {
      need = 3;
      cp = b & 0x07;
    } else {
      return false;
    }
    if (i + need >= bytes.size()) return false;
    for (size_t k = 1; k <= need; ++k) {
      uint8_t c = bytes[i + k];
      if ((c & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (c & 0x3f);
    }
    // overlong / surrogate / out of range
    if ((need == 1 && cp < 0x80) || (need == 2 && cp < 0x800) ||
        (need == 3 && cp < 0x10000) || cp > 0x10ffff ||
        (cp >= 0xd800 && cp <= 0xdfff)) {
      return false;
    }
    i += need + 1;
  }
  return true;
}

}  // namespace

CipherContext derive_context(std::string_view passphrase) {
  if (passphrase.empty()) {
    throw std::invalid_argument("passphrase must be non-empty");
  }
  CipherContext ctx;
  ctx.key = sha256(passphrase);

  std::vector<uint8_t> iv_input(ctx.key.begin(), ctx.key.end());
  static constexpr std::string_view kIvLabel = "cryptext-iv-v1";
  iv_input.insert(iv_input.end(), kIvLabel.begin(), kIvLabel.end());
  auto iv_digest = sha256(std::span<const uint8_t>(iv_input));
  std::copy_n(iv_digest.begin(), ctx.iv.size(), ctx.iv.begin());
  return ctx;
}

std::vector<uint8_t> aes256_cbc_encrypt(std::span<const uint8_t, 32> key,
                                        std::span<const uint8_t, 16> iv,
                                        std::span<const uint8_t> plaintext) {
  return cbc_run(key, iv, plaintext, true);
}

std::vector<uint8_t> aes256_cbc_decrypt(std::span<const uint8_t, 32> key,
                                        std::span<const uint8_t, 16> iv,
                                        std::span<const uint8_t> ciphertext) {
  return cbc_run(key, iv, ciphertext, false);
}

std::vector<uint8_t> pkcs7_pad(std::span<const uint8_t> data) {
  const size_t pad = kBlock - data.size() % kBlock;  // always 1..16
  std::vector<uint8_t> out(data.begin(), data.end());
  out.insert(out.end(), pad, static_cast<uint8_t>(pad));
  return out;
}

std::vector<uint8_t> pkcs7_unpad(std::span<const uint8_t> data) {
  if (data.empty() || data.size() % kBlock != 0) {
    throw IntegrityError("PKCS7: input empty or not block aligned");
  }
  const uint8_t pad = data.back();
  if (pad < 1 || pad > kBlock) {
    throw IntegrityError("PKCS7: pad length out of range");
  }
  for (size_t i = data.size() - pad; i < data.size(); ++i) {
    if (data[i] != pad) {
      throw IntegrityError("PKCS7: inconsistent padding bytes");
    }
  }
  return std::vector<uint8_t>(data.begin(), data.end() - pad);
}

std::string encrypt_token(const CipherContext& ctx, std::string_view token) {
  if (token.empty()) {
    throw std::invalid_argument("cannot encrypt an empty token");
  }
  for (char c : token) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      throw std::invalid_argument("token contains whitespace");
    }
  }
  auto padded = pkcs7_pad(std::span<const uint8_t>(
      reinterpret_cast<const uint8_t*>(token.data()), token.size()));
  auto ct = aes256_cbc_encrypt(ctx.key, ctx.iv, padded);
  return to_hex(ct);
}

std::string decrypt_token(const CipherContext& ctx, std::string_view ciphertoken) {
  std::vector<uint8_t> ct;
  try {
    ct = from_hex(ciphertoken);
  } catch (const std::invalid_argument& e) {
    throw IntegrityError(std::string("ciphertoken is not valid hex: ") + e.what());
  }
  if (ct.empty() || ct.size() % kBlock != 0) {
    throw IntegrityError("ciphertoken is not a positive multiple of the block size");
  }
  auto padded = aes256_cbc_decrypt(ctx.key, ctx.iv, ct);
  auto bytes = pkcs7_unpad(padded);
  if (!is_valid_utf8(bytes)) {
    throw IntegrityError("decrypted token is not valid UTF-8 (wrong key?)");
  }
  return std::string(bytes.begin(), bytes.end());
}

std::vector<TokenizedDoc> encrypt_corpus(const CipherContext& ctx,
                                         const std::vector<TokenizedDoc>& docs) {
  std::unordered_map<std::string, std::string> cache;
  std::vector<TokenizedDoc> out;
  out.reserve(docs.size());
  for (const auto& doc : docs) {
    TokenizedDoc enc;
    enc.doc_id = doc.doc_id;
    enc.label_id = doc.label_id;
    enc.tokens.reserve(doc.tokens.size());
    for (const auto& tok : doc.tokens) {
      auto it = cache.find(tok);
      if (it == cache.end()) {
        it = cache.emplace(tok, encrypt_token(ctx, tok)).first;
      }
      enc.tokens.push_back(it->second);
    }
    out.push_back(std::move(enc));
  }
  return out;
}

}  // namespace cryptext
