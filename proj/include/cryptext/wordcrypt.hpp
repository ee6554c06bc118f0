#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cryptext/textprep.hpp"

namespace cryptext {

// Raised when ciphertext fails to decrypt cleanly: bad hex, bad block
// alignment, bad PKCS7 padding or invalid UTF-8 after unpadding. All of
// these signal a wrong key or corrupted data.
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& what) : std::runtime_error(what) {}
};

// Key material for the deterministic word-encryption bijection. The IV is
// a pure function of the key, so equal plaintext tokens always produce
// equal ciphertokens under one context. This is deterministic encryption:
// strictly weaker than semantic security (token frequencies leak), which
// is the accepted trade-off that lets models train on the ciphertext.
struct CipherContext {
  std::array<uint8_t, 32> key{};
  std::array<uint8_t, 16> iv{};
  std::string passphrase_hint;
};

// key = SHA-256(passphrase); iv = first 16 bytes of SHA-256(key || "cryptext-iv-v1").
CipherContext derive_context(std::string_view passphrase);

// Raw AES-256-CBC on block-aligned input, no padding. Exposed so the
// known-answer tests can hit the cipher core directly.
std::vector<uint8_t> aes256_cbc_encrypt(std::span<const uint8_t, 32> key,
                                        std::span<const uint8_t, 16> iv,
                                        std::span<const uint8_t> plaintext);
std::vector<uint8_t> aes256_cbc_decrypt(std::span<const uint8_t, 32> key,
                                        std::span<const uint8_t, 16> iv,
                                        std::span<const uint8_t> ciphertext);

// PKCS7: always appends 1..16 bytes holding the pad length.
std::vector<uint8_t> pkcs7_pad(std::span<const uint8_t> data);
std::vector<uint8_t> pkcs7_unpad(std::span<const uint8_t> data);  // IntegrityError on bad pad

// token (UTF-8, non-empty, no whitespace) -> lowercase hex ciphertoken.
std::string encrypt_token(const CipherContext& ctx, std::string_view token);
// Inverse of encrypt_token. IntegrityError on malformed or mismatched input.
std::string decrypt_token(const CipherContext& ctx, std::string_view ciphertoken);

// Replaces every token by its ciphertoken; ids, labels, order and counts
// are untouched. Repeated tokens are looked up once.
std::vector<TokenizedDoc> encrypt_corpus(const CipherContext& ctx,
                                         const std::vector<TokenizedDoc>& docs);

}  // namespace cryptext
