#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <string>

#include "cryptext/hashing.hpp"
#include "cryptext/rng.hpp"
#include "cryptext/wordcrypt.hpp"

using namespace cryptext;

namespace {

// NIST SP 800-38A, F.2.5 (CBC-AES256.Encrypt)
const char* kNistKeyHex =
    "603deb1015ca71be2b73aef0857d77811f352c073b6108d72d9810a30914dff4";
const char* kNistIvHex = "000102030405060708090a0b0c0d0e0f";
const char* kNistPlainHex =
    "6bc1bee22e409f96e93d7e117393172a"
    "ae2d8a571e03ac9c9eb76fac45af8e51"
    "30c81c46a35ce411e5fbc1191a0a52ef"
    "f69f2445df4f9b17ad2b417be66c3710";
const char* kNistCipherHex =
    "f58c4c04d6e5f1ba779eabfb5f7bfbd6"
    "9cfc4e967edb808d679f777bc6702c7d"
    "39f23369a9d9bacfa530e26304231461"
    "b2eb05e2c39be9fcda6c19078c6a9d1b";

CipherContext nist_context() {
  CipherContext ctx;
  auto key = from_hex(kNistKeyHex);
  auto iv = from_hex(kNistIvHex);
  std::copy(key.begin(), key.end(), ctx.key.begin());
  std::copy(iv.begin(), iv.end(), ctx.iv.begin());
  return ctx;
}

// Deterministic pseudo-random Unicode token: mixes ASCII letters, Latin-1
// supplement, Cyrillic and an occasional 4-byte emoji.
std::string random_token(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "a", "z", "q",  "\xc3\xa9" /* e-acute */, "\xc3\xbc" /* u-umlaut */,
      "\xd0\xb6" /* zhe */, "\xd1\x8f" /* ya */, "\xe4\xb8\xad" /* CJK */,
      "\xf0\x9f\x99\x82" /* emoji */};
  const size_t len = 1 + rng.next_below(8);
  std::string tok;
  for (size_t i = 0; i < len; ++i) {
    tok += pieces[rng.next_below(pieces.size())];
  }
  return tok;
}

}  // namespace

TEST_CASE("SHA-256 known answer") {
  CHECK(sha256_hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("AES-256-CBC matches the NIST SP 800-38A vectors") {
  auto key = from_hex(kNistKeyHex);
  auto iv = from_hex(kNistIvHex);
  auto plain = from_hex(kNistPlainHex);
  auto expected = from_hex(kNistCipherHex);

  auto ct = aes256_cbc_encrypt(std::span<const uint8_t, 32>(key.data(), 32),
                               std::span<const uint8_t, 16>(iv.data(), 16), plain);
  CHECK(to_hex(ct) == kNistCipherHex);

  auto pt = aes256_cbc_decrypt(std::span<const uint8_t, 32>(key.data(), 32),
                               std::span<const uint8_t, 16>(iv.data(), 16), expected);
  CHECK(to_hex(pt) == kNistPlainHex);
}

TEST_CASE("encrypt_token fixtures under the NIST key/iv") {
  const CipherContext ctx = nist_context();
  // computed beforehand with an independent AES-CBC/PKCS7 implementation
  CHECK(encrypt_token(ctx, "apple") == "f8673d5d5c8777c20852c5b56696abdc");
  CHECK(encrypt_token(ctx, "newsgroups") == "39e61b0b7fe1d59d227d4e781e5e5855");
  CHECK(encrypt_token(ctx, "sixteen-byte-tok") ==
        "d9b242d262ff954c1f1d51cea96937b37f4e051b0bc0ace69ea825afb4a8f983");
}

TEST_CASE("derive_context is deterministic and passphrase-sensitive") {
  const CipherContext a1 = derive_context("k");
  const CipherContext a2 = derive_context("k");
  const CipherContext b = derive_context("k2");
  CHECK(a1.key == a2.key);
  CHECK(a1.iv == a2.iv);
  CHECK(a1.key != b.key);
  CHECK(a1.key.size() == 32);
  CHECK(a1.iv.size() == 16);

  // frozen reference values computed with a standalone SHA-256 tool
  CHECK(to_hex(a1.key) ==
        "8254c329a92850f6d539dd376f4816ee2764517da5e0235514af433164480d7a");
  CHECK(to_hex(a1.iv) == "ce746cbe410b8668d70ac42007230e91");
  CHECK(to_hex(b.key) ==
        "015f7e6bc5aeaf483724089e9252cc13b50951a6b69412522765cff4d780306e");

  const CipherContext c = derive_context("correct horse battery staple");
  CHECK(to_hex(c.key) ==
        "c4bbcb1fbec99d65bf59d85c8cb62ee2db963f0fe106f483d9afa73bd4e39a8a");
  CHECK(to_hex(c.iv) == "e76b05efcd84a3213963b3720d6eff68");
  CHECK(encrypt_token(c, "apple") == "8f2524170f89beb24e6d66277a61e368");

  CHECK_THROWS_AS(derive_context(""), std::invalid_argument);
}

TEST_CASE("ciphertoken length law for byte lengths 1..48") {
  const CipherContext ctx = derive_context("length-law");
  for (size_t len = 1; len <= 48; ++len) {
    const std::string token(len, 'x');
    const std::string ct = encrypt_token(ctx, token);
    CHECK(ct.size() == 32 * (len / 16 + 1));
  }
  // multi-byte tokens follow the same law over UTF-8 byte length
  const std::string two_byte = "\xc3\xa9";  // 2 bytes
  CHECK(encrypt_token(ctx, two_byte).size() == 32);
  std::string long_unicode;
  for (int i = 0; i < 9; ++i) long_unicode += "\xe4\xb8\xad";  // 27 bytes
  CHECK(encrypt_token(ctx, long_unicode).size() == 64);
}

TEST_CASE("PKCS7 pads 1..16 bytes and strips them exactly") {
  for (size_t len = 0; len <= 40; ++len) {
    std::vector<uint8_t> data(len, 0xab);
    auto padded = pkcs7_pad(data);
    CHECK(padded.size() % 16 == 0);
    CHECK(padded.size() - data.size() >= 1);
    CHECK(padded.size() - data.size() <= 16);
    CHECK(pkcs7_unpad(padded) == data);
  }
  CHECK_THROWS_AS(pkcs7_unpad(std::vector<uint8_t>{}), IntegrityError);
  std::vector<uint8_t> bad(16, 0x00);  // pad byte 0 is invalid
  CHECK_THROWS_AS(pkcs7_unpad(bad), IntegrityError);
  std::vector<uint8_t> inconsistent(16, 0x02);
  inconsistent[14] = 0x01;
  CHECK_THROWS_AS(pkcs7_unpad(inconsistent), IntegrityError);
}

TEST_CASE("round trip over 1000 random Unicode tokens") {
  const CipherContext ctx = derive_context("round-trip-suite");
  Rng rng(2024);
  for (int i = 0; i < 1000; ++i) {
    const std::string token = random_token(rng);
    const std::string ct = encrypt_token(ctx, token);
    for (char c : ct) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    CHECK(decrypt_token(ctx, ct) == token);
  }
}

TEST_CASE("determinism: equal tokens give equal ciphertokens") {
  const CipherContext ctx = derive_context("determinism");
  CHECK(encrypt_token(ctx, "word") == encrypt_token(ctx, "word"));
  CHECK(encrypt_token(ctx, "word") != encrypt_token(ctx, "word2"));
}

TEST_CASE("decrypting with the wrong context fails the integrity checks") {
  const CipherContext good = derive_context("the-right-key");
  const CipherContext wrong = derive_context("the-wrong-key");
  Rng rng(77);
  int failures = 0;
  const int trials = 1000;
  for (int i = 0; i < trials; ++i) {
    const std::string ct = encrypt_token(good, random_token(rng));
    try {
      (void)decrypt_token(wrong, ct);
    } catch (const IntegrityError&) {
      failures++;
    }
  }
  // bad padding alone catches ~255/256; the UTF-8 check catches nearly all
  // of the remainder
  CHECK(failures >= trials * 99 / 100);
}

TEST_CASE("decrypt_token rejects malformed input") {
  const CipherContext ctx = derive_context("malformed");
  CHECK_THROWS_AS(decrypt_token(ctx, "zz"), IntegrityError);        // bad hex
  CHECK_THROWS_AS(decrypt_token(ctx, "abc"), IntegrityError);       // odd length
  CHECK_THROWS_AS(decrypt_token(ctx, "ab"), IntegrityError);        // not block aligned
  CHECK_THROWS_AS(decrypt_token(ctx, ""), IntegrityError);          // empty
}

TEST_CASE("encrypt_token validates its input") {
  const CipherContext ctx = derive_context("validation");
  CHECK_THROWS_AS(encrypt_token(ctx, ""), std::invalid_argument);
  CHECK_THROWS_AS(encrypt_token(ctx, "two words"), std::invalid_argument);
  CHECK_THROWS_AS(encrypt_token(ctx, "tab\there"), std::invalid_argument);
}

TEST_CASE("encrypt_corpus preserves structure and multiplicities") {
  const CipherContext ctx = derive_context("corpus-pass");

  TokenizedDoc empty{"d0", 0, {}};
  TokenizedDoc repeat{"d1", 1, {"a", "b", "a"}};
  auto out = encrypt_corpus(ctx, {empty, repeat});
  REQUIRE(out.size() == 2);
  CHECK(out[0].tokens.empty());
  CHECK(out[0].doc_id == "d0");
  REQUIRE(out[1].tokens.size() == 3);
  CHECK(out[1].tokens[0] == out[1].tokens[2]);
  CHECK(out[1].tokens[0] != out[1].tokens[1]);
  CHECK(out[1].tokens[0] == encrypt_token(ctx, "a"));
  CHECK(out[1].label_id == 1);

  // vocabulary cardinality is preserved (injectivity)
  Rng rng(5);
  std::vector<TokenizedDoc> docs;
  for (int d = 0; d < 20; ++d) {
    TokenizedDoc doc{"doc" + std::to_string(d), 0, {}};
    for (int t = 0; t < 30; ++t) doc.tokens.push_back(random_token(rng));
    docs.push_back(std::move(doc));
  }
  auto encrypted = encrypt_corpus(ctx, docs);
  std::set<std::string> plain_vocab, cipher_vocab;
  for (const auto& d : docs) plain_vocab.insert(d.tokens.begin(), d.tokens.end());
  for (const auto& d : encrypted) cipher_vocab.insert(d.tokens.begin(), d.tokens.end());
  CHECK(plain_vocab.size() == cipher_vocab.size());
}
