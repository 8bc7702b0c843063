#pragma once
// Token table for the toy language. Six ids carry fixed structural roles
// (pad/bos/eos/box markers/answer-conditioning marker); everything else is an
// ordinary glyph looked up by string.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace boxrl {

using TokenId = std::int32_t;
using TokenSeq = std::vector<TokenId>;

class Vocab {
 public:
  static constexpr int kMaxSize = 64;

  Vocab(std::vector<std::string> glyphs, TokenId pad, TokenId bos, TokenId eos,
        TokenId box_open, TokenId box_close, TokenId given);

  // Built-in table targeted by the task generators: specials, digits 0-9,
  // option letters A-D, operator/punctuation glyphs, question words.
  static Vocab standard();

  int size() const { return static_cast<int>(glyphs_.size()); }
  TokenId pad() const { return pad_; }
  TokenId bos() const { return bos_; }
  TokenId eos() const { return eos_; }
  TokenId box_open() const { return box_open_; }
  TokenId box_close() const { return box_close_; }
  TokenId given() const { return given_; }

  const std::string& glyph(TokenId id) const;
  bool contains(std::string_view glyph) const;
  TokenId id_of(std::string_view glyph) const;  // throws if absent

  bool valid_token(TokenId id) const { return id >= 0 && id < size(); }
  void check_seq(const TokenSeq& seq) const;  // throws on out-of-range id

  // One glyph per line: "<id>\t<glyph>\t<role>". Round-trips exactly.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  bool operator==(const Vocab& other) const = default;

 private:
  std::vector<std::string> glyphs_;
  TokenId pad_, bos_, eos_, box_open_, box_close_, given_;
};

}  // namespace boxrl
