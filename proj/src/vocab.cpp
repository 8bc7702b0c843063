#include "boxrl/vocab.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace boxrl {

namespace {

void require(bool ok, const std::string& msg) {
  if (!ok) throw std::invalid_argument("vocab: " + msg);
}

}  // namespace

Vocab::Vocab(std::vector<std::string> glyphs, TokenId pad, TokenId bos, TokenId eos,
             TokenId box_open, TokenId box_close, TokenId given)
    : glyphs_(std::move(glyphs)),
      pad_(pad),
      bos_(bos),
      eos_(eos),
      box_open_(box_open),
      box_close_(box_close),
      given_(given) {
  require(!glyphs_.empty(), "empty glyph table");
  require(size() <= kMaxSize, "glyph table larger than 64");
  std::unordered_set<std::string> seen;
  for (const auto& g : glyphs_) {
    require(!g.empty(), "empty glyph");
    require(g.find('\t') == std::string::npos && g.find('\n') == std::string::npos,
            "glyph contains tab or newline");
    require(seen.insert(g).second, "duplicate glyph '" + g + "'");
  }
  const TokenId specials[] = {pad_, bos_, eos_, box_open_, box_close_, given_};
  std::unordered_set<TokenId> ids;
  for (TokenId id : specials) {
    require(valid_token(id), "special id out of range");
    require(ids.insert(id).second, "special ids not distinct");
  }
}

Vocab Vocab::standard() {
  std::vector<std::string> glyphs = {
      "<pad>", "<bos>", "<eos>", "<box>", "</box>", "<given>",
      "0", "1", "2", "3", "4", "5", "6", "7", "8", "9",
      "A", "B", "C", "D",
      "+", "-", "*", "%", "(", ")", "?", "=",
      "max", "min", "even", "odd"};
  return Vocab(std::move(glyphs), 0, 1, 2, 3, 4, 5);
}

const std::string& Vocab::glyph(TokenId id) const {
  if (!valid_token(id)) throw std::out_of_range("vocab: token id out of range");
  return glyphs_[static_cast<std::size_t>(id)];
}

bool Vocab::contains(std::string_view glyph) const {
  for (const auto& g : glyphs_)
    if (g == glyph) return true;
  return false;
}

TokenId Vocab::id_of(std::string_view glyph) const {
  for (std::size_t i = 0; i < glyphs_.size(); ++i)
    if (glyphs_[i] == glyph) return static_cast<TokenId>(i);
  throw std::out_of_range("vocab: unknown glyph '" + std::string(glyph) + "'");
}

void Vocab::check_seq(const TokenSeq& seq) const {
  for (TokenId id : seq)
    if (!valid_token(id))
      throw std::out_of_range("vocab: sequence contains out-of-range token id " +
                              std::to_string(id));
}

namespace {

std::string role_of(const Vocab& v, TokenId id) {
  if (id == v.pad()) return "pad";
  if (id == v.bos()) return "bos";
  if (id == v.eos()) return "eos";
  if (id == v.box_open()) return "box_open";
  if (id == v.box_close()) return "box_close";
  if (id == v.given()) return "given";
  return "-";
}

}  // namespace

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("vocab: cannot open '" + path + "' for writing");
  out << "boxrl-vocab 1\n";
  for (TokenId id = 0; id < size(); ++id)
    out << id << '\t' << glyphs_[static_cast<std::size_t>(id)] << '\t'
        << role_of(*this, id) << '\n';
  if (!out) throw std::runtime_error("vocab: write to '" + path + "' failed");
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("vocab: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "boxrl-vocab 1")
    throw std::runtime_error("vocab: '" + path + "' has an unsupported header");

  std::vector<std::string> glyphs;
  TokenId pad = -1, bos = -1, eos = -1, open = -1, close = -1, given = -1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string id_str, glyph, role;
    if (!std::getline(ls, id_str, '\t') || !std::getline(ls, glyph, '\t') ||
        !std::getline(ls, role))
      throw std::runtime_error("vocab: malformed line '" + line + "'");
    TokenId id = static_cast<TokenId>(std::stol(id_str));
    if (id != static_cast<TokenId>(glyphs.size()))
      throw std::runtime_error("vocab: ids must be contiguous from 0");
    glyphs.push_back(glyph);
    if (role == "pad") pad = id;
    else if (role == "bos") bos = id;
    else if (role == "eos") eos = id;
    else if (role == "box_open") open = id;
    else if (role == "box_close") close = id;
    else if (role == "given") given = id;
    else if (role != "-")
      throw std::runtime_error("vocab: unknown role '" + role + "'");
  }
  if (pad < 0 || bos < 0 || eos < 0 || open < 0 || close < 0 || given < 0)
    throw std::runtime_error("vocab: '" + path + "' is missing a special role");
  return Vocab(std::move(glyphs), pad, bos, eos, open, close, given);
}

}  // namespace boxrl
