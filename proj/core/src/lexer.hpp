#pragma once

// Shared tokenizer for the .rbl / .rblc / .rblm grammars. Not installed.

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

#include "rbl/diag.hpp"

namespace rbl::detail {

enum class Tok : uint8_t { Ident, Number, Punct, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;       // ident spelling or punct characters
  double num = 0.0;       // Number only
  Span span;
  bool adjacent = false;  // no gap between this token and the previous one
};

struct Codepoint {
  uint32_t cp = 0;
  int len = 1;
};

inline Codepoint decode_utf8(std::string_view s, size_t i) {
  const auto b = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
  unsigned char c = b(i);
  if (c < 0x80) return {c, 1};
  if ((c >> 5) == 0x6 && i + 1 < s.size())
    return {uint32_t((c & 0x1Fu) << 6) | (b(i + 1) & 0x3Fu), 2};
  if ((c >> 4) == 0xE && i + 2 < s.size())
    return {uint32_t((c & 0x0Fu) << 12) | uint32_t((b(i + 1) & 0x3Fu) << 6) |
                (b(i + 2) & 0x3Fu),
            3};
  if ((c >> 3) == 0x1E && i + 3 < s.size())
    return {uint32_t((c & 0x07u) << 18) | uint32_t((b(i + 1) & 0x3Fu) << 12) |
                uint32_t((b(i + 2) & 0x3Fu) << 6) | (b(i + 3) & 0x3Fu),
            4};
  return {0xFFFD, 1};  // invalid byte; consume it alone
}

constexpr uint32_t kNegGlyph = 0xAC;    // logical-not sign
constexpr uint32_t kBoxGlyph = 0x25A1;  // white square

// Symbol characters: the only ones allowed inside (...) identifiers.
inline bool is_symbol_cp(uint32_t cp) {
  return cp == '+' || cp == '\'' || cp == '~' || cp == kNegGlyph ||
         cp == kBoxGlyph;
}

inline bool is_ident_cp(uint32_t cp) {
  return (cp < 128 && std::isalnum(static_cast<int>(cp))) || cp == '_' ||
         is_symbol_cp(cp);
}

inline std::vector<Token> lex(std::string_view src, std::string_view origin,
                              Diagnostics& diags) {
  std::vector<Token> out;
  size_t i = 0;
  int line = 1, col = 1;
  size_t prev_end = 0;

  auto push = [&](Tok kind, std::string text, double num, int tline, int tcol,
                  size_t start, size_t end) {
    Token t;
    t.kind = kind;
    t.text = std::move(text);
    t.num = num;
    t.span = {tline, tcol, static_cast<int>(end - start)};
    t.adjacent = !out.empty() && start == prev_end;
    prev_end = end;
    out.push_back(std::move(t));
  };

  while (i < src.size()) {
    Codepoint c = decode_utf8(src, i);
    if (c.cp == '\n') {
      ++line;
      col = 1;
      ++i;
      continue;
    }
    if (c.cp == '#') {  // comment to end of line
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c.cp < 128 && std::isspace(static_cast<int>(c.cp))) {
      ++col;
      i += c.len;
      continue;
    }
    const int tline = line, tcol = col;
    const size_t start = i;

    if (c.cp < 128 && std::isdigit(static_cast<int>(c.cp))) {
      size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
        ++j;
      if (j < src.size() && src[j] == '.' && j + 1 < src.size() &&
          std::isdigit(static_cast<unsigned char>(src[j + 1]))) {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j])))
          ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          ++k;
          while (k < src.size() &&
                 std::isdigit(static_cast<unsigned char>(src[k])))
            ++k;
          j = k;
        }
      }
      std::string text(src.substr(i, j - i));
      push(Tok::Number, text, std::stod(text), tline, tcol, start, j);
      col += static_cast<int>(j - i);
      i = j;
      continue;
    }

    if (c.cp == '(') {
      // A parenthesized identifier when the interior is pure symbols.
      size_t j = i + 1;
      int cols = 1;
      bool symbols_only = true, closed = false;
      while (j < src.size()) {
        Codepoint d = decode_utf8(src, j);
        if (d.cp == ')') {
          closed = true;
          ++cols;
          j += d.len;
          break;
        }
        if (!is_symbol_cp(d.cp)) {
          symbols_only = false;
          break;
        }
        ++cols;
        j += d.len;
      }
      if (closed && symbols_only && j - i > 2) {
        push(Tok::Ident, std::string(src.substr(i, j - i)), 0, tline, tcol,
             start, j);
        col += cols + 1;
        i = j;
        continue;
      }
      push(Tok::Punct, "(", 0, tline, tcol, start, i + 1);
      ++col;
      ++i;
      continue;
    }

    if (is_ident_cp(c.cp) && !(c.cp < 128 && std::isdigit(int(c.cp)))) {
      size_t j = i;
      int cols = 0;
      while (j < src.size()) {
        Codepoint d = decode_utf8(src, j);
        if (!is_ident_cp(d.cp)) break;
        ++cols;
        j += d.len;
      }
      push(Tok::Ident, std::string(src.substr(i, j - i)), 0, tline, tcol, start,
           j);
      col += cols;
      i = j;
      continue;
    }

    if (c.cp == '-' && i + 1 < src.size() && src[i + 1] == '>') {
      push(Tok::Punct, "->", 0, tline, tcol, start, i + 2);
      col += 2;
      i += 2;
      continue;
    }
    static constexpr std::string_view kSingles = "{}():,.-*=";
    if (c.cp < 128 && kSingles.find(static_cast<char>(c.cp)) !=
                          std::string_view::npos) {
      push(Tok::Punct, std::string(1, static_cast<char>(c.cp)), 0, tline, tcol,
           start, i + 1);
      ++col;
      ++i;
      continue;
    }

    diags.push_back({Severity::Error,
                     "unexpected character in input",
                     {tline, tcol, c.len},
                     std::string(origin)});
    ++col;
    i += c.len;
    if (diags.size() > 100) break;  // hopeless input; stop flooding
  }
  Token end;
  end.kind = Tok::End;
  end.span = {line, col, 0};
  out.push_back(std::move(end));
  return out;
}

// Cursor over the token stream with shared error plumbing.
struct Parser {
  std::vector<Token> ts;
  size_t pos = 0;
  Diagnostics& diags;
  std::string origin;

  Parser(std::string_view src, std::string origin_, Diagnostics& out)
      : diags(out), origin(std::move(origin_)) {
    ts = lex(src, origin, diags);
  }

  const Token& cur() const { return ts[pos]; }
  bool done() const { return cur().kind == Tok::End || diags.size() > 100; }
  void advance() {
    if (cur().kind != Tok::End) ++pos;
  }

  bool at_punct(std::string_view p) const {
    return cur().kind == Tok::Punct && cur().text == p;
  }
  bool at_ident(std::string_view s) const {
    return cur().kind == Tok::Ident && cur().text == s;
  }
  bool eat_punct(std::string_view p) {
    if (!at_punct(p)) return false;
    advance();
    return true;
  }
  bool eat_ident(std::string_view s) {
    if (!at_ident(s)) return false;
    advance();
    return true;
  }
  void skip_commas() {
    while (eat_punct(",")) {
    }
  }

  void err_at(const Token& t, std::string msg) {
    diags.push_back({Severity::Error, std::move(msg), t.span, origin});
  }
  void err(std::string msg) { err_at(cur(), std::move(msg)); }
  void warn_at(Span sp, std::string msg) {
    diags.push_back({Severity::Warning, std::move(msg), sp, origin});
  }

  bool expect_punct(std::string_view p, std::string_view ctx) {
    if (eat_punct(p)) return true;
    err("expected '" + std::string(p) + "' " + std::string(ctx));
    return false;
  }

  std::string ident_or(std::string_view what) {
    if (cur().kind == Tok::Ident) {
      std::string s = cur().text;
      advance();
      return s;
    }
    err("expected " + std::string(what));
    return {};
  }

  // Non-negative number; returns nullopt (with a diagnostic) otherwise.
  std::optional<double> number_or(std::string_view what) {
    if (cur().kind == Tok::Number) {
      double v = cur().num;
      advance();
      return v;
    }
    err("expected " + std::string(what));
    return std::nullopt;
  }

  std::optional<int64_t> integer_or(std::string_view what) {
    auto v = number_or(what);
    if (!v) return std::nullopt;
    if (*v != static_cast<double>(static_cast<int64_t>(*v))) {
      err("expected an integer for " + std::string(what));
      return std::nullopt;
    }
    return static_cast<int64_t>(*v);
  }

  // Skips tokens until one of `kws` appears at brace depth zero.
  void sync(std::initializer_list<std::string_view> kws) {
    int depth = 0;
    while (!done()) {
      if (at_punct("{")) ++depth;
      if (at_punct("}")) {
        if (depth == 0) return;
        --depth;
      }
      if (depth == 0 && cur().kind == Tok::Ident)
        for (auto k : kws)
          if (cur().text == k) return;
      advance();
    }
  }
};

}  // namespace rbl::detail
