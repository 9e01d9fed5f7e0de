#include "system_file.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "koopman/errors.hpp"

namespace koopman::cli {
namespace {

// Recursive-descent parser over one statement value.
//   expr   := [+-] term { [+-] term }
//   term   := factor { '*' factor }
//   factor := '-' factor | atom [ '^' integer ]
//   atom   := number [ '/' number ] | x<k> | '(' expr ')'
class ExprParser {
 public:
  ExprParser(std::string_view text, int dimension, int line, int column0)
      : text_(text), dim_(dimension), line_(line), col0_(column0) {}

  MonomialPoly parse_all() {
    MonomialPoly p = expr();
    skip();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return p;
  }

  double parse_constant() {
    skip();
    double sign = 1.0;
    if (peek('-') || peek('+')) sign = text_[pos_++] == '-' ? -1.0 : 1.0;
    const double v = sign * literal();
    skip();
    if (pos_ != text_.size()) fail("expected a number");
    return v;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(what, line_, col0_ + static_cast<int>(pos_) + 1);
  }

  void skip() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool peek(char c) {
    skip();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  MonomialPoly constant(double c) const { return MonomialPoly::constant(dim_, c); }

  MonomialPoly expr() {
    MonomialPoly acc(dim_);
    bool first = true;
    for (;;) {
      double sign = 1.0;
      if (peek('+') || peek('-')) {
        sign = text_[pos_++] == '-' ? -1.0 : 1.0;
      } else if (!first) {
        return acc;
      }
      MonomialPoly t = term();
      acc += sign * t;
      first = false;
    }
  }

  MonomialPoly term() {
    MonomialPoly acc = factor();
    while (peek('*')) {
      ++pos_;
      acc = acc * factor();
    }
    return acc;
  }

  MonomialPoly factor() {
    if (peek('-')) {
      ++pos_;
      return Complex(-1.0) * factor();
    }
    MonomialPoly base = atom();
    if (!peek('^')) return base;
    ++pos_;
    skip();
    const std::size_t start = pos_;
    int exponent = 0;
    const auto [end, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), exponent);
    if (ec != std::errc() || exponent < 0) fail("expected a non-negative integer exponent");
    pos_ = static_cast<std::size_t>(end - text_.data());
    if (pos_ < text_.size() && text_[pos_] == '.') {
      pos_ = start;
      fail("exponent must be an integer");
    }
    MonomialPoly out = constant(1.0);
    for (int i = 0; i < exponent; ++i) out = out * base;
    return out;
  }

  double number() {
    skip();
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    if (first == last || !(std::isdigit(static_cast<unsigned char>(*first)) || *first == '.')) {
      fail("expected a number");
    }
    double v = 0.0;
    const auto [end, ec] = std::from_chars(first, last, v, std::chars_format::general);
    if (ec != std::errc() || !std::isfinite(v)) fail("malformed number");
    pos_ = static_cast<std::size_t>(end - text_.data());
    return v;
  }

  // A decimal literal or a p/q rational.
  double literal() {
    const double p = number();
    if (!peek('/')) return p;
    ++pos_;
    const std::size_t at = pos_;
    const double q = number();
    if (q == 0.0) {
      pos_ = at;
      fail("division by zero");
    }
    return p / q;
  }

  MonomialPoly atom() {
    skip();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    const char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      MonomialPoly inner = expr();
      if (!peek(')')) fail("expected ')'");
      ++pos_;
      return inner;
    }
    if (c == 'x') {
      const std::size_t at = pos_++;
      int k = 0;
      const auto [end, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), k);
      if (ec != std::errc()) {
        pos_ = at;
        fail("expected a variable index after 'x'");
      }
      pos_ = static_cast<std::size_t>(end - text_.data());
      if (k < 1 || k > dim_) {
        pos_ = at;
        fail("undeclared variable x" + std::to_string(k));
      }
      return MonomialPoly::variable(dim_, k - 1);
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return constant(literal());
    fail("unexpected '" + std::string(1, c) + "'");
  }

  std::string_view text_;
  int dim_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

struct Statement {
  std::string key;
  std::string value;
  int line;
  int key_column;
  int value_column;
};

std::string trim(std::string_view s, int& offset) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  offset += static_cast<int>(a);
  return std::string(s.substr(a, b - a));
}

std::vector<Statement> split_statements(const std::string& text) {
  std::vector<Statement> out;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view view(raw);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    std::size_t start = 0;
    while (start <= view.size()) {
      std::size_t end = view.find(';', start);
      if (end == std::string_view::npos) end = view.size();
      const std::string_view piece = view.substr(start, end - start);
      const std::size_t eq = piece.find('=');
      int key_col = static_cast<int>(start);
      int dummy = 0;
      if (eq == std::string_view::npos) {
        if (!trim(piece, dummy).empty()) {
          throw ParseError("expected 'key = value'", line, static_cast<int>(start) + 1);
        }
      } else {
        int value_col = static_cast<int>(start + eq + 1);
        Statement st{trim(piece.substr(0, eq), key_col), trim(piece.substr(eq + 1), value_col), line, 0, 0};
        st.key_column = key_col + 1;
        st.value_column = value_col;
        if (st.key.empty()) throw ParseError("missing key", line, st.key_column);
        out.push_back(std::move(st));
      }
      start = end + 1;
    }
  }
  return out;
}

std::vector<double> parse_numbers(const Statement& st) {
  std::vector<double> out;
  std::size_t i = 0;
  const std::string& v = st.value;
  while (i < v.size()) {
    while (i < v.size() && std::isspace(static_cast<unsigned char>(v[i]))) ++i;
    if (i >= v.size()) break;
    std::size_t j = i;
    while (j < v.size() && !std::isspace(static_cast<unsigned char>(v[j]))) ++j;
    ExprParser p(std::string_view(v).substr(i, j - i), 0, st.line, st.value_column + static_cast<int>(i));
    out.push_back(p.parse_constant());
    i = j;
  }
  return out;
}

}  // namespace

MonomialPoly parse_expression(const std::string& text, int dimension) {
  return ExprParser(text, dimension, 1, 0).parse_all();
}

SystemDefinition parse_system(const std::string& text) {
  SystemDefinition def;
  std::vector<int> seen;
  int last_line = 1;
  for (const Statement& st : split_statements(text)) {
    last_line = st.line;
    if (st.key == "dim") {
      if (def.dimension != 0) throw ParseError("dim declared twice", st.line, st.key_column);
      int n = 0;
      const auto [end, ec] = std::from_chars(st.value.data(), st.value.data() + st.value.size(), n);
      if (ec != std::errc() || end != st.value.data() + st.value.size() || n < 1) {
        throw ParseError("dim must be a positive integer", st.line, st.value_column + 1);
      }
      def.dimension = n;
      def.components.assign(n, MonomialPoly(n));
      def.expressions.assign(n, "");
      seen.assign(n, 0);
    } else if (st.key.size() > 1 && st.key[0] == 'f' &&
               std::all_of(st.key.begin() + 1, st.key.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      if (def.dimension == 0) throw ParseError("dim must be declared before " + st.key, st.line, st.key_column);
      const int i = std::stoi(st.key.substr(1));
      if (i < 1 || i > def.dimension) {
        throw ParseError(st.key + " exceeds the declared dimension " + std::to_string(def.dimension), st.line,
                         st.key_column);
      }
      if (seen[i - 1]) throw ParseError(st.key + " defined twice", st.line, st.key_column);
      seen[i - 1] = 1;
      def.components[i - 1] = ExprParser(st.value, def.dimension, st.line, st.value_column).parse_all();
      def.expressions[i - 1] = st.value;
    } else if (st.key == "box" || st.key == "guess") {
      if (def.dimension == 0) throw ParseError("dim must be declared before " + st.key, st.line, st.key_column);
      const std::vector<double> v = parse_numbers(st);
      const int n = def.dimension;
      if (st.key == "box") {
        if (static_cast<int>(v.size()) != 2 * n) {
          throw ParseError("box needs " + std::to_string(2 * n) + " numbers", st.line, st.value_column + 1);
        }
        Eigen::VectorXd lo(n), hi(n);
        for (int k = 0; k < n; ++k) {
          lo(k) = v[2 * k];
          hi(k) = v[2 * k + 1];
          if (!(hi(k) > lo(k))) throw ParseError("box upper bound must exceed lower bound", st.line, st.value_column + 1);
        }
        def.box_lower = lo;
        def.box_upper = hi;
      } else {
        if (static_cast<int>(v.size()) != n) {
          throw ParseError("guess needs " + std::to_string(n) + " numbers", st.line, st.value_column + 1);
        }
        def.guess = Eigen::Map<const Eigen::VectorXd>(v.data(), n);
      }
    } else {
      if (def.parameters.count(st.key)) throw ParseError(st.key + " defined twice", st.line, st.key_column);
      def.parameters[st.key] = st.value;
    }
  }
  if (def.dimension == 0) throw ParseError("missing dim declaration", last_line, 1);
  for (int i = 0; i < def.dimension; ++i) {
    if (!seen[i]) throw ParseError("missing component f" + std::to_string(i + 1), last_line, 1);
  }
  return def;
}

DynamicalSystem SystemDefinition::system(const std::string& name) const {
  return DynamicalSystem(components, name);
}

}  // namespace koopman::cli
