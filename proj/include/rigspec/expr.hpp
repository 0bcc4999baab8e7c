#pragma once

// Minimal arithmetic grammar used for diagonal symbols, vector generators,
// trigonometric multipliers and test functions on [0,1].
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('+' | '-') unary | power
//   power   := primary ('^' unary)?            right associative
//   primary := number ['i'] | name | name '(' expr ')' | '(' expr ')'
//
// Names are the declared variables, the constants `pi`, `e`, `i`, and the
// functions exp, sqrt, sin, cos, abs. Evaluation is in complex double.

#include <array>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <initializer_list>
#include <numbers>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rigspec/error.hpp"

namespace rigspec {

using cplx = std::complex<double>;

class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view text, std::vector<std::string> variables) {
    Expr e;
    e.text_ = std::string(text);
    e.variables_ = std::move(variables);
    Parser p{text, e};
    p.parse_all();
    e.max_depth_ = e.compute_depth();
    return e;
  }

  const std::string& text() const noexcept { return text_; }
  const std::vector<std::string>& variables() const noexcept { return variables_; }
  bool empty() const noexcept { return code_.empty(); }

  cplx operator()(std::span<const cplx> vars) const {
    std::array<cplx, kMaxDepth> stack;
    std::size_t top = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::constant: stack[top++] = ins.value; break;
        case Op::variable: stack[top++] = vars[ins.index]; break;
        case Op::neg: stack[top - 1] = -stack[top - 1]; break;
        case Op::add: --top; stack[top - 1] += stack[top]; break;
        case Op::sub: --top; stack[top - 1] -= stack[top]; break;
        case Op::mul: --top; stack[top - 1] *= stack[top]; break;
        case Op::div: --top; stack[top - 1] /= stack[top]; break;
        case Op::pow: --top; stack[top - 1] = power(stack[top - 1], stack[top]); break;
        case Op::fn_exp: stack[top - 1] = exp_of(stack[top - 1]); break;
        case Op::fn_sqrt: stack[top - 1] = sqrt_of(stack[top - 1]); break;
        case Op::fn_sin: stack[top - 1] = real_or_complex(stack[top - 1], [](auto z) { return std::sin(z); }); break;
        case Op::fn_cos: stack[top - 1] = real_or_complex(stack[top - 1], [](auto z) { return std::cos(z); }); break;
        case Op::fn_abs: stack[top - 1] = std::abs(stack[top - 1]); break;
      }
    }
    return stack[0];
  }

  cplx operator()(double x) const {
    const cplx v{x, 0.0};
    return (*this)(std::span<const cplx>(&v, 1));
  }

  cplx operator()(double x, double y) const {
    const std::array<cplx, 2> v{cplx{x, 0.0}, cplx{y, 0.0}};
    return (*this)(std::span<const cplx>(v));
  }

  /// True when no variable occurs in the expression.
  bool is_constant() const {
    for (const auto& ins : code_)
      if (ins.op == Op::variable) return false;
    return true;
  }

 private:
  static constexpr std::size_t kMaxDepth = 64;

  enum class Op { constant, variable, neg, add, sub, mul, div, pow, fn_exp, fn_sqrt, fn_sin, fn_cos, fn_abs };

  struct Instr {
    Op op;
    cplx value{};
    std::size_t index = 0;
  };

  template <class F>
  static cplx real_or_complex(cplx z, F f) {
    if (z.imag() == 0.0) return {f(z.real()), 0.0};
    return f(z);
  }

  static cplx exp_of(cplx z) {
    if (z.imag() == 0.0) return {std::exp(z.real()), 0.0};
    return std::exp(z);
  }

  static cplx sqrt_of(cplx z) {
    if (z.imag() == 0.0 && z.real() >= 0.0) return {std::sqrt(z.real()), 0.0};
    return std::sqrt(z);
  }

  static cplx power(cplx base, cplx ex) {
    if (ex.imag() == 0.0) {
      const double k = ex.real();
      if (k == std::floor(k) && std::abs(k) <= 64.0) {
        auto n = static_cast<int>(std::abs(k));
        cplx acc{1.0, 0.0};
        cplx b = base;
        while (n > 0) {
          if (n & 1) acc *= b;
          b *= b;
          n >>= 1;
        }
        return k < 0 ? cplx{1.0, 0.0} / acc : acc;
      }
      if (base.imag() == 0.0 && base.real() > 0.0) return {std::pow(base.real(), k), 0.0};
    }
    return std::pow(base, ex);
  }

  std::size_t compute_depth() const {
    std::size_t depth = 0, best = 0;
    for (const auto& ins : code_) {
      switch (ins.op) {
        case Op::constant:
        case Op::variable: ++depth; break;
        case Op::add:
        case Op::sub:
        case Op::mul:
        case Op::div:
        case Op::pow: --depth; break;
        default: break;
      }
      best = std::max(best, depth);
    }
    if (best > kMaxDepth) throw ParseError("expression nests too deeply: " + text_);
    return best;
  }

  struct Parser {
    std::string_view src;
    Expr& out;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& what) const {
      throw ParseError("expression '" + std::string(src) + "': " + what + " at offset " + std::to_string(pos));
    }

    void skip_ws() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool accept(char c) {
      skip_ws();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    void emit(Op op) { out.code_.push_back(Instr{op}); }

    void parse_all() {
      skip_ws();
      if (pos == src.size()) fail("empty expression");
      parse_expr();
      skip_ws();
      if (pos != src.size()) fail("unexpected trailing input");
    }

    void parse_expr() {
      parse_term();
      for (;;) {
        if (accept('+')) {
          parse_term();
          emit(Op::add);
        } else if (accept('-')) {
          parse_term();
          emit(Op::sub);
        } else {
          return;
        }
      }
    }

    void parse_term() {
      parse_unary();
      for (;;) {
        if (accept('*')) {
          parse_unary();
          emit(Op::mul);
        } else if (accept('/')) {
          parse_unary();
          emit(Op::div);
        } else {
          return;
        }
      }
    }

    void parse_unary() {
      if (accept('-')) {
        parse_unary();
        emit(Op::neg);
      } else if (accept('+')) {
        parse_unary();
      } else {
        parse_power();
      }
    }

    void parse_power() {
      parse_primary();
      if (accept('^')) {
        parse_unary();
        emit(Op::pow);
      }
    }

    void parse_primary() {
      skip_ws();
      if (pos >= src.size()) fail("unexpected end of input");
      const char c = src[pos];
      if (c == '(') {
        ++pos;
        parse_expr();
        if (!accept(')')) fail("expected ')'");
        return;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        parse_number();
        return;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        parse_name();
        return;
      }
      fail(std::string("unexpected character '") + c + "'");
    }

    void parse_number() {
      const std::string rest(src.substr(pos));
      char* end = nullptr;
      const double v = std::strtod(rest.c_str(), &end);
      if (end == rest.c_str()) fail("malformed number");
      pos += static_cast<std::size_t>(end - rest.c_str());
      if (pos < src.size() && src[pos] == 'i' &&
          (pos + 1 == src.size() || !std::isalnum(static_cast<unsigned char>(src[pos + 1])))) {
        ++pos;
        out.code_.push_back(Instr{Op::constant, cplx{0.0, v}});
      } else {
        out.code_.push_back(Instr{Op::constant, cplx{v, 0.0}});
      }
    }

    void parse_name() {
      const std::size_t start = pos;
      while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_')) ++pos;
      const std::string name(src.substr(start, pos - start));
      for (std::size_t k = 0; k < out.variables_.size(); ++k) {
        if (out.variables_[k] == name) {
          out.code_.push_back(Instr{Op::variable, {}, k});
          return;
        }
      }
      if (name == "pi") {
        out.code_.push_back(Instr{Op::constant, cplx{std::numbers::pi, 0.0}});
        return;
      }
      if (name == "e") {
        out.code_.push_back(Instr{Op::constant, cplx{std::numbers::e, 0.0}});
        return;
      }
      if (name == "i") {
        out.code_.push_back(Instr{Op::constant, cplx{0.0, 1.0}});
        return;
      }
      Op fn;
      if (name == "exp") fn = Op::fn_exp;
      else if (name == "sqrt") fn = Op::fn_sqrt;
      else if (name == "sin") fn = Op::fn_sin;
      else if (name == "cos") fn = Op::fn_cos;
      else if (name == "abs") fn = Op::fn_abs;
      else fail("unknown name '" + name + "'");
      if (!accept('(')) fail("expected '(' after function " + name);
      parse_expr();
      if (!accept(')')) fail("expected ')'");
      emit(fn);
    }
  };

  std::string text_;
  std::vector<std::string> variables_;
  std::vector<Instr> code_;
  std::size_t max_depth_ = 0;
};

/// Parses complex literals of the form `a`, `bi`, `a+bi`, `a-bi`, `i`, `-i`.
inline cplx parse_complex(std::string_view text) {
  std::string s;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) s.push_back(c);
  if (s.empty()) throw ParseError("empty complex literal");
  auto fail = [&] { throw ParseError("malformed complex literal '" + std::string(text) + "'"); };
  const char* begin = s.c_str();
  char* end = nullptr;
  if (s.back() != 'i') {
    const double re = std::strtod(begin, &end);
    if (end != begin + s.size()) fail();
    return {re, 0.0};
  }
  // Imaginary part: find the sign that starts it (not one following an exponent marker).
  std::size_t split = std::string::npos;
  for (std::size_t k = s.size() - 1; k > 0; --k) {
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      split = k;
      break;
    }
  }
  double re = 0.0;
  std::string im_part;
  if (split == std::string::npos) {
    im_part = s.substr(0, s.size() - 1);
  } else {
    const std::string re_part = s.substr(0, split);
    re = std::strtod(re_part.c_str(), &end);
    if (end != re_part.c_str() + re_part.size()) fail();
    im_part = s.substr(split, s.size() - 1 - split);
  }
  double im = 0.0;
  if (im_part.empty() || im_part == "+") {
    im = 1.0;
  } else if (im_part == "-") {
    im = -1.0;
  } else {
    im = std::strtod(im_part.c_str(), &end);
    if (end != im_part.c_str() + im_part.size()) fail();
  }
  return {re, im};
}

}  // namespace rigspec
