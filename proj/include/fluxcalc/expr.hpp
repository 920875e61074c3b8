#pragma once

// Text form definitions, e.g. "x1*dx2^dx3" or "(sin(x1) + step(x2))*dx2".
//
//   form    := sum
//   sum     := product (('+' | '-') product)*
//   product := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | power
//   power   := primary ('^' unary)?
//   primary := number | x<i> | wedge | func '(' sum ')' | '(' sum ')'
//   wedge   := dx<i> ('^' dx<j>)*
//   func    := sin | cos | exp | log | sqrt | abs | step
//
// Inside a wedge monomial '^' is the wedge product; everywhere else it is a
// power. Products of two non-scalar factors are rejected: coefficients
// multiply wedge monomials, monomials never multiply each other.

#include "errors.hpp"
#include "field.hpp"
#include "multiindex.hpp"
#include "tensor.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace fluxcalc {

struct ExprNode;
using ExprPtr = std::shared_ptr<const ExprNode>;

/// Scalar expression tree over the coordinates x1..xn.
struct ExprNode {
    enum class Kind { Number, Variable, Negate, Add, Sub, Mul, Div, Pow, Call };
    enum class Func { Sin, Cos, Exp, Log, Sqrt, Abs, Step };

    Kind kind = Kind::Number;
    double number = 0.0;
    int variable = 0;  // 1-based
    Func func = Func::Sin;
    ExprPtr lhs;
    ExprPtr rhs;

    static ExprPtr make_number(double v) {
        auto n = std::make_shared<ExprNode>();
        n->number = v;
        return n;
    }
    static ExprPtr make_variable(int i) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Variable;
        n->variable = i;
        return n;
    }
    static ExprPtr make_unary(Kind k, ExprPtr a) {
        auto n = std::make_shared<ExprNode>();
        n->kind = k;
        n->lhs = std::move(a);
        return n;
    }
    static ExprPtr make_binary(Kind k, ExprPtr a, ExprPtr b) {
        auto n = std::make_shared<ExprNode>();
        n->kind = k;
        n->lhs = std::move(a);
        n->rhs = std::move(b);
        return n;
    }
    static ExprPtr make_call(Func f, ExprPtr a) {
        auto n = std::make_shared<ExprNode>();
        n->kind = Kind::Call;
        n->func = f;
        n->lhs = std::move(a);
        return n;
    }
};

inline double evaluate(const ExprNode& e, const Point& x) {
    using K = ExprNode::Kind;
    switch (e.kind) {
    case K::Number: return e.number;
    case K::Variable: return x[e.variable - 1];
    case K::Negate: return -evaluate(*e.lhs, x);
    case K::Add: return evaluate(*e.lhs, x) + evaluate(*e.rhs, x);
    case K::Sub: return evaluate(*e.lhs, x) - evaluate(*e.rhs, x);
    case K::Mul: return evaluate(*e.lhs, x) * evaluate(*e.rhs, x);
    case K::Div: return evaluate(*e.lhs, x) / evaluate(*e.rhs, x);
    case K::Pow: return std::pow(evaluate(*e.lhs, x), evaluate(*e.rhs, x));
    case K::Call: {
        const double u = evaluate(*e.lhs, x);
        switch (e.func) {
        case ExprNode::Func::Sin: return std::sin(u);
        case ExprNode::Func::Cos: return std::cos(u);
        case ExprNode::Func::Exp: return std::exp(u);
        case ExprNode::Func::Log: return std::log(u);
        case ExprNode::Func::Sqrt: return std::sqrt(u);
        case ExprNode::Func::Abs: return std::abs(u);
        case ExprNode::Func::Step: return u >= 0.0 ? 1.0 : 0.0;
        }
    }
    }
    return 0.0;
}

namespace detail {

inline std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline const char* func_name(ExprNode::Func f) {
    switch (f) {
    case ExprNode::Func::Sin: return "sin";
    case ExprNode::Func::Cos: return "cos";
    case ExprNode::Func::Exp: return "exp";
    case ExprNode::Func::Log: return "log";
    case ExprNode::Func::Sqrt: return "sqrt";
    case ExprNode::Func::Abs: return "abs";
    case ExprNode::Func::Step: return "step";
    }
    return "?";
}

inline std::optional<ExprNode::Func> func_from_name(std::string_view s) {
    using F = ExprNode::Func;
    if (s == "sin") return F::Sin;
    if (s == "cos") return F::Cos;
    if (s == "exp") return F::Exp;
    if (s == "log") return F::Log;
    if (s == "sqrt") return F::Sqrt;
    if (s == "abs") return F::Abs;
    if (s == "step") return F::Step;
    return std::nullopt;
}

}  // namespace detail

/// Fully parenthesized text for a scalar tree; reparses to the same tree.
inline std::string to_string(const ExprNode& e) {
    using K = ExprNode::Kind;
    auto bin = [&](const char* op) { return "(" + to_string(*e.lhs) + op + to_string(*e.rhs) + ")"; };
    switch (e.kind) {
    case K::Number: return detail::format_number(e.number);
    case K::Variable: return "x" + std::to_string(e.variable);
    case K::Negate: return "(-" + to_string(*e.lhs) + ")";
    case K::Add: return bin("+");
    case K::Sub: return bin("-");
    case K::Mul: return bin("*");
    case K::Div: return bin("/");
    case K::Pow: return bin("^");
    case K::Call: return std::string(detail::func_name(e.func)) + "(" + to_string(*e.lhs) + ")";
    }
    return {};
}

/// A parsed form: one scalar coefficient expression per increasing key.
/// Keys absent from `terms` have coefficient 0.
class FormExpression {
public:
    FormExpression(std::string source, int n, int degree, std::vector<std::pair<MultiIndex, ExprPtr>> terms,
                   std::vector<std::string> warnings)
        : source_(std::move(source)), n_(n), degree_(degree), terms_(std::move(terms)),
          warnings_(std::move(warnings)) {}

    const std::string& source() const noexcept { return source_; }
    int dimension() const noexcept { return n_; }
    int degree() const noexcept { return degree_; }
    const std::vector<std::pair<MultiIndex, ExprPtr>>& terms() const noexcept { return terms_; }
    const std::vector<std::string>& warnings() const noexcept { return warnings_; }

    AlternatingTensor evaluate(const Point& x) const {
        AlternatingTensor t(n_, degree_);
        for (const auto& [I, c] : terms_) t.set(I, fluxcalc::evaluate(*c, x));
        return t;
    }

    /// Canonical text. Parsing it back yields an expression that prints identically.
    std::string to_string() const {
        if (degree_ == 0) return fluxcalc::to_string(*terms_.front().second);
        if (terms_.empty()) return "0*" + wedge_text(enumerate(n_, degree_).front());
        std::string s;
        for (std::size_t i = 0; i < terms_.size(); ++i) {
            if (i) s += " + ";
            s += fluxcalc::to_string(*terms_[i].second) + "*" + wedge_text(terms_[i].first);
        }
        return s;
    }

    FormField to_field(FormField::Sampler analytic_derivative = {}) const {
        auto self = std::make_shared<const FormExpression>(*this);
        return FormField(n_, degree_, [self](const Point& x) { return self->evaluate(x); },
                         std::move(analytic_derivative));
    }

private:
    static std::string wedge_text(const MultiIndex& I) {
        std::string s;
        for (int i = 0; i < I.degree(); ++i) {
            if (i) s += '^';
            s += "dx" + std::to_string(I[static_cast<std::size_t>(i)]);
        }
        return s;
    }

    std::string source_;
    int n_;
    int degree_;
    std::vector<std::pair<MultiIndex, ExprPtr>> terms_;
    std::vector<std::string> warnings_;
};

namespace detail {

class FormParser {
public:
    FormParser(std::string_view text, int n) : text_(text), n_(n) { advance(); }

    struct Term {
        ExprPtr coef;  // null: unit coefficient (bare wedge monomial)
        int sign = 1;
    };

    // Intermediate value: a form of some degree as key -> coefficient.
    struct Value {
        int degree = 0;
        std::map<MultiIndex, Term> terms;
        int line = 1;
        int column = 1;
    };

    FormExpression parse(std::optional<int> declared) {
        if (declared && (*declared < 0 || *declared > n_))
            throw DegreeError("declared degree " + std::to_string(*declared) + " outside 0.." +
                              std::to_string(n_));
        if (tok_.kind == Tok::End) fail("empty form expression", tok_);
        Value v = parse_sum();
        if (tok_.kind != Tok::End) fail("unexpected '" + std::string(tok_.text) + "'", tok_);
        const int declared_degree = declared.value_or(v.degree);
        if (v.degree != declared_degree)
            throw ParseError("degree mismatch: expression has degree " + std::to_string(v.degree) +
                                 ", declared degree is " + std::to_string(declared_degree),
                             v.line, v.column);
        std::vector<std::pair<MultiIndex, ExprPtr>> terms;
        for (auto& [I, t] : v.terms) terms.emplace_back(I, materialize(t));
        return FormExpression(std::string(text_), n_, declared_degree, std::move(terms), std::move(warnings_));
    }

private:
    enum class Tok { Number, Var, Dx, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

    struct Token {
        Tok kind = Tok::End;
        std::string_view text;
        double number = 0.0;
        int index = 0;
        int line = 1;
        int column = 1;
    };

    [[noreturn]] static void fail(const std::string& msg, const Token& at) { throw ParseError(msg, at.line, at.column); }

    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            if (text_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
        Token t;
        t.line = line_;
        t.column = col_;
        if (pos_ >= text_.size()) {
            t.kind = Tok::End;
            tok_ = t;
            return;
        }
        const std::size_t start = pos_;
        const char c = text_[pos_];
        auto single = [&](Tok k) {
            t.kind = k;
            ++pos_;
        };
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t p = pos_;
            while (p < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[p])) || text_[p] == '.')) ++p;
            if (p < text_.size() && (text_[p] == 'e' || text_[p] == 'E')) {
                std::size_t q = p + 1;
                if (q < text_.size() && (text_[q] == '+' || text_[q] == '-')) ++q;
                if (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) {
                    while (q < text_.size() && std::isdigit(static_cast<unsigned char>(text_[q]))) ++q;
                    p = q;
                }
            }
            double v = 0.0;
            auto res = std::from_chars(text_.data() + pos_, text_.data() + p, v);
            if (res.ec != std::errc() || res.ptr != text_.data() + p)
                fail("malformed number '" + std::string(text_.substr(pos_, p - pos_)) + "'", t);
            t.kind = Tok::Number;
            t.number = v;
            pos_ = p;
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t p = pos_;
            while (p < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[p])) || text_[p] == '_')) ++p;
            std::string_view word = text_.substr(pos_, p - pos_);
            pos_ = p;
            t.kind = Tok::Ident;
            auto indexed = [&](std::string_view prefix, Tok kind) {
                if (word.size() <= prefix.size() || word.substr(0, prefix.size()) != prefix) return false;
                auto digits = word.substr(prefix.size());
                int idx = 0;
                auto res = std::from_chars(digits.data(), digits.data() + digits.size(), idx);
                if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) return false;
                if (idx < 1 || idx > n_)
                    fail("unknown identifier '" + std::string(word) + "' (coordinates are x1..x" +
                             std::to_string(n_) + ")",
                         t);
                t.kind = kind;
                t.index = idx;
                return true;
            };
            if (!indexed("dx", Tok::Dx)) indexed("x", Tok::Var);
        } else {
            switch (c) {
            case '+': single(Tok::Plus); break;
            case '-': single(Tok::Minus); break;
            case '*': single(Tok::Star); break;
            case '/': single(Tok::Slash); break;
            case '^': single(Tok::Caret); break;
            case '(': single(Tok::LParen); break;
            case ')': single(Tok::RParen); break;
            default: fail("unexpected character '" + std::string(1, c) + "'", t);
            }
        }
        t.text = text_.substr(start, pos_ - start);
        col_ += static_cast<int>(pos_ - start);
        tok_ = t;
    }

    static ExprPtr materialize(const Term& t) {
        ExprPtr c = t.coef ? t.coef : ExprNode::make_number(1.0);
        return t.sign < 0 ? ExprNode::make_unary(ExprNode::Kind::Negate, c) : c;
    }

    Value scalar(ExprPtr e, const Token& at) const {
        Value v;
        v.degree = 0;
        v.terms.emplace(MultiIndex(n_, {}), Term{std::move(e), 1});
        v.line = at.line;
        v.column = at.column;
        return v;
    }

    ExprPtr scalar_of(const Value& v, const Token& at, std::string_view what) const {
        if (v.degree != 0)
            fail(std::string(what) + " needs a scalar operand, got a degree-" + std::to_string(v.degree) + " form",
                 at);
        return materialize(v.terms.begin()->second);
    }

    Value parse_sum() {
        Value lhs = parse_product();
        while (tok_.kind == Tok::Plus || tok_.kind == Tok::Minus) {
            const Token op = tok_;
            advance();
            Value rhs = parse_product();
            if (rhs.degree != lhs.degree)
                fail("degree mismatch: cannot add a degree-" + std::to_string(lhs.degree) + " and a degree-" +
                         std::to_string(rhs.degree) + " form",
                     op);
            const bool minus = op.kind == Tok::Minus;
            for (auto& [I, t] : rhs.terms) {
                auto it = lhs.terms.find(I);
                if (it == lhs.terms.end()) {
                    Term nt = t;
                    if (minus) nt = Term{ExprNode::make_unary(ExprNode::Kind::Negate, materialize(t)), 1};
                    lhs.terms.emplace(I, nt);
                } else {
                    it->second = Term{ExprNode::make_binary(minus ? ExprNode::Kind::Sub : ExprNode::Kind::Add,
                                                            materialize(it->second), materialize(t)),
                                      1};
                }
            }
        }
        return lhs;
    }

    Value parse_product() {
        Value lhs = parse_unary();
        while (tok_.kind == Tok::Star || tok_.kind == Tok::Slash) {
            const Token op = tok_;
            advance();
            Value rhs = parse_unary();
            if (op.kind == Tok::Slash) {
                ExprPtr d = scalar_of(rhs, op, "division");
                for (auto& [I, t] : lhs.terms)
                    t = Term{ExprNode::make_binary(ExprNode::Kind::Div, materialize(t), d), 1};
                continue;
            }
            if (lhs.degree > 0 && rhs.degree > 0)
                fail("product of two forms; write wedge monomials as dxi^dxj", op);
            if (lhs.degree == 0 && rhs.degree == 0) {
                lhs = scalar(ExprNode::make_binary(ExprNode::Kind::Mul, scalar_of(lhs, op, "*"),
                                                   scalar_of(rhs, op, "*")),
                             Token{Tok::End, {}, 0.0, 0, lhs.line, lhs.column});
                continue;
            }
            // scalar times form (either order); a unit coefficient is replaced, not multiplied
            const bool scalar_left = lhs.degree == 0;
            ExprPtr s = scalar_left ? scalar_of(lhs, op, "*") : scalar_of(rhs, op, "*");
            Value form = scalar_left ? std::move(rhs) : std::move(lhs);
            for (auto& [I, t] : form.terms) {
                if (!t.coef) {
                    t = Term{s, t.sign};
                } else {
                    t = Term{scalar_left ? ExprNode::make_binary(ExprNode::Kind::Mul, s, materialize(t))
                                         : ExprNode::make_binary(ExprNode::Kind::Mul, materialize(t), s),
                             1};
                }
            }
            if (scalar_left) {
                form.line = lhs.line;
                form.column = lhs.column;
            }
            lhs = std::move(form);
        }
        return lhs;
    }

    Value parse_unary() {
        if (tok_.kind == Tok::Minus) {
            const Token op = tok_;
            advance();
            Value v = parse_unary();
            for (auto& [I, t] : v.terms) t = Term{ExprNode::make_unary(ExprNode::Kind::Negate, materialize(t)), 1};
            v.line = op.line;
            v.column = op.column;
            return v;
        }
        if (tok_.kind == Tok::Plus) {
            advance();
            return parse_unary();
        }
        return parse_power();
    }

    Value parse_power() {
        const Token start = tok_;
        Value base = parse_primary();
        if (tok_.kind == Tok::Caret) {
            const Token op = tok_;
            advance();
            ExprPtr b = scalar_of(base, op, "power");
            Value ex = parse_unary();
            ExprPtr e = scalar_of(ex, op, "power");
            return scalar(ExprNode::make_binary(ExprNode::Kind::Pow, b, e), start);
        }
        return base;
    }

    Value parse_primary() {
        const Token t = tok_;
        switch (t.kind) {
        case Tok::Number: advance(); return scalar(ExprNode::make_number(t.number), t);
        case Tok::Var: advance(); return scalar(ExprNode::make_variable(t.index), t);
        case Tok::Dx: return parse_wedge();
        case Tok::LParen: {
            advance();
            Value v = parse_sum();
            if (tok_.kind != Tok::RParen) fail("expected ')'", tok_);
            advance();
            v.line = t.line;
            v.column = t.column;
            return v;
        }
        case Tok::Ident: {
            auto f = func_from_name(t.text);
            if (!f) fail("unknown identifier '" + std::string(t.text) + "'", t);
            advance();
            if (tok_.kind != Tok::LParen) fail("expected '(' after " + std::string(t.text), tok_);
            advance();
            Value arg = parse_sum();
            if (tok_.kind != Tok::RParen) fail("expected ')'", tok_);
            advance();
            return scalar(ExprNode::make_call(*f, scalar_of(arg, t, t.text)), t);
        }
        case Tok::End: fail("unexpected end of expression", t);
        default: fail("unexpected '" + std::string(t.text) + "'", t);
        }
    }

    Value parse_wedge() {
        const Token start = tok_;
        std::vector<int> factors{tok_.index};
        advance();
        while (tok_.kind == Tok::Caret) {
            advance();
            if (tok_.kind != Tok::Dx) fail("wedge factor after '^' must be dx<i>", tok_);
            factors.push_back(tok_.index);
            advance();
        }
        Value v;
        v.degree = static_cast<int>(factors.size());
        v.line = start.line;
        v.column = start.column;
        auto s = sort_with_sign(factors, n_);
        if (s.repeated()) {
            warnings_.push_back("repeated wedge factor at line " + std::to_string(start.line) + ", column " +
                                std::to_string(start.column) + "; term is zero");
        } else {
            v.terms.emplace(*s.index, Term{nullptr, s.sign});
        }
        return v;
    }

    std::string_view text_;
    int n_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
    Token tok_;
    std::vector<std::string> warnings_;
};

}  // namespace detail

/// Parses a form of the declared degree on R^n.
inline FormExpression parse_form(std::string_view text, int n, int degree) {
    return detail::FormParser(text, n).parse(degree);
}

/// Parses a form on R^n, taking the degree from its wedge monomials.
inline FormExpression parse_form(std::string_view text, int n) {
    return detail::FormParser(text, n).parse(std::nullopt);
}

}  // namespace fluxcalc
