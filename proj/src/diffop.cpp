#include "actionforge/diffop.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace actionforge {

bool MultiIndex::divides(const MultiIndex& other) const {
    for (int i = 0; i < 4; ++i) {
        if (alpha[i] > other.alpha[i]) return false;
    }
    return true;
}

MultiIndex operator+(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r;
    for (int i = 0; i < 4; ++i) r.alpha[i] = a.alpha[i] + b.alpha[i];
    return r;
}

MultiIndex operator-(const MultiIndex& a, const MultiIndex& b) {
    MultiIndex r;
    for (int i = 0; i < 4; ++i) r.alpha[i] = a.alpha[i] - b.alpha[i];
    return r;
}

namespace {

void check_dim(int dim) {
    if (dim != 1 && dim != 3) {
        throw std::invalid_argument("spatial dimension must be 1 or 3, got " + std::to_string(dim));
    }
}

void check_same_dim(const DiffOp& a, const DiffOp& b) {
    if (a.dim() != b.dim()) {
        throw std::invalid_argument("operator dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                    std::to_string(b.dim()));
    }
}

}  // namespace

DiffOp::DiffOp(int dim) : dim_(dim) { check_dim(dim); }

DiffOp::DiffOp(int dim, Terms terms) : dim_(dim) {
    check_dim(dim);
    for (auto& [index, c] : terms) add_term(index, c);
}

void DiffOp::add_term(const MultiIndex& index, const QComplex& c) {
    for (int axis = dim_ + 1; axis <= 3; ++axis) {
        if (index.alpha[axis] != 0) {
            throw std::invalid_argument("derivative along axis " + std::to_string(axis) +
                                        " in a " + std::to_string(dim_) + "D operator");
        }
    }
    for (int v : index.alpha) {
        if (v < 0) throw std::invalid_argument("negative derivative order");
    }
    if (c.is_zero()) return;
    auto it = terms_.find(index);
    if (it == terms_.end()) {
        terms_.emplace(index, c);
        return;
    }
    it->second += c;
    if (it->second.is_zero()) terms_.erase(it);
}

DiffOp DiffOp::scalar(int dim, const QComplex& c) {
    return monomial(dim, MultiIndex{}, c);
}

DiffOp DiffOp::monomial(int dim, const MultiIndex& index, const QComplex& c) {
    DiffOp op(dim);
    op.add_term(index, c);
    return op;
}

DiffOp DiffOp::dt(int dim, int power) {
    return monomial(dim, MultiIndex{{power, 0, 0, 0}});
}

DiffOp DiffOp::d(int dim, int axis, int power) {
    if (axis < 1 || axis > dim) {
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for " +
                                    std::to_string(dim) + "D");
    }
    MultiIndex index;
    index.alpha[axis] = power;
    return monomial(dim, index);
}

DiffOp DiffOp::laplacian(int dim) {
    DiffOp op(dim);
    for (int axis = 1; axis <= dim; ++axis) op += d(dim, axis, 2);
    return op;
}

bool DiffOp::is_real() const {
    return std::all_of(terms_.begin(), terms_.end(), [](const auto& t) { return t.second.is_real(); });
}

int DiffOp::time_order() const {
    return terms_.empty() ? 0 : terms_.rbegin()->first.time_order();
}

int DiffOp::total_order() const {
    int order = 0;
    for (const auto& [index, c] : terms_) order = std::max(order, index.total());
    return order;
}

QComplex DiffOp::coefficient(const MultiIndex& index) const {
    auto it = terms_.find(index);
    return it == terms_.end() ? QComplex{} : it->second;
}

DiffOp DiffOp::time_slice(int m) const {
    DiffOp slice(dim_);
    for (const auto& [index, c] : terms_) {
        if (index.time_order() != m) continue;
        MultiIndex spatial = index;
        spatial.alpha[0] = 0;
        slice.add_term(spatial, c);
    }
    return slice;
}

DiffOp& DiffOp::operator+=(const DiffOp& other) {
    check_same_dim(*this, other);
    for (const auto& [index, c] : other.terms_) add_term(index, c);
    return *this;
}

DiffOp& DiffOp::operator-=(const DiffOp& other) {
    check_same_dim(*this, other);
    for (const auto& [index, c] : other.terms_) add_term(index, -c);
    return *this;
}

DiffOp& DiffOp::operator*=(const QComplex& c) {
    if (c.is_zero()) {
        terms_.clear();
        return *this;
    }
    for (auto& [index, coeff] : terms_) coeff *= c;
    return *this;
}

DiffOp operator*(const DiffOp& a, const DiffOp& b) {
    check_same_dim(a, b);
    DiffOp product(a.dim());
    for (const auto& [ia, ca] : a.terms()) {
        for (const auto& [ib, cb] : b.terms()) product.add_term(ia + ib, ca * cb);
    }
    return product;
}

DiffOp op_add(const DiffOp& a, const DiffOp& b) { return a + b; }
DiffOp op_mul(const DiffOp& a, const DiffOp& b) { return a * b; }

DiffOp power(const DiffOp& a, int exponent) {
    if (exponent < 0) throw std::invalid_argument("negative operator power");
    DiffOp result = DiffOp::identity(a.dim());
    for (int i = 0; i < exponent; ++i) result = result * a;
    return result;
}

DiffOp adjoint(const DiffOp& a) {
    DiffOp::Terms terms;
    for (const auto& [index, c] : a.terms()) {
        QComplex conj = c.conj();
        terms.emplace(index, index.total() % 2 == 0 ? conj : -conj);
    }
    return DiffOp(a.dim(), std::move(terms));
}

DiffOp time_reverse(const DiffOp& a) {
    DiffOp::Terms terms;
    for (const auto& [index, c] : a.terms()) {
        terms.emplace(index, index.time_order() % 2 == 0 ? c : -c);
    }
    return DiffOp(a.dim(), std::move(terms));
}

DiffOp normal_op(const DiffOp& a) { return adjoint(a) * a; }

std::optional<DiffOp> exact_divide(const DiffOp& n, const DiffOp& d) {
    check_same_dim(n, d);
    if (d.is_zero()) throw std::invalid_argument("exact_divide: zero divisor");
    const auto& [lead_index, lead_coeff] = *d.terms().rbegin();
    DiffOp quotient(n.dim());
    DiffOp remainder = n;
    while (!remainder.is_zero()) {
        const auto& [r_index, r_coeff] = *remainder.terms().rbegin();
        if (!lead_index.divides(r_index)) return std::nullopt;
        DiffOp step = DiffOp::monomial(n.dim(), r_index - lead_index, r_coeff / lead_coeff);
        quotient += step;
        remainder -= step * d;
    }
    return quotient;
}

cplx symbol_eval(const DiffOp& a, cplx s, std::span<const double> k) {
    if (static_cast<int>(k.size()) != a.dim()) {
        throw std::invalid_argument("symbol_eval: wavevector length does not match dimension");
    }
    const cplx I(0.0, 1.0);
    cplx total = 0.0;
    for (const auto& [index, c] : a.terms()) {
        cplx term = c.to_complex() * std::pow(s, index.alpha[0]);
        for (int axis = 1; axis <= a.dim(); ++axis) {
            term *= std::pow(I * k[axis - 1], index.alpha[axis]);
        }
        total += term;
    }
    return total;
}

QComplex symbol_eval(const DiffOp& a, const QComplex& s, std::span<const Rational> k) {
    if (static_cast<int>(k.size()) != a.dim()) {
        throw std::invalid_argument("symbol_eval: wavevector length does not match dimension");
    }
    QComplex total;
    for (const auto& [index, c] : a.terms()) {
        QComplex term = c * pow(s, index.alpha[0]);
        for (int axis = 1; axis <= a.dim(); ++axis) {
            term *= pow(QComplex(Rational(0), k[axis - 1]), index.alpha[axis]);
        }
        total += term;
    }
    return total;
}

// ---------------------------------------------------------------------------
// Operator literal parser

namespace {

struct Token {
    enum class Kind { number, ident, plus, minus, star, slash, caret, lparen, rparen, end } kind;
    std::string text;
};

std::vector<Token> tokenize(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        char c = src[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            std::size_t start = i;
            while (i < src.size() && (std::isdigit(static_cast<unsigned char>(src[i])) || src[i] == '.')) ++i;
            if (i < src.size() && (src[i] == 'e' || src[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < src.size() && (src[j] == '+' || src[j] == '-')) ++j;
                if (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) {
                    i = j;
                    while (i < src.size() && std::isdigit(static_cast<unsigned char>(src[i]))) ++i;
                }
            }
            out.push_back({Token::Kind::number, std::string(src.substr(start, i - start))});
        } else if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i;
            while (i < src.size() && (std::isalnum(static_cast<unsigned char>(src[i])) || src[i] == '_')) ++i;
            out.push_back({Token::Kind::ident, std::string(src.substr(start, i - start))});
        } else {
            Token::Kind kind;
            switch (c) {
                case '+': kind = Token::Kind::plus; break;
                case '-': kind = Token::Kind::minus; break;
                case '*': kind = Token::Kind::star; break;
                case '/': kind = Token::Kind::slash; break;
                case '^': kind = Token::Kind::caret; break;
                case '(': kind = Token::Kind::lparen; break;
                case ')': kind = Token::Kind::rparen; break;
                default:
                    throw std::invalid_argument("unexpected character '" + std::string(1, c) +
                                                "' in operator literal");
            }
            out.push_back({kind, std::string(1, c)});
            ++i;
        }
    }
    out.push_back({Token::Kind::end, ""});
    return out;
}

class Parser {
public:
    Parser(std::string_view src, int dim, const ParamMap& params)
        : source_(src), tokens_(tokenize(src)), dim_(dim), params_(params) {}

    DiffOp parse() {
        DiffOp op = expression();
        if (peek().kind != Token::Kind::end) fail("trailing input near '" + peek().text + "'");
        return op;
    }

private:
    using K = Token::Kind;

    [[noreturn]] void fail(const std::string& what) const {
        throw std::invalid_argument("operator literal '" + std::string(source_) + "': " + what);
    }
    const Token& peek() const { return tokens_[pos_]; }
    Token next() { return tokens_[pos_++]; }

    DiffOp expression() {
        DiffOp acc = term();
        while (peek().kind == K::plus || peek().kind == K::minus) {
            bool minus = next().kind == K::minus;
            DiffOp rhs = term();
            acc = minus ? acc - rhs : acc + rhs;
        }
        return acc;
    }

    static bool starts_factor(K kind) {
        return kind == K::number || kind == K::ident || kind == K::lparen;
    }

    DiffOp term() {
        bool negate = false;
        while (peek().kind == K::plus || peek().kind == K::minus) {
            if (next().kind == K::minus) negate = !negate;
        }
        DiffOp acc = factor();
        for (;;) {
            if (peek().kind == K::star) {
                next();
                acc = acc * factor();
            } else if (peek().kind == K::slash) {
                next();
                DiffOp divisor = factor();
                if (divisor.is_zero() || divisor.terms().size() != 1 ||
                    divisor.terms().begin()->first != MultiIndex{}) {
                    fail("division is only allowed by a non-zero constant");
                }
                acc = acc * (QComplex(Rational(1)) / divisor.terms().begin()->second);
            } else if (starts_factor(peek().kind)) {
                acc = acc * factor();
            } else {
                break;
            }
        }
        return negate ? -acc : acc;
    }

    DiffOp factor() {
        DiffOp base = primary();
        if (peek().kind == K::caret) {
            next();
            Token exp = next();
            if (exp.kind != K::number || exp.text.find_first_not_of("0123456789") != std::string::npos) {
                fail("exponent must be a non-negative integer");
            }
            base = power(base, std::stoi(exp.text));
        }
        return base;
    }

    DiffOp primary() {
        Token tok = next();
        switch (tok.kind) {
            case K::number:
                return DiffOp::scalar(dim_, parse_rational(tok.text));
            case K::lparen: {
                DiffOp inner = expression();
                if (next().kind != K::rparen) fail("missing ')'");
                return inner;
            }
            case K::ident:
                return identifier(tok.text);
            default:
                fail("unexpected token '" + tok.text + "'");
        }
    }

    DiffOp identifier(const std::string& name) {
        if (name == "dt") return DiffOp::dt(dim_);
        if (name == "dx") return DiffOp::d(dim_, 1);
        if (name == "dy" || name == "dz") {
            int axis = name == "dy" ? 2 : 3;
            if (axis > dim_) fail("'" + name + "' in a " + std::to_string(dim_) + "D operator");
            return DiffOp::d(dim_, axis);
        }
        if (name == "lap") return DiffOp::laplacian(dim_);
        if (name == "id") return DiffOp::identity(dim_);
        if (name == "i") return DiffOp::scalar(dim_, QComplex(Rational(0), Rational(1)));
        if (auto it = params_.find(name); it != params_.end()) return DiffOp::scalar(dim_, it->second);
        fail("unknown identifier '" + name + "'");
    }

    std::string_view source_;
    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
    int dim_;
    const ParamMap& params_;
};

std::string monomial_text(const MultiIndex& index) {
    static constexpr const char* names[4] = {"dt", "dx", "dy", "dz"};
    std::string out;
    for (int i = 0; i < 4; ++i) {
        if (index.alpha[i] == 0) continue;
        if (!out.empty()) out += ' ';
        out += names[i];
        if (index.alpha[i] > 1) out += '^' + std::to_string(index.alpha[i]);
    }
    return out;
}

}  // namespace

DiffOp parse_diffop(std::string_view text, int dim, const ParamMap& params) {
    check_dim(dim);
    return Parser(text, dim, params).parse();
}

std::string to_string(const DiffOp& a) {
    if (a.is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    for (auto it = a.terms().rbegin(); it != a.terms().rend(); ++it) {
        const auto& [index, c] = *it;
        std::string mono = monomial_text(index);
        // Pull a single overall sign out of real or purely imaginary coefficients.
        bool negative = false;
        QComplex mag = c;
        if ((c.is_real() && c.re < 0) || (c.re == 0 && c.im < 0)) {
            negative = true;
            mag = -c;
        }
        if (first) {
            if (negative) out << '-';
        } else {
            out << (negative ? " - " : " + ");
        }
        first = false;

        std::string coeff;
        if (mag.is_real()) {
            if (!(mag.re == 1 && !mono.empty())) coeff = to_string(mag.re);
        } else if (mag.re == 0) {
            coeff = mag.im == 1 ? "i" : to_string(mag.im) + " i";
        } else {
            Rational im = mag.im;
            coeff = "(" + to_string(mag.re) + (im < 0 ? " - " : " + ");
            Rational aim = im < 0 ? Rational(-im) : im;
            coeff += (aim == 1 ? std::string("i") : to_string(aim) + " i") + ")";
        }
        out << coeff;
        if (!coeff.empty() && !mono.empty()) out << ' ';
        out << mono;
    }
    return out.str();
}

// ---------------------------------------------------------------------------

double frac_delta_kernel(const Rational& alpha, double t) {
    if (alpha <= 0) throw std::invalid_argument("fractional kernel order must be positive");
    if (t <= 0.0) return 0.0;
    double a = alpha.convert_to<double>();
    return std::pow(t, a - 1.0) / std::tgamma(a);
}

double FracKernel::operator()(double t) const {
    return scale * frac_delta_kernel(alpha, t);
}

double FracKernel::derivative(int m, double t) const {
    if (alpha <= 0) throw std::invalid_argument("fractional kernel order must be positive");
    if (t <= 0.0) return 0.0;
    Rational shifted = alpha - m;
    // 1/Gamma vanishes at the non-positive integers.
    if (shifted <= 0 && denominator(shifted) == 1) return 0.0;
    double a = shifted.convert_to<double>();
    return scale * std::pow(t, a - 1.0) / std::tgamma(a);
}

}  // namespace actionforge
