#include "actionforge/rational.hpp"

#include <cctype>
#include <stdexcept>

namespace actionforge {

QComplex pow(const QComplex& base, int exponent) {
    if (exponent < 0) {
        throw std::invalid_argument("negative exponent for exact complex power");
    }
    QComplex result(Rational(1));
    QComplex b = base;
    while (exponent > 0) {
        if (exponent & 1) result *= b;
        b *= b;
        exponent >>= 1;
    }
    return result;
}

Rational parse_rational(std::string_view text) {
    auto fail = [&] { throw std::invalid_argument("malformed rational: '" + std::string(text) + "'"); };
    if (auto slash = text.find('/'); slash != std::string_view::npos) {
        Rational num = parse_rational(text.substr(0, slash));
        Rational den = parse_rational(text.substr(slash + 1));
        if (den == 0) throw std::invalid_argument("zero denominator in '" + std::string(text) + "'");
        return num / den;
    }
    std::size_t pos = 0;
    bool negative = false;
    if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
        negative = text[pos] == '-';
        ++pos;
    }
    boost::multiprecision::cpp_int mantissa = 0;
    int frac_digits = 0;
    bool any_digit = false;
    bool seen_point = false;
    for (; pos < text.size(); ++pos) {
        char c = text[pos];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            mantissa = mantissa * 10 + (c - '0');
            any_digit = true;
            if (seen_point) ++frac_digits;
        } else if (c == '.' && !seen_point) {
            seen_point = true;
        } else {
            break;
        }
    }
    if (!any_digit) fail();
    long exponent = 0;
    if (pos < text.size() && (text[pos] == 'e' || text[pos] == 'E')) {
        ++pos;
        bool exp_negative = false;
        if (pos < text.size() && (text[pos] == '+' || text[pos] == '-')) {
            exp_negative = text[pos] == '-';
            ++pos;
        }
        if (pos >= text.size()) fail();
        for (; pos < text.size(); ++pos) {
            if (!std::isdigit(static_cast<unsigned char>(text[pos]))) fail();
            exponent = exponent * 10 + (text[pos] - '0');
            if (exponent > 4000) fail();
        }
        if (exp_negative) exponent = -exponent;
    }
    if (pos != text.size()) fail();
    exponent -= frac_digits;
    Rational value(mantissa);
    boost::multiprecision::cpp_int scale = 1;
    for (long e = 0; e < (exponent < 0 ? -exponent : exponent); ++e) scale *= 10;
    value = exponent < 0 ? value / Rational(scale) : value * Rational(scale);
    return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& r) {
    return r.str();
}

}  // namespace actionforge
