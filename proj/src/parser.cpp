#include "isores/parser.hpp"

#include <cctype>
#include <cstdlib>
#include <stdexcept>

namespace isores {

namespace {

struct Parser {
    const std::string& src;
    std::size_t pos = 0;
    const std::string angle_name;
    const int denom;

    Parser(const std::string& s, AngleVar v, int d)
        : src(s), angle_name(v == AngleVar::phi ? "phi" : "psi"), denom(d) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw std::invalid_argument("parse error at position " + std::to_string(pos) +
                                    ": " + msg);
    }

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    char peek() {
        skip_ws();
        return pos < src.size() ? src[pos] : '\0';
    }

    bool accept(char c) {
        if (peek() == c) {
            ++pos;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    bool starts_number() {
        const char c = peek();
        return std::isdigit(static_cast<unsigned char>(c)) || c == '.';
    }

    double read_number() {
        skip_ws();
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("expected a number");
        pos += static_cast<std::size_t>(end - begin);
        return v;
    }

    long read_uint() {
        skip_ws();
        if (!std::isdigit(static_cast<unsigned char>(peek()))) fail("expected an integer");
        long v = 0;
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
            v = v * 10 + (src[pos] - '0');
            ++pos;
        }
        return v;
    }

    long read_int() {
        const bool neg = accept('-');
        const long v = read_uint();
        return neg ? -v : v;
    }

    std::string read_ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < src.size() &&
               (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
            ++pos;
        if (pos == start) fail("expected an identifier");
        return src.substr(start, pos - start);
    }

    // One angle summand: integer (or integer/integer for S) frequency times a
    // variable. Accumulates into (jpsi, lnum).
    void parse_angle_term(int sign, long& jpsi, long& lnum) {
        long num = 1, den = 1;
        if (starts_number()) {
            const std::size_t num_pos = pos;
            num = read_uint();
            if (accept('/')) {
                den = read_uint();
                if (den == 0) {
                    pos = num_pos;
                    fail("zero denominator in frequency");
                }
            }
            expect('*');
        }
        const std::size_t ident_pos = pos;
        const std::string ident = read_ident();
        if (ident == "S") {
            // frequency num/den over the global denominator: lnum += num*denom/den
            if ((num * denom) % den != 0) {
                pos = ident_pos;
                fail("non-integer frequency: S coefficient " + std::to_string(num) + "/" +
                     std::to_string(den) + " is not a multiple of 1/" +
                     std::to_string(denom));
            }
            lnum += sign * (num * denom / den);
        } else if (ident == angle_name) {
            if (den != 1) {
                pos = ident_pos;
                fail("non-integer frequency on " + angle_name);
            }
            jpsi += sign * num;
        } else if (ident == "phi" || ident == "psi") {
            pos = ident_pos;
            fail("unknown identifier '" + ident + "' (this expression uses '" +
                 angle_name + "')");
        } else {
            pos = ident_pos;
            fail("unknown identifier '" + ident + "'");
        }
    }

    void parse_angle(long& jpsi, long& lnum) {
        int sign = accept('-') ? -1 : (accept('+'), 1);
        parse_angle_term(sign, jpsi, lnum);
        while (true) {
            if (accept('+'))
                sign = 1;
            else if (accept('-'))
                sign = -1;
            else
                break;
            parse_angle_term(sign, jpsi, lnum);
        }
    }

    TrigPoly parse_factor() {
        if (starts_number()) return TrigPoly::constant(read_number(), denom);
        const std::size_t ident_pos = pos;
        const std::string ident = read_ident();
        if (ident == "r") {
            long e = 1;
            if (accept('^')) e = read_int();
            return TrigPoly::constant(1.0, denom, static_cast<int>(e));
        }
        if (ident == "cos" || ident == "sin") {
            expect('(');
            long jpsi = 0, lnum = 0;
            parse_angle(jpsi, lnum);
            expect(')');
            TrigPoly base = TrigPoly::harmonic(
                1.0, 0, ident == "cos" ? TrigKind::Cos : TrigKind::Sin,
                static_cast<int>(jpsi), static_cast<int>(lnum), denom);
            if (accept('^')) {
                const long e = read_uint();
                base = base.pow(static_cast<int>(e));
            }
            return base;
        }
        pos = ident_pos;
        fail("unknown identifier '" + ident + "'");
    }

    TrigPoly parse_term() {
        TrigPoly acc = parse_factor();
        while (accept('*')) acc *= parse_factor();
        return acc;
    }

    TrigPoly parse_expr() {
        int sign = accept('-') ? -1 : (accept('+'), 1);
        TrigPoly acc = parse_term().scaled(sign);
        while (true) {
            if (accept('+'))
                sign = 1;
            else if (accept('-'))
                sign = -1;
            else
                break;
            acc += parse_term().scaled(sign);
        }
        skip_ws();
        if (pos != src.size()) fail("trailing input");
        return acc;
    }
};

}  // namespace

TrigPoly parse_expr(const std::string& src, AngleVar angle_var, int denom_s) {
    return Parser(src, angle_var, denom_s).parse_expr();
}

}  // namespace isores
