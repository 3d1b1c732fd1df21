#include "bnptrial/mixture_parser.hpp"

#include <cctype>
#include <charconv>
#include <vector>

namespace bnptrial {

namespace {

class Parser {
   public:
    explicit Parser(const std::string& s) : s_(s) {}

    TruthSpec parse() {
        std::vector<double> weights;
        std::vector<Component> comps;
        skip_ws();
        if (at_end()) fail("empty mixture");
        while (true) {
            double w = 1.0;
            skip_ws();
            if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
                w = number();
                expect('*');
            }
            weights.push_back(w);
            comps.push_back(term());
            skip_ws();
            if (at_end()) break;
            expect('+');
        }
        try {
            return TruthSpec(std::move(weights), std::move(comps));
        } catch (const std::invalid_argument& e) {
            throw MixtureParseError(e.what(), s_.size());
        }
    }

   private:
    const std::string& s_;
    std::size_t pos_ = 0;

    bool at_end() const { return pos_ >= s_.size(); }
    char peek() const { return at_end() ? '\0' : s_[pos_]; }
    void skip_ws() {
        while (!at_end() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw MixtureParseError(msg, pos_); }

    void expect(char c) {
        skip_ws();
        if (peek() != c) fail(std::string("expected '") + c + "'");
        ++pos_;
    }

    double number() {
        skip_ws();
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
        if (ec != std::errc()) fail("expected a number");
        pos_ = static_cast<std::size_t>(ptr - s_.data());
        return v;
    }

    std::string ident() {
        skip_ws();
        const std::size_t start = pos_;
        while (!at_end() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        if (start == pos_) fail("expected a component name");
        return s_.substr(start, pos_ - start);
    }

    std::vector<double> args(std::size_t n) {
        std::vector<double> out;
        expect('(');
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) expect(',');
            out.push_back(number());
        }
        expect(')');
        return out;
    }

    Component term() {
        const std::size_t start = pos_;
        const std::string name = ident();
        if (name == "zero") return PointMassZero{};
        if (name == "normal") {
            auto a = args(2);
            return NormalY{a[0], a[1]};
        }
        if (name == "exp") {
            auto a = args(1);
            return ExponentialY{a[0]};
        }
        if (name == "weibull") {
            auto a = args(2);
            return WeibullY{a[0], a[1]};
        }
        pos_ = start;
        skip_ws();
        fail("unknown component '" + name + "'");
    }
};

}  // namespace

TruthSpec parse_mixture(const std::string& text) { return Parser(text).parse(); }

}  // namespace bnptrial
