#include "rdme/expr.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <stdexcept>

namespace rdme {

namespace {

[[noreturn]] void fail(const std::string& text, const std::string& msg) {
    throw std::runtime_error("expr: " + msg + " in \"" + text + "\"");
}

Sign sign_add(Sign a, Sign b) {
    if (a == Sign::Unknown || b == Sign::Unknown) return Sign::Unknown;
    if (a == Sign::Positive || b == Sign::Positive) return Sign::Positive;
    return Sign::NonNegative;
}
Sign sign_mul(Sign a, Sign b) {
    if (a == Sign::Unknown || b == Sign::Unknown) return Sign::Unknown;
    if (a == Sign::Positive && b == Sign::Positive) return Sign::Positive;
    return Sign::NonNegative;
}

}  // namespace

class ExprParser {
  public:
    ExprParser(const std::string& text, const std::map<std::string, int>& species,
               const std::map<std::string, double>& constants)
        : text_(text), species_(species), constants_(constants) {}

    Expr run() {
        Expr e;
        pos_ = 0;
        const Sign top = parse_sum(e);
        skip_ws();
        if (pos_ != text_.size()) fail(text_, "unexpected trailing input");
        if (e.code_.empty()) fail(text_, "empty expression");
        int height = 0, max_height = 0;
        for (const auto& ins : e.code_) {
            const bool push = ins.op == Op::PushConst || ins.op == Op::PushSpecies ||
                              ins.op == Op::PushVol || ins.op == Op::PushCx ||
                              ins.op == Op::PushCy || ins.op == Op::PushRho;
            const bool unary = ins.op == Op::Neg || ins.op == Op::Heaviside;
            height += push ? 1 : unary ? 0 : -1;
            max_height = std::max(max_height, height);
        }
        if (max_height > 63) fail(text_, "expression too deeply nested");
        e.text_ = text_;
        e.sign_ = top;
        std::set<int> dep_set(deps_.begin(), deps_.end());
        e.deps_.assign(dep_set.begin(), dep_set.end());
        e.uses_geometry_ = uses_geometry_;
        return e;
    }

  private:
    using Op = Expr::Op;

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
    bool eat(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }

    Sign parse_sum(Expr& e) {
        Sign s = parse_product(e);
        while (true) {
            if (eat('+')) {
                const Sign rhs = parse_product(e);
                e.code_.push_back({Op::Add, 0, 0.0});
                s = sign_add(s, rhs);
            } else if (eat('-')) {
                parse_product(e);
                e.code_.push_back({Op::Sub, 0, 0.0});
                s = Sign::Unknown;
            } else {
                return s;
            }
        }
    }

    Sign parse_product(Expr& e) {
        Sign s = parse_power(e);
        while (true) {
            if (eat('*')) {
                const Sign rhs = parse_power(e);
                e.code_.push_back({Op::Mul, 0, 0.0});
                s = sign_mul(s, rhs);
            } else if (eat('/')) {
                const Sign rhs = parse_power(e);
                if (rhs != Sign::Positive)
                    fail(text_, "denominator is not provably positive");
                e.code_.push_back({Op::Div, 0, 0.0});
                // dividing by a positive quantity keeps the numerator's sign
            } else {
                return s;
            }
        }
    }

    Sign parse_power(Expr& e) {
        const Sign base = parse_unary(e);
        if (eat('^')) {
            const Sign exp = parse_power(e);   // right associative
            (void)exp;
            e.code_.push_back({Op::Pow, 0, 0.0});
            // nonnegative base keeps pow real-valued and nonnegative
            return base == Sign::Unknown ? Sign::Unknown
                   : base == Sign::Positive ? Sign::Positive
                                            : Sign::NonNegative;
        }
        return base;
    }

    Sign parse_unary(Expr& e) {
        if (eat('-')) {
            const Sign inner = parse_unary(e);
            (void)inner;
            e.code_.push_back({Op::Neg, 0, 0.0});
            return Sign::Unknown;
        }
        return parse_primary(e);
    }

    Sign parse_primary(Expr& e) {
        skip_ws();
        if (pos_ >= text_.size()) fail(text_, "unexpected end of expression");
        const char c = text_[pos_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number(e);
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_name(e);
        if (c == '(') {
            ++pos_;
            const Sign s = parse_sum(e);
            if (!eat(')')) fail(text_, "missing ')'");
            return s;
        }
        fail(text_, std::string("unexpected character '") + c + "'");
    }

    Sign parse_number(Expr& e) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() &&
               (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
            ++pos_;
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        }
        double value;
        try {
            value = std::stod(text_.substr(start, pos_ - start));
        } catch (const std::exception&) {
            fail(text_, "bad numeric literal");
        }
        e.code_.push_back({Op::PushConst, 0, value});
        return value > 0.0 ? Sign::Positive : value == 0.0 ? Sign::NonNegative : Sign::Unknown;
    }

    Sign parse_name(Expr& e) {
        const std::size_t start = pos_;
        while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                                       text_[pos_] == '_'))
            ++pos_;
        const std::string name = text_.substr(start, pos_ - start);

        if (peek() == '(') return parse_call(e, name);

        if (name == "vol") {
            e.code_.push_back({Op::PushVol, 0, 0.0});
            uses_geometry_ = true;
            return Sign::Positive;
        }
        if (name == "cx" || name == "cy" || name == "rho") {
            e.code_.push_back({name == "cx"   ? Op::PushCx
                               : name == "cy" ? Op::PushCy
                                              : Op::PushRho,
                               0, 0.0});
            uses_geometry_ = true;
            return name == "rho" ? Sign::NonNegative : Sign::Unknown;
        }
        if (auto it = constants_.find(name); it != constants_.end()) {
            e.code_.push_back({Op::PushConst, 0, it->second});
            return it->second > 0.0   ? Sign::Positive
                   : it->second == 0.0 ? Sign::NonNegative
                                       : Sign::Unknown;
        }
        if (auto it = species_.find(name); it != species_.end()) {
            e.code_.push_back({Op::PushSpecies, it->second, 0.0});
            deps_.push_back(it->second);
            return Sign::NonNegative;   // copy numbers never go negative
        }
        fail(text_, "unknown name '" + name + "'");
    }

    Sign parse_call(Expr& e, const std::string& name) {
        if (!eat('(')) fail(text_, "expected '('");
        if (name == "heaviside") {
            parse_sum(e);
            if (!eat(')')) fail(text_, "missing ')' after heaviside argument");
            e.code_.push_back({Op::Heaviside, 0, 0.0});
            return Sign::NonNegative;
        }
        if (name == "min" || name == "max") {
            const Sign a = parse_sum(e);
            if (!eat(',')) fail(text_, "expected ',' inside " + name);
            const Sign b = parse_sum(e);
            if (!eat(')')) fail(text_, "missing ')' after " + name);
            e.code_.push_back({name == "min" ? Op::Min : Op::Max, 0, 0.0});
            if (name == "min") {
                if (a == Sign::Positive && b == Sign::Positive) return Sign::Positive;
                if (a != Sign::Unknown && b != Sign::Unknown) return Sign::NonNegative;
                return Sign::Unknown;
            }
            if (a == Sign::Positive || b == Sign::Positive) return Sign::Positive;
            if (a == Sign::NonNegative || b == Sign::NonNegative) return Sign::NonNegative;
            return Sign::Unknown;
        }
        fail(text_, "unknown function '" + name + "'");
    }

    const std::string& text_;
    const std::map<std::string, int>& species_;
    const std::map<std::string, double>& constants_;
    std::size_t pos_ = 0;
    std::vector<int> deps_;
    bool uses_geometry_ = false;
};

Expr Expr::parse(const std::string& text, const std::map<std::string, int>& species_ids,
                 const std::map<std::string, double>& constants) {
    return ExprParser(text, species_ids, constants).run();
}

double Expr::eval(const EvalContext& ctx) const {
    double stack[64];
    int top = -1;
    for (const Instr& ins : code_) {
        switch (ins.op) {
            case Op::PushConst: stack[++top] = ins.value; break;
            case Op::PushSpecies: stack[++top] = ctx.species[ins.arg]; break;
            case Op::PushVol: stack[++top] = ctx.vol; break;
            case Op::PushCx: stack[++top] = ctx.cx; break;
            case Op::PushCy: stack[++top] = ctx.cy; break;
            case Op::PushRho: stack[++top] = ctx.rho; break;
            case Op::Add: stack[top - 1] += stack[top]; --top; break;
            case Op::Sub: stack[top - 1] -= stack[top]; --top; break;
            case Op::Mul: stack[top - 1] *= stack[top]; --top; break;
            case Op::Div: stack[top - 1] /= stack[top]; --top; break;
            case Op::Pow: stack[top - 1] = std::pow(stack[top - 1], stack[top]); --top; break;
            case Op::Neg: stack[top] = -stack[top]; break;
            case Op::Heaviside: stack[top] = stack[top] > 0.0 ? 1.0 : 0.0; break;
            case Op::Min: stack[top - 1] = std::min(stack[top - 1], stack[top]); --top; break;
            case Op::Max: stack[top - 1] = std::max(stack[top - 1], stack[top]); --top; break;
        }
    }
    return stack[0];
}

double eval_constant_expr(const std::string& text,
                          const std::map<std::string, double>& constants) {
    const Expr e = Expr::parse(text, {}, constants);
    if (e.depends_on_cell_geometry())
        throw std::runtime_error("expr: \"" + text + "\" must be constant but uses cell variables");
    EvalContext ctx;
    return e.eval(ctx);
}

}  // namespace rdme
