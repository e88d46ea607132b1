#include "lakesim/expression.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>

#include "lakesim/errors.hpp"

namespace lakesim {

struct Expression::Node {
    enum Kind { number, variable, neg, add, sub, mul, div, pow, call } kind = number;
    double value = 0.0;
    int index = 0;
    std::string fn;
    std::vector<std::shared_ptr<const Node>> args;
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

struct FnSpec {
    const char* name;
    int arity;
};

constexpr FnSpec kFunctions[] = {{"sin", 1},  {"cos", 1},  {"tan", 1},  {"exp", 1},   {"log", 1},
                                 {"sqrt", 1}, {"abs", 1},  {"tanh", 1}, {"atan2", 2}, {"min", 2},
                                 {"max", 2}};

class Parser {
public:
    Parser(const std::string& text, const std::vector<std::string>& vars, int line, int offset)
        : s_(text), vars_(vars), used_(vars.size(), false), line_(line), offset_(offset) {}

    NodePtr run() {
        NodePtr n = expr();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return n;
    }
    std::vector<bool> used() const { return used_; }

private:
    [[noreturn]] void fail(const std::string& msg, std::size_t at) const {
        throw ConfigError(msg, line_, offset_ + static_cast<int>(at));
    }
    [[noreturn]] void fail(const std::string& msg) const { fail(msg, pos_); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }
    bool accept(char c) {
        skip();
        if (pos_ < s_.size() && s_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    static NodePtr make(Expression::Node::Kind k, std::vector<NodePtr> args) {
        auto n = std::make_shared<Expression::Node>();
        n->kind = k;
        n->args = std::move(args);
        return n;
    }

    NodePtr expr() {
        NodePtr lhs = term();
        for (;;) {
            if (accept('+')) lhs = make(Expression::Node::add, {lhs, term()});
            else if (accept('-')) lhs = make(Expression::Node::sub, {lhs, term()});
            else return lhs;
        }
    }
    NodePtr term() {
        NodePtr lhs = unary();
        for (;;) {
            if (accept('*')) lhs = make(Expression::Node::mul, {lhs, unary()});
            else if (accept('/')) lhs = make(Expression::Node::div, {lhs, unary()});
            else return lhs;
        }
    }
    NodePtr unary() {
        if (accept('-')) return make(Expression::Node::neg, {unary()});
        if (accept('+')) return unary();
        return power();
    }
    NodePtr power() {
        NodePtr base = primary();
        if (accept('^')) return make(Expression::Node::pow, {base, unary()});
        return base;
    }
    NodePtr primary() {
        skip();
        if (pos_ >= s_.size()) fail("unexpected end of expression");
        const char c = s_[pos_];
        if (accept('(')) {
            NodePtr n = expr();
            if (!accept(')')) fail("expected ')'");
            return n;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
            const char* begin = s_.c_str() + pos_;
            char* end = nullptr;
            const double v = std::strtod(begin, &end);
            if (end == begin) fail("malformed number");
            pos_ += static_cast<std::size_t>(end - begin);
            auto n = std::make_shared<Expression::Node>();
            n->kind = Expression::Node::number;
            n->value = v;
            return n;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            const std::size_t start = pos_;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
            const std::string name = s_.substr(start, pos_ - start);
            skip();
            if (pos_ < s_.size() && s_[pos_] == '(') {
                int arity = -1;
                for (const FnSpec& f : kFunctions)
                    if (name == f.name) arity = f.arity;
                if (arity < 0) fail("unknown function '" + name + "'", start);
                ++pos_;
                std::vector<NodePtr> args{expr()};
                while (accept(',')) args.push_back(expr());
                if (!accept(')')) fail("expected ')'");
                if (static_cast<int>(args.size()) != arity)
                    fail("function '" + name + "' takes " + std::to_string(arity) + " argument(s)", start);
                auto n = std::make_shared<Expression::Node>();
                n->kind = Expression::Node::call;
                n->fn = name;
                n->args = std::move(args);
                return n;
            }
            auto n = std::make_shared<Expression::Node>();
            if (name == "pi") {
                n->kind = Expression::Node::number;
                n->value = M_PI;
                return n;
            }
            for (std::size_t k = 0; k < vars_.size(); ++k)
                if (vars_[k] == name) {
                    used_[k] = true;
                    n->kind = Expression::Node::variable;
                    n->index = static_cast<int>(k);
                    return n;
                }
            fail("undefined variable '" + name + "'", start);
        }
        fail("unexpected '" + std::string(1, c) + "'");
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    std::vector<bool> used_;
    int line_;
    int offset_;
    std::size_t pos_ = 0;
};

double evaluate(const Expression::Node& n, const std::vector<double>& v) {
    using K = Expression::Node;
    switch (n.kind) {
        case K::number: return n.value;
        case K::variable: return v[n.index];
        case K::neg: return -evaluate(*n.args[0], v);
        case K::add: return evaluate(*n.args[0], v) + evaluate(*n.args[1], v);
        case K::sub: return evaluate(*n.args[0], v) - evaluate(*n.args[1], v);
        case K::mul: return evaluate(*n.args[0], v) * evaluate(*n.args[1], v);
        case K::div: return evaluate(*n.args[0], v) / evaluate(*n.args[1], v);
        case K::pow: return std::pow(evaluate(*n.args[0], v), evaluate(*n.args[1], v));
        case K::call: break;
    }
    const double a = evaluate(*n.args[0], v);
    const std::string& f = n.fn;
    if (f == "sin") return std::sin(a);
    if (f == "cos") return std::cos(a);
    if (f == "tan") return std::tan(a);
    if (f == "exp") return std::exp(a);
    if (f == "log") return std::log(a);
    if (f == "sqrt") return std::sqrt(a);
    if (f == "abs") return std::abs(a);
    if (f == "tanh") return std::tanh(a);
    const double b = evaluate(*n.args[1], v);
    if (f == "atan2") return std::atan2(a, b);
    if (f == "min") return std::min(a, b);
    return std::max(a, b);
}

}  // namespace

Expression Expression::parse(const std::string& text, const std::vector<std::string>& variables, int line,
                             int column_offset) {
    Parser p(text, variables, line, column_offset);
    Expression e;
    e.root_ = p.run();
    e.text_ = text;
    e.vars_ = variables;
    e.used_ = p.used();
    return e;
}

double Expression::eval(const std::vector<double>& values) const {
    if (!root_) return 0.0;
    return evaluate(*root_, values);
}

bool Expression::uses(const std::string& variable) const {
    for (std::size_t k = 0; k < vars_.size(); ++k)
        if (vars_[k] == variable) return used_[k];
    return false;
}

bool Expression::constant() const {
    for (bool u : used_)
        if (u) return false;
    return true;
}

}  // namespace lakesim
