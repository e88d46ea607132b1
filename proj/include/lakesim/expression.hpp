#pragma once

#include <memory>
#include <string>
#include <vector>

namespace lakesim {

// Arithmetic expressions over named variables: + - * / ^, unary minus,
// parentheses, pi, and the functions sin cos tan exp log sqrt abs tanh
// atan2 min max. Errors are ConfigError with the column inside the text
// shifted by column_offset.
class Expression {
public:
    Expression() = default;
    static Expression parse(const std::string& text, const std::vector<std::string>& variables, int line = 0,
                            int column_offset = 1);

    double eval(const std::vector<double>& values) const;
    bool uses(const std::string& variable) const;
    bool constant() const;
    const std::string& text() const { return text_; }

    struct Node;

private:
    std::string text_;
    std::vector<std::string> vars_;
    std::vector<bool> used_;
    std::shared_ptr<const Node> root_;
};

}  // namespace lakesim
