#include "mlaperf/order_tree.hpp"

#include <cctype>
#include <stdexcept>

#include <fmt/format.h>

namespace mlaperf {

OrderTree OrderTree::leaf(int operand) {
    if (operand < 0) {
        throw std::invalid_argument("order tree leaf index must be non-negative");
    }
    OrderTree t;
    t.nodes_.push_back(Node{operand, -1, -1});
    return t;
}

OrderTree OrderTree::product(const OrderTree& lhs, const OrderTree& rhs) {
    OrderTree t;
    t.nodes_ = lhs.nodes_;
    const int lhs_root = static_cast<int>(t.nodes_.size()) - 1;
    const int offset = static_cast<int>(t.nodes_.size());
    for (Node n : rhs.nodes_) {
        if (n.operand < 0) {
            n.lhs += offset;
            n.rhs += offset;
        }
        t.nodes_.push_back(n);
    }
    const int rhs_root = static_cast<int>(t.nodes_.size()) - 1;
    t.nodes_.push_back(Node{-1, lhs_root, rhs_root});
    return t;
}

namespace {

class TreeParser {
public:
    explicit TreeParser(std::string_view text) : text_(text) {}

    OrderTree parse_all() {
        OrderTree t = parse_expr();
        skip_ws();
        if (pos_ != text_.size()) {
            fail("trailing characters");
        }
        return t;
    }

private:
    // expr := term ('*' term)*   (left-associative)
    OrderTree parse_expr() {
        OrderTree lhs = parse_term();
        for (;;) {
            skip_ws();
            if (pos_ < text_.size() && text_[pos_] == '*') {
                ++pos_;
                lhs = OrderTree::product(lhs, parse_term());
            } else {
                return lhs;
            }
        }
    }

    OrderTree parse_term() {
        skip_ws();
        if (pos_ >= text_.size()) {
            fail("unexpected end of input");
        }
        if (text_[pos_] == '(') {
            ++pos_;
            OrderTree inner = parse_expr();
            skip_ws();
            if (pos_ >= text_.size() || text_[pos_] != ')') {
                fail("expected ')'");
            }
            ++pos_;
            return inner;
        }
        if (!std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            fail("expected operand index");
        }
        int v = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            v = v * 10 + (text_[pos_] - '0');
            ++pos_;
        }
        return OrderTree::leaf(v);
    }

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
        }
    }

    [[noreturn]] void fail(const char* what) const {
        throw std::invalid_argument(
            fmt::format("cannot parse order tree '{}' at offset {}: {}", text_, pos_, what));
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

}  // namespace

OrderTree OrderTree::parse(std::string_view text) { return TreeParser(text).parse_all(); }

OrderTree OrderTree::left_to_right(int n) {
    if (n < 1) {
        throw std::invalid_argument("chain needs at least one operand");
    }
    OrderTree t = leaf(0);
    for (int i = 1; i < n; ++i) {
        t = product(t, leaf(i));
    }
    return t;
}

OrderTree OrderTree::from_splits(int first, int last, const std::vector<int>& preorder_splits) {
    std::size_t cursor = 0;
    auto build = [&](auto&& self, int lo, int hi) -> OrderTree {
        if (lo == hi) {
            return leaf(lo);
        }
        if (cursor >= preorder_splits.size()) {
            throw std::invalid_argument("split sequence too short");
        }
        const int k = preorder_splits[cursor++];
        if (k < lo || k >= hi) {
            throw std::invalid_argument("split point outside its interval");
        }
        OrderTree lhs = self(self, lo, k);
        OrderTree rhs = self(self, k + 1, hi);
        return product(lhs, rhs);
    };
    OrderTree t = build(build, first, last);
    if (cursor != preorder_splits.size()) {
        throw std::invalid_argument("split sequence too long");
    }
    return t;
}

void OrderTree::collect_leaves(int node, std::vector<int>& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.operand >= 0) {
        out.push_back(n.operand);
        return;
    }
    collect_leaves(n.lhs, out);
    collect_leaves(n.rhs, out);
}

std::vector<int> OrderTree::leaves() const {
    std::vector<int> out;
    if (!nodes_.empty()) {
        collect_leaves(static_cast<int>(nodes_.size()) - 1, out);
    }
    return out;
}

int OrderTree::leaf_count() const { return static_cast<int>(leaves().size()); }

void OrderTree::validate(int n) const {
    const auto l = leaves();
    bool ok = static_cast<int>(l.size()) == n;
    for (std::size_t i = 0; ok && i < l.size(); ++i) {
        ok = l[i] == static_cast<int>(i);
    }
    if (!ok) {
        throw std::invalid_argument(
            fmt::format("malformed order tree {}: leaves must be 0..{} in order", to_string(), n - 1));
    }
}

std::pair<int, int> OrderTree::collect_products(int node, std::vector<Product>& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.operand >= 0) {
        return {n.operand, n.operand};
    }
    const auto [lf, ll] = collect_products(n.lhs, out);
    const auto [rf, rl] = collect_products(n.rhs, out);
    out.push_back(Product{lf, ll, rl});
    return {lf, rl};
}

std::vector<Product> OrderTree::products() const {
    validate(leaf_count());
    std::vector<Product> out;
    collect_products(static_cast<int>(nodes_.size()) - 1, out);
    return out;
}

std::vector<int> OrderTree::split_sequence() const {
    // Post-order reversed is root-right-left; rebuild preorder explicitly.
    validate(leaf_count());
    std::vector<int> out;
    auto walk = [&](auto&& self, int node) -> int {  // returns last leaf of subtree
        const Node& n = nodes_[static_cast<std::size_t>(node)];
        if (n.operand >= 0) {
            return n.operand;
        }
        const std::size_t slot = out.size();
        out.push_back(0);
        out[slot] = self(self, n.lhs);
        return self(self, n.rhs);
    };
    walk(walk, static_cast<int>(nodes_.size()) - 1);
    return out;
}

void OrderTree::to_string(int node, std::string& out) const {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    if (n.operand >= 0) {
        out += std::to_string(n.operand);
        return;
    }
    out += '(';
    to_string(n.lhs, out);
    out += '*';
    to_string(n.rhs, out);
    out += ')';
}

std::string OrderTree::to_string() const {
    std::string out;
    if (!nodes_.empty()) {
        to_string(static_cast<int>(nodes_.size()) - 1, out);
    }
    return out;
}

}  // namespace mlaperf
