#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mlaperf {

// One binary product inside a chain: the left factor covers operands
// [first, split], the right factor covers [split + 1, last].
struct Product {
    int first = 0;
    int split = 0;
    int last = 0;

    friend bool operator==(const Product&, const Product&) = default;
};

// Parenthesization of a matrix-product chain. Leaves are operand indices;
// for a well-formed chain tree the in-order leaf sequence is 0..n-1. Trees
// can be built in any shape (including malformed ones) so that consumers can
// reject them with a structural error.
//
// Text form: "((0*1)*2)". Outer parentheses are optional when parsing.
class OrderTree {
public:
    static OrderTree leaf(int operand);
    static OrderTree product(const OrderTree& lhs, const OrderTree& rhs);
    static OrderTree parse(std::string_view text);

    // ((0*1)*2)*...*(n-1)
    static OrderTree left_to_right(int n);

    // Rebuilds the tree over [first, last] from a preorder list of split points.
    static OrderTree from_splits(int first, int last, const std::vector<int>& preorder_splits);

    [[nodiscard]] std::vector<int> leaves() const;
    [[nodiscard]] int leaf_count() const;

    // Throws std::invalid_argument unless the in-order leaves are exactly 0..n-1.
    void validate(int n) const;

    // Products in post-order (children before parents). Requires a valid tree.
    [[nodiscard]] std::vector<Product> products() const;

    // Split points in preorder; the deterministic tie-break key.
    [[nodiscard]] std::vector<int> split_sequence() const;

    [[nodiscard]] std::string to_string() const;

    friend bool operator==(const OrderTree& a, const OrderTree& b) {
        return a.to_string() == b.to_string();
    }

private:
    struct Node {
        int operand = -1;  // >= 0 for leaves
        int lhs = -1;
        int rhs = -1;
    };

    void collect_leaves(int node, std::vector<int>& out) const;
    void to_string(int node, std::string& out) const;
    // Returns {first, last} of the subtree and appends products in post-order.
    std::pair<int, int> collect_products(int node, std::vector<Product>& out) const;

    std::vector<Node> nodes_;  // root is the last node
};

}  // namespace mlaperf
