#pragma once

#include <string_view>
#include <vector>

#include "mlaperf/checked_math.hpp"
#include "mlaperf/order_tree.hpp"

namespace mlaperf {

// Where an operand of a chain lives.
enum class Residency {
    StreamedWeight,  // read from DRAM on every invocation
    Resident,        // already on chip, no DRAM traffic
    ActivationIn,    // read once
    CacheRead,       // read once; its length follows the cache
};

struct ChainOperand {
    Residency residency = Residency::StreamedWeight;
    // One copy per head (e.g. W_up^Q) versus shared by all heads (e.g. the
    // latent cache).
    bool per_head = true;
    // One copy per sequence in the batch (activations, caches) versus shared
    // by the whole batch (weights).
    bool per_sequence = false;
};

// An n-matrix chain; matrix i is dims[i] x dims[i+1] (per head, per sequence).
//
// A product is replicated head_multiplicity times if any operand it touches is
// per-head, and `batch` times if any operand it touches is per-sequence. With
// the defaults (all per-head, batch = 1) this reduces to the textbook chain
// cost times head_multiplicity.
struct ChainSpec {
    std::vector<Count> dims;
    Count head_multiplicity = 1;
    std::vector<ChainOperand> operands;
    Count batch = 1;

    // All operands streamed, per-head, batch 1.
    static ChainSpec plain(std::vector<Count> dims, Count head_multiplicity = 1);

    [[nodiscard]] int size() const { return static_cast<int>(operands.size()); }
    void validate() const;
};

// MACs of one product inside the chain, replication included.
[[nodiscard]] Count product_macs(const ChainSpec& spec, const Product& p);
// Elements of the matrix produced by operands [first, last], one copy.
[[nodiscard]] Count product_elements(const ChainSpec& spec, int first, int last);
// Replication factor (heads x sequences) of a product spanning [first, last].
[[nodiscard]] Count replication(const ChainSpec& spec, int first, int last);
// True when no operand in [first, last] is per-sequence.
[[nodiscard]] bool is_batch_shared(const ChainSpec& spec, int first, int last);

[[nodiscard]] Count chain_macs(const ChainSpec& spec, const OrderTree& order);

// All parenthesizations of an n-chain, Catalan(n-1) of them, ordered by their
// preorder split sequence. 1 <= n <= 8.
[[nodiscard]] std::vector<OrderTree> enumerate_orders(int n);

struct OptimalOrder {
    OrderTree tree;
    Count macs = 0;
};

// Matrix-chain dynamic program. Ties go to the lexicographically smallest
// preorder split sequence.
[[nodiscard]] OptimalOrder optimal_order(const ChainSpec& spec);

struct Traffic {
    Count read_bytes = 0;
    Count write_bytes = 0;

    friend bool operator==(const Traffic&, const Traffic&) = default;
};

// DRAM bytes read for one operand under its residency tag.
[[nodiscard]] Count operand_read_bytes(const ChainSpec& spec, int operand, int bytes_per_element);

// Reads are set by residency only; intermediates stay on chip; the final
// product is written once.
[[nodiscard]] Traffic chain_traffic(const ChainSpec& spec, const OrderTree& order, int bytes_per_element);

// Named orders of the 4-operand query-key chain Q_l * W_up^Q * W_up^K^T * C^T.
enum class QkOrder {
    LeftToRight,  // 1->2->3: ((0*1)*2)*3
    MiddleFirst,  // 2->1->3: (0*(1*2))*3, weight absorption
    OuterFirst,   // 1->3->2: (0*1)*(2*3), up-project the cache
};

inline constexpr QkOrder kAllQkOrders[] = {QkOrder::LeftToRight, QkOrder::MiddleFirst,
                                           QkOrder::OuterFirst};

[[nodiscard]] OrderTree qk_order_tree(QkOrder order);
[[nodiscard]] std::string_view qk_order_name(QkOrder order);
[[nodiscard]] std::string_view qk_order_label(QkOrder order);  // "1->2->3" style

}  // namespace mlaperf
