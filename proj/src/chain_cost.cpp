#include "mlaperf/chain_cost.hpp"

#include <stdexcept>

#include <fmt/format.h>

namespace mlaperf {

ChainSpec ChainSpec::plain(std::vector<Count> dims, Count head_multiplicity) {
    ChainSpec s;
    const std::size_t n = dims.empty() ? 0 : dims.size() - 1;
    s.dims = std::move(dims);
    s.head_multiplicity = head_multiplicity;
    s.operands.assign(n, ChainOperand{});
    return s;
}

void ChainSpec::validate() const {
    if (dims.size() < 2) {
        throw std::invalid_argument("chain needs at least one matrix");
    }
    if (operands.size() + 1 != dims.size()) {
        throw std::invalid_argument(fmt::format("chain has {} dims but {} operand tags", dims.size(),
                                                operands.size()));
    }
    for (const Count d : dims) {
        if (d < 1) {
            throw std::invalid_argument("chain dims must be >= 1");
        }
    }
    if (head_multiplicity < 1 || batch < 1) {
        throw std::invalid_argument("chain multiplicities must be >= 1");
    }
}

bool is_batch_shared(const ChainSpec& spec, int first, int last) {
    for (int i = first; i <= last; ++i) {
        if (spec.operands[static_cast<std::size_t>(i)].per_sequence) {
            return false;
        }
    }
    return true;
}

Count replication(const ChainSpec& spec, int first, int last) {
    bool heads = false;
    for (int i = first; i <= last; ++i) {
        heads = heads || spec.operands[static_cast<std::size_t>(i)].per_head;
    }
    const Count h = heads ? spec.head_multiplicity : 1;
    const Count b = is_batch_shared(spec, first, last) ? 1 : spec.batch;
    return checked_mul(h, b);
}

Count product_elements(const ChainSpec& spec, int first, int last) {
    return checked_mul(spec.dims[static_cast<std::size_t>(first)],
                       spec.dims[static_cast<std::size_t>(last) + 1]);
}

Count product_macs(const ChainSpec& spec, const Product& p) {
    const Count one = checked_mul(spec.dims[static_cast<std::size_t>(p.first)],
                                  spec.dims[static_cast<std::size_t>(p.split) + 1],
                                  spec.dims[static_cast<std::size_t>(p.last) + 1]);
    return checked_mul(one, replication(spec, p.first, p.last));
}

Count chain_macs(const ChainSpec& spec, const OrderTree& order) {
    spec.validate();
    order.validate(spec.size());
    Count total = 0;
    for (const auto& p : order.products()) {
        total = checked_add(total, product_macs(spec, p));
    }
    return total;
}

std::vector<OrderTree> enumerate_orders(int n) {
    if (n < 1 || n > 8) {
        throw std::out_of_range(fmt::format("enumerate_orders supports 1..8 operands, got {}", n));
    }
    auto build = [](auto&& self, int lo, int hi) -> std::vector<OrderTree> {
        if (lo == hi) {
            return {OrderTree::leaf(lo)};
        }
        std::vector<OrderTree> out;
        for (int k = lo; k < hi; ++k) {
            const auto lhs = self(self, lo, k);
            const auto rhs = self(self, k + 1, hi);
            for (const auto& l : lhs) {
                for (const auto& r : rhs) {
                    out.push_back(OrderTree::product(l, r));
                }
            }
        }
        return out;
    };
    return build(build, 0, n - 1);
}

OptimalOrder optimal_order(const ChainSpec& spec) {
    spec.validate();
    const int n = spec.size();
    if (n < 2) {
        throw std::invalid_argument("optimal_order needs a chain of at least 2 matrices");
    }
    const auto idx = [n](int i, int j) { return static_cast<std::size_t>(i * n + j); };
    std::vector<Count> cost(static_cast<std::size_t>(n * n), 0);
    std::vector<int> best_split(static_cast<std::size_t>(n * n), -1);

    for (int len = 2; len <= n; ++len) {
        for (int i = 0; i + len - 1 < n; ++i) {
            const int j = i + len - 1;
            Count best = -1;
            for (int k = i; k < j; ++k) {
                const Count c = checked_add(checked_add(cost[idx(i, k)], cost[idx(k + 1, j)]),
                                            product_macs(spec, Product{i, k, j}));
                // Strict comparison keeps the smallest split on ties.
                if (best < 0 || c < best) {
                    best = c;
                    best_split[idx(i, j)] = k;
                }
            }
            cost[idx(i, j)] = best;
        }
    }

    std::vector<int> splits;
    auto collect = [&](auto&& self, int i, int j) -> void {
        if (i == j) {
            return;
        }
        const int k = best_split[idx(i, j)];
        splits.push_back(k);
        self(self, i, k);
        self(self, k + 1, j);
    };
    collect(collect, 0, n - 1);
    return OptimalOrder{OrderTree::from_splits(0, n - 1, splits), cost[idx(0, n - 1)]};
}

Count operand_read_bytes(const ChainSpec& spec, int operand, int bytes_per_element) {
    const auto& op = spec.operands[static_cast<std::size_t>(operand)];
    if (op.residency == Residency::Resident) {
        return 0;
    }
    return checked_mul(product_elements(spec, operand, operand), replication(spec, operand, operand),
                       static_cast<Count>(bytes_per_element));
}

Traffic chain_traffic(const ChainSpec& spec, const OrderTree& order, int bytes_per_element) {
    spec.validate();
    order.validate(spec.size());
    Traffic t;
    for (int i = 0; i < spec.size(); ++i) {
        t.read_bytes = checked_add(t.read_bytes, operand_read_bytes(spec, i, bytes_per_element));
    }
    const int last = spec.size() - 1;
    t.write_bytes = checked_mul(product_elements(spec, 0, last), replication(spec, 0, last),
                                static_cast<Count>(bytes_per_element));
    return t;
}

OrderTree qk_order_tree(QkOrder order) {
    switch (order) {
        case QkOrder::LeftToRight: return OrderTree::parse("((0*1)*2)*3");
        case QkOrder::MiddleFirst: return OrderTree::parse("(0*(1*2))*3");
        case QkOrder::OuterFirst: return OrderTree::parse("(0*1)*(2*3)");
    }
    throw std::invalid_argument("unknown QK order");
}

std::string_view qk_order_name(QkOrder order) {
    switch (order) {
        case QkOrder::LeftToRight: return "l2r";
        case QkOrder::MiddleFirst: return "mid_first";
        case QkOrder::OuterFirst: return "outer_first";
    }
    return "?";
}

std::string_view qk_order_label(QkOrder order) {
    switch (order) {
        case QkOrder::LeftToRight: return "1->2->3";
        case QkOrder::MiddleFirst: return "2->1->3";
        case QkOrder::OuterFirst: return "1->3->2";
    }
    return "?";
}

}  // namespace mlaperf
