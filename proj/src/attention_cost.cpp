#include "mlaperf/attention_cost.hpp"

#include <algorithm>
#include <stdexcept>

#include <fmt/format.h>

namespace mlaperf {
namespace {

class Ledger {
public:
    explicit Ledger(CostReport& r) : r_(r) {}

    void macs(Stage s, Count v) { r_.stage(s).macs = checked_add(r_.stage(s).macs, v); }
    void read(Stage s, Count v) { r_.stage(s).read_bytes = checked_add(r_.stage(s).read_bytes, v); }
    void write(Stage s, Count v) { r_.stage(s).write_bytes = checked_add(r_.stage(s).write_bytes, v); }
    void intermediate(Count bytes) {
        r_.largest_intermediate_bytes = std::max(r_.largest_intermediate_bytes, bytes);
    }

    void finish() {
        for (const auto& s : r_.breakdown) {
            r_.macs = checked_add(r_.macs, s.macs);
            r_.dram_read_bytes = checked_add(r_.dram_read_bytes, s.read_bytes);
            r_.dram_write_bytes = checked_add(r_.dram_write_bytes, s.write_bytes);
        }
    }

private:
    CostReport& r_;
};

// Direct child leaves of a product.
template <class F>
void for_each_leaf_child(const Product& p, F&& f) {
    if (p.first == p.split) {
        f(p.first);
    }
    if (p.split + 1 == p.last) {
        f(p.last);
    }
}

// Charges every product and leaf read of a chain to the stage `stage_of`
// picks. `final_is_output` marks chains whose root is the layer output rather
// than an on-chip intermediate.
template <class StageOf>
void charge_chain(Ledger& ledger, CostReport& report, const ChainSpec& spec, const OrderTree& tree, int bpe,
                  bool final_is_output, StageOf&& stage_of) {
    tree.validate(spec.size());
    const auto products = tree.products();
    for (std::size_t i = 0; i < products.size(); ++i) {
        const auto& p = products[i];
        const Stage stage = stage_of(spec, p);
        ledger.macs(stage, product_macs(spec, p));
        for_each_leaf_child(p, [&](int operand) { ledger.read(stage, operand_read_bytes(spec, operand, bpe)); });

        const bool is_root = i + 1 == products.size();
        if (!(is_root && final_is_output)) {
            ledger.intermediate(checked_mul(product_elements(spec, p.first, p.last), static_cast<Count>(bpe)));
        }
        if (is_batch_shared(spec, p.first, p.last)) {
            report.recomputed_weight_bytes =
                checked_add(report.recomputed_weight_bytes,
                            checked_mul(product_elements(spec, p.first, p.last),
                                        replication(spec, p.first, p.last), static_cast<Count>(bpe)));
        }
    }
}

Count cache_write_tokens(const Workload& w, const CountOptions& opts) {
    if (w.phase() == Phase::Prefill && !opts.count_prefill_cache_writes) {
        return 0;
    }
    return checked_mul(w.batch(), w.new_tokens());
}

void mha_cost(const AttentionConfig& cfg, const Workload& w, const CountOptions& opts, CostReport& r) {
    Ledger ledger(r);
    const Count d = cfg.d_model;
    const Count h = cfg.n_heads;
    const Count bpe = w.bytes_per_element();
    const Count B = w.batch();
    const Count Lq = w.query_len();
    const Count N = w.span();
    const Count T = w.cached_len();
    const Count M = checked_mul(B, Lq);

    const Count qkv_width = checked_add(2 * cfg.d_qk, cfg.d_v);
    ledger.macs(Stage::DownProj, checked_mul(M, d, h, qkv_width));
    ledger.read(Stage::DownProj, checked_mul(h, d, qkv_width, bpe));
    ledger.read(Stage::DownProj, checked_mul(M, d, bpe));

    ledger.macs(Stage::Scores, checked_mul(B, h, Lq, N, cfg.d_qk));
    ledger.read(Stage::Scores, checked_mul(B, T, h, cfg.d_qk, bpe));

    ledger.macs(Stage::Context, checked_mul(B, h, Lq, N, cfg.d_v));
    ledger.read(Stage::Context, checked_mul(B, T, h, cfg.d_v, bpe));

    ledger.macs(Stage::OutProj, checked_mul(M, h, cfg.d_v, d));
    ledger.read(Stage::OutProj, checked_mul(h, cfg.d_v, d, bpe));
    ledger.write(Stage::OutProj, checked_mul(M, d, bpe));

    ledger.write(Stage::CacheUpdate,
                 checked_mul(cache_write_tokens(w, opts), h, checked_add(cfg.d_qk, cfg.d_v), bpe));

    // Per head and sequence: Q, the score block and the context rows.
    ledger.intermediate(checked_mul(Lq, cfg.d_qk, bpe));
    ledger.intermediate(checked_mul(Lq, N, bpe));
    ledger.intermediate(checked_mul(Lq, cfg.d_v, bpe));

    r.vector_ops = checked_mul(static_cast<Count>(opts.softmax_ops_per_element), h, B, Lq, N);
    ledger.finish();
}

void mla_cost(const AttentionConfig& cfg, const SchemeId& scheme, const Workload& w, const CountOptions& opts,
              CostReport& r) {
    Ledger ledger(r);
    const Count d = cfg.d_model;
    const Count h = cfg.n_heads;
    const Count dql = cfg.q_latent();
    const Count dkv = cfg.kv_latent();
    const int bpe = w.bytes_per_element();
    const Count B = w.batch();
    const Count Lq = w.query_len();
    const Count N = w.span();
    const Count T = w.cached_len();
    const Count M = checked_mul(B, Lq);

    ledger.macs(Stage::DownProj, checked_mul(M, d, checked_add(dql, dkv)));
    ledger.read(Stage::DownProj, checked_mul(d, checked_add(dql, dkv), bpe));
    ledger.read(Stage::DownProj, checked_mul(M, d, bpe));
    ledger.intermediate(checked_mul(Lq, dql, bpe));

    const ChainSpec qk = qk_chain(cfg, scheme.tag, w);
    const OrderTree qk_tree = scheme.qk_order.value_or(default_qk_order(scheme.tag));
    charge_chain(ledger, r, qk, qk_tree, bpe, false, qk_product_stage);
    r.qk_order = qk_tree.to_string();

    // Only the T previously cached latent rows come from DRAM; the new rows
    // were produced on chip by the down-projection.
    ledger.read(Stage::Scores, checked_mul(B, T, dkv, bpe));

    const ChainSpec out = out_chain(cfg, w);
    const OrderTree out_tree = scheme.out_order ? *scheme.out_order : optimal_order(out).tree;
    charge_chain(ledger, r, out, out_tree, bpe, true, out_product_stage);
    r.out_order = out_tree.to_string();
    ledger.write(Stage::OutProj, checked_mul(M, d, bpe));

    ledger.write(Stage::CacheUpdate, checked_mul(cache_write_tokens(w, opts), dkv, bpe));

    r.vector_ops = checked_mul(static_cast<Count>(opts.softmax_ops_per_element), h, B, Lq, N);
    ledger.finish();
}

}  // namespace

Count CostReport::ops(const CountOptions& opts) const {
    const Count matmul_ops = checked_mul(Count{2}, macs);
    return opts.include_vector_ops ? checked_add(matmul_ops, vector_ops) : matmul_ops;
}

ChainSpec qk_chain(const AttentionConfig& cfg, SchemeTag tag, const Workload& w) {
    const ChainOperand q_latent{Residency::Resident, false, true};
    const ChainOperand weight{Residency::StreamedWeight, true, false};
    const ChainOperand cache{Residency::Resident, false, true};

    ChainSpec s;
    s.head_multiplicity = cfg.n_heads;
    s.batch = w.batch();
    if (tag == SchemeTag::MlaRc) {
        s.dims = {w.query_len(), cfg.q_latent(), cfg.d_qk, cfg.kv_latent(), w.span()};
        s.operands = {q_latent, weight, weight, cache};
    } else if (tag == SchemeTag::MlaRu) {
        s.dims = {w.query_len(), cfg.q_latent(), cfg.kv_latent(), w.span()};
        s.operands = {q_latent, weight, cache};
    } else {
        throw std::invalid_argument("QK chain is only defined for MLA schemes");
    }
    return s;
}

ChainSpec out_chain(const AttentionConfig& cfg, const Workload& w) {
    ChainSpec s;
    s.head_multiplicity = cfg.n_heads;
    s.batch = w.batch();
    s.dims = {w.query_len(), w.span(), cfg.kv_latent(), cfg.d_v, cfg.d_model};
    s.operands = {
        ChainOperand{Residency::Resident, true, true},         // attention probabilities S
        ChainOperand{Residency::Resident, false, true},        // latent cache C
        ChainOperand{Residency::StreamedWeight, true, false},  // W_up^V
        ChainOperand{Residency::StreamedWeight, true, false},  // rows of W^O for this head
    };
    return s;
}

OrderTree default_qk_order(SchemeTag tag) {
    if (tag == SchemeTag::MlaRc) {
        return qk_order_tree(QkOrder::MiddleFirst);
    }
    if (tag == SchemeTag::MlaRu) {
        return OrderTree::left_to_right(3);
    }
    throw std::invalid_argument("QK order is only defined for MLA schemes");
}

Stage qk_product_stage(const ChainSpec& qk, const Product& p) {
    if (p.last == qk.size() - 1) {
        return Stage::Scores;
    }
    if (is_batch_shared(qk, p.first, p.last)) {
        return Stage::AbsorbRecompute;
    }
    return Stage::QTransform;
}

Stage out_product_stage(const ChainSpec& out, const Product& p) {
    if (p.first == 0 && p.last == out.size() - 1) {
        return Stage::OutProj;
    }
    if (is_batch_shared(out, p.first, p.last)) {
        return Stage::AbsorbRecompute;
    }
    if (p.first == 0 && p.last == 1) {
        return Stage::Context;
    }
    return Stage::UpV;
}

CostReport layer_cost(const AttentionConfig& cfg, const SchemeId& scheme, const Workload& w,
                      const CountOptions& opts) {
    check_compatible(cfg, scheme);
    if (opts.softmax_ops_per_element < 0) {
        throw std::invalid_argument("softmax_ops_per_element must be non-negative");
    }
    if (w.new_tokens() < 1) {
        throw std::invalid_argument("workload produces no new tokens");
    }
    CostReport r;
    r.scheme = scheme.tag;
    r.phase = w.phase();
    r.length = w.length();
    r.batch = w.batch();
    r.bytes_per_element = w.bytes_per_element();
    r.tokens = checked_mul(w.batch(), w.new_tokens());
    if (cfg.is_mla()) {
        mla_cost(cfg, scheme, w, opts, r);
    } else {
        mha_cost(cfg, w, opts, r);
    }
    return r;
}

OpIntensity operational_intensity(const CostReport& r, const CountOptions& opts) {
    const Count bytes = r.total_bytes();
    if (bytes <= 0) {
        throw std::invalid_argument("operational intensity of a report with no DRAM traffic");
    }
    return OpIntensity{r.ops(opts), bytes};
}

std::vector<QkOrderRow> qk_order_sweep(const AttentionConfig& cfg, const Workload& w, bool exhaustive) {
    cfg.validate();
    if (!cfg.is_mla()) {
        throw std::invalid_argument("qk_order_sweep needs an MLA config");
    }
    const ChainSpec spec = qk_chain(cfg, SchemeTag::MlaRc, w);
    const OptimalOrder best = optimal_order(spec);

    auto name_of = [](const OrderTree& t) -> std::pair<std::string, std::string> {
        for (const auto o : kAllQkOrders) {
            if (qk_order_tree(o) == t) {
                return {std::string(qk_order_name(o)), std::string(qk_order_label(o))};
            }
        }
        return {"enumerated", ""};
    };

    std::vector<QkOrderRow> rows;
    if (exhaustive) {
        for (const auto& t : enumerate_orders(spec.size())) {
            const Count macs = chain_macs(spec, t);
            auto [name, label] = name_of(t);
            rows.push_back({name, label, t.to_string(), macs, macs == best.macs});
        }
    } else {
        for (const auto o : kAllQkOrders) {
            const auto t = qk_order_tree(o);
            const Count macs = chain_macs(spec, t);
            rows.push_back({std::string(qk_order_name(o)), std::string(qk_order_label(o)), t.to_string(), macs,
                            macs == best.macs});
        }
    }
    rows.push_back({"optimal", name_of(best.tree).second, best.tree.to_string(), best.macs, true});
    return rows;
}

}  // namespace mlaperf
