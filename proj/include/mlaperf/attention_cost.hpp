#pragma once

#include <array>
#include <string>
#include <vector>

#include "mlaperf/chain_cost.hpp"
#include "mlaperf/core_config.hpp"

namespace mlaperf {

struct CountOptions {
    // Vector work per attention-score element: max-subtract, exp, sum, divide
    // and the 1/sqrt(D_QK) scale.
    int softmax_ops_per_element = 5;
    // Add vector_ops to the operation total (OI, roofline). Off by default so
    // totals cover matrix products only.
    bool include_vector_ops = false;
    // Charge DRAM writes for the K/V (or latent) rows produced during prefill.
    bool count_prefill_cache_writes = true;
};

struct StageCost {
    Count macs = 0;
    Count read_bytes = 0;
    Count write_bytes = 0;

    friend bool operator==(const StageCost&, const StageCost&) = default;
};

struct CostReport {
    SchemeTag scheme = SchemeTag::MlaRc;
    Phase phase = Phase::Decode;
    Count length = 0;  // L (prefill) or T (decode)
    Count batch = 1;
    int bytes_per_element = Workload::kDefaultBytesPerElement;
    Count tokens = 0;  // tokens produced per invocation: batch x new tokens

    Count macs = 0;
    Count vector_ops = 0;
    Count dram_read_bytes = 0;
    Count dram_write_bytes = 0;
    std::array<StageCost, kAllStages.size()> breakdown{};

    // Parenthesizations used for the MLA chains (empty for MHA).
    std::string qk_order;
    std::string out_order;

    // Largest on-chip tensor at per-head, per-sequence granularity.
    Count largest_intermediate_bytes = 0;
    // Footprint of all heads' recomputed weight products (e.g. the absorbed
    // W_up^Q W_up^K^T of the recompute scheme); 0 when nothing is recomputed.
    Count recomputed_weight_bytes = 0;

    [[nodiscard]] const StageCost& stage(Stage s) const { return breakdown[static_cast<std::size_t>(s)]; }
    [[nodiscard]] StageCost& stage(Stage s) { return breakdown[static_cast<std::size_t>(s)]; }
    [[nodiscard]] Count total_bytes() const { return checked_add(dram_read_bytes, dram_write_bytes); }
    // Operations with 1 MAC = 2 ops, plus vector work when enabled.
    [[nodiscard]] Count ops(const CountOptions& opts) const;
};

// Full cost of one attention layer invocation. Weights are streamed once per
// invocation and shared by the whole batch; activations, scores and caches
// scale with the batch. Prefill scores are counted over the full L x L square.
[[nodiscard]] CostReport layer_cost(const AttentionConfig& cfg, const SchemeId& scheme, const Workload& w,
                                    const CountOptions& opts = {});

// The QK chain (Q_l, W_up^Q, W_up^K^T, C^T) for the recompute scheme or
// (Q_l, W_absorb, C^T) for the reuse scheme, as laid out inside a layer.
[[nodiscard]] ChainSpec qk_chain(const AttentionConfig& cfg, SchemeTag tag, const Workload& w);
// The output chain (S, C, W_up^V, W^O).
[[nodiscard]] ChainSpec out_chain(const AttentionConfig& cfg, const Workload& w);
[[nodiscard]] OrderTree default_qk_order(SchemeTag tag);

// Stage charged for a product of each chain.
[[nodiscard]] Stage qk_product_stage(const ChainSpec& qk, const Product& p);
[[nodiscard]] Stage out_product_stage(const ChainSpec& out, const Product& p);

// Operations over DRAM bytes, kept as an exact ratio.
struct OpIntensity {
    Count ops = 0;
    Count bytes = 0;

    [[nodiscard]] double value() const { return static_cast<double>(ops) / static_cast<double>(bytes); }
};

[[nodiscard]] OpIntensity operational_intensity(const CostReport& r, const CountOptions& opts = {});

struct QkOrderRow {
    std::string name;  // l2r / mid_first / outer_first / optimal / enumerated
    std::string label;
    std::string tree;
    Count macs = 0;
    bool optimal = false;
};

// MAC counts of the QK chain under the three named orders followed by the
// optimal one; with exhaustive = true every parenthesization is listed.
[[nodiscard]] std::vector<QkOrderRow> qk_order_sweep(const AttentionConfig& cfg, const Workload& w,
                                                     bool exhaustive = false);

}  // namespace mlaperf
