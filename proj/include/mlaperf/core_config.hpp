#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "mlaperf/checked_math.hpp"
#include "mlaperf/order_tree.hpp"

namespace mlaperf {

enum class VariantKind { Mha, Mla };

// Dimensional hyperparameters of one attention layer. Weight tensors are only
// ever represented through products of these dimensions in the cost path.
struct AttentionConfig {
    VariantKind variant_kind = VariantKind::Mha;
    Count d_model = 0;
    Count n_heads = 0;
    Count d_qk = 0;
    Count d_v = 0;
    std::optional<Count> d_q_latent;   // MLA only
    std::optional<Count> d_kv_latent;  // MLA only

    // Throws std::invalid_argument on non-positive dims or latent dims that
    // do not match the variant.
    void validate() const;

    [[nodiscard]] bool is_mla() const { return variant_kind == VariantKind::Mla; }
    // Latent dims; only valid for MLA configs.
    [[nodiscard]] Count q_latent() const;
    [[nodiscard]] Count kv_latent() const;

    friend bool operator==(const AttentionConfig&, const AttentionConfig&) = default;
};

enum class BuiltinConfig { MlaV3, MhaDerived, MhaScaled };

[[nodiscard]] AttentionConfig builtin_config(BuiltinConfig name);
[[nodiscard]] std::optional<BuiltinConfig> builtin_from_name(std::string_view name);
[[nodiscard]] std::string_view builtin_name(BuiltinConfig name);
inline constexpr std::array kAllBuiltins{BuiltinConfig::MlaV3, BuiltinConfig::MhaDerived,
                                         BuiltinConfig::MhaScaled};

// Weight parameters of one layer. With include_absorbed, the per-head
// W_up^Q * W_up^K^T products used by the reuse scheme are added on top.
[[nodiscard]] Count param_count(const AttentionConfig& cfg, bool include_absorbed = false);

// Elements appended to the KV cache per token: full K and V rows for MHA,
// the compressed latent row for MLA.
[[nodiscard]] Count kv_cache_elements_per_token(const AttentionConfig& cfg);

// The latent cache entry is smaller than the MHA entry it replaces.
[[nodiscard]] bool latent_cache_is_smaller(const AttentionConfig& cfg);

// Config files use the KvText format with keys named after the fields:
//   variant_kind = MLA | MHA
//   d_model, n_heads, d_qk, d_v, d_q_latent, d_kv_latent
[[nodiscard]] AttentionConfig parse_config_text(std::string_view text);
[[nodiscard]] std::string to_config_text(const AttentionConfig& cfg);
// Accepts a builtin name ("mla_v3", ...) or a path to a config file.
[[nodiscard]] AttentionConfig resolve_config(const std::string& name_or_path);

// ---------------------------------------------------------------------------
// Execution schemes
// ---------------------------------------------------------------------------

enum class SchemeTag { MhaL, MhaS, MlaRu, MlaRc };

struct SchemeId {
    SchemeTag tag = SchemeTag::MlaRc;
    // Optional parenthesization overrides. The QK chain has 4 operands for the
    // recompute scheme (Q_l, W_up^Q, W_up^K^T, C^T) and 3 for the reuse
    // scheme (Q_l, W_absorb, C^T). The output chain is (S, C, W_up^V, W^O).
    std::optional<OrderTree> qk_order{};
    std::optional<OrderTree> out_order{};
};

[[nodiscard]] std::string_view scheme_name(SchemeTag tag);
[[nodiscard]] std::optional<SchemeTag> scheme_from_name(std::string_view name);
[[nodiscard]] VariantKind scheme_variant(SchemeTag tag);
// The builtin config each scheme is analyzed with by default.
[[nodiscard]] BuiltinConfig default_config_for(SchemeTag tag);
// Throws when an MHA scheme meets an MLA config or vice versa.
void check_compatible(const AttentionConfig& cfg, const SchemeId& scheme);
inline constexpr std::array kAllSchemes{SchemeTag::MhaL, SchemeTag::MhaS, SchemeTag::MlaRu,
                                        SchemeTag::MlaRc};

// ---------------------------------------------------------------------------
// Workload
// ---------------------------------------------------------------------------

enum class Phase { Prefill, Decode };

[[nodiscard]] std::string_view phase_name(Phase phase);
[[nodiscard]] std::optional<Phase> phase_from_name(std::string_view name);

class Workload {
public:
    static constexpr int kDefaultBytesPerElement = 2;

    static Workload prefill(Count seq_len, Count batch = 1, int bytes_per_element = kDefaultBytesPerElement);
    static Workload decode(Count kv_cache_len, Count batch = 1, int bytes_per_element = kDefaultBytesPerElement);

    [[nodiscard]] Phase phase() const { return phase_; }
    // Prompt length L (prefill) or cached length T (decode).
    [[nodiscard]] Count length() const { return length_; }
    [[nodiscard]] Count batch() const { return batch_; }
    [[nodiscard]] int bytes_per_element() const { return bytes_per_element_; }

    // Query rows per sequence.
    [[nodiscard]] Count query_len() const { return phase_ == Phase::Prefill ? length_ : 1; }
    // Tokens already in the cache before this step.
    [[nodiscard]] Count cached_len() const { return phase_ == Phase::Prefill ? 0 : length_; }
    // Tokens each query attends to.
    [[nodiscard]] Count span() const { return cached_len() + query_len(); }
    [[nodiscard]] Count new_tokens() const { return query_len(); }

private:
    Workload(Phase phase, Count length, Count batch, int bytes_per_element);

    Phase phase_;
    Count length_;
    Count batch_;
    int bytes_per_element_;
};

// ---------------------------------------------------------------------------
// Cost-report stages
// ---------------------------------------------------------------------------

enum class Stage {
    DownProj,
    QTransform,
    AbsorbRecompute,
    Scores,
    Softmax,
    Context,
    UpV,
    OutProj,
    CacheUpdate,
};

inline constexpr std::array kAllStages{Stage::DownProj,  Stage::QTransform, Stage::AbsorbRecompute,
                                       Stage::Scores,    Stage::Softmax,    Stage::Context,
                                       Stage::UpV,       Stage::OutProj,    Stage::CacheUpdate};

[[nodiscard]] std::string_view stage_name(Stage stage);

}  // namespace mlaperf
