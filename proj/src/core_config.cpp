#include "mlaperf/core_config.hpp"

#include <filesystem>
#include <stdexcept>

#include <fmt/format.h>

#include "mlaperf/kv_text.hpp"

namespace mlaperf {

void AttentionConfig::validate() const {
    if (d_model <= 0 || n_heads <= 0 || d_qk <= 0 || d_v <= 0) {
        throw std::invalid_argument("attention dims must be positive");
    }
    const bool has_latent = d_q_latent.has_value() || d_kv_latent.has_value();
    if (is_mla()) {
        if (!d_q_latent || !d_kv_latent) {
            throw std::invalid_argument("MLA config requires d_q_latent and d_kv_latent");
        }
        if (*d_q_latent <= 0 || *d_kv_latent <= 0) {
            throw std::invalid_argument("latent dims must be positive");
        }
    } else if (has_latent) {
        throw std::invalid_argument("MHA config must not set latent dims");
    }
}

Count AttentionConfig::q_latent() const {
    if (!d_q_latent) {
        throw std::logic_error("d_q_latent requested on a non-MLA config");
    }
    return *d_q_latent;
}

Count AttentionConfig::kv_latent() const {
    if (!d_kv_latent) {
        throw std::logic_error("d_kv_latent requested on a non-MLA config");
    }
    return *d_kv_latent;
}

AttentionConfig builtin_config(BuiltinConfig name) {
    switch (name) {
        case BuiltinConfig::MlaV3:
            return {VariantKind::Mla, 7168, 128, 128, 128, 1536, 512};
        case BuiltinConfig::MhaDerived:
            return {VariantKind::Mha, 7168, 128, 128, 128, std::nullopt, std::nullopt};
        case BuiltinConfig::MhaScaled:
            return {VariantKind::Mha, 4363, 128, 77, 77, std::nullopt, std::nullopt};
    }
    throw std::invalid_argument("unknown builtin config");
}

std::string_view builtin_name(BuiltinConfig name) {
    switch (name) {
        case BuiltinConfig::MlaV3: return "mla_v3";
        case BuiltinConfig::MhaDerived: return "mha_derived";
        case BuiltinConfig::MhaScaled: return "mha_scaled";
    }
    return "?";
}

std::optional<BuiltinConfig> builtin_from_name(std::string_view name) {
    for (const auto b : kAllBuiltins) {
        if (builtin_name(b) == name) {
            return b;
        }
    }
    return std::nullopt;
}

Count param_count(const AttentionConfig& cfg, bool include_absorbed) {
    cfg.validate();
    const Count h = cfg.n_heads;
    const Count out_proj = checked_mul(h, cfg.d_v, cfg.d_model);
    if (!cfg.is_mla()) {
        const Count qkv = checked_mul(h, cfg.d_model, checked_add(2 * cfg.d_qk, cfg.d_v));
        return checked_add(qkv, out_proj);
    }
    const Count dql = cfg.q_latent();
    const Count dkv = cfg.kv_latent();
    Count total = checked_mul(cfg.d_model, dql);
    total = checked_add(total, checked_mul(cfg.d_model, dkv));
    total = checked_add(total, checked_mul(h, dql, cfg.d_qk));
    total = checked_add(total, checked_mul(h, dkv, checked_add(cfg.d_qk, cfg.d_v)));
    total = checked_add(total, out_proj);
    if (include_absorbed) {
        total = checked_add(total, checked_mul(h, dql, dkv));
    }
    return total;
}

Count kv_cache_elements_per_token(const AttentionConfig& cfg) {
    cfg.validate();
    if (cfg.is_mla()) {
        return cfg.kv_latent();
    }
    return checked_mul(cfg.n_heads, checked_add(cfg.d_qk, cfg.d_v));
}

bool latent_cache_is_smaller(const AttentionConfig& cfg) {
    cfg.validate();
    return cfg.is_mla() && cfg.kv_latent() < cfg.n_heads * (cfg.d_qk + cfg.d_v);
}

AttentionConfig parse_config_text(std::string_view text) {
    const auto kv = KvText::parse(text);
    kv.require_only({"variant_kind", "d_model", "n_heads", "d_qk", "d_v", "d_q_latent", "d_kv_latent"});
    AttentionConfig cfg;
    const auto& kind = kv.str("variant_kind");
    if (kind == "MHA" || kind == "mha") {
        cfg.variant_kind = VariantKind::Mha;
    } else if (kind == "MLA" || kind == "mla") {
        cfg.variant_kind = VariantKind::Mla;
    } else {
        throw std::invalid_argument(fmt::format("variant_kind must be MHA or MLA, got '{}'", kind));
    }
    cfg.d_model = kv.integer("d_model");
    cfg.n_heads = kv.integer("n_heads");
    cfg.d_qk = kv.integer("d_qk");
    cfg.d_v = kv.integer("d_v");
    if (kv.has("d_q_latent")) {
        cfg.d_q_latent = kv.integer("d_q_latent");
    }
    if (kv.has("d_kv_latent")) {
        cfg.d_kv_latent = kv.integer("d_kv_latent");
    }
    cfg.validate();
    return cfg;
}

std::string to_config_text(const AttentionConfig& cfg) {
    std::string out = fmt::format("variant_kind = {}\nd_model = {}\nn_heads = {}\nd_qk = {}\nd_v = {}\n",
                                  cfg.is_mla() ? "MLA" : "MHA", cfg.d_model, cfg.n_heads, cfg.d_qk,
                                  cfg.d_v);
    if (cfg.d_q_latent) {
        out += fmt::format("d_q_latent = {}\n", *cfg.d_q_latent);
    }
    if (cfg.d_kv_latent) {
        out += fmt::format("d_kv_latent = {}\n", *cfg.d_kv_latent);
    }
    return out;
}

AttentionConfig resolve_config(const std::string& name_or_path) {
    if (const auto b = builtin_from_name(name_or_path)) {
        return builtin_config(*b);
    }
    if (!std::filesystem::exists(name_or_path)) {
        throw std::invalid_argument(
            fmt::format("'{}' is neither a builtin config nor an existing file", name_or_path));
    }
    return parse_config_text(read_text_file(name_or_path));
}

std::string_view scheme_name(SchemeTag tag) {
    switch (tag) {
        case SchemeTag::MhaL: return "mha_l";
        case SchemeTag::MhaS: return "mha_s";
        case SchemeTag::MlaRu: return "mla_ru";
        case SchemeTag::MlaRc: return "mla_rc";
    }
    return "?";
}

std::optional<SchemeTag> scheme_from_name(std::string_view name) {
    for (const auto s : kAllSchemes) {
        if (scheme_name(s) == name) {
            return s;
        }
    }
    return std::nullopt;
}

VariantKind scheme_variant(SchemeTag tag) {
    return (tag == SchemeTag::MlaRu || tag == SchemeTag::MlaRc) ? VariantKind::Mla : VariantKind::Mha;
}

BuiltinConfig default_config_for(SchemeTag tag) {
    switch (tag) {
        case SchemeTag::MhaL: return BuiltinConfig::MhaDerived;
        case SchemeTag::MhaS: return BuiltinConfig::MhaScaled;
        case SchemeTag::MlaRu:
        case SchemeTag::MlaRc: return BuiltinConfig::MlaV3;
    }
    return BuiltinConfig::MlaV3;
}

void check_compatible(const AttentionConfig& cfg, const SchemeId& scheme) {
    cfg.validate();
    if (scheme_variant(scheme.tag) != cfg.variant_kind) {
        throw std::invalid_argument(fmt::format("scheme {} is incompatible with a {} config",
                                                scheme_name(scheme.tag), cfg.is_mla() ? "MLA" : "MHA"));
    }
    if (!cfg.is_mla() && (scheme.qk_order || scheme.out_order)) {
        throw std::invalid_argument("order overrides only apply to MLA schemes");
    }
}

std::string_view phase_name(Phase phase) { return phase == Phase::Prefill ? "prefill" : "decode"; }

std::optional<Phase> phase_from_name(std::string_view name) {
    if (name == "prefill") {
        return Phase::Prefill;
    }
    if (name == "decode") {
        return Phase::Decode;
    }
    return std::nullopt;
}

Workload::Workload(Phase phase, Count length, Count batch, int bytes_per_element)
    : phase_(phase), length_(length), batch_(batch), bytes_per_element_(bytes_per_element) {
    if (phase == Phase::Prefill && length < 1) {
        throw std::invalid_argument("prefill sequence length must be >= 1");
    }
    if (phase == Phase::Decode && length < 0) {
        throw std::invalid_argument("decode cache length must be >= 0");
    }
    if (batch < 1) {
        throw std::invalid_argument("batch must be >= 1");
    }
    if (bytes_per_element != 1 && bytes_per_element != 2 && bytes_per_element != 4) {
        throw std::invalid_argument("bytes_per_element must be 1, 2 or 4");
    }
}

Workload Workload::prefill(Count seq_len, Count batch, int bytes_per_element) {
    return Workload(Phase::Prefill, seq_len, batch, bytes_per_element);
}

Workload Workload::decode(Count kv_cache_len, Count batch, int bytes_per_element) {
    return Workload(Phase::Decode, kv_cache_len, batch, bytes_per_element);
}

std::string_view stage_name(Stage stage) {
    switch (stage) {
        case Stage::DownProj: return "down_proj";
        case Stage::QTransform: return "q_transform";
        case Stage::AbsorbRecompute: return "absorb_recompute";
        case Stage::Scores: return "scores";
        case Stage::Softmax: return "softmax";
        case Stage::Context: return "context";
        case Stage::UpV: return "up_v";
        case Stage::OutProj: return "out_proj";
        case Stage::CacheUpdate: return "cache_update";
    }
    return "?";
}

}  // namespace mlaperf
