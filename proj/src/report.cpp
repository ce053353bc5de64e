#include "mlaperf/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "mlaperf/kv_text.hpp"

namespace mlaperf {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(s);
    while (std::getline(in, cur, sep)) {
        out.push_back(trim(cur));
    }
    return out;
}

double parse_real(const std::string& s, const std::string& spec) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size() || !std::isfinite(v)) {
        throw std::invalid_argument(fmt::format("bad number '{}' in grid '{}'", s, spec));
    }
    return v;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        out += c;
        if (c == '"') {
            out += '"';
        }
    }
    return out + "\"";
}

std::string join_counts(const std::vector<Count>& v) {
    return fmt::format("{}", fmt::join(v, ","));
}

std::string join_reals(const std::vector<double>& v) {
    std::vector<std::string> parts;
    parts.reserve(v.size());
    for (const double x : v) {
        parts.push_back(format_real(x));
    }
    return fmt::format("{}", fmt::join(parts, ","));
}

void note_common(CommandOutput& out, std::string_view command) {
    out.note("tool", fmt::format("mlaperf {}", kToolVersion));
    out.note("command", std::string(command));
}

void note_settings(CommandOutput& out, const CountSettings& s) {
    const CountOptions opts = s.count_options();
    out.note("bytes_per_element", std::to_string(s.bytes_per_element));
    out.note("softmax_ops", s.include_softmax
                                ? fmt::format("included ({} per score element)", opts.softmax_ops_per_element)
                                : "excluded (matrix products only)");
    out.note("prefill_cache_writes", s.prefill_cache_writes ? "counted" : "not counted");
    out.note("mac_to_ops", "2");
}

struct ResolvedConfig {
    std::string label;
    AttentionConfig cfg;
};

ResolvedConfig resolve_labelled(const std::string& name_or_path) {
    return {name_or_path, resolve_config(name_or_path)};
}

void note_config(CommandOutput& out, const ResolvedConfig& rc) {
    out.note(fmt::format("config[{}]", rc.label), fmt::format("fnv1a:{}", fnv1a_hex(to_config_text(rc.cfg))));
}

// The config each scheme runs with: the override when one was given,
// otherwise the scheme's builtin.
ResolvedConfig config_for(SchemeTag tag, const std::optional<ResolvedConfig>& override_cfg) {
    if (override_cfg) {
        check_compatible(override_cfg->cfg, SchemeId{tag});
        return *override_cfg;
    }
    const auto b = default_config_for(tag);
    return {std::string(builtin_name(b)), builtin_config(b)};
}

std::vector<SchemeTag> schemes_for(const std::vector<SchemeTag>& requested,
                                   const std::optional<ResolvedConfig>& override_cfg) {
    if (!requested.empty()) {
        return requested;
    }
    if (!override_cfg) {
        return {kAllSchemes.begin(), kAllSchemes.end()};
    }
    if (override_cfg->cfg.is_mla()) {
        return {SchemeTag::MlaRu, SchemeTag::MlaRc};
    }
    return {SchemeTag::MhaL};
}

void note_schemes(CommandOutput& out, const std::vector<SchemeTag>& schemes) {
    std::vector<std::string_view> names;
    for (const auto s : schemes) {
        names.push_back(scheme_name(s));
    }
    out.note("schemes", fmt::format("{}", fmt::join(names, ",")));
    out.note("qk_order", "scheme default (mla_rc: ((0*(1*2))*3), mla_ru: ((0*1)*2))");
    out.note("out_order", "cheapest by dynamic programming");
}

void require_non_empty(const std::vector<Count>& v, const char* what) {
    if (v.empty()) {
        throw std::invalid_argument(fmt::format("{} grid is empty", what));
    }
}

}  // namespace

std::string CommandOutput::render(const std::optional<std::string>& timestamp) const {
    std::string out;
    for (const auto& [k, v] : manifest) {
        out += fmt::format("# {} = {}\n", k, v);
    }
    if (timestamp) {
        out += fmt::format("# timestamp = {}\n", *timestamp);
    }
    return out + body;
}

std::string format_real(double v) { return fmt::format("{:.9g}", v); }

std::string format_millions(Count v) {
    return fmt::format("{}M", static_cast<Count>(std::llround(static_cast<double>(v) / 1e6)));
}

std::vector<double> parse_grid(const std::string& raw) {
    const std::string spec = trim(raw);
    std::vector<double> out;
    if (spec.empty()) {
        throw std::invalid_argument("grid is empty");
    }
    if (spec.front() == '@') {
        std::string text = read_text_file(spec.substr(1));
        for (auto& c : text) {
            if (c == ',' || c == '\n' || c == '\t' || c == '\r') {
                c = ' ';
            }
        }
        std::istringstream in(text);
        std::string tok;
        while (in >> tok) {
            out.push_back(parse_real(tok, spec));
        }
    } else if (spec.rfind("log:", 0) == 0 || spec.rfind("lin:", 0) == 0) {
        const auto parts = split(spec, ':');
        if (parts.size() != 4) {
            throw std::invalid_argument(fmt::format("grid '{}' must look like {}:LO:HI:N", spec, parts[0]));
        }
        const double lo = parse_real(parts[1], spec);
        const double hi = parse_real(parts[2], spec);
        const double n = parse_real(parts[3], spec);
        if (n != std::floor(n) || n < 1 || n > 1e6) {
            throw std::invalid_argument(fmt::format("grid '{}' needs a positive integer point count", spec));
        }
        out = parts[0] == "log" ? log_grid(lo, hi, static_cast<int>(n)) : linear_grid(lo, hi, static_cast<int>(n));
    } else {
        for (const auto& tok : split(spec, ',')) {
            out.push_back(parse_real(tok, spec));
        }
    }
    if (out.empty()) {
        throw std::invalid_argument(fmt::format("grid '{}' is empty", spec));
    }
    return out;
}

std::vector<Count> parse_int_list(const std::string& spec) {
    std::vector<Count> out;
    for (const auto& tok : split(spec, ',')) {
        Count v = 0;
        const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (tok.empty() || res.ec != std::errc{} || res.ptr != tok.data() + tok.size() || v < 0) {
            throw std::invalid_argument(fmt::format("bad integer '{}' in list '{}'", tok, spec));
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw std::invalid_argument("integer list is empty");
    }
    return out;
}

CountOptions CountSettings::count_options() const {
    CountOptions o;
    o.include_vector_ops = include_softmax;
    o.count_prefill_cache_writes = prefill_cache_writes;
    return o;
}

CommandOutput cmd_params(const ParamsRequest& req) {
    if (req.configs.empty()) {
        throw std::invalid_argument("no configs given");
    }
    CommandOutput out;
    note_common(out, "params");
    std::string body =
        "config,variant_kind,d_model,n_heads,d_qk,d_v,d_q_latent,d_kv_latent,params,params_rounded,"
        "absorbed_params,kv_cache_elements_per_token\n";
    for (const auto& name : req.configs) {
        const auto rc = resolve_labelled(name);
        note_config(out, rc);
        const auto& c = rc.cfg;
        const Count params = param_count(c);
        body += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{}\n", csv_field(rc.label), c.is_mla() ? "MLA" : "MHA",
                            c.d_model, c.n_heads, c.d_qk, c.d_v, c.is_mla() ? std::to_string(c.q_latent()) : "",
                            c.is_mla() ? std::to_string(c.kv_latent()) : "", params, format_millions(params),
                            param_count(c, true) - params, kv_cache_elements_per_token(c));
    }
    out.body = std::move(body);
    return out;
}

CommandOutput cmd_count(const CountRequest& req) {
    std::optional<ResolvedConfig> override_cfg;
    if (req.config) {
        override_cfg = resolve_labelled(*req.config);
    }
    const auto schemes = schemes_for(req.schemes, override_cfg);
    const Workload w = req.phase == Phase::Decode
                           ? Workload::decode(req.length, req.batch, req.settings.bytes_per_element)
                           : Workload::prefill(req.length, req.batch, req.settings.bytes_per_element);
    const CountOptions opts = req.settings.count_options();

    CommandOutput out;
    note_common(out, "count");
    note_schemes(out, schemes);
    out.note("phase", std::string(phase_name(req.phase)));
    out.note(req.phase == Phase::Decode ? "T" : "L", std::to_string(req.length));
    out.note("batch", std::to_string(req.batch));
    note_settings(out, req.settings);

    std::string header =
        "config,scheme,phase,length,batch,bytes_per_element,tokens,macs,vector_ops,ops,dram_read_bytes,"
        "dram_write_bytes,oi,qk_order,out_order,largest_intermediate_bytes,recomputed_weight_bytes";
    for (const auto s : kAllStages) {
        header += fmt::format(",{0}_macs,{0}_read_bytes,{0}_write_bytes", stage_name(s));
    }
    std::string body = header + "\n";
    std::vector<std::string> noted;
    for (const auto tag : schemes) {
        const auto rc = config_for(tag, override_cfg);
        if (std::find(noted.begin(), noted.end(), rc.label) == noted.end()) {
            note_config(out, rc);
            noted.push_back(rc.label);
        }
        const auto r = layer_cost(rc.cfg, SchemeId{tag}, w, opts);
        body += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}", csv_field(rc.label),
                            scheme_name(tag), phase_name(r.phase), r.length, r.batch, r.bytes_per_element, r.tokens,
                            r.macs, r.vector_ops, r.ops(opts), r.dram_read_bytes, r.dram_write_bytes,
                            format_real(operational_intensity(r, opts).value()), r.qk_order, r.out_order,
                            r.largest_intermediate_bytes, r.recomputed_weight_bytes);
        for (const auto& s : r.breakdown) {
            body += fmt::format(",{},{},{}", s.macs, s.read_bytes, s.write_bytes);
        }
        body += "\n";
    }
    out.body = std::move(body);
    return out;
}

CommandOutput cmd_orders(const OrdersRequest& req) {
    require_non_empty(req.t_grid, "T");
    require_non_empty(req.b_grid, "B");
    const auto rc = resolve_labelled(req.config);
    if (!rc.cfg.is_mla()) {
        throw std::invalid_argument("orders needs an MLA config");
    }
    CommandOutput out;
    note_common(out, "orders");
    note_config(out, rc);
    out.note("phase", "decode");
    out.note("t_grid", join_counts(req.t_grid));
    out.note("b_grid", join_counts(req.b_grid));
    out.note("exhaustive", req.exhaustive ? "yes" : "no");
    out.note("chain", "Q_l * W_up^Q * W_up^K^T * C^T, weight-only products once per call");

    std::string body = "T,B,order,label,tree,macs,optimal\n";
    for (const Count t : req.t_grid) {
        for (const Count b : req.b_grid) {
            for (const auto& row : qk_order_sweep(rc.cfg, Workload::decode(t, b), req.exhaustive)) {
                body += fmt::format("{},{},{},{},{},{},{}\n", t, b, row.name, row.label, row.tree, row.macs,
                                    row.optimal ? 1 : 0);
            }
        }
    }
    out.body = std::move(body);
    return out;
}

CommandOutput cmd_sweep(const SweepRequest& req) {
    require_non_empty(req.t_grid, "T");
    if (req.schemes.empty()) {
        throw std::invalid_argument("no schemes given");
    }
    std::optional<ResolvedConfig> override_cfg;
    if (req.config) {
        override_cfg = resolve_labelled(*req.config);
    }
    const CountOptions opts = req.settings.count_options();

    CommandOutput out;
    const char* kind_name = req.kind == SweepKind::Oi ? "oi" : req.kind == SweepKind::Ratio ? "ratio" : "energy";
    note_common(out, fmt::format("sweep {}", kind_name));
    note_schemes(out, req.schemes);
    out.note("phase", "decode");
    out.note("t_grid", join_counts(req.t_grid));
    out.note("batch", std::to_string(req.batch));
    note_settings(out, req.settings);

    std::vector<SchemeReport> reports;
    std::vector<std::string> noted;
    for (const Count t : req.t_grid) {
        for (const auto tag : req.schemes) {
            // Schemes that do not fit the override keep their builtin.
            std::optional<ResolvedConfig> use = override_cfg;
            if (use && scheme_variant(tag) != use->cfg.variant_kind) {
                use.reset();
            }
            const auto rc = config_for(tag, use);
            if (std::find(noted.begin(), noted.end(), rc.label) == noted.end()) {
                note_config(out, rc);
                noted.push_back(rc.label);
            }
            const auto w = Workload::decode(t, req.batch, req.settings.bytes_per_element);
            reports.push_back({std::string(scheme_name(tag)), t, layer_cost(rc.cfg, SchemeId{tag}, w, opts)});
        }
    }

    if (req.kind == SweepKind::Oi) {
        std::string body = "T,scheme,macs,ops,bytes,oi\n";
        for (const auto& sr : reports) {
            const auto oi = operational_intensity(sr.report, opts);
            body += fmt::format("{},{},{},{},{},{}\n", sr.length, sr.scheme, sr.report.macs, oi.ops, oi.bytes,
                                format_real(oi.value()));
        }
        out.body = std::move(body);
        return out;
    }

    Platform platform;
    if (req.platform_path) {
        platform = load_platform(*req.platform_path);
        out.note("platform_file", fmt::format("{} (fnv1a:{})", *req.platform_path,
                                              fnv1a_hex(read_text_file(*req.platform_path))));
    }
    platform.validate();
    out.note("platform.name", platform.name);
    out.note("platform.dram_bw_bytes_per_s", format_real(platform.dram_bw_bytes_per_s));
    out.note("platform.peak_ops_per_s", req.kind == SweepKind::Ratio ? "ratio * dram_bw_bytes_per_s"
                                                                     : format_real(platform.peak_ops_per_s));
    out.note("platform.e_op_pj", req.kind == SweepKind::Energy ? "1 / tops_per_w" : format_real(platform.e_op_pj));
    out.note("platform.e_dram_bit_pj", format_real(platform.e_dram_bit_pj));
    out.note("platform.onchip_bytes", std::to_string(platform.onchip_bytes));
    out.note("onchip_residency", req.whole_matrix_residency ? "whole matrix" : "per head");

    const std::string grid_spec =
        req.grid.value_or(req.kind == SweepKind::Ratio ? kDefaultRatioGrid : kDefaultEfficiencyGrid);
    const auto grid = parse_grid(grid_spec);
    out.note("grid", fmt::format("{} -> {}", grid_spec, join_reals(grid)));
    out.note("jobs", std::to_string(req.jobs));

    EstimateOptions est;
    est.count = opts;
    est.whole_matrix_residency = req.whole_matrix_residency;

    // Crossovers between reuse and recompute for every T, by both methods.
    for (const Count t : req.t_grid) {
        const CostReport* ru = nullptr;
        const CostReport* rc = nullptr;
        for (const auto& sr : reports) {
            if (sr.length == t && sr.scheme == scheme_name(SchemeTag::MlaRu)) {
                ru = &sr.report;
            }
            if (sr.length == t && sr.scheme == scheme_name(SchemeTag::MlaRc)) {
                rc = &sr.report;
            }
        }
        if (ru == nullptr || rc == nullptr) {
            continue;
        }
        auto show = [](const std::optional<double>& v) { return v ? format_real(*v) : std::string("none"); };
        if (req.kind == SweepKind::Ratio) {
            out.note(fmt::format("crossover_ratio_ops_per_byte[T={}]", t),
                     fmt::format("closed {} bisect {}", show(crossover_ratio_closed(*ru, *rc, opts)),
                                 show(crossover_ratio_bisect(*ru, *rc, platform.dram_bw_bytes_per_s, opts))));
        } else {
            out.note(fmt::format("efficiency_threshold_tops_per_w[T={}]", t),
                     fmt::format("closed {} bisect {}",
                                 show(efficiency_threshold_closed(*ru, *rc, platform.e_dram_bit_pj, opts)),
                                 show(efficiency_threshold_bisect(*ru, *rc, platform.e_dram_bit_pj, opts))));
        }
    }

    const auto rows = req.kind == SweepKind::Ratio ? sweep_compute_ratio(reports, platform, grid, est, req.jobs)
                                                   : sweep_efficiency(reports, platform, grid, est, req.jobs);
    std::string body = fmt::format("{},scheme,T,latency_s,tokens_per_s,energy_j,bound\n",
                                   req.kind == SweepKind::Ratio ? "ratio_ops_per_byte" : "tops_per_w");
    for (const auto& r : rows) {
        body += fmt::format("{},{},{},{},{},{},{}\n", format_real(r.x), r.scheme, r.length,
                            format_real(r.estimate.latency_s), format_real(r.estimate.tokens_per_s),
                            format_real(r.estimate.energy_j), bound_name(r.estimate.bound));
    }
    out.body = std::move(body);
    return out;
}

CommandOutput cmd_verify(const VerifyOptions& opts) {
    CommandOutput out;
    note_common(out, "verify");
    std::vector<std::string> seeds;
    for (const auto s : opts.seeds) {
        seeds.push_back(std::to_string(s));
    }
    out.note("seeds", fmt::format("{}", fmt::join(seeds, ",")));
    out.note("tolerance", format_real(opts.tolerance));
    out.note("mha_dual_tolerance", "1e-06");
    out.note("count_grid", fmt::format("{} toy configurations", count_grid_size()));
    if (opts.inject_shape_fault) {
        out.note("inject_shape_fault", "yes");
    }

    const auto report = run_verification(opts);
    std::string body = "check,status,measured,detail\n";
    for (const auto& c : report.checks) {
        body += fmt::format("{},{},{},{}\n", csv_field(c.name), check_status_name(c.status), format_real(c.measured),
                            csv_field(c.detail));
    }
    out.note("summary", fmt::format("{} pass, {} fail, {} expected_fail, {} error",
                                    report.count(CheckStatus::Pass), report.count(CheckStatus::Fail),
                                    report.count(CheckStatus::ExpectedFail), report.count(CheckStatus::Error)));
    out.ok = report.ok();
    out.body = std::move(body);
    return out;
}

}  // namespace mlaperf
