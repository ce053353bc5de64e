// mlaperf: operation/traffic counts, roofline sweeps and kernel verification
// for multi-head and latent attention layers.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "mlaperf/report.hpp"

using namespace mlaperf;

namespace {

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

struct Shared {
    std::optional<std::string> config;
    std::vector<std::string> schemes;
    int bytes_per_element = Workload::kDefaultBytesPerElement;
    bool include_softmax = false;
    bool no_prefill_cache_writes = false;
    std::string out;
    bool no_timestamp = false;

    [[nodiscard]] CountSettings settings() const {
        CountSettings s;
        s.bytes_per_element = bytes_per_element;
        s.include_softmax = include_softmax;
        s.prefill_cache_writes = !no_prefill_cache_writes;
        return s;
    }

    [[nodiscard]] std::vector<SchemeTag> scheme_tags() const {
        std::vector<SchemeTag> tags;
        for (const auto& s : schemes) {
            const auto tag = scheme_from_name(s);
            if (!tag) {
                throw std::invalid_argument(fmt::format("unknown scheme '{}'", s));
            }
            tags.push_back(*tag);
        }
        return tags;
    }
};

void add_config(CLI::App* app, Shared& sh) {
    app->add_option("--config", sh.config, "builtin name (mla_v3, mha_derived, mha_scaled) or config file");
}

void add_schemes(CLI::App* app, Shared& sh) {
    app->add_option("--scheme", sh.schemes, "mha_l, mha_s, mla_ru or mla_rc (repeatable; default: all that apply)")
        ->check(CLI::IsMember({"mha_l", "mha_s", "mla_ru", "mla_rc"}));
}

void add_counting(CLI::App* app, Shared& sh) {
    app->add_option("--bytes-per-elem", sh.bytes_per_element, "bytes per stored element")
        ->check(CLI::IsMember({1, 2, 4}));
    app->add_flag("--include-softmax", sh.include_softmax, "add softmax vector work to the operation count");
    app->add_flag("--no-prefill-cache-writes", sh.no_prefill_cache_writes,
                  "do not charge DRAM writes for cache rows produced during prefill");
}

int emit(const CommandOutput& out, const Shared& sh) {
    const std::string text = out.render(sh.no_timestamp ? std::nullopt : std::optional(utc_timestamp()));
    if (sh.out.empty()) {
        std::cout << text;
    } else {
        std::ofstream f(sh.out, std::ios::binary);
        if (!f) {
            throw std::runtime_error(fmt::format("cannot write '{}'", sh.out));
        }
        f << text;
    }
    return out.ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Operation, traffic and roofline analysis of MHA and latent attention layers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", fmt::format("mlaperf {}", kToolVersion));

    Shared sh;
    app.add_option("--out", sh.out, "write the report to this file instead of stdout");
    app.add_flag("--no-timestamp", sh.no_timestamp, "leave the timestamp out of the header");

    // params
    ParamsRequest params_req;
    std::vector<std::string> params_configs;
    auto* params = app.add_subcommand("params", "parameter counts and KV-cache size per token");
    params->add_option("--config", params_configs, "builtin names or config files (repeatable)");

    // count
    CountRequest count_req;
    std::string phase = "decode";
    std::optional<Count> t_len;
    std::optional<Count> l_len;
    auto* count = app.add_subcommand("count", "MACs and DRAM traffic of one layer invocation");
    add_config(count, sh);
    add_schemes(count, sh);
    count->add_option("--phase", phase, "decode or prefill")->check(CLI::IsMember({"decode", "prefill"}));
    count->add_option("--t", t_len, "cached tokens for decode (default 1024)");
    count->add_option("--l", l_len, "prompt length for prefill (default 1024)");
    count->add_option("--batch", count_req.batch, "sequences per invocation");
    add_counting(count, sh);

    // orders
    OrdersRequest orders_req;
    std::string orders_t = "1024,8192,65536";
    std::string orders_b = "1";
    auto* orders = app.add_subcommand("orders", "MACs of the query-key chain under each multiplication order");
    orders->add_option("--config", orders_req.config, "MLA config (builtin name or file)");
    orders->add_option("--t-grid", orders_t, "comma-separated cached lengths");
    orders->add_option("--b-grid", orders_b, "comma-separated batch sizes");
    orders->add_flag("--exhaustive", orders_req.exhaustive, "list every parenthesization");

    // sweep
    SweepRequest sweep_req;
    std::string sweep_kind;
    std::string sweep_t = "1024,8192,65536";
    auto* sweep = app.add_subcommand("sweep", "operational intensity, latency or energy sweeps");
    sweep->add_option("kind", sweep_kind, "oi, ratio or energy")
        ->required()
        ->check(CLI::IsMember({"oi", "ratio", "energy"}));
    add_config(sweep, sh);
    add_schemes(sweep, sh);
    sweep->add_option("--t-grid", sweep_t, "comma-separated cached lengths");
    sweep->add_option("--batch", sweep_req.batch, "sequences per invocation");
    sweep->add_option("--grid", sweep_req.grid,
                      fmt::format("x-axis grid: a,b,c | log:LO:HI:N | lin:LO:HI:N | @FILE (ratio default {}, "
                                  "energy default {})",
                                  kDefaultRatioGrid, kDefaultEfficiencyGrid));
    sweep->add_option("--platform", sweep_req.platform_path, "platform file");
    sweep->add_flag("--whole-matrix", sweep_req.whole_matrix_residency,
                    "require all heads' recomputed weights to fit on chip at once");
    sweep->add_option("--jobs", sweep_req.jobs, "worker threads")->check(CLI::Range(1, 256));
    add_counting(sweep, sh);

    // verify
    VerifyOptions verify_opts;
    std::vector<std::uint64_t> seeds;
    auto* verify = app.add_subcommand("verify", "run the reference-kernel equivalence and count-match suites");
    verify->add_option("--seed", seeds, "seed (repeatable; default 42..66)");
    verify->add_option("--tolerance", verify_opts.tolerance, "relative tolerance for float ordering checks");
    verify->add_flag("--inject-shape-fault", verify_opts.inject_shape_fault)->group("");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (params->parsed()) {
            if (!params_configs.empty()) {
                params_req.configs = params_configs;
            }
            return emit(cmd_params(params_req), sh);
        }
        if (count->parsed()) {
            count_req.config = sh.config;
            count_req.schemes = sh.scheme_tags();
            count_req.phase = *phase_from_name(phase);
            if (count_req.phase == Phase::Decode && l_len) {
                throw std::invalid_argument("--l applies to prefill; use --t for decode");
            }
            if (count_req.phase == Phase::Prefill && t_len) {
                throw std::invalid_argument("--t applies to decode; use --l for prefill");
            }
            count_req.length = count_req.phase == Phase::Decode ? t_len.value_or(1024) : l_len.value_or(1024);
            count_req.settings = sh.settings();
            return emit(cmd_count(count_req), sh);
        }
        if (orders->parsed()) {
            orders_req.t_grid = parse_int_list(orders_t);
            orders_req.b_grid = parse_int_list(orders_b);
            return emit(cmd_orders(orders_req), sh);
        }
        if (sweep->parsed()) {
            sweep_req.kind = sweep_kind == "oi" ? SweepKind::Oi : sweep_kind == "ratio" ? SweepKind::Ratio : SweepKind::Energy;
            sweep_req.config = sh.config;
            if (!sh.schemes.empty()) {
                sweep_req.schemes = sh.scheme_tags();
            }
            sweep_req.t_grid = parse_int_list(sweep_t);
            sweep_req.settings = sh.settings();
            return emit(cmd_sweep(sweep_req), sh);
        }
        if (verify->parsed()) {
            if (!seeds.empty()) {
                verify_opts.seeds = seeds;
            }
            return emit(cmd_verify(verify_opts), sh);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
