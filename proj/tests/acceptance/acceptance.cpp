// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include <fmt/format.h>

#include "mlaperf/attention_cost.hpp"
#include "mlaperf/chain_cost.hpp"
#include "mlaperf/report.hpp"
#include "mlaperf/roofline.hpp"
#include "mlaperf/verify.hpp"

using namespace mlaperf;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond && pass) {
            pass = false;
            detail = what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const AttentionConfig kMla = builtin_config(BuiltinConfig::MlaV3);
const AttentionConfig kMhaL = builtin_config(BuiltinConfig::MhaDerived);
const AttentionConfig kMhaS = builtin_config(BuiltinConfig::MhaScaled);

CostReport decode(const AttentionConfig& cfg, SchemeTag tag, Count t, Count b = 1) {
    return layer_cost(cfg, SchemeId{tag}, Workload::decode(t, b));
}

double oi(const CostReport& r) { return operational_intensity(r).value(); }

Platform at_ratio(double rho) {
    Platform p;
    p.dram_bw_bytes_per_s = 400e9;
    p.peak_ops_per_s = rho * p.dram_bw_bytes_per_s;
    return p;
}

Outcome parameter_counts() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = cmd_params({});
    const double elapsed = seconds_since(t0);
    const char* expected[] = {
        "mha_derived,MHA,7168,128,128,128,,,469762048,470M,0,32768",
        "mla_v3,MLA,7168,128,128,128,1536,512,174063616,174M,100663296,512",
        "mha_scaled,MHA,4363,128,77,77,,,172006912,172M,0,19712",
    };
    for (const char* row : expected) {
        o.require(out.body.find(std::string(row) + "\n") != std::string::npos, fmt::format("missing row {}", row));
    }
    o.require(elapsed < 1.0, fmt::format("took {:.3f} s", elapsed));
    if (o.pass) {
        o.detail = fmt::format("470M / 174M / 172M exact, {:.4f} s", elapsed);
    }
    return o;
}

Outcome cache_reduction() {
    Outcome o;
    const Count mha = kv_cache_elements_per_token(kMhaL);
    const Count mla = kv_cache_elements_per_token(kMla);
    o.require(mha == 32'768 && mla == 512, fmt::format("{} vs {}", mha, mla));
    o.require(mha == 64 * mla, "ratio is not exactly 64");
    if (o.pass) {
        o.detail = fmt::format("{} vs {} elements per token, ratio {}", mha, mla, mha / mla);
    }
    return o;
}

Outcome absorption_tradeoff() {
    Outcome o;
    const Count dql = kMla.q_latent();
    const Count dkv = kMla.kv_latent();
    const Count absorbed = dql * dkv;
    const Count factored = dql * kMla.d_qk + kMla.d_qk * dkv;
    o.require(absorbed == 786'432 && factored == 262'144 && absorbed > factored,
              fmt::format("{} vs {}", absorbed, factored));
    int cells = 0;
    for (const Count t : {0, 1024, 8192, 65536}) {
        for (const Count b : {1, 8}) {
            const auto ru = decode(kMla, SchemeTag::MlaRu, t, b);
            const auto rc = decode(kMla, SchemeTag::MlaRc, t, b);
            o.require(ru.macs < rc.macs, fmt::format("T={} B={}: RU macs {} >= RC {}", t, b, ru.macs, rc.macs));
            o.require(ru.dram_read_bytes > rc.dram_read_bytes,
                      fmt::format("T={} B={}: RU reads {} <= RC {}", t, b, ru.dram_read_bytes, rc.dram_read_bytes));
            ++cells;
        }
    }
    if (o.pass) {
        o.detail = fmt::format("{} > {}; RU fewer MACs, more reads on all {} (T, B) cells", absorbed, factored, cells);
    }
    return o;
}

Outcome ordering_oracle() {
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(20240601);
    int checked = 0;
    for (int i = 0; i < 200; ++i) {
        const int n = 2 + static_cast<int>(rng() % 7);
        std::vector<Count> dims;
        for (int k = 0; k <= n; ++k) {
            dims.push_back(1 + static_cast<Count>(rng() % 100));
        }
        const auto spec = ChainSpec::plain(dims, 1 + static_cast<Count>(rng() % 8));
        Count brute = -1;
        for (const auto& t : enumerate_orders(n)) {
            const Count c = chain_macs(spec, t);
            brute = brute < 0 ? c : std::min(brute, c);
        }
        const auto dp = optimal_order(spec);
        o.require(dp.macs == brute && chain_macs(spec, dp.tree) == dp.macs,
                  fmt::format("chain {}: dp {} vs enumeration {}", i, dp.macs, brute));
        ++checked;
    }
    const double elapsed = seconds_since(t0);
    o.require(elapsed < 10.0, fmt::format("took {:.3f} s", elapsed));
    if (o.pass) {
        o.detail = fmt::format("{} random chains (n <= 8) match enumeration, {:.3f} s", checked, elapsed);
    }
    return o;
}

Outcome functional_equivalence(const VerifyReport& report) {
    Outcome o;
    int float_checks = 0;
    int exact_checks = 0;
    int mha_checks = 0;
    double worst_float = 0.0;
    double worst_mha = 0.0;
    for (const auto& c : report.checks) {
        const bool is_float = c.name.rfind("mla_float_orders", 0) == 0;
        const bool is_exact = c.name.rfind("mla_exact_orders", 0) == 0;
        const bool is_mha = c.name.rfind("mha_dual", 0) == 0;
        if (!is_float && !is_exact && !is_mha) {
            continue;
        }
        o.require(c.status == CheckStatus::Pass, fmt::format("{}: {} ({})", c.name, check_status_name(c.status), c.detail));
        float_checks += is_float ? 1 : 0;
        exact_checks += is_exact ? 1 : 0;
        mha_checks += is_mha ? 1 : 0;
        if (is_float) {
            worst_float = std::max(worst_float, c.measured);
        }
        if (is_mha) {
            worst_mha = std::max(worst_mha, c.measured);
        }
    }
    o.require(float_checks >= 25 && exact_checks >= 25 && mha_checks >= 25, "fewer than 25 seeded instances");
    if (o.pass) {
        o.detail = fmt::format("{} seeds: float orders within {:.2e} (<= 1e-5), integer orders exact, MHA dual within {:.2e} (<= 1e-6)",
                               float_checks, worst_float, worst_mha);
    }
    return o;
}

Outcome count_validation(const VerifyReport& report) {
    Outcome o;
    int configs = 0;
    for (const auto& c : report.checks) {
        if (c.name.rfind("count_match", 0) != 0) {
            continue;
        }
        o.require(c.status == CheckStatus::Pass, fmt::format("{}: {}", c.name, c.detail));
        ++configs;
    }
    o.require(configs >= 20, fmt::format("only {} configurations", configs));
    if (o.pass) {
        o.detail = fmt::format("{} toy configurations (MHA/MLA, decode/prefill, T in {{0,1,7}}, B in {{1,3}}) match per stage",
                               configs);
    }
    return o;
}

Outcome intensity_ordering() {
    Outcome o;
    const double rc = oi(decode(kMla, SchemeTag::MlaRc, 8192));
    const double ru = oi(decode(kMla, SchemeTag::MlaRu, 8192));
    const double ms = oi(decode(kMhaS, SchemeTag::MhaS, 8192));
    const double ml = oi(decode(kMhaL, SchemeTag::MhaL, 8192));
    o.require(rc > ru && ru > ms && ru > ml, fmt::format("ordering broken: {} {} {} {}", rc, ru, ms, ml));
    o.require(std::abs(ms - ml) / ml < 0.01, fmt::format("MHA_S {} vs MHA_L {}", ms, ml));

    double lo_l = INFINITY, hi_l = 0, lo_s = INFINITY, hi_s = 0;
    for (Count t = 1024; t <= 65536; t *= 2) {
        const double l = oi(decode(kMhaL, SchemeTag::MhaL, t));
        const double s = oi(decode(kMhaS, SchemeTag::MhaS, t));
        lo_l = std::min(lo_l, l);
        hi_l = std::max(hi_l, l);
        lo_s = std::min(lo_s, s);
        hi_s = std::max(hi_s, s);
    }
    o.require(hi_l / lo_l < 1.10 && hi_s / lo_s < 1.10, "MHA OI varies by 10% or more");
    const double growth = oi(decode(kMla, SchemeTag::MlaRu, 65536)) / oi(decode(kMla, SchemeTag::MlaRu, 1024));
    o.require(growth > 2.0, fmt::format("MLA_RU OI grows only {:.3f}x", growth));
    if (o.pass) {
        o.detail = fmt::format("T=8192 OI rc {:.4g} > ru {:.4g} > mha_s {:.6g} ~ mha_l {:.6g}; MHA spread {:.2e}; RU growth {:.2f}x",
                               rc, ru, ms, ml, std::max(hi_l / lo_l, hi_s / lo_s) - 1.0, growth);
    }
    return o;
}

Outcome ratio_crossover() {
    Outcome o;
    const auto grid = parse_grid(kDefaultRatioGrid);
    std::string found;
    for (const Count t : {1024, 8192, 65536}) {
        const auto ru = decode(kMla, SchemeTag::MlaRu, t);
        const auto rc = decode(kMla, SchemeTag::MlaRc, t);
        const auto closed = crossover_ratio_closed(ru, rc);
        const auto bisect = crossover_ratio_bisect(ru, rc, 400e9);
        o.require(closed && bisect && std::isfinite(*closed), fmt::format("T={}: no finite crossover", t));
        if (!o.pass) {
            return o;
        }
        const double rel = std::abs(*closed - *bisect) / *closed;
        o.require(rel <= 1e-6, fmt::format("T={}: closed {} vs bisect {}", t, *closed, *bisect));
        for (const double rho : grid) {
            if (rho == *closed) {
                continue;
            }
            const Platform p = at_ratio(rho);
            const double tps_ru = estimate(ru, p).tokens_per_s;
            const double tps_rc = estimate(rc, p).tokens_per_s;
            if (rho < *closed) {
                o.require(tps_ru > tps_rc, fmt::format("T={} rho={}: RU not faster below crossover", t, rho));
            } else {
                o.require(tps_rc > tps_ru, fmt::format("T={} rho={}: RC not faster above crossover", t, rho));
            }
        }
        found += fmt::format("{}T={}: {:.6g}", found.empty() ? "" : ", ", t, *closed);
    }

    const auto rc_short = decode(kMla, SchemeTag::MlaRc, 1024);
    const auto rc_long = decode(kMla, SchemeTag::MlaRc, 65536);
    const auto mha_short = decode(kMhaL, SchemeTag::MhaL, 1024);
    const auto mha_long = decode(kMhaL, SchemeTag::MhaL, 65536);
    for (const double rho : grid) {
        const Platform p = at_ratio(rho);
        const double rc_growth = estimate(rc_long, p).latency_s / estimate(rc_short, p).latency_s;
        const double mha_growth = estimate(mha_long, p).latency_s / estimate(mha_short, p).latency_s;
        o.require(rc_growth < mha_growth, fmt::format("rho={}: RC latency grows {} vs MHA {}", rho, rc_growth, mha_growth));
    }
    if (o.pass) {
        o.detail = fmt::format("rho* ({}) closed = bisect within 1e-6; RC latency more stable at all {} grid points",
                               found, grid.size());
    }
    return o;
}

Outcome energy_threshold() {
    Outcome o;
    const auto grid = parse_grid(kDefaultEfficiencyGrid);
    std::string found;
    for (const Count t : {1024, 8192, 65536}) {
        const auto ru = decode(kMla, SchemeTag::MlaRu, t);
        const auto rc = decode(kMla, SchemeTag::MlaRc, t);
        const auto closed = efficiency_threshold_closed(ru, rc, 8.0);
        const auto bisect = efficiency_threshold_bisect(ru, rc, 8.0);
        o.require(closed && bisect && std::isfinite(*closed), fmt::format("T={}: no finite threshold", t));
        if (!o.pass) {
            return o;
        }
        o.require(std::abs(*closed - *bisect) / *closed <= 1e-6,
                  fmt::format("T={}: closed {} vs bisect {}", t, *closed, *bisect));
        for (const double tops : grid) {
            if (tops == *closed) {
                continue;
            }
            Platform p;
            p.e_dram_bit_pj = 8.0;
            p.e_op_pj = 1.0 / tops;
            const double e_ru = estimate(ru, p).energy_j;
            const double e_rc = estimate(rc, p).energy_j;
            if (tops > *closed) {
                o.require(e_rc < e_ru, fmt::format("T={} {} TOPS/W: RC not cheaper above threshold", t, tops));
            } else {
                o.require(e_rc > e_ru, fmt::format("T={} {} TOPS/W: RC not dearer below threshold", t, tops));
            }
        }
        found += fmt::format("{}T={}: {:.6g}", found.empty() ? "" : ", ", t, *closed);
    }
    if (o.pass) {
        o.detail = fmt::format("threshold TOPS/W ({}) closed = bisect within 1e-6 at 8 pJ/bit", found);
    }
    return o;
}

Outcome determinism() {
    Outcome o;
    auto twice = [&](const std::string& what, const std::function<CommandOutput()>& run) {
        const auto a = run();
        const auto b = run();
        o.require(a.body == b.body, fmt::format("{} bodies differ", what));
        o.require(a.manifest == b.manifest, fmt::format("{} manifests differ", what));
    };
    twice("params", [] { return cmd_params({}); });
    twice("count", [] { return cmd_count({}); });
    twice("orders", [] {
        OrdersRequest r;
        r.exhaustive = true;
        return cmd_orders(r);
    });
    for (const auto kind : {SweepKind::Oi, SweepKind::Ratio, SweepKind::Energy}) {
        twice("sweep", [kind] {
            SweepRequest r;
            r.kind = kind;
            return cmd_sweep(r);
        });
        SweepRequest serial;
        serial.kind = kind;
        SweepRequest parallel = serial;
        parallel.jobs = 4;
        o.require(cmd_sweep(serial).body == cmd_sweep(parallel).body, "sweep body depends on worker count");
    }
    twice("verify", [] { return cmd_verify({}); });
    if (o.pass) {
        o.detail = "params, count, orders, sweep oi/ratio/energy (1 and 4 workers), verify: identical bodies";
    }
    return o;
}

}  // namespace

int main() {
    const VerifyReport verification = run_verification({});
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"parameter counts", parameter_counts},
        {"cache reduction", cache_reduction},
        {"absorption trade-off", absorption_tradeoff},
        {"ordering oracle", ordering_oracle},
        {"functional equivalence", [&] { return functional_equivalence(verification); }},
        {"count validation", [&] { return count_validation(verification); }},
        {"operational intensity ordering", intensity_ordering},
        {"compute/bandwidth crossover", ratio_crossover},
        {"energy-efficiency threshold", energy_threshold},
        {"determinism", determinism},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.pass = false;
            o.detail = fmt::format("exception: {}", e.what());
        }
        failed += o.pass ? 0 : 1;
        fmt::print("{} criterion {:2d} {}: {}\n", o.pass ? "PASS" : "FAIL", index, name, o.detail);
    }
    fmt::print("{} of {} criteria passed\n", index - failed, index);
    return failed == 0 ? 0 : 1;
}
