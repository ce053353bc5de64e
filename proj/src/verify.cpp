#include "mlaperf/verify.hpp"

#include <algorithm>
#include <exception>
#include <random>

#include <fmt/format.h>

#include "mlaperf/attention_cost.hpp"
#include "mlaperf/reference_kernel.hpp"

namespace mlaperf {

namespace {

constexpr double kMhaDualTolerance = 1e-6;

// Toy dims drawn from the seed so every instance has its own shape.
struct ToyInstance {
    AttentionConfig mla;
    AttentionConfig mha;
    Count batch = 1;
    Count cached = 0;
    Count query = 1;
};

ToyInstance toy_instance(std::mt19937_64& rng) {
    auto pick = [&](Count lo, Count hi) { return lo + static_cast<Count>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
    ToyInstance t;
    const Count d = pick(4, 16);
    const Count h = pick(1, 3);
    t.mla = AttentionConfig{VariantKind::Mla, d, h, pick(2, 6), pick(2, 6), pick(2, 8), pick(2, 8)};
    t.mha = AttentionConfig{VariantKind::Mha, d, h, pick(2, 6), pick(2, 6), std::nullopt, std::nullopt};
    t.batch = pick(1, 2);
    t.cached = pick(0, 5);
    t.query = pick(1, 3);
    return t;
}

template <class S>
std::vector<DenseMatrix<S>> inputs(Count batch, Count rows, Count d, std::mt19937_64& rng) {
    std::vector<DenseMatrix<S>> x;
    for (Count b = 0; b < batch; ++b) {
        x.push_back(random_matrix<S>(rows, d, rng));
    }
    return x;
}

template <class S>
std::vector<MlaCache<S>> latent_caches(const AttentionConfig& cfg, Count batch, Count t, std::mt19937_64& rng) {
    std::vector<MlaCache<S>> c;
    for (Count b = 0; b < batch; ++b) {
        c.push_back(random_mla_cache<S>(cfg, t, rng));
    }
    return c;
}

template <class S>
std::vector<MhaCache<S>> kv_caches(const AttentionConfig& cfg, Count batch, Count t, std::mt19937_64& rng) {
    std::vector<MhaCache<S>> c;
    for (Count b = 0; b < batch; ++b) {
        c.push_back(random_mha_cache<S>(cfg, t, rng));
    }
    return c;
}

constexpr MlaScheme kSchemes[] = {MlaScheme::Recompute, MlaScheme::Reuse};

std::string_view mla_scheme_name(MlaScheme s) { return s == MlaScheme::Recompute ? "rc" : "ru"; }

CheckResult float_ordering(std::uint64_t seed, const VerifyOptions& opts) {
    std::mt19937_64 rng(seed);
    const ToyInstance t = toy_instance(rng);
    auto w = random_mla_weights<double>(t.mla, rng);
    w.absorbed = precompute_absorbed(w);
    if (opts.inject_shape_fault) {
        w.w_o = DenseMatrix<double>(w.w_o.rows() + 1, w.w_o.cols());
    }
    const auto caches = latent_caches<double>(t.mla, t.batch, t.cached, rng);
    const auto x = inputs<double>(t.batch, t.query, t.mla.d_model, rng);
    const auto out_tree = OrderTree::left_to_right(4);

    std::vector<DenseMatrix<double>> ref;
    double worst = 0.0;
    std::string worst_at = "-";
    for (const auto scheme : kSchemes) {
        for (const auto order : kAllQkOrders) {
            auto c = caches;
            const auto r = run_mla(t.mla, w, std::span<const DenseMatrix<double>>(x), c, order, out_tree, scheme);
            if (ref.empty()) {
                ref = r.outputs;
                continue;
            }
            const double dev = max_relative_deviation(r.outputs, ref);
            if (dev > worst) {
                worst = dev;
                worst_at = fmt::format("{}/{}", mla_scheme_name(scheme), qk_order_name(order));
            }
        }
    }

    CheckResult res{fmt::format("mla_float_orders[seed={}]", seed), CheckStatus::Pass, worst,
                    fmt::format("worst {} vs rc/l2r", worst_at)};
    if (worst > opts.tolerance) {
        // A float check at tolerance 0 cannot be expected to pass.
        res.status = opts.tolerance == 0.0 ? CheckStatus::ExpectedFail : CheckStatus::Fail;
    }
    return res;
}

CheckResult exact_ordering(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const ToyInstance t = toy_instance(rng);
    auto w = random_mla_weights<ExactInt>(t.mla, rng);
    w.absorbed = precompute_absorbed(w);
    const auto caches = latent_caches<ExactInt>(t.mla, t.batch, t.cached, rng);
    const auto x = inputs<ExactInt>(t.batch, t.query, t.mla.d_model, rng);

    std::vector<DenseMatrix<ExactInt>> ref;
    Count mismatches = 0;
    int runs = 0;
    for (const auto scheme : kSchemes) {
        for (const auto order : kAllQkOrders) {
            for (const auto& out_tree : enumerate_orders(4)) {
                auto c = caches;
                const auto r =
                    run_mla(t.mla, w, std::span<const DenseMatrix<ExactInt>>(x), c, order, out_tree, scheme);
                ++runs;
                if (ref.empty()) {
                    ref = r.outputs;
                    continue;
                }
                for (std::size_t b = 0; b < ref.size(); ++b) {
                    const auto got = r.outputs[b].data();
                    const auto want = ref[b].data();
                    for (std::size_t i = 0; i < want.size(); ++i) {
                        mismatches += got[i] == want[i] ? 0 : 1;
                    }
                }
            }
        }
    }
    return {fmt::format("mla_exact_orders[seed={}]", seed), mismatches == 0 ? CheckStatus::Pass : CheckStatus::Fail,
            static_cast<double>(mismatches), fmt::format("{} runs, mismatching elements", runs)};
}

CheckResult mha_dual(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const ToyInstance t = toy_instance(rng);
    const auto w = random_mha_weights<double>(t.mha, rng);
    auto caches = kv_caches<double>(t.mha, t.batch, t.cached, rng);
    const auto x = inputs<double>(t.batch, t.query, t.mha.d_model, rng);
    const auto straight = mha_straight_line(t.mha, w, x, caches);
    const auto r = run_mha(t.mha, w, std::span<const DenseMatrix<double>>(x), caches);
    const double dev = max_relative_deviation(r.outputs, straight);
    return {fmt::format("mha_dual[seed={}]", seed), dev <= kMhaDualTolerance ? CheckStatus::Pass : CheckStatus::Fail,
            dev, "vs straight-line reimplementation"};
}

struct CountCase {
    VariantKind variant;
    Phase phase;
    Count length;  // T for decode, L for prefill
    Count batch;
};

// Both variants x both phases x three lengths x B in {1, 3}. Decode runs
// T in {0, 1, 7}; prefill runs L = T + 1 so it processes the same spans
// from an empty cache.
std::vector<CountCase> count_grid() {
    std::vector<CountCase> grid;
    for (const auto variant : {VariantKind::Mha, VariantKind::Mla}) {
        for (const auto phase : {Phase::Decode, Phase::Prefill}) {
            for (const Count t : {0, 1, 7}) {
                for (const Count b : {1, 3}) {
                    grid.push_back({variant, phase, phase == Phase::Decode ? t : t + 1, b});
                }
            }
        }
    }
    return grid;
}

const AttentionConfig kCountMha{VariantKind::Mha, 12, 3, 4, 5, std::nullopt, std::nullopt};
const AttentionConfig kCountMla{VariantKind::Mla, 12, 3, 4, 5, 6, 7};

// Returns the number of (scheme, order, stage) cells that disagree.
template <class Fn>
Count compare_tallies(const KernelResult<Phantom>& r, const CostReport& expected, Fn&& note) {
    Count bad = r.mac_tally == expected.macs ? 0 : 1;
    for (const auto s : kAllStages) {
        if (r.stage(s) != expected.stage(s).macs) {
            ++bad;
            note(fmt::format("{}: kernel {} vs formula {}", stage_name(s), r.stage(s), expected.stage(s).macs));
        }
    }
    return bad;
}

std::string count_case_name(const CountCase& c) {
    return fmt::format("count_match[{},{},{}={},B={}]", c.variant == VariantKind::Mha ? "mha" : "mla",
                       phase_name(c.phase), c.phase == Phase::Decode ? "T" : "L", c.length, c.batch);
}

CheckResult count_match(const CountCase& c) {
    const Workload w = c.phase == Phase::Decode ? Workload::decode(c.length, c.batch)
                                                : Workload::prefill(c.length, c.batch);
    const std::string name = count_case_name(c);
    std::mt19937_64 rng(0);
    std::string first_issue;
    auto note = [&](std::string s) {
        if (first_issue.empty()) {
            first_issue = std::move(s);
        }
    };
    Count bad = 0;
    int runs = 0;
    const auto x = inputs<Phantom>(c.batch, w.query_len(), kCountMha.d_model, rng);

    if (c.variant == VariantKind::Mha) {
        const auto weights = random_mha_weights<Phantom>(kCountMha, rng);
        auto caches = kv_caches<Phantom>(kCountMha, c.batch, w.cached_len(), rng);
        const auto r = run_mha(kCountMha, weights, std::span<const DenseMatrix<Phantom>>(x), caches);
        bad += compare_tallies(r, layer_cost(kCountMha, {SchemeTag::MhaL}, w), note);
        ++runs;
    } else {
        auto weights = random_mla_weights<Phantom>(kCountMla, rng);
        weights.absorbed = precompute_absorbed(weights);
        for (const auto scheme : kSchemes) {
            const SchemeTag tag = scheme == MlaScheme::Recompute ? SchemeTag::MlaRc : SchemeTag::MlaRu;
            for (const auto order : kAllQkOrders) {
                for (const auto& out_tree : enumerate_orders(4)) {
                    auto caches = latent_caches<Phantom>(kCountMla, c.batch, w.cached_len(), rng);
                    const auto r = run_mla(kCountMla, weights, std::span<const DenseMatrix<Phantom>>(x), caches,
                                           order, out_tree, scheme);
                    const SchemeId id{tag, qk_order_tree_for(scheme, order), out_tree};
                    bad += compare_tallies(r, layer_cost(kCountMla, id, w), note);
                    ++runs;
                }
            }
        }
    }
    return {name, bad == 0 ? CheckStatus::Pass : CheckStatus::Fail, static_cast<double>(bad),
            bad == 0 ? fmt::format("{} runs, per-stage MACs equal", runs) : first_issue};
}

template <class Fn>
CheckResult guarded(std::string name, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        return {std::move(name), CheckStatus::Error, 0.0, e.what()};
    }
}

}  // namespace

std::vector<std::uint64_t> default_verify_seeds() {
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 42; s < 67; ++s) {
        seeds.push_back(s);
    }
    return seeds;
}

std::string_view check_status_name(CheckStatus s) {
    switch (s) {
        case CheckStatus::Pass: return "pass";
        case CheckStatus::Fail: return "fail";
        case CheckStatus::ExpectedFail: return "expected_fail";
        case CheckStatus::Error: return "error";
    }
    return "?";
}

bool VerifyReport::ok() const {
    return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) {
        return c.status == CheckStatus::Fail || c.status == CheckStatus::Error;
    });
}

int VerifyReport::count(CheckStatus s) const {
    return static_cast<int>(std::count_if(checks.begin(), checks.end(), [s](const CheckResult& c) { return c.status == s; }));
}

int count_grid_size() { return static_cast<int>(count_grid().size()); }

VerifyReport run_verification(const VerifyOptions& opts) {
    if (opts.seeds.empty()) {
        throw std::invalid_argument("verification needs at least one seed");
    }
    if (!(opts.tolerance >= 0.0)) {
        throw std::invalid_argument("tolerance must be non-negative");
    }
    VerifyReport report;
    for (const auto seed : opts.seeds) {
        report.checks.push_back(guarded(fmt::format("mla_float_orders[seed={}]", seed),
                                        [&] { return float_ordering(seed, opts); }));
        report.checks.push_back(
            guarded(fmt::format("mla_exact_orders[seed={}]", seed), [&] { return exact_ordering(seed); }));
        report.checks.push_back(guarded(fmt::format("mha_dual[seed={}]", seed), [&] { return mha_dual(seed); }));
    }
    for (const auto& c : count_grid()) {
        report.checks.push_back(guarded(count_case_name(c), [&] { return count_match(c); }));
    }
    return report;
}

}  // namespace mlaperf
