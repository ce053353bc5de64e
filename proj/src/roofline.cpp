#include "mlaperf/roofline.hpp"

#include <cmath>
#include <functional>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "mlaperf/kv_text.hpp"

namespace mlaperf {
namespace {

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index writes
// its own output slot, so the result does not depend on the worker count.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
    const std::size_t w = std::max<std::size_t>(1, std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n));
    if (w <= 1) {
        for (std::size_t i = 0; i < n; ++i) {
            fn(i);
        }
        return;
    }
    std::vector<std::thread> threads;
    threads.reserve(w);
    for (std::size_t t = 0; t < w; ++t) {
        threads.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += w) {
                fn(i);
            }
        });
    }
    for (auto& th : threads) {
        th.join();
    }
}

template <class Edit>
std::vector<SweepRow> sweep(const std::vector<SchemeReport>& reports, const Platform& base,
                            const std::vector<double>& grid, const EstimateOptions& opts, int workers,
                            Edit&& edit) {
    if (grid.empty()) {
        throw std::invalid_argument("sweep grid is empty");
    }
    base.validate();
    std::vector<SweepRow> rows(grid.size() * reports.size());
    parallel_for(grid.size(), workers, [&](std::size_t gi) {
        Platform p = base;
        edit(p, grid[gi]);
        for (std::size_t ri = 0; ri < reports.size(); ++ri) {
            const auto& sr = reports[ri];
            rows[gi * reports.size() + ri] = SweepRow{grid[gi], sr.scheme, sr.length, estimate(sr.report, p, opts)};
        }
    });
    return rows;
}

// Finds the sign change of f over [lo, hi] in log space. f(lo) and f(hi) must
// have opposite signs.
double log_bisect(double lo, double hi, const std::function<double(double)>& f) {
    const bool lo_negative = f(lo) < 0.0;
    for (int i = 0; i < 400 && hi / lo > 1.0 + 1e-15; ++i) {
        const double mid = std::sqrt(lo * hi);
        if ((f(mid) < 0.0) == lo_negative) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return std::sqrt(lo * hi);
}

}  // namespace

void Platform::validate() const {
    if (!(peak_ops_per_s > 0.0) || !(dram_bw_bytes_per_s > 0.0) || !(e_op_pj > 0.0) || !(e_dram_bit_pj > 0.0) ||
        onchip_bytes <= 0) {
        throw std::invalid_argument(fmt::format("platform '{}': all parameters must be positive", name));
    }
    if (!std::isfinite(peak_ops_per_s / dram_bw_bytes_per_s)) {
        throw std::invalid_argument(fmt::format("platform '{}': roofline corner is not finite", name));
    }
}

Platform parse_platform_text(std::string_view text) {
    const auto kv = KvText::parse(text);
    kv.require_only({"name", "peak_ops_per_s", "dram_bw_bytes_per_s", "e_op_pj", "e_dram_bit_pj", "onchip_bytes"});
    Platform p;
    if (kv.has("name")) {
        p.name = kv.str("name");
    }
    if (kv.has("peak_ops_per_s")) {
        p.peak_ops_per_s = kv.real("peak_ops_per_s");
    }
    if (kv.has("dram_bw_bytes_per_s")) {
        p.dram_bw_bytes_per_s = kv.real("dram_bw_bytes_per_s");
    }
    if (kv.has("e_op_pj")) {
        p.e_op_pj = kv.real("e_op_pj");
    }
    if (kv.has("e_dram_bit_pj")) {
        p.e_dram_bit_pj = kv.real("e_dram_bit_pj");
    }
    if (kv.has("onchip_bytes")) {
        p.onchip_bytes = kv.integer("onchip_bytes");
    }
    p.validate();
    return p;
}

Platform load_platform(const std::string& path) { return parse_platform_text(read_text_file(path)); }

std::string to_platform_text(const Platform& p) {
    return fmt::format(
        "name = {}\npeak_ops_per_s = {:.9g}\ndram_bw_bytes_per_s = {:.9g}\ne_op_pj = {:.9g}\n"
        "e_dram_bit_pj = {:.9g}\nonchip_bytes = {}\n",
        p.name, p.peak_ops_per_s, p.dram_bw_bytes_per_s, p.e_op_pj, p.e_dram_bit_pj, p.onchip_bytes);
}

double corner(const Platform& p) { return p.peak_ops_per_s / p.dram_bw_bytes_per_s; }

std::string_view bound_name(Bound b) { return b == Bound::Compute ? "compute" : "memory"; }

PerfEstimate estimate(const CostReport& r, const Platform& p, const EstimateOptions& opts) {
    p.validate();
    const OpIntensity oi = operational_intensity(r, opts.count);
    const auto ops = static_cast<double>(oi.ops);
    const auto bytes = static_cast<double>(oi.bytes);

    PerfEstimate e;
    e.compute_time_s = ops / p.peak_ops_per_s;
    e.memory_time_s = bytes / p.dram_bw_bytes_per_s;
    e.bound = oi.value() < corner(p) ? Bound::Memory : Bound::Compute;
    e.latency_s = e.bound == Bound::Compute ? e.compute_time_s : e.memory_time_s;
    e.tokens_per_s = static_cast<double>(r.tokens) / e.latency_s;
    e.energy_j = ops * p.e_op_pj * 1e-12 + bytes * 8.0 * p.e_dram_bit_pj * 1e-12;

    const Count needed = opts.whole_matrix_residency
                             ? std::max(r.largest_intermediate_bytes, r.recomputed_weight_bytes)
                             : r.largest_intermediate_bytes;
    e.onchip_ok = needed <= p.onchip_bytes;
    return e;
}

std::vector<SweepRow> sweep_compute_ratio(const std::vector<SchemeReport>& reports, const Platform& base,
                                          const std::vector<double>& ratios, const EstimateOptions& opts,
                                          int workers) {
    return sweep(reports, base, ratios, opts, workers,
                 [](Platform& p, double rho) { p.peak_ops_per_s = rho * p.dram_bw_bytes_per_s; });
}

std::vector<SweepRow> sweep_efficiency(const std::vector<SchemeReport>& reports, const Platform& base,
                                       const std::vector<double>& tops_per_w, const EstimateOptions& opts,
                                       int workers) {
    for (const double t : tops_per_w) {
        if (!(t > 0.0)) {
            throw std::invalid_argument("TOPS/W grid values must be positive");
        }
    }
    return sweep(reports, base, tops_per_w, opts, workers, [](Platform& p, double t) { p.e_op_pj = 1.0 / t; });
}

std::optional<double> crossover_ratio_closed(const CostReport& reuse, const CostReport& recompute,
                                             const CountOptions& opts) {
    // latency_i(rho) * bw = max(ops_i / rho, bytes_i). Reuse wins at low rho
    // only if it does fewer ops; recompute wins at high rho only if it moves
    // fewer bytes. Between the two regimes recompute is compute bound and
    // reuse is memory bound, so ops_rc / rho = bytes_ru.
    const auto ops_ru = static_cast<double>(reuse.ops(opts));
    const auto ops_rc = static_cast<double>(recompute.ops(opts));
    const auto bytes_ru = static_cast<double>(reuse.total_bytes());
    const auto bytes_rc = static_cast<double>(recompute.total_bytes());
    if (!(ops_ru < ops_rc) || !(bytes_ru > bytes_rc)) {
        return std::nullopt;
    }
    return ops_rc / bytes_ru;
}

std::optional<double> crossover_ratio_bisect(const CostReport& reuse, const CostReport& recompute,
                                             double bw_bytes_per_s, const CountOptions& opts) {
    const EstimateOptions eo{opts, false};
    const auto gap = [&](double rho) {
        Platform p;
        p.dram_bw_bytes_per_s = bw_bytes_per_s;
        p.peak_ops_per_s = rho * bw_bytes_per_s;
        return estimate(reuse, p, eo).latency_s - estimate(recompute, p, eo).latency_s;
    };
    const double oi_lo = std::min(operational_intensity(reuse, opts).value(),
                                  operational_intensity(recompute, opts).value());
    const double oi_hi = std::max(operational_intensity(reuse, opts).value(),
                                  operational_intensity(recompute, opts).value());
    const double lo = oi_lo * 1e-6;
    const double hi = oi_hi * 1e6;
    if (!(gap(lo) < 0.0) || !(gap(hi) > 0.0)) {
        return std::nullopt;
    }
    return log_bisect(lo, hi, gap);
}

std::optional<double> efficiency_threshold_closed(const CostReport& reuse, const CostReport& recompute,
                                                  double e_dram_bit_pj, const CountOptions& opts) {
    // E_i = ops_i / tops + bytes_i * 8 * e_bit (pJ). Equal at
    // tops = (ops_rc - ops_ru) / (8 * e_bit * (bytes_ru - bytes_rc)).
    const auto d_ops = static_cast<double>(recompute.ops(opts)) - static_cast<double>(reuse.ops(opts));
    const auto d_bytes = static_cast<double>(reuse.total_bytes()) - static_cast<double>(recompute.total_bytes());
    if (!(d_ops > 0.0) || !(d_bytes > 0.0)) {
        return std::nullopt;
    }
    return d_ops / (8.0 * e_dram_bit_pj * d_bytes);
}

std::optional<double> efficiency_threshold_bisect(const CostReport& reuse, const CostReport& recompute,
                                                  double e_dram_bit_pj, const CountOptions& opts) {
    const EstimateOptions eo{opts, false};
    const auto gap = [&](double tops) {
        Platform p;
        p.e_op_pj = 1.0 / tops;
        p.e_dram_bit_pj = e_dram_bit_pj;
        return estimate(recompute, p, eo).energy_j - estimate(reuse, p, eo).energy_j;
    };
    const double lo = 1e-12;
    const double hi = 1e12;
    if (!(gap(lo) > 0.0) || !(gap(hi) < 0.0)) {
        return std::nullopt;
    }
    return log_bisect(lo, hi, gap);
}

std::vector<double> log_grid(double lo, double hi, int n) {
    if (n < 1 || !(lo > 0.0) || !(hi >= lo)) {
        throw std::invalid_argument("log grid needs n >= 1 and 0 < lo <= hi");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, f);
    }
    if (n > 1) {
        out.back() = hi;
    }
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int n) {
    if (n < 1 || !(hi >= lo)) {
        throw std::invalid_argument("linear grid needs n >= 1 and lo <= hi");
    }
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double f = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
        out[static_cast<std::size_t>(i)] = lo + (hi - lo) * f;
    }
    if (n > 1) {
        out.back() = hi;
    }
    return out;
}

}  // namespace mlaperf
