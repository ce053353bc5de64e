#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mlaperf/attention_cost.hpp"

namespace mlaperf {

// Hardware description for the roofline. Compute is in ops/s with
// 1 MAC = 2 ops; energies are in picojoules.
struct Platform {
    std::string name = "default";
    double peak_ops_per_s = 100e12;
    double dram_bw_bytes_per_s = 400e9;
    double e_op_pj = 1.0;  // 1 pJ/op == 1 TOPS/W
    double e_dram_bit_pj = 8.0;
    Count onchip_bytes = Count{32} << 20;

    void validate() const;
};

// Platform files use the KvText format with the field names as keys. Missing
// keys keep the defaults above.
[[nodiscard]] Platform parse_platform_text(std::string_view text);
[[nodiscard]] Platform load_platform(const std::string& path);
[[nodiscard]] std::string to_platform_text(const Platform& p);

// OI at which the platform stops being memory bound.
[[nodiscard]] double corner(const Platform& p);

enum class Bound { Compute, Memory };
[[nodiscard]] std::string_view bound_name(Bound b);

struct EstimateOptions {
    CountOptions count;
    // Require all heads' recomputed weight products to fit on chip at once
    // instead of one head at a time.
    bool whole_matrix_residency = false;
};

struct PerfEstimate {
    double compute_time_s = 0.0;
    double memory_time_s = 0.0;
    double latency_s = 0.0;
    double tokens_per_s = 0.0;
    double energy_j = 0.0;
    Bound bound = Bound::Compute;
    bool onchip_ok = true;
};

// Pure roofline: latency = max(ops / peak, bytes / bw). Memory bound iff
// OI < corner; a tie counts as compute bound.
[[nodiscard]] PerfEstimate estimate(const CostReport& r, const Platform& p, const EstimateOptions& opts = {});

// A cost report labelled for sweeps.
struct SchemeReport {
    std::string scheme;
    Count length = 0;
    CostReport report;
};

struct SweepRow {
    double x = 0.0;  // compute/bandwidth ratio or TOPS/W
    std::string scheme;
    Count length = 0;
    PerfEstimate estimate;
};

// For every ratio rho the platform peak becomes rho * base.dram_bw_bytes_per_s.
// Rows come out in (ratio, report) order regardless of `workers`.
[[nodiscard]] std::vector<SweepRow> sweep_compute_ratio(const std::vector<SchemeReport>& reports,
                                                        const Platform& base, const std::vector<double>& ratios,
                                                        const EstimateOptions& opts = {}, int workers = 1);

// For every efficiency the platform's e_op_pj becomes 1 / tops_per_w.
[[nodiscard]] std::vector<SweepRow> sweep_efficiency(const std::vector<SchemeReport>& reports,
                                                     const Platform& base,
                                                     const std::vector<double>& tops_per_w,
                                                     const EstimateOptions& opts = {}, int workers = 1);

// Compute/bandwidth ratio where the reuse scheme's latency meets the
// recompute scheme's: below it reuse is faster, above it recompute is.
// Empty when no such crossover exists.
[[nodiscard]] std::optional<double> crossover_ratio_closed(const CostReport& reuse, const CostReport& recompute,
                                                           const CountOptions& opts = {});
[[nodiscard]] std::optional<double> crossover_ratio_bisect(const CostReport& reuse, const CostReport& recompute,
                                                           double bw_bytes_per_s, const CountOptions& opts = {});

// TOPS/W above which the recompute scheme spends less energy than reuse.
[[nodiscard]] std::optional<double> efficiency_threshold_closed(const CostReport& reuse,
                                                                const CostReport& recompute,
                                                                double e_dram_bit_pj,
                                                                const CountOptions& opts = {});
[[nodiscard]] std::optional<double> efficiency_threshold_bisect(const CostReport& reuse,
                                                                const CostReport& recompute,
                                                                double e_dram_bit_pj,
                                                                const CountOptions& opts = {});

// Grid helpers: n points from lo to hi inclusive.
[[nodiscard]] std::vector<double> log_grid(double lo, double hi, int n);
[[nodiscard]] std::vector<double> linear_grid(double lo, double hi, int n);

}  // namespace mlaperf
