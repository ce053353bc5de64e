#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlaperf/core_config.hpp"
#include "mlaperf/roofline.hpp"
#include "mlaperf/verify.hpp"

namespace mlaperf {

inline constexpr const char* kToolVersion = "0.1.0";

// Output of one command: a '#'-prefixed manifest followed by a CSV body.
// The manifest lists every resolved option, so two runs with equal
// manifests (timestamp aside) produce equal bodies.
struct CommandOutput {
    std::vector<std::pair<std::string, std::string>> manifest;
    std::string body;
    bool ok = true;

    void note(std::string key, std::string value) { manifest.emplace_back(std::move(key), std::move(value)); }
    // Manifest, then "# timestamp = ..." when given, then the body.
    [[nodiscard]] std::string render(const std::optional<std::string>& timestamp) const;
};

// 9 significant digits.
[[nodiscard]] std::string format_real(double v);
// 469762048 -> "470M"
[[nodiscard]] std::string format_millions(Count v);

// Grid specs: "1,2,3", "log:LO:HI:N", "lin:LO:HI:N" or "@FILE" with numbers
// separated by commas or whitespace. Throws on an empty or malformed grid.
[[nodiscard]] std::vector<double> parse_grid(const std::string& spec);
// Comma-separated non-negative integers.
[[nodiscard]] std::vector<Count> parse_int_list(const std::string& spec);

struct CountSettings {
    int bytes_per_element = Workload::kDefaultBytesPerElement;
    bool include_softmax = false;
    bool prefill_cache_writes = true;

    [[nodiscard]] CountOptions count_options() const;
};

struct ParamsRequest {
    std::vector<std::string> configs{"mha_derived", "mla_v3", "mha_scaled"};
};

struct CountRequest {
    std::optional<std::string> config;  // default: each scheme's builtin
    std::vector<SchemeTag> schemes;     // default: every scheme compatible with the config
    Phase phase = Phase::Decode;
    Count length = 1024;
    Count batch = 1;
    CountSettings settings;
};

struct OrdersRequest {
    std::string config = "mla_v3";
    std::vector<Count> t_grid{1024, 8192, 65536};
    std::vector<Count> b_grid{1};
    bool exhaustive = false;
};

enum class SweepKind { Oi, Ratio, Energy };

struct SweepRequest {
    SweepKind kind = SweepKind::Oi;
    std::vector<SchemeTag> schemes{SchemeTag::MhaL, SchemeTag::MhaS, SchemeTag::MlaRu, SchemeTag::MlaRc};
    std::optional<std::string> config;  // replaces the builtin of every compatible scheme
    std::vector<Count> t_grid{1024, 8192, 65536};
    Count batch = 1;
    std::optional<std::string> grid;  // ratio/energy x-axis; defaults below
    std::optional<std::string> platform_path;
    CountSettings settings;
    bool whole_matrix_residency = false;
    int jobs = 1;
};

inline constexpr const char* kDefaultRatioGrid = "log:1:10000:41";
inline constexpr const char* kDefaultEfficiencyGrid = "log:0.1:100:31";

[[nodiscard]] CommandOutput cmd_params(const ParamsRequest& req);
[[nodiscard]] CommandOutput cmd_count(const CountRequest& req);
[[nodiscard]] CommandOutput cmd_orders(const OrdersRequest& req);
[[nodiscard]] CommandOutput cmd_sweep(const SweepRequest& req);
[[nodiscard]] CommandOutput cmd_verify(const VerifyOptions& opts);

}  // namespace mlaperf
