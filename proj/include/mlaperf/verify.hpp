#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace mlaperf {

// Seeds 42..66.
[[nodiscard]] std::vector<std::uint64_t> default_verify_seeds();

struct VerifyOptions {
    std::vector<std::uint64_t> seeds = default_verify_seeds();
    // Relative tolerance for the floating-point ordering checks.
    double tolerance = 1e-5;
    // Hand the kernel a W^O with the wrong shape; used to exercise the error path.
    bool inject_shape_fault = false;
};

enum class CheckStatus { Pass, Fail, ExpectedFail, Error };
[[nodiscard]] std::string_view check_status_name(CheckStatus s);

struct CheckResult {
    std::string name;
    CheckStatus status = CheckStatus::Pass;
    double measured = 0.0;  // deviation, mismatch count, ...
    std::string detail;
};

struct VerifyReport {
    std::vector<CheckResult> checks;

    // True when nothing failed or errored. Expected failures (a float check
    // run at tolerance 0) do not count against the report.
    [[nodiscard]] bool ok() const;
    [[nodiscard]] int count(CheckStatus s) const;
};

// Per seed: float ordering equivalence of the latent kernel (3 QK orders x
// both schemes), exact integer equivalence (also across all output-chain
// trees) and MHA against the straight-line implementation. Then the
// counting backend against layer_cost on a fixed grid of toy configurations.
[[nodiscard]] VerifyReport run_verification(const VerifyOptions& opts = {});

// Number of toy configurations in the count-match grid.
[[nodiscard]] int count_grid_size();

}  // namespace mlaperf
