#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "mlaperf/core_config.hpp"
#include "mlaperf/report.hpp"

using namespace mlaperf;

namespace {

std::vector<std::string> lines(const std::string& body) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start < body.size()) {
        const auto end = body.find('\n', start);
        out.push_back(body.substr(start, end - start));
        start = end + 1;
    }
    return out;
}

std::string manifest_value(const CommandOutput& out, const std::string& key) {
    for (const auto& [k, v] : out.manifest) {
        if (k == key) {
            return v;
        }
    }
    return "<missing>";
}

}  // namespace

TEST_CASE("number formatting") {
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(54.860512653227225) == "54.8605127");
    CHECK(format_real(4e11) == "4e+11");
    CHECK(format_millions(469'762'048) == "470M");
    CHECK(format_millions(174'063'616) == "174M");
    CHECK(format_millions(172'006'912) == "172M");
}

TEST_CASE("grid specs") {
    CHECK(parse_grid("1, 2.5,4") == std::vector<double>{1.0, 2.5, 4.0});
    CHECK(parse_grid("lin:0:1:3") == std::vector<double>{0.0, 0.5, 1.0});
    const auto lg = parse_grid("log:1:10000:5");
    REQUIRE(lg.size() == 5);
    CHECK(lg[2] == doctest::Approx(100.0));
    CHECK(lg.back() == 10000.0);

    const std::string path = "test_report_grid.txt";
    {
        std::ofstream f(path);
        f << "0.5\n1.5, 2\n";
    }
    CHECK(parse_grid("@" + path) == std::vector<double>{0.5, 1.5, 2.0});
    {
        std::ofstream f(path);
        f << "\n";
    }
    CHECK_THROWS_AS((void)parse_grid("@" + path), std::invalid_argument);
    std::remove(path.c_str());

    CHECK_THROWS_AS((void)parse_grid(""), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("1,,2"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("1,abc"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("log:1:10"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("log:0:10:4"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("lin:0:1:2.5"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_grid("@/no/such/file"), std::runtime_error);

    CHECK(parse_int_list("0, 7,1024") == std::vector<Count>{0, 7, 1024});
    CHECK_THROWS_AS((void)parse_int_list("1,-2"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_int_list("1.5"), std::invalid_argument);
    CHECK_THROWS_AS((void)parse_int_list(""), std::invalid_argument);
}

TEST_CASE("params command") {
    const auto out = cmd_params({});
    const auto rows = lines(out.body);
    REQUIRE(rows.size() == 4);
    CHECK(rows[1] == "mha_derived,MHA,7168,128,128,128,,,469762048,470M,0,32768");
    CHECK(rows[2] == "mla_v3,MLA,7168,128,128,128,1536,512,174063616,174M,100663296,512");
    CHECK(rows[3] == "mha_scaled,MHA,4363,128,77,77,,,172006912,172M,0,19712");
    CHECK(manifest_value(out, "config[mla_v3]").rfind("fnv1a:", 0) == 0);

    CHECK_THROWS_AS((void)cmd_params({{"mla_v4"}}), std::invalid_argument);

    const std::string path = "test_report_custom.cfg";
    {
        std::ofstream f(path);
        f << to_config_text(builtin_config(BuiltinConfig::MlaV3));
    }
    const auto custom = lines(cmd_params({{path}}).body);
    CHECK(custom[1] == path + ",MLA,7168,128,128,128,1536,512,174063616,174M,100663296,512");
    std::remove(path.c_str());
}

TEST_CASE("count command") {
    CountRequest req;
    req.length = 1024;
    const auto out = cmd_count(req);
    const auto rows = lines(out.body);
    REQUIRE(rows.size() == 5);
    CHECK(rows[3].rfind("mla_v3,mla_ru,decode,1024,1,2,1,375521280,", 0) == 0);
    CHECK(rows[4].rfind("mla_v3,mla_rc,decode,1024,1,2,1,13260423168,", 0) == 0);
    CHECK(manifest_value(out, "T") == "1024");
    CHECK(manifest_value(out, "softmax_ops") == "excluded (matrix products only)");

    CountRequest bad;
    bad.config = "mha_derived";
    bad.schemes = {SchemeTag::MlaRc};
    CHECK_THROWS_AS((void)cmd_count(bad), std::invalid_argument);

    CountRequest mla_only;
    mla_only.config = "mla_v3";
    CHECK(lines(cmd_count(mla_only).body).size() == 3);
}

TEST_CASE("orders command") {
    OrdersRequest req;
    req.t_grid = {4095, 100};
    req.b_grid = {1, 2};
    req.exhaustive = true;
    const auto rows = lines(cmd_orders(req).body);
    // 4 (T, B) pairs x (5 parenthesizations + optimal row) + header.
    CHECK(rows.size() == 1 + 4 * 6);
    CHECK(rows[6] == "4095,1,optimal,1->2->3,(((0*1)*2)*3),301989888,1");

    req.exhaustive = false;
    CHECK(lines(cmd_orders(req).body).size() == 1 + 4 * 4);
    req.t_grid.clear();
    CHECK_THROWS_AS((void)cmd_orders(req), std::invalid_argument);
    OrdersRequest mha;
    mha.config = "mha_derived";
    CHECK_THROWS_AS((void)cmd_orders(mha), std::invalid_argument);
}

TEST_CASE("sweep command") {
    SweepRequest req;
    req.kind = SweepKind::Ratio;
    const auto one = cmd_sweep(req);
    req.jobs = 4;
    const auto four = cmd_sweep(req);
    CHECK(one.body == four.body);
    CHECK(lines(one.body).size() == 1 + 41 * 4 * 3);
    CHECK(manifest_value(one, "grid").rfind("log:1:10000:41 -> 1,", 0) == 0);
    CHECK(manifest_value(one, "crossover_ratio_ops_per_byte[T=1024]") == "closed 54.8605127 bisect 54.8605127");
    CHECK(manifest_value(one, "crossover_ratio_ops_per_byte[T=65536]") == "closed 79.0420067 bisect 79.0420067");

    req.kind = SweepKind::Energy;
    const auto energy = cmd_sweep(req);
    CHECK(manifest_value(energy, "grid").rfind("log:0.1:100:31 -> 0.1,", 0) == 0);
    CHECK(manifest_value(energy, "efficiency_threshold_tops_per_w[T=8192]") == "closed 3 bisect 3");

    req.grid = "";
    CHECK_THROWS_AS((void)cmd_sweep(req), std::invalid_argument);

    SweepRequest oi;
    const auto rows = lines(cmd_sweep(oi).body);
    CHECK(rows[0] == "T,scheme,macs,ops,bytes,oi");
    CHECK(rows.size() == 1 + 3 * 4);
}

TEST_CASE("verify command") {
    const auto out = cmd_verify({});
    CHECK(out.ok);
    CHECK(manifest_value(out, "summary") == "99 pass, 0 fail, 0 expected_fail, 0 error");

    VerifyOptions zero;
    zero.tolerance = 0.0;
    const auto strict = run_verification(zero);
    CHECK(strict.ok());
    CHECK(strict.count(CheckStatus::ExpectedFail) > 0);
    CHECK(strict.count(CheckStatus::Fail) == 0);

    VerifyOptions fault;
    fault.seeds = {7};
    fault.inject_shape_fault = true;
    const auto broken = cmd_verify(fault);
    CHECK_FALSE(broken.ok);
    CHECK(broken.body.find(",error,") != std::string::npos);

    VerifyOptions none;
    none.seeds.clear();
    CHECK_THROWS_AS((void)run_verification(none), std::invalid_argument);
    CHECK(count_grid_size() >= 20);
}

TEST_CASE("commands are deterministic") {
    CHECK(cmd_params({}).body == cmd_params({}).body);
    CHECK(cmd_count({}).render(std::nullopt) == cmd_count({}).render(std::nullopt));
    CHECK(cmd_orders({}).body == cmd_orders({}).body);
    SweepRequest s;
    s.kind = SweepKind::Energy;
    CHECK(cmd_sweep(s).body == cmd_sweep(s).body);
    CHECK(cmd_verify({}).body == cmd_verify({}).body);
}
