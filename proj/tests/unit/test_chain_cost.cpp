#include <doctest.h>

#include <algorithm>
#include <random>
#include <set>

#include "mlaperf/chain_cost.hpp"

using namespace mlaperf;

namespace {

// Brute force: minimum over every parenthesization, and the smallest preorder
// split sequence among the minimizers.
OptimalOrder brute_force_optimal(const ChainSpec& spec) {
    OptimalOrder best{OrderTree::leaf(0), -1};
    for (const auto& t : enumerate_orders(spec.size())) {
        const Count c = chain_macs(spec, t);
        if (best.macs < 0 || c < best.macs ||
            (c == best.macs && t.split_sequence() < best.tree.split_sequence())) {
            best = {t, c};
        }
    }
    return best;
}

ChainSpec random_spec(std::mt19937_64& rng, int n) {
    std::vector<Count> dims;
    for (int i = 0; i <= n; ++i) {
        dims.push_back(static_cast<Count>(1 + rng() % 64));
    }
    ChainSpec s = ChainSpec::plain(dims, static_cast<Count>(1 + rng() % 4));
    s.batch = static_cast<Count>(1 + rng() % 3);
    for (auto& op : s.operands) {
        op.residency = static_cast<Residency>(rng() % 4);
        op.per_head = rng() % 2 == 0;
        op.per_sequence = rng() % 2 == 0;
    }
    return s;
}

}  // namespace

TEST_CASE("order trees parse, print and rebuild from split sequences") {
    const auto t = OrderTree::parse("((0*1)*2)*3");
    CHECK(t.to_string() == "(((0*1)*2)*3)");
    CHECK(t == OrderTree::left_to_right(4));
    CHECK(t.split_sequence() == std::vector<int>{2, 1, 0});
    CHECK(OrderTree::from_splits(0, 3, t.split_sequence()) == t);
    CHECK(OrderTree::parse(" 0 * ( 1*2 ) ").to_string() == "(0*(1*2))");
    CHECK_THROWS_AS((void)OrderTree::parse("(0*1"), std::invalid_argument);
    CHECK_THROWS_AS((void)OrderTree::parse("0*x"), std::invalid_argument);
    CHECK_THROWS_AS((void)OrderTree::from_splits(0, 2, {0}), std::invalid_argument);
}

TEST_CASE("chain_macs on the textbook 3-matrix chain") {
    const auto spec = ChainSpec::plain({10, 30, 5, 60});
    CHECK(chain_macs(spec, OrderTree::parse("(0*1)*2")) == 4'500);
    CHECK(chain_macs(spec, OrderTree::parse("0*(1*2)")) == 27'000);
}

TEST_CASE("a single inner product costs its length") {
    for (Count k : {1, 7, 1000}) {
        CHECK(chain_macs(ChainSpec::plain({1, k, 1}), OrderTree::parse("0*1")) == k);
    }
}

TEST_CASE("query-key chain of the latent layer at T=4096") {
    const auto spec = ChainSpec::plain({1, 1536, 128, 512, 4096}, 128);
    // Values from brute-force enumeration (tests/oracles/cost_oracle.py).
    CHECK(chain_macs(spec, OrderTree::parse("((0*1)*2)*3")) == 301'989'888);
    CHECK(chain_macs(spec, OrderTree::parse("(0*(1*2))*3")) == 13'254'000'640);
    CHECK(chain_macs(spec, OrderTree::parse("(0*1)*(2*3)")) == 34'452'013'056);
    CHECK(chain_macs(spec, OrderTree::parse("0*((1*2)*3)")) == 426'007'068'672);
    CHECK(chain_macs(spec, OrderTree::parse("0*(1*(2*3))")) == 138'244'259'840);

    const auto best = optimal_order(spec);
    CHECK(best.tree == OrderTree::left_to_right(4));
    CHECK(best.macs == 301'989'888);
}

TEST_CASE("malformed trees are rejected") {
    const auto spec = ChainSpec::plain({2, 3, 4, 5});
    CHECK_THROWS_AS((void)chain_macs(spec, OrderTree::parse("(0*2)*1")), std::invalid_argument);
    CHECK_THROWS_AS((void)chain_macs(spec, OrderTree::parse("0*1")), std::invalid_argument);
    CHECK_THROWS_AS((void)chain_macs(spec, OrderTree::parse("(0*1)*(2*3)")), std::invalid_argument);
    CHECK_THROWS_AS((void)chain_macs(spec, OrderTree::parse("(0*0)*1")), std::invalid_argument);
}

TEST_CASE("enumerate_orders yields Catalan many distinct valid trees") {
    const int catalan[] = {1, 1, 2, 5, 14, 42, 132, 429};
    for (int n = 1; n <= 8; ++n) {
        const auto all = enumerate_orders(n);
        CHECK(static_cast<int>(all.size()) == catalan[n - 1]);
        std::set<std::string> seen;
        for (const auto& t : all) {
            CHECK_NOTHROW(t.validate(n));
            seen.insert(t.to_string());
        }
        CHECK(seen.size() == all.size());
    }
    CHECK_THROWS_AS((void)enumerate_orders(0), std::out_of_range);
    CHECK_THROWS_AS((void)enumerate_orders(9), std::out_of_range);
}

TEST_CASE("optimal_order matches exhaustive enumeration") {
    std::mt19937_64 rng(2024);
    for (int iter = 0; iter < 300; ++iter) {
        const int n = 2 + static_cast<int>(rng() % 7);
        const auto spec = random_spec(rng, n);
        const auto dp = optimal_order(spec);
        const auto brute = brute_force_optimal(spec);
        REQUIRE(dp.macs == brute.macs);
        CHECK(dp.macs == chain_macs(spec, dp.tree));
        CHECK(dp.tree == brute.tree);
    }
}

TEST_CASE("ties resolve to the smallest split sequence") {
    // Square chain: every parenthesization costs the same.
    const auto spec = ChainSpec::plain({4, 4, 4, 4, 4});
    const auto best = optimal_order(spec);
    CHECK(best.tree.to_string() == "(0*(1*(2*3)))");
    CHECK(best.macs == 3 * 64);
    CHECK_THROWS_AS((void)optimal_order(ChainSpec::plain({3, 4})), std::invalid_argument);
}

TEST_CASE("head multiplicity scales like repeated single-head chains") {
    std::mt19937_64 rng(99);
    for (int iter = 0; iter < 100; ++iter) {
        const int n = 2 + static_cast<int>(rng() % 5);
        auto spec = random_spec(rng, n);
        for (auto& op : spec.operands) {
            op.per_head = true;
        }
        const Count k = static_cast<Count>(1 + rng() % 6);
        auto single = spec;
        single.head_multiplicity = 1;
        spec.head_multiplicity = k;
        for (const auto& t : enumerate_orders(n)) {
            CHECK(chain_macs(spec, t) == k * chain_macs(single, t));
        }
    }
}

TEST_CASE("chain_traffic examples") {
    SUBCASE("all operands resident") {
        auto spec = ChainSpec::plain({3, 4, 5});
        for (auto& op : spec.operands) {
            op.residency = Residency::Resident;
        }
        CHECK(chain_traffic(spec, OrderTree::parse("0*1"), 2) == Traffic{0, 3 * 5 * 2});
    }
    SUBCASE("streamed weight times activation") {
        auto spec = ChainSpec::plain({2, 2, 1});
        spec.operands[1].residency = Residency::ActivationIn;
        CHECK(chain_traffic(spec, OrderTree::parse("0*1"), 2) == Traffic{12, 4});
    }
    SUBCASE("recompute query-key chain at T=4096, 1 byte per element") {
        ChainSpec spec;
        spec.dims = {1, 1536, 128, 512, 4096};
        spec.head_multiplicity = 128;
        spec.operands = {
            {Residency::ActivationIn, false, true},
            {Residency::StreamedWeight, true, false},
            {Residency::StreamedWeight, true, false},
            {Residency::CacheRead, false, true},
        };
        // Per-operand summation (cost_oracle.py): 128*(1536*128 + 128*512) + 1536 + 512*4096.
        const auto t = chain_traffic(spec, OrderTree::parse("(0*(1*2))*3"), 1);
        CHECK(t.read_bytes == 35'653'120);
        CHECK(t.write_bytes == 128 * 4096);
    }
}

TEST_CASE("traffic depends only on residency, MACs on the order") {
    std::mt19937_64 rng(5);
    int order_sensitive = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const int n = 3 + static_cast<int>(rng() % 4);
        const auto spec = random_spec(rng, n);
        const auto all = enumerate_orders(n);
        const auto ref = chain_traffic(spec, all.front(), 2);
        std::set<Count> macs;
        for (const auto& t : all) {
            CHECK(chain_traffic(spec, t, 2) == ref);
            macs.insert(chain_macs(spec, t));
        }
        order_sensitive += macs.size() > 1 ? 1 : 0;
    }
    CHECK(order_sensitive > 150);
}

TEST_CASE("batch-shared products are counted once per call") {
    // Weight-only middle product computed once; activation products per sequence.
    ChainSpec spec;
    spec.dims = {1, 6, 5, 4, 9};
    spec.head_multiplicity = 3;
    spec.batch = 4;
    spec.operands = {{Residency::Resident, false, true},
                     {Residency::StreamedWeight, true, false},
                     {Residency::StreamedWeight, true, false},
                     {Residency::Resident, false, true}};
    const Count absorb = 3 * 6 * 5 * 4;
    const Count q = 3 * 4 * 1 * 6 * 4;
    const Count scores = 3 * 4 * 1 * 4 * 9;
    CHECK(chain_macs(spec, OrderTree::parse("(0*(1*2))*3")) == absorb + q + scores);
    CHECK_FALSE(is_batch_shared(spec, 0, 1));
    CHECK(is_batch_shared(spec, 1, 2));
}

TEST_CASE("named query-key orders") {
    CHECK(qk_order_tree(QkOrder::LeftToRight).to_string() == "(((0*1)*2)*3)");
    CHECK(qk_order_tree(QkOrder::MiddleFirst).to_string() == "((0*(1*2))*3)");
    CHECK(qk_order_tree(QkOrder::OuterFirst).to_string() == "((0*1)*(2*3))");
    CHECK(qk_order_label(QkOrder::MiddleFirst) == "2->1->3");
}
