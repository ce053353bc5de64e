#pragma once

#include <array>
#include <cmath>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "mlaperf/attention_cost.hpp"
#include "mlaperf/core_config.hpp"
#include "mlaperf/dense_matrix.hpp"
#include "mlaperf/order_tree.hpp"
#include "mlaperf/scalar_backends.hpp"

// Toy-scale dense MHA/MLA. Matmuls are naive triple loops that tally every
// multiply-accumulate they execute, so the kernel doubles as a structural
// oracle for the analytical counts. Scalar backends: double (numerics),
// ExactInt (exact associativity checks), Phantom (counting only).
namespace mlaperf {

enum class MlaScheme { Recompute, Reuse };

template <class S>
struct MhaWeights {
    std::vector<DenseMatrix<S>> w_q;  // per head, d_model x d_qk
    std::vector<DenseMatrix<S>> w_k;  // per head, d_model x d_qk
    std::vector<DenseMatrix<S>> w_v;  // per head, d_model x d_v
    DenseMatrix<S> w_o;               // (n_heads * d_v) x d_model
};

template <class S>
struct MlaWeights {
    DenseMatrix<S> w_q_down;             // d_model x d_q_latent
    DenseMatrix<S> w_kv_down;            // d_model x d_kv_latent
    std::vector<DenseMatrix<S>> w_q_up;  // per head, d_q_latent x d_qk
    std::vector<DenseMatrix<S>> w_k_up;  // per head, d_kv_latent x d_qk
    std::vector<DenseMatrix<S>> w_v_up;  // per head, d_kv_latent x d_v
    DenseMatrix<S> w_o;                  // (n_heads * d_v) x d_model
    // Per-head W_up^Q * W_up^K^T, filled by precompute_absorbed().
    std::vector<DenseMatrix<S>> absorbed;
};

// Per sequence: per-head K and V history.
template <class S>
struct MhaCache {
    std::vector<DenseMatrix<S>> keys;
    std::vector<DenseMatrix<S>> values;
};

// Per sequence: the latent rows C_KV,l.
template <class S>
struct MlaCache {
    DenseMatrix<S> latent;
};

template <class S>
struct KernelResult {
    std::vector<DenseMatrix<S>> outputs;  // one (L_q x d_model) matrix per sequence
    Count mac_tally = 0;
    std::array<Count, kAllStages.size()> stage_tallies{};
    Count softmax_elements = 0;

    [[nodiscard]] Count stage(Stage s) const { return stage_tallies[static_cast<std::size_t>(s)]; }
};

// Order actually used for the QK chain of a scheme. The reuse chain has only
// three operands (Q_l, W_absorb, C^T): the two left-first orders coincide and
// "outer first" multiplies W_absorb into the cache first.
[[nodiscard]] OrderTree qk_order_tree_for(MlaScheme scheme, QkOrder order);

namespace detail {

template <class S>
class Tally {
public:
    explicit Tally(KernelResult<S>& r) : r_(r) {}

    // out += a * b, charging every MAC to `stage`.
    void matmul_acc(const DenseMatrix<S>& a, const DenseMatrix<S>& b, DenseMatrix<S>& out, Stage stage) {
        if (a.cols() != b.rows() || out.rows() != a.rows() || out.cols() != b.cols()) {
            throw std::invalid_argument(fmt::format("shape mismatch: ({}x{}) * ({}x{}) into ({}x{})", a.rows(),
                                                    a.cols(), b.rows(), b.cols(), out.rows(), out.cols()));
        }
        Count macs = 0;
        for (Count i = 0; i < a.rows(); ++i) {
            for (Count j = 0; j < b.cols(); ++j) {
                S acc = out(i, j);
                for (Count k = 0; k < a.cols(); ++k) {
                    acc = acc + a(i, k) * b(k, j);
                    ++macs;
                }
                out(i, j) = acc;
            }
        }
        r_.mac_tally += macs;
        r_.stage_tallies[static_cast<std::size_t>(stage)] += macs;
    }

    DenseMatrix<S> matmul(const DenseMatrix<S>& a, const DenseMatrix<S>& b, Stage stage) {
        DenseMatrix<S> out(a.rows(), b.cols());
        matmul_acc(a, b, out, stage);
        return out;
    }

    // Row-wise softmax of z / sqrt(d_qk).
    DenseMatrix<S> softmax_rows(const DenseMatrix<S>& z, Count d_qk) {
        const double scale = 1.0 / std::sqrt(static_cast<double>(d_qk));
        DenseMatrix<S> out(z.rows(), z.cols());
        for (Count i = 0; i < z.rows(); ++i) {
            const auto p = ScalarTraits<S>::softmax(z.row(i), scale);
            std::copy(p.begin(), p.end(), out.data().begin() + static_cast<std::ptrdiff_t>(i * z.cols()));
            r_.softmax_elements += z.cols();
        }
        return out;
    }

private:
    KernelResult<S>& r_;
};

struct ChainSlot {
    int first;
    int last;
    friend bool operator<(const ChainSlot& a, const ChainSlot& b) {
        return std::pair(a.first, a.last) < std::pair(b.first, b.last);
    }
};

template <class S>
struct ChainInput {
    const DenseMatrix<S>* matrix;
    bool per_sequence;
};

// Evaluates one chain instance. Products that touch no per-sequence operand
// are kept in `shared` and computed only on first use, which is how weight
// products are shared across the batch. When `root_target` is set, the final
// product accumulates into it.
template <class S, class StageOf>
DenseMatrix<S> eval_chain(const std::vector<ChainInput<S>>& inputs, const OrderTree& tree,
                          std::map<ChainSlot, DenseMatrix<S>>& shared, Tally<S>& tally, StageOf&& stage_of,
                          DenseMatrix<S>* root_target) {
    tree.validate(static_cast<int>(inputs.size()));
    std::map<ChainSlot, DenseMatrix<S>> local;
    auto value = [&](int first, int last) -> const DenseMatrix<S>& {
        if (first == last) {
            return *inputs[static_cast<std::size_t>(first)].matrix;
        }
        if (auto it = shared.find({first, last}); it != shared.end()) {
            return it->second;
        }
        return local.at({first, last});
    };

    const auto products = tree.products();
    DenseMatrix<S> result;
    for (std::size_t i = 0; i < products.size(); ++i) {
        const auto& p = products[i];
        bool batch_shared = true;
        for (int k = p.first; k <= p.last; ++k) {
            batch_shared = batch_shared && !inputs[static_cast<std::size_t>(k)].per_sequence;
        }
        if (batch_shared && shared.count({p.first, p.last}) != 0) {
            continue;
        }
        const Stage stage = stage_of(p, batch_shared);
        const auto& lhs = value(p.first, p.split);
        const auto& rhs = value(p.split + 1, p.last);
        const bool is_root = i + 1 == products.size();
        if (is_root && root_target != nullptr) {
            tally.matmul_acc(lhs, rhs, *root_target, stage);
            continue;
        }
        auto out = tally.matmul(lhs, rhs, stage);
        if (is_root) {
            result = std::move(out);
        } else if (batch_shared) {
            shared.emplace(ChainSlot{p.first, p.last}, std::move(out));
        } else {
            local.emplace(ChainSlot{p.first, p.last}, std::move(out));
        }
    }
    return result;
}

template <class S>
void expect_shape(const DenseMatrix<S>& m, Count rows, Count cols, const char* what) {
    if (m.rows() != rows || m.cols() != cols) {
        throw std::invalid_argument(
            fmt::format("shape mismatch: {} is {}x{}, expected {}x{}", what, m.rows(), m.cols(), rows, cols));
    }
}

template <class S>
void expect_heads(const std::vector<DenseMatrix<S>>& v, Count heads, Count rows, Count cols, const char* what) {
    if (static_cast<Count>(v.size()) != heads) {
        throw std::invalid_argument(fmt::format("shape mismatch: {} has {} heads, expected {}", what, v.size(), heads));
    }
    for (const auto& m : v) {
        expect_shape(m, rows, cols, what);
    }
}

template <class S>
void check_inputs(const AttentionConfig& cfg, std::span<const DenseMatrix<S>> x, std::size_t caches) {
    if (x.empty()) {
        throw std::invalid_argument("kernel needs at least one sequence");
    }
    if (x.size() != caches) {
        throw std::invalid_argument(fmt::format("{} sequences but {} caches", x.size(), caches));
    }
    for (const auto& xi : x) {
        if (xi.cols() != cfg.d_model || xi.rows() < 1) {
            throw std::invalid_argument(fmt::format("shape mismatch: input is {}x{}, expected Lx{}", xi.rows(),
                                                    xi.cols(), cfg.d_model));
        }
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Weight and cache construction
// ---------------------------------------------------------------------------

template <class S>
DenseMatrix<S> random_matrix(Count rows, Count cols, std::mt19937_64& rng) {
    DenseMatrix<S> m(rows, cols);
    for (auto& v : m.data()) {
        v = ScalarTraits<S>::random(rng);
    }
    return m;
}

template <class S>
MhaWeights<S> random_mha_weights(const AttentionConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (cfg.is_mla()) {
        throw std::invalid_argument("MHA weights need an MHA config");
    }
    MhaWeights<S> w;
    for (Count h = 0; h < cfg.n_heads; ++h) {
        w.w_q.push_back(random_matrix<S>(cfg.d_model, cfg.d_qk, rng));
        w.w_k.push_back(random_matrix<S>(cfg.d_model, cfg.d_qk, rng));
        w.w_v.push_back(random_matrix<S>(cfg.d_model, cfg.d_v, rng));
    }
    w.w_o = random_matrix<S>(cfg.n_heads * cfg.d_v, cfg.d_model, rng);
    return w;
}

template <class S>
MlaWeights<S> random_mla_weights(const AttentionConfig& cfg, std::mt19937_64& rng) {
    cfg.validate();
    if (!cfg.is_mla()) {
        throw std::invalid_argument("MLA weights need an MLA config");
    }
    MlaWeights<S> w;
    w.w_q_down = random_matrix<S>(cfg.d_model, cfg.q_latent(), rng);
    w.w_kv_down = random_matrix<S>(cfg.d_model, cfg.kv_latent(), rng);
    for (Count h = 0; h < cfg.n_heads; ++h) {
        w.w_q_up.push_back(random_matrix<S>(cfg.q_latent(), cfg.d_qk, rng));
        w.w_k_up.push_back(random_matrix<S>(cfg.kv_latent(), cfg.d_qk, rng));
        w.w_v_up.push_back(random_matrix<S>(cfg.kv_latent(), cfg.d_v, rng));
    }
    w.w_o = random_matrix<S>(cfg.n_heads * cfg.d_v, cfg.d_model, rng);
    return w;
}

// T random cached tokens per head.
template <class S>
MhaCache<S> random_mha_cache(const AttentionConfig& cfg, Count tokens, std::mt19937_64& rng) {
    MhaCache<S> c;
    for (Count h = 0; h < cfg.n_heads; ++h) {
        c.keys.push_back(random_matrix<S>(tokens, cfg.d_qk, rng));
        c.values.push_back(random_matrix<S>(tokens, cfg.d_v, rng));
    }
    return c;
}

template <class S>
MlaCache<S> random_mla_cache(const AttentionConfig& cfg, Count tokens, std::mt19937_64& rng) {
    return MlaCache<S>{random_matrix<S>(tokens, cfg.kv_latent(), rng)};
}

// Per-head W_up^Q * W_up^K^T (d_q_latent x d_kv_latent). Offline work, so
// nothing is tallied.
template <class S>
std::vector<DenseMatrix<S>> precompute_absorbed(const MlaWeights<S>& w) {
    if (w.w_q_up.size() != w.w_k_up.size()) {
        throw std::invalid_argument("shape mismatch: W_up^Q and W_up^K head counts differ");
    }
    KernelResult<S> scratch;
    detail::Tally<S> tally(scratch);
    std::vector<DenseMatrix<S>> out;
    for (std::size_t h = 0; h < w.w_q_up.size(); ++h) {
        out.push_back(tally.matmul(w.w_q_up[h], w.w_k_up[h].transposed(), Stage::AbsorbRecompute));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Kernels
// ---------------------------------------------------------------------------

// head_i = softmax(Q_i K_i^T / sqrt(D_QK)) V_i; Y = Concat(heads) W^O.
// Appends each sequence's new K/V rows to its cache. No causal mask.
template <class S>
KernelResult<S> run_mha(const AttentionConfig& cfg, const MhaWeights<S>& w, std::span<const DenseMatrix<S>> x,
                        std::vector<MhaCache<S>>& caches) {
    cfg.validate();
    if (cfg.is_mla()) {
        throw std::invalid_argument("run_mha needs an MHA config");
    }
    detail::check_inputs(cfg, x, caches.size());
    const Count h = cfg.n_heads;
    detail::expect_heads(w.w_q, h, cfg.d_model, cfg.d_qk, "W^Q");
    detail::expect_heads(w.w_k, h, cfg.d_model, cfg.d_qk, "W^K");
    detail::expect_heads(w.w_v, h, cfg.d_model, cfg.d_v, "W^V");
    detail::expect_shape(w.w_o, h * cfg.d_v, cfg.d_model, "W^O");
    for (const auto& c : caches) {
        const Count t = c.keys.empty() ? 0 : c.keys.front().rows();
        detail::expect_heads(c.keys, h, t, cfg.d_qk, "K cache");
        detail::expect_heads(c.values, h, t, cfg.d_v, "V cache");
    }

    KernelResult<S> r;
    detail::Tally<S> tally(r);
    for (std::size_t b = 0; b < x.size(); ++b) {
        const auto& xb = x[b];
        DenseMatrix<S> y(xb.rows(), cfg.d_model);
        for (Count head = 0; head < h; ++head) {
            const auto hi = static_cast<std::size_t>(head);
            const auto q = tally.matmul(xb, w.w_q[hi], Stage::DownProj);
            caches[b].keys[hi].append_rows(tally.matmul(xb, w.w_k[hi], Stage::DownProj));
            caches[b].values[hi].append_rows(tally.matmul(xb, w.w_v[hi], Stage::DownProj));

            const auto z = tally.matmul(q, caches[b].keys[hi].transposed(), Stage::Scores);
            const auto s = tally.softmax_rows(z, cfg.d_qk);
            const auto ctx = tally.matmul(s, caches[b].values[hi], Stage::Context);
            tally.matmul_acc(ctx, w.w_o.row_block(head * cfg.d_v, cfg.d_v), y, Stage::OutProj);
        }
        r.outputs.push_back(std::move(y));
    }
    return r;
}

// Latent attention with an explicit parenthesization of both chains:
//   Z = Q_l W_up^Q W_up^K^T C^T      (recompute)
//   Z = Q_l W_absorb C^T             (reuse)
//   Y += softmax(Z / sqrt(D_QK)) C W_up^V W^O_h   per head
// Appends each sequence's new latent rows to its cache.
template <class S>
KernelResult<S> run_mla(const AttentionConfig& cfg, const MlaWeights<S>& w, std::span<const DenseMatrix<S>> x,
                        std::vector<MlaCache<S>>& caches, QkOrder qk_order, const OrderTree& out_order,
                        MlaScheme scheme) {
    cfg.validate();
    if (!cfg.is_mla()) {
        throw std::invalid_argument("run_mla needs an MLA config");
    }
    detail::check_inputs(cfg, x, caches.size());
    const Count h = cfg.n_heads;
    const Count dql = cfg.q_latent();
    const Count dkv = cfg.kv_latent();
    detail::expect_shape(w.w_q_down, cfg.d_model, dql, "W_down^Q");
    detail::expect_shape(w.w_kv_down, cfg.d_model, dkv, "W_down^KV");
    detail::expect_heads(w.w_q_up, h, dql, cfg.d_qk, "W_up^Q");
    detail::expect_heads(w.w_k_up, h, dkv, cfg.d_qk, "W_up^K");
    detail::expect_heads(w.w_v_up, h, dkv, cfg.d_v, "W_up^V");
    detail::expect_shape(w.w_o, h * cfg.d_v, cfg.d_model, "W^O");
    if (scheme == MlaScheme::Reuse) {
        if (w.absorbed.empty()) {
            throw std::invalid_argument("reuse scheme needs precomputed absorbed matrices");
        }
        detail::expect_heads(w.absorbed, h, dql, dkv, "W_absorb");
    }
    for (const auto& c : caches) {
        if (c.latent.rows() > 0) {
            detail::expect_shape(c.latent, c.latent.rows(), dkv, "latent cache");
        }
    }
    const OrderTree qk_tree = qk_order_tree_for(scheme, qk_order);
    out_order.validate(4);

    KernelResult<S> r;
    detail::Tally<S> tally(r);
    const std::size_t batch = x.size();

    std::vector<DenseMatrix<S>> q_latent(batch);
    std::vector<DenseMatrix<S>> cache_t(batch);
    std::vector<DenseMatrix<S>> y(batch);
    for (std::size_t b = 0; b < batch; ++b) {
        q_latent[b] = tally.matmul(x[b], w.w_q_down, Stage::DownProj);
        caches[b].latent.append_rows(tally.matmul(x[b], w.w_kv_down, Stage::DownProj));
        cache_t[b] = caches[b].latent.transposed();
        y[b] = DenseMatrix<S>(x[b].rows(), cfg.d_model);
    }

    const int qk_last = scheme == MlaScheme::Recompute ? 3 : 2;
    auto qk_stage = [qk_last](const Product& p, bool batch_shared) {
        if (p.last == qk_last) {
            return Stage::Scores;
        }
        return batch_shared ? Stage::AbsorbRecompute : Stage::QTransform;
    };
    auto out_stage = [](const Product& p, bool batch_shared) {
        if (p.first == 0 && p.last == 3) {
            return Stage::OutProj;
        }
        if (batch_shared) {
            return Stage::AbsorbRecompute;
        }
        return (p.first == 0 && p.last == 1) ? Stage::Context : Stage::UpV;
    };

    for (Count head = 0; head < h; ++head) {
        const auto hi = static_cast<std::size_t>(head);
        const auto k_up_t = w.w_k_up[hi].transposed();
        const auto w_o_head = w.w_o.row_block(head * cfg.d_v, cfg.d_v);
        std::map<detail::ChainSlot, DenseMatrix<S>> qk_shared;
        std::map<detail::ChainSlot, DenseMatrix<S>> out_shared;

        for (std::size_t b = 0; b < batch; ++b) {
            std::vector<detail::ChainInput<S>> qk_inputs;
            if (scheme == MlaScheme::Recompute) {
                qk_inputs = {{&q_latent[b], true}, {&w.w_q_up[hi], false}, {&k_up_t, false}, {&cache_t[b], true}};
            } else {
                qk_inputs = {{&q_latent[b], true}, {&w.absorbed[hi], false}, {&cache_t[b], true}};
            }
            const auto z = detail::eval_chain(qk_inputs, qk_tree, qk_shared, tally, qk_stage, static_cast<DenseMatrix<S>*>(nullptr));
            const auto s = tally.softmax_rows(z, cfg.d_qk);

            const std::vector<detail::ChainInput<S>> out_inputs = {
                {&s, true}, {&caches[b].latent, true}, {&w.w_v_up[hi], false}, {&w_o_head, false}};
            detail::eval_chain(out_inputs, out_order, out_shared, tally, out_stage, &y[b]);
        }
    }
    r.outputs = std::move(y);
    return r;
}

// Independent straight-line MHA in double precision: explicit index loops,
// its own softmax, no shared helpers with run_mha. Does not modify `caches`.
std::vector<DenseMatrix<double>> mha_straight_line(const AttentionConfig& cfg, const MhaWeights<double>& w,
                                                   std::span<const DenseMatrix<double>> x,
                                                   const std::vector<MhaCache<double>>& caches);

// max |a - b| / max |b| over all outputs; 0 when both are identically zero.
double max_relative_deviation(const std::vector<DenseMatrix<double>>& a, const std::vector<DenseMatrix<double>>& b);

}  // namespace mlaperf
