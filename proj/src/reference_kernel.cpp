#include "mlaperf/reference_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mlaperf {

std::vector<double> softmax_row(std::span<const double> v) {
    if (v.empty()) {
        throw std::invalid_argument("softmax of an empty row");
    }
    double peak = v.front();
    for (const double x : v) {
        if (!std::isfinite(x)) {
            throw std::invalid_argument("softmax input is not finite");
        }
        peak = std::max(peak, x);
    }
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp(v[i] - peak);
        sum += out[i];
    }
    for (auto& x : out) {
        x /= sum;
    }
    return out;
}

OrderTree qk_order_tree_for(MlaScheme scheme, QkOrder order) {
    if (scheme == MlaScheme::Recompute) {
        return qk_order_tree(order);
    }
    return order == QkOrder::OuterFirst ? OrderTree::parse("0*(1*2)") : OrderTree::parse("(0*1)*2");
}

std::vector<DenseMatrix<double>> mha_straight_line(const AttentionConfig& cfg, const MhaWeights<double>& w,
                                                   std::span<const DenseMatrix<double>> x,
                                                   const std::vector<MhaCache<double>>& caches) {
    const Count d = cfg.d_model;
    const Count dqk = cfg.d_qk;
    const Count dv = cfg.d_v;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dqk));
    if (caches.size() != x.size()) {
        throw std::invalid_argument("one cache per sequence required");
    }

    std::vector<DenseMatrix<double>> outputs;
    for (std::size_t b = 0; b < x.size(); ++b) {
        const auto& xb = x[b];
        const Count lq = xb.rows();
        DenseMatrix<double> y(lq, d);
        for (Count h = 0; h < cfg.n_heads; ++h) {
            const auto hi = static_cast<std::size_t>(h);
            const auto& kc = caches[b].keys[hi];
            const auto& vc = caches[b].values[hi];
            const Count t = kc.rows();
            const Count n = t + lq;

            // Key/value rows for the whole span: cached history then new tokens.
            std::vector<double> keys(static_cast<std::size_t>(n * dqk));
            std::vector<double> vals(static_cast<std::size_t>(n * dv));
            for (Count j = 0; j < n; ++j) {
                for (Count c = 0; c < dqk; ++c) {
                    double acc = 0.0;
                    if (j < t) {
                        acc = kc(j, c);
                    } else {
                        for (Count e = 0; e < d; ++e) {
                            acc += xb(j - t, e) * w.w_k[hi](e, c);
                        }
                    }
                    keys[static_cast<std::size_t>(j * dqk + c)] = acc;
                }
                for (Count c = 0; c < dv; ++c) {
                    double acc = 0.0;
                    if (j < t) {
                        acc = vc(j, c);
                    } else {
                        for (Count e = 0; e < d; ++e) {
                            acc += xb(j - t, e) * w.w_v[hi](e, c);
                        }
                    }
                    vals[static_cast<std::size_t>(j * dv + c)] = acc;
                }
            }

            for (Count i = 0; i < lq; ++i) {
                std::vector<double> query(static_cast<std::size_t>(dqk), 0.0);
                for (Count c = 0; c < dqk; ++c) {
                    for (Count e = 0; e < d; ++e) {
                        query[static_cast<std::size_t>(c)] += xb(i, e) * w.w_q[hi](e, c);
                    }
                }
                std::vector<double> weights(static_cast<std::size_t>(n));
                double top = -INFINITY;
                for (Count j = 0; j < n; ++j) {
                    double dot = 0.0;
                    for (Count c = 0; c < dqk; ++c) {
                        dot += query[static_cast<std::size_t>(c)] * keys[static_cast<std::size_t>(j * dqk + c)];
                    }
                    weights[static_cast<std::size_t>(j)] = dot * scale;
                    top = std::max(top, dot * scale);
                }
                double total = 0.0;
                for (auto& a : weights) {
                    a = std::exp(a - top);
                    total += a;
                }
                for (Count c = 0; c < dv; ++c) {
                    double head_val = 0.0;
                    for (Count j = 0; j < n; ++j) {
                        head_val += weights[static_cast<std::size_t>(j)] / total *
                                    vals[static_cast<std::size_t>(j * dv + c)];
                    }
                    for (Count e = 0; e < d; ++e) {
                        y(i, e) += head_val * w.w_o(h * dv + c, e);
                    }
                }
            }
        }
        outputs.push_back(std::move(y));
    }
    return outputs;
}

double max_relative_deviation(const std::vector<DenseMatrix<double>>& a, const std::vector<DenseMatrix<double>>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("output lists differ in length");
    }
    double diff = 0.0;
    double scale = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) {
            throw std::invalid_argument("outputs differ in shape");
        }
        const auto da = a[i].data();
        const auto db = b[i].data();
        for (std::size_t k = 0; k < da.size(); ++k) {
            diff = std::max(diff, std::abs(da[k] - db[k]));
            scale = std::max(scale, std::abs(db[k]));
        }
    }
    if (scale == 0.0) {
        return diff == 0.0 ? 0.0 : INFINITY;
    }
    return diff / scale;
}

}  // namespace mlaperf
