#include "lusd/stabilize.hpp"

#include <cmath>

#include "lusd/error.hpp"

namespace lusd {

double grad_std(const GridTensor& g) {
    if (g.size() < 2) throw ShapeError("grad_std: need at least 2 elements");
    double sum = 0.0;
    for (float v : g.data()) sum += v;
    const double mu = sum / static_cast<double>(g.size());
    double ss = 0.0;
    for (float v : g.data()) {
        const double d = v - mu;
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(g.size()));
}

FilterState::FilterState(double eta0, double eta_decay)
    : eta0_(eta0), eta_decay_(eta_decay), eta_(eta0) {
    if (eta0 < 0.0) throw ConfigError("eta0 must be >= 0");
    if (!(eta_decay > 0.0 && eta_decay < 1.0)) throw ConfigError("eta_decay must lie in (0, 1)");
}

FilterState::Verdict FilterState::test_and_decay(double std) {
    if (std >= eta_) {
        reset();
        return Verdict::Accept;
    }
    eta_ *= eta_decay_;
    ++rejections_;
    return Verdict::Reject;
}

void FilterState::reset() noexcept {
    eta_ = eta0_;
    rejections_ = 0;
}

double gamma_at(int k, int n_steps, const EngineConfig& cfg) {
    if (n_steps < 1 || k < 1 || k > n_steps) throw ConfigError("gamma_at: step outside [1, N]");
    if (!cfg.use_anneal) return 1.0;
    const double frac = n_steps == 1 ? 0.0 : static_cast<double>(k - 1) / (n_steps - 1);
    const double x = -cfg.gamma_span + 2.0 * cfg.gamma_span * frac;
    const double sigmoid = 1.0 / (1.0 + std::exp(-x));
    return cfg.gamma_lo * sigmoid + cfg.gamma_hi * (1.0 - sigmoid);
}

NormalizedGradient normalize_and_scale(const GridTensor& g, double gamma, bool use_normalize) {
    NormalizedGradient out;
    if (!use_normalize) {
        out.grad = g * static_cast<float>(gamma);
        return out;
    }
    const double sd = grad_std(g);
    if (sd < 1e-12) {
        out.grad = GridTensor(g.shape(), 0.0f);
        out.noop = true;
        return out;
    }
    const double scale = gamma / sd;
    out.grad = GridTensor(g.shape());
    for (std::size_t i = 0; i < g.size(); ++i) out.grad[i] = static_cast<float>(g[i] * scale);
    return out;
}

}  // namespace lusd
