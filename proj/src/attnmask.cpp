#include "lusd/attnmask.hpp"

#include <algorithm>
#include <cmath>

#include "lusd/error.hpp"

namespace lusd {

namespace {

std::size_t exact_sqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n ? r : 0;
}

Map2D mean_of(const std::vector<const Map2D*>& maps, const char* what) {
    if (maps.empty()) throw ShapeError(std::string(what) + ": empty layer list");
    Map2D acc(maps.front()->height, maps.front()->width);
    for (const Map2D* m : maps) {
        if (m->height != acc.height || m->width != acc.width) {
            throw ShapeError(std::string(what) + ": maps differ in shape");
        }
        for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += m->values[i];
    }
    const double n = static_cast<double>(maps.size());
    for (double& v : acc.values) v /= n;
    return acc;
}

Map2D mean_of_tensors(const std::vector<GridTensor>& maps, const char* what) {
    std::vector<Map2D> converted;
    converted.reserve(maps.size());
    for (const GridTensor& t : maps) converted.push_back(Map2D::from_tensor(t));
    std::vector<const Map2D*> ptrs;
    for (const Map2D& m : converted) ptrs.push_back(&m);
    return mean_of(ptrs, what);
}

}  // namespace

Map2D Map2D::from_tensor(const GridTensor& t) {
    const Shape& s = t.shape();
    if (s.channels != 1) throw ShapeError("expected a single-channel map, got " + s.str());
    Map2D m(s.height, s.width);
    for (std::size_t i = 0; i < t.size(); ++i) m.values[i] = t[i];
    return m;
}

GridTensor Map2D::to_tensor() const {
    GridTensor t(Shape{1, height, width});
    for (std::size_t i = 0; i < values.size(); ++i) t[i] = static_cast<float>(values[i]);
    return t;
}

double Map2D::min() const { return values.empty() ? 0.0 : *std::min_element(values.begin(), values.end()); }
double Map2D::max() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }

void AttentionBundle::validate() const {
    if (self_maps.empty()) throw ShapeError("attention bundle has no self maps");
    if (cross_maps.empty()) throw ShapeError("attention bundle has no cross maps");
    const Shape s0 = self_maps.front().shape();
    if (s0.channels != 1 || s0.height != s0.width || exact_sqrt(s0.height) == 0) {
        throw ShapeError("self map must be (1, N, N) with square N, got " + s0.str());
    }
    for (const GridTensor& m : self_maps) {
        if (m.shape() != s0) throw ShapeError("self maps differ in shape");
        for (std::size_t r = 0; r < s0.height; ++r) {
            double row = 0.0;
            for (std::size_t c = 0; c < s0.width; ++c) {
                const float v = m.at(0, r, c);
                if (!(v >= 0.0f)) throw ShapeError("self map has a negative or NaN entry");
                row += v;
            }
            if (std::fabs(row - 1.0) > 1e-3) throw ShapeError("self map row does not sum to 1");
        }
    }
    std::optional<Shape> cs;
    for (const auto& [token, layers] : cross_maps) {
        if (layers.empty()) throw ShapeError("token " + std::to_string(token) + " has no cross maps");
        for (const GridTensor& m : layers) {
            const Shape& s = m.shape();
            if (s.channels != 1 || s.height != s.width || s.height == 0) {
                throw ShapeError("cross map must be (1, s, s), got " + s.str());
            }
            if (cs && s != *cs) throw ShapeError("cross maps differ in shape");
            cs = s;
            if (!all_finite(m) || min_value(m) < 0.0f) throw ShapeError("cross map has a negative entry");
        }
    }
}

LayerAverages average_layers(const AttentionBundle& bundle) {
    if (bundle.cross_maps.empty()) throw ShapeError("average_layers: no cross maps");
    LayerAverages out;
    out.self_avg = mean_of_tensors(bundle.self_maps, "average_layers(self)");
    for (const auto& [token, layers] : bundle.cross_maps) {
        out.cross_avg.emplace(token, mean_of_tensors(layers, "average_layers(cross)"));
    }
    return out;
}

Map2D resize_bilinear(const Map2D& map, std::size_t out_h, std::size_t out_w) {
    if (map.height == 0 || map.width == 0 || out_h == 0 || out_w == 0) {
        throw ShapeError("resize_bilinear: empty map");
    }
    Map2D out(out_h, out_w);
    const double sy = static_cast<double>(map.height) / out_h;
    const double sx = static_cast<double>(map.width) / out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
        const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(map.height - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const std::size_t y1 = std::min(y0 + 1, map.height - 1);
        const double wy = fy - y0;
        for (std::size_t x = 0; x < out_w; ++x) {
            const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(map.width - 1));
            const auto x0 = static_cast<std::size_t>(fx);
            const std::size_t x1 = std::min(x0 + 1, map.width - 1);
            const double wx = fx - x0;
            const double top = (1 - wx) * map.at(y0, x0) + wx * map.at(y0, x1);
            const double bot = (1 - wx) * map.at(y1, x0) + wx * map.at(y1, x1);
            out.at(y, x) = (1 - wy) * top + wy * bot;
        }
    }
    return out;
}

Map2D upsample_cross(const Map2D& cross, std::size_t n_spatial) {
    if (cross.height != cross.width || cross.height == 0) {
        throw ShapeError("upsample_cross: cross map is not square");
    }
    const std::size_t side = exact_sqrt(n_spatial);
    if (side == 0) throw ShapeError("upsample_cross: target size is not a square number");
    if (side % cross.height != 0) {
        throw ShapeError("upsample_cross: no integer ratio from " + std::to_string(cross.height) +
                         " to " + std::to_string(side));
    }
    if (side == cross.height) return cross;
    return resize_bilinear(cross, side, side);
}

Map2D enhance(const Map2D& self_avg, const Map2D& cross) {
    const std::size_t n = self_avg.height;
    if (self_avg.width != n || cross.size() != n) {
        throw ShapeError("enhance: self matrix " + std::to_string(n) + "x" +
                         std::to_string(self_avg.width) + " incompatible with " +
                         std::to_string(cross.size()) + " cross values");
    }
    const std::size_t side = exact_sqrt(n);
    if (side == 0) throw ShapeError("enhance: N is not a square number");
    Map2D out(side, side);
    const double* v = cross.values.data();
    for (std::size_t r = 0; r < n; ++r) {
        const double* row = self_avg.values.data() + r * n;
        double acc = 0.0;
        for (std::size_t c = 0; c < n; ++c) acc += row[c] * v[c];
        out.values[r] = acc;
    }
    return out;
}

Map2D average_tokens(const std::map<int, Map2D>& per_token) {
    if (per_token.empty()) throw PromptError("average_tokens: no noun tokens to average");
    std::vector<const Map2D*> ptrs;
    for (const auto& [token, m] : per_token) ptrs.push_back(&m);
    return mean_of(ptrs, "average_tokens");
}

Map2D minmax_normalize(const Map2D& v) {
    const double lo = v.min();
    const double hi = v.max();
    Map2D out(v.height, v.width, 1.0);
    if (hi - lo < 1e-12) return out;
    const double range = hi - lo;
    for (std::size_t i = 0; i < v.size(); ++i) out.values[i] = (v.values[i] - lo) / range;
    return out;
}

MaskState update_ema(const MaskState& state, const Map2D& m_new, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ConfigError("update_ema: alpha outside (0, 1]");
    MaskState next;
    next.k = state.k + 1;
    next.initialized = true;
    if (!state.initialized) {
        next.m_ema = m_new;
        return next;
    }
    if (state.m_ema.height != m_new.height || state.m_ema.width != m_new.width) {
        throw ShapeError("update_ema: mask shape changed between steps");
    }
    next.m_ema = Map2D(m_new.height, m_new.width);
    for (std::size_t i = 0; i < m_new.size(); ++i) {
        next.m_ema.values[i] = (1.0 - alpha) * state.m_ema.values[i] + alpha * m_new.values[i];
    }
    return next;
}

Map2D blend_identity(const Map2D& m, double beta) {
    if (beta < 0.0 || beta > 1.0) throw ConfigError("blend_identity: beta outside [0, 1]");
    Map2D out(m.height, m.width);
    for (std::size_t i = 0; i < m.size(); ++i) out.values[i] = beta * m.values[i] + (1.0 - beta);
    return out;
}

Map2D mask_to_latent_resolution(const Map2D& m, std::size_t height, std::size_t width) {
    if (m.height == 0 || m.width == 0 || height % m.height != 0 || width % m.width != 0 ||
        height / m.height != width / m.width) {
        throw ShapeError("mask " + std::to_string(m.height) + "x" + std::to_string(m.width) +
                         " cannot be upsampled to " + std::to_string(height) + "x" +
                         std::to_string(width) + " by an integer factor");
    }
    if (height == m.height) return m;
    return resize_bilinear(m, height, width);
}

MaskResult compute_mask(const AttentionBundle& bundle, const std::vector<int>& tokens,
                        const MaskState& state, int k, int n_steps, const MaskOptions& opts) {
    if (tokens.empty()) throw PromptError("compute_mask: no noun tokens");
    if (n_steps < 1 || k < 1 || k > n_steps) throw ConfigError("compute_mask: step outside [1, N]");

    const LayerAverages avg = average_layers(bundle);
    const std::size_t n = avg.self_avg.height;

    std::map<int, Map2D> enhanced;
    for (int token : tokens) {
        const auto it = avg.cross_avg.find(token);
        if (it == avg.cross_avg.end()) {
            throw ShapeError("attention bundle has no cross map for token " + std::to_string(token));
        }
        enhanced.emplace(token, enhance(avg.self_avg, upsample_cross(it->second, n)));
    }
    const Map2D m = minmax_normalize(average_tokens(enhanced));

    MaskResult out;
    if (opts.use_ema) {
        out.state = update_ema(state, m, opts.ema_alpha);
    } else {
        out.state.m_ema = m;
        out.state.k = state.k + 1;
        out.state.initialized = true;
    }
    out.beta = opts.beta_fixed ? *opts.beta_fixed : static_cast<double>(k) / n_steps;
    out.mask_hat = mask_to_latent_resolution(blend_identity(out.state.m_ema, out.beta),
                                             opts.latent_height, opts.latent_width);
    return out;
}

}  // namespace lusd
