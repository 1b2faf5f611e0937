#include "lusd/engine.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>

#include "lusd/error.hpp"
#include "lusd/grad.hpp"
#include "lusd/image_io.hpp"

namespace lusd {

double effective_lr(const EngineConfig& cfg, const Shape& latent_shape) {
    if (cfg.grad_reduction == GradReduction::Sum) return cfg.lr;
    return cfg.lr / static_cast<double>(latent_shape.plane());
}

EditSession::EditSession(const EditRequest& request, DenoiserBackend& backend)
    : backend_(backend),
      config_(request.config),
      y_src_(request.y_src),
      y_tgt_(request.y_tgt),
      rng_(request.config.seed),
      filter_(request.config.effective_eta0(), request.config.eta_decay) {
    config_.validate();
    if (y_tgt_.empty()) throw PromptError("target prompt is empty");

    handshake_ = backend_.handshake();
    handshake_.validate();
    if (config_.use_mask && !handshake_.capabilities.attention) {
        throw ConfigError("backend '" + handshake_.backend_name + "' does not provide attention; disable use_mask");
    }
    if (request.source_image.shape() != handshake_.image_shape) {
        throw ShapeError("source image is " + request.source_image.shape().str() + ", backend expects " +
                         handshake_.image_shape.str());
    }
    z_src_ = backend_.encode(request.source_image);
    if (z_src_.shape() != handshake_.latent_shape) {
        throw ProtocolError("encode returned " + z_src_.shape().str() + ", handshake declared " +
                            handshake_.latent_shape.str());
    }
    z_ = z_src_;

    if (config_.use_mask) {
        const auto tokens = backend_.tokenize(y_tgt_);
        diff_ = request.nouns.empty() ? diff_prompts(y_src_, y_tgt_, tokens) : explicit_nouns(request.nouns, y_tgt_, tokens);
    } else if (!request.nouns.empty()) {
        diff_.noun_words = request.nouns;
    }
    if (config_.loss_mode == LossMode::DDS) backend_.begin_session(z_src_);
    lr_eff_ = effective_lr(config_, handshake_.latent_shape);

    if (config_.mask_dump_every > 0 && !config_.mask_dump_dir.empty()) {
        std::filesystem::create_directories(config_.mask_dump_dir);
    }
}

const StepRecord& EditSession::run_step() {
    if (done()) throw ConfigError("run_step: all steps already ran");
    const int k = k_ + 1;
    const int n = config_.steps;
    const Shape& shape = handshake_.latent_shape;

    StepRecord rec;
    rec.k = k;
    rec.gamma = gamma_at(k, n, config_);
    rec.beta = config_.beta_fixed.value_or(static_cast<double>(k) / n);
    filter_.reset();
    rec.t = sample_timestep(rng_, config_.t_min, config_.t_max);
    const double ab = handshake_.schedule.alpha_bar(rec.t);

    PredictResponse resp;
    GridTensor grad;
    for (int attempt = 0; attempt < config_.max_resamples; ++attempt) {
        GridTensor eps = sample_noise(rng_, shape);
        PredictRequest req;
        req.z_t = add_noise(z_, eps, ab);
        req.t = rec.t;
        req.y_tgt = y_tgt_;
        req.y_src = y_src_;
        req.omega = config_.cfg_omega;
        req.want_attention = config_.use_mask;
        req.mode = config_.loss_mode;
        if (config_.loss_mode != LossMode::SBP) req.eps = eps;
        resp = backend_.predict(req);
        if (resp.pair.eps_target.shape() != shape || resp.pair.eps_source.shape() != shape) {
            throw ProtocolError("predict returned tensors of the wrong shape");
        }
        grad = raw_gradient(resp.pair, eps, config_.loss_mode);
        rec.grad_std = grad_std(grad);
        rec.eta = filter_.eta();
        rec.rejections = filter_.rejections();
        if (filter_.test_and_decay(rec.grad_std) == FilterState::Verdict::Accept) {
            rec.accepted = true;
            break;
        }
        rec.rejections = filter_.rejections();
    }

    if (rec.accepted) {
        GridTensor mask(Shape{1, shape.height, shape.width}, 1.0f);
        if (config_.use_mask) {
            if (!resp.attention) throw ProtocolError("attention was requested but not returned");
            MaskOptions opts;
            opts.ema_alpha = config_.ema_alpha;
            opts.use_ema = config_.use_ema;
            opts.beta_fixed = config_.beta_fixed;
            opts.latent_height = shape.height;
            opts.latent_width = shape.width;
            MaskResult m = compute_mask(*resp.attention, diff_.token_indices, mask_state_, k, n, opts);
            mask_state_ = std::move(m.state);
            rec.beta = m.beta;
            rec.mask_min = m.mask_hat.min();
            rec.mask_max = m.mask_hat.max();
            double sum = 0.0;
            for (double v : m.mask_hat.values) sum += v;
            rec.mask_mean = sum / static_cast<double>(m.mask_hat.size());
            mask = m.mask_hat.to_tensor();
            if (config_.mask_dump_every > 0 && !config_.mask_dump_dir.empty() && k % config_.mask_dump_every == 0) {
                char name[32];
                std::snprintf(name, sizeof(name), "mask_%04d.pgm", k);
                write_pgm(std::filesystem::path(config_.mask_dump_dir) / name, m.mask_hat);
            }
            last_mask_ = std::move(m.mask_hat);
        }
        const GridTensor blended = blend_regularizer(grad, mask, z_, z_src_, config_.effective_lambda());
        NormalizedGradient step = normalize_and_scale(blended, rec.gamma, config_.use_normalize);
        rec.noop = step.noop;
        step.grad *= static_cast<float>(lr_eff_);
        rec.update_std = grad_std(step.grad);
        z_ -= step.grad;
    }

    telemetry_.push_back(rec);
    k_ = k;
    return telemetry_.back();
}

EditResult run_edit(const EditRequest& request, DenoiserBackend& backend) {
    const auto start = std::chrono::steady_clock::now();
    EditSession session(request, backend);
    while (!session.done()) session.run_step();

    EditResult r;
    r.source_latent = session.z_src();
    r.final_latent = session.z();
    r.image = backend.decode(session.z());
    r.telemetry = session.telemetry();
    r.diff = session.diff();
    r.backend_name = session.handshake().backend_name;
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

nlohmann::json telemetry_json(const EditResult& result, const EngineConfig& cfg) {
    using nlohmann::json;
    json config = json::object();
    for (const std::string& key : config_keys()) config[key] = get_config_value(cfg, key);

    json steps = json::array();
    int accepted = 0, noops = 0;
    long rejections = 0;
    for (const StepRecord& s : result.telemetry) {
        accepted += s.accepted ? 1 : 0;
        noops += s.noop ? 1 : 0;
        rejections += s.rejections;
        steps.push_back({{"k", s.k},
                         {"t", s.t},
                         {"std", s.grad_std},
                         {"eta", s.eta},
                         {"rejections", s.rejections},
                         {"gamma", s.gamma},
                         {"beta", s.beta},
                         {"accepted", s.accepted},
                         {"noop", s.noop},
                         {"mask", {{"min", s.mask_min}, {"max", s.mask_max}, {"mean", s.mask_mean}}},
                         {"update_std", s.update_std}});
    }
    double change = 0.0;
    if (!result.final_latent.empty()) change = mean_abs(result.final_latent - result.source_latent);
    return json{{"schema", kTelemetrySchema},
                {"rng", RngStream::kAlgorithm},
                {"backend", result.backend_name},
                {"config", std::move(config)},
                {"edit",
                 {{"differing_substring", result.diff.differing_substring},
                  {"nouns", result.diff.noun_words},
                  {"token_indices", result.diff.token_indices}}},
                {"summary",
                 {{"steps", result.telemetry.size()},
                  {"accepted", accepted},
                  {"skipped", static_cast<int>(result.telemetry.size()) - accepted},
                  {"noop", noops},
                  {"rejections", rejections},
                  {"mean_abs_latent_change", change}}},
                {"steps", std::move(steps)}};
}

}  // namespace lusd
