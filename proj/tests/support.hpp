#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "lusd/backend.hpp"
#include "lusd/error.hpp"
#include "lusd/tensor.hpp"

namespace lusd::test {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("lusd_test_" + std::to_string(std::random_device{}()) + "_" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline GridTensor random_tensor(Shape s, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> n(0.0, scale);
    GridTensor t(s);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(n(gen));
    return t;
}

/// Backend whose raw gradient std is scripted per predict call.
///
/// Latent (1, 8, 8), image (3, 8, 8). eps_target is a +-s checkerboard, so
/// the SBP gradient has population std exactly s; eps_source is zero.
/// Attention: identity self map at 8 x 8, uniform-in-region cross maps at
/// 4 x 4 for every non-BOS token.
class ScriptedBackend final : public DenoiserBackend {
public:
    /// Called with the 0-based predict call number; returns the std.
    std::function<double(int)> script = [](int) { return 0.5; };
    std::function<std::vector<float>(const std::string&)> text_embed = [](const std::string&) {
        return std::vector<float>{1.0f, 0.0f};
    };
    std::function<std::vector<float>(const GridTensor&)> image_embed = [](const GridTensor&) {
        return std::vector<float>{1.0f, 0.0f};
    };
    int calls = 0;
    std::vector<PredictRequest> requests;

    BackendHandshake handshake() override {
        BackendHandshake h;
        h.backend_name = "scripted";
        h.latent_shape = Shape{1, 8, 8};
        h.image_shape = Shape{3, 8, 8};
        h.attention = AttentionSpec{8, 4, 1, 1};
        return h;
    }
    GridTensor encode(const GridTensor& image) override {
        GridTensor z(Shape{1, 8, 8});
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
                z.at(0, y, x) = (image.at(0, y, x) + image.at(1, y, x) + image.at(2, y, x)) / 3.0f;
        return z;
    }
    GridTensor decode(const GridTensor& latent) override {
        GridTensor img(Shape{3, 8, 8});
        for (std::size_t c = 0; c < 3; ++c)
            for (std::size_t y = 0; y < 8; ++y)
                for (std::size_t x = 0; x < 8; ++x) img.at(c, y, x) = latent.at(0, y, x);
        return img;
    }
    void begin_session(const GridTensor&) override {}
    PredictResponse predict(const PredictRequest& r) override {
        requests.push_back(r);
        const double s = script(calls++);
        PredictResponse out;
        out.pair.eps_target = GridTensor(Shape{1, 8, 8});
        for (std::size_t y = 0; y < 8; ++y)
            for (std::size_t x = 0; x < 8; ++x)
                out.pair.eps_target.at(0, y, x) = static_cast<float>((x + y) % 2 ? -s : s);
        out.pair.eps_source = GridTensor(Shape{1, 8, 8});
        if (r.want_attention) {
            AttentionBundle b;
            GridTensor id(Shape{1, 64, 64});
            for (std::size_t i = 0; i < 64; ++i) id.at(0, i, i) = 1.0f;
            b.self_maps.push_back(id);
            for (const Token& t : tokenize(r.y_tgt)) {
                if (t.index == 0) continue;
                GridTensor m(Shape{1, 4, 4});
                m.at(0, 1, 1) = 1.0f;
                b.cross_maps[t.index].push_back(m);
            }
            out.attention = b;
        }
        return out;
    }
    std::vector<Token> tokenize(const std::string& text) override {
        std::vector<Token> out{{"<bos>", 0, 0, 0}};
        std::size_t i = 0;
        int idx = 1;
        while (i < text.size()) {
            while (i < text.size() && text[i] == ' ') ++i;
            std::size_t j = i;
            while (j < text.size() && text[j] != ' ') ++j;
            if (j > i) out.push_back({text.substr(i, j - i), i, j, idx++});
            i = j;
        }
        return out;
    }
    std::vector<float> embed_text(const std::string& t) override { return text_embed(t); }
    std::vector<float> embed_image(const GridTensor& i) override { return image_embed(i); }
    std::unique_ptr<DenoiserBackend> clone() const override { return std::make_unique<ScriptedBackend>(*this); }
};

}  // namespace lusd::test
