#include "lusd/backend.hpp"

#include "lusd/error.hpp"

namespace lusd {

void BackendHandshake::validate() const {
    const Shape& l = latent_shape;
    if (l.numel() == 0) throw ConfigError("handshake: latent shape " + l.str() + " is empty");
    if (l.height != l.width) throw ConfigError("handshake: latent grid must be square, got " + l.str());
    const AttentionSpec& a = attention;
    if (a.self_resolution == 0 || a.cross_resolution == 0) {
        throw ConfigError("handshake: attention resolutions must be positive");
    }
    if (a.self_layers < 1 || a.cross_layers < 1) throw ConfigError("handshake: layer counts must be >= 1");
    if (l.height % a.self_resolution != 0) {
        throw ConfigError("handshake: latent side " + std::to_string(l.height) +
                          " is not a multiple of the self-attention resolution " +
                          std::to_string(a.self_resolution));
    }
    if (a.self_resolution % a.cross_resolution != 0) {
        throw ConfigError("handshake: self-attention resolution " + std::to_string(a.self_resolution) +
                          " is not a multiple of the cross-attention resolution " +
                          std::to_string(a.cross_resolution));
    }
    if (image_shape.channels != 3 || image_shape.height == 0 || image_shape.width == 0) {
        throw ConfigError("handshake: image shape must be (3, H, W), got " + image_shape.str());
    }
}

}  // namespace lusd
