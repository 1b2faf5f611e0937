#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "lusd/backend.hpp"

namespace lusd::wire {

using nlohmann::json;

std::string base64_encode(std::string_view bytes);
/// Strict decoder: rejects bad characters, bad padding and bad lengths.
std::string base64_decode(std::string_view text);

/// {"shape": [...], "dtype": "f32", "data": base64 of little-endian
/// row-major float32}. Rank-1 and rank-2 shapes map to (1, 1, n) and
/// (1, h, w) on decode; encode always writes the full rank-3 shape unless
/// `shape` overrides it.
json encode_tensor(const GridTensor& t);
json encode_tensor(const GridTensor& t, const std::vector<std::size_t>& shape);
GridTensor decode_tensor(const json& j);

json encode_handshake(const BackendHandshake& h);
/// Throws ProtocolError on a malformed document or a version mismatch.
BackendHandshake decode_handshake(const json& j);

json encode_predict_request(const PredictRequest& r);
PredictRequest decode_predict_request(const json& j);

json encode_predict_response(const PredictResponse& r);
PredictResponse decode_predict_response(const json& j);

json encode_tokens(const std::vector<Token>& tokens);
std::vector<Token> decode_tokens(const json& j);

json encode_embedding(const std::vector<float>& e);
std::vector<float> decode_embedding(const json& j);

json error_body(std::string_view code, std::string_view message);

/// Field access that raises ProtocolError instead of json exceptions.
const json& require(const json& j, const char* key);

}  // namespace lusd::wire
