#pragma once

#include <string>

#include "json.hpp"

#include "iotwarden/autoencoder.hpp"

namespace warden::detail {

nlohmann::json model_to_json(const AutoencoderModel& model, const Normalizer& normalizer);
LoadedModel model_from_json(const nlohmann::json& j, const std::string& origin);
nlohmann::json parse_json_file(const std::string& path, const char* what);

}  // namespace warden::detail
