#pragma once

#include <filesystem>
#include <json.hpp>

#include "threespheres/geometry.hpp"

namespace threespheres {

/// Field file: little-endian float64 values in row-major node order (last
/// axis fastest), NaN at outside nodes. The sidecar `<file>.json` carries
/// n, dims, cells, spacing, origin and the mask run-length encoded as
/// [code, count] pairs (0 outside, 1 interior, 2 boundary), plus any extra
/// keys supplied by the writer.
void write_field(const std::filesystem::path& path, const GridField& field,
                 const nlohmann::json& extra = nlohmann::json::object());

struct LoadedField {
  GridField field;
  nlohmann::json sidecar;
};

LoadedField read_field(const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& path);

nlohmann::json annulus_to_json(const KAnnulus& annulus);
KAnnulus annulus_from_json(const nlohmann::json& j);

}  // namespace threespheres
