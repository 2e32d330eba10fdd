#include "threespheres/field_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "threespheres/errors.hpp"

namespace threespheres {

namespace {

std::uint64_t to_little_endian(std::uint64_t bits) {
  if constexpr (std::endian::native == std::endian::big) {
    std::uint64_t out = 0;
    for (int i = 0; i < 8; ++i) out = (out << 8) | ((bits >> (8 * i)) & 0xffu);
    return out;
  }
  return bits;
}

}  // namespace

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path s = path;
  s += ".json";
  return s;
}

void write_field(const std::filesystem::path& path, const GridField& field,
                 const nlohmann::json& extra) {
  const GridSpec& g = field.grid;
  if (field.values.size() != g.node_count() || field.mask.size() != g.node_count()) {
    throw ConfigError("write_field: field size does not match its grid");
  }
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("write_field: cannot open " + path.string());
  for (double v : field.values) {
    const std::uint64_t bits = to_little_endian(std::bit_cast<std::uint64_t>(v));
    char bytes[8];
    std::memcpy(bytes, &bits, 8);
    bin.write(bytes, 8);
  }
  if (!bin) throw ConfigError("write_field: write failed for " + path.string());

  nlohmann::json side = extra;
  side["format"] = "float64-le-row-major";
  side["n"] = g.n;
  side["cells"] = g.cells;
  side["dims"] = std::vector<int>(static_cast<std::size_t>(g.n), g.nodes_per_axis());
  side["spacing"] = std::vector<double>(g.spacing.begin(), g.spacing.begin() + g.n);
  side["origin"] = std::vector<double>(g.origin.begin(), g.origin.begin() + g.n);
  nlohmann::json rle = nlohmann::json::array();
  for (std::size_t i = 0; i < field.mask.size();) {
    std::size_t j = i;
    while (j < field.mask.size() && field.mask[j] == field.mask[i]) ++j;
    rle.push_back({static_cast<int>(field.mask[i]), j - i});
    i = j;
  }
  side["mask_rle"] = std::move(rle);
  std::ofstream js(sidecar_path(path));
  if (!js) throw ConfigError("write_field: cannot open sidecar for " + path.string());
  js << side.dump(2) << '\n';
}

LoadedField read_field(const std::filesystem::path& path) {
  std::ifstream js(sidecar_path(path));
  if (!js) throw ConfigError("read_field: missing sidecar " + sidecar_path(path).string());
  LoadedField out;
  try {
    out.sidecar = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("read_field: bad sidecar: ") + e.what());
  }
  const auto& side = out.sidecar;
  if (side.value("format", "") != "float64-le-row-major") {
    throw ConfigError("read_field: unsupported field format");
  }
  GridSpec g;
  g.n = side.at("n").get<int>();
  g.cells = side.at("cells").get<int>();
  if (g.n < 2 || g.n > kMaxDim || g.cells < 1) throw ConfigError("read_field: bad grid shape");
  const auto spacing = side.at("spacing").get<std::vector<double>>();
  const auto origin = side.at("origin").get<std::vector<double>>();
  if (spacing.size() != static_cast<std::size_t>(g.n) || origin.size() != spacing.size()) {
    throw ConfigError("read_field: spacing/origin length mismatch");
  }
  for (int d = 0; d < g.n; ++d) {
    g.spacing[d] = spacing[static_cast<std::size_t>(d)];
    g.origin[d] = origin[static_cast<std::size_t>(d)];
  }

  const std::size_t count = g.node_count();
  out.field.grid = g;
  out.field.mask.reserve(count);
  for (const auto& run : side.at("mask_rle")) {
    const int code = run.at(0).get<int>();
    const auto len = run.at(1).get<std::size_t>();
    if (code < 0 || code > 2) throw ConfigError("read_field: bad mask code");
    out.field.mask.insert(out.field.mask.end(), len, static_cast<NodeKind>(code));
  }
  if (out.field.mask.size() != count) throw ConfigError("read_field: mask length mismatch");

  std::ifstream bin(path, std::ios::binary);
  if (!bin) throw ConfigError("read_field: cannot open " + path.string());
  out.field.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    char bytes[8];
    if (!bin.read(bytes, 8)) throw ConfigError("read_field: truncated binary");
    std::uint64_t bits;
    std::memcpy(&bits, bytes, 8);
    out.field.values[i] = std::bit_cast<double>(to_little_endian(bits));
  }
  if (bin.peek() != std::ifstream::traits_type::eof()) {
    throw ConfigError("read_field: trailing bytes in binary");
  }
  return out;
}

nlohmann::json annulus_to_json(const KAnnulus& a) {
  return {{"n", a.n()},
          {"k", a.k()},
          {"alpha", a.alpha()},
          {"beta", a.beta()},
          {"slab_halfwidth", a.slab_halfwidth()}};
}

KAnnulus annulus_from_json(const nlohmann::json& j) {
  try {
    std::optional<double> slab;
    if (j.contains("slab_halfwidth")) slab = j.at("slab_halfwidth").get<double>();
    return KAnnulus::make(j.at("n").get<int>(), j.at("k").get<int>(), j.at("alpha").get<double>(),
                          j.at("beta").get<double>(), slab);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("annulus: ") + e.what());
  }
}

}  // namespace threespheres
