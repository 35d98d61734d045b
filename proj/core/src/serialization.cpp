#include "viewcal/serialization.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "viewcal/error.hpp"

namespace viewcal::io {

namespace {

using nlohmann::json;

void write_container(const std::filesystem::path& path, const json& header,
                     const std::vector<double>& payload) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << header.dump() << '\n';
  std::vector<unsigned char> bytes(payload.size() * 8);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(payload[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

std::pair<json, std::vector<double>> read_container(const std::filesystem::path& path,
                                                    std::string_view format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header line");
  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed header: " + e.what());
  }
  if (!header.is_object() || header.value("format", std::string{}) != format) {
    throw IoError(path.string() + ": expected format \"" + std::string(format) + "\"");
  }
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 8 != 0) throw IoError(path.string() + ": payload is not a whole number of float64");
  std::vector<double> payload(bytes.size() / 8);
  for (std::size_t i = 0; i < payload.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(bytes[i * 8 + b]) << (8 * b);
    payload[i] = std::bit_cast<double>(bits);
  }
  return {std::move(header), std::move(payload)};
}

json vec3_json(const geometry::Vec3& v) { return json::array({v[0], v[1], v[2]}); }

geometry::Vec3 vec3_from(const json& j) {
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

}  // namespace

std::string fnv1a_hex(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = kDigits[h & 0xF];
  return out;
}

void write_voxel_field(const std::filesystem::path& path, const render::VoxelField& field,
                       const RunMetadata& meta) {
  const auto& res = field.resolution();
  json header = {
      {"format", "viewcal-voxels"},
      {"version", 1},
      {"resolution", {res[0], res[1], res[2]}},
      {"box_min", vec3_json(field.box_min())},
      {"box_max", vec3_json(field.box_max())},
      {"layout", "per voxel x-fastest: sigma, r, g, b; float64 little-endian"},
      {"config_hash", meta.config_hash},
      {"seed", meta.seed},
  };
  std::vector<double> payload;
  payload.reserve(field.voxel_count() * 4);
  for (std::size_t i = 0; i < field.voxel_count(); ++i) {
    payload.push_back(field.sigmas()[i]);
    payload.push_back(field.colors()[3 * i]);
    payload.push_back(field.colors()[3 * i + 1]);
    payload.push_back(field.colors()[3 * i + 2]);
  }
  write_container(path, header, payload);
}

render::VoxelField read_voxel_field(const std::filesystem::path& path) {
  auto [header, payload] = read_container(path, "viewcal-voxels");
  try {
    const render::VoxelField::Index3 res{header.at("resolution").at(0).get<int>(),
                                         header.at("resolution").at(1).get<int>(),
                                         header.at("resolution").at(2).get<int>()};
    render::VoxelField field(res, vec3_from(header.at("box_min")), vec3_from(header.at("box_max")));
    if (payload.size() != field.voxel_count() * 4) {
      throw IoError(path.string() + ": payload length does not match the resolution");
    }
    std::size_t k = 0;
    for (int iz = 0; iz < res[2]; ++iz)
      for (int iy = 0; iy < res[1]; ++iy)
        for (int ix = 0; ix < res[0]; ++ix, k += 4) {
          field.set(ix, iy, iz, {payload[k + 1], payload[k + 2], payload[k + 3]}, payload[k]);
        }
    return field;
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": bad voxel header: " + e.what());
  } catch (const InvalidInput& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_regressor(const std::filesystem::path& path, const RegressorCheckpoint& ckpt,
                     const RunMetadata& meta) {
  const calib::Regressor& reg = ckpt.regressor;
  json header = {
      {"format", "viewcal-regressor"},
      {"version", 1},
      {"dims", {reg.input_width(), reg.hidden_width(), calib::Regressor::kOutputs}},
      {"seed", ckpt.seed},
      {"step", ckpt.step},
      {"layout", "W1 column-major, b1, W2 column-major, b2; float64 little-endian"},
      {"config_hash", meta.config_hash},
  };
  const Eigen::VectorXd flat = reg.parameters();
  write_container(path, header, std::vector<double>(flat.begin(), flat.end()));
}

RegressorCheckpoint read_regressor(const std::filesystem::path& path) {
  auto [header, payload] = read_container(path, "viewcal-regressor");
  try {
    const auto dims = header.at("dims");
    if (dims.at(2).get<long>() != calib::Regressor::kOutputs) {
      throw IoError(path.string() + ": regressor must have 6 outputs");
    }
    calib::Regressor reg(dims.at(0).get<Eigen::Index>(), dims.at(1).get<Eigen::Index>());
    if (static_cast<Eigen::Index>(payload.size()) != reg.parameter_count()) {
      throw IoError(path.string() + ": payload length does not match dims");
    }
    reg.set_parameters(Eigen::Map<const Eigen::VectorXd>(payload.data(), static_cast<Eigen::Index>(payload.size())));
    return {std::move(reg), header.at("seed").get<std::uint64_t>(), header.at("step").get<long>()};
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": bad regressor header: " + e.what());
  }
}

std::string pose_to_json(const geometry::Pose& pose) {
  const auto values = pose.to_row_major();
  return json(values).dump();
}

geometry::Pose pose_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (!j.is_array() || j.size() != 16) throw InvalidInput("pose JSON must be an array of 16 numbers");
    return geometry::Pose::from_row_major(j.get<std::array<double, 16>>());
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed pose JSON: ") + e.what());
  }
}

}  // namespace viewcal::io
