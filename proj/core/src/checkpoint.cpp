#include "daal/checkpoint.hpp"

#include <json.hpp>

#include "daal/binary_io.hpp"
#include "daal/error.hpp"

namespace daal {

namespace {

constexpr const char* kBlobName = "params.bin";

std::string_view training_name(MultiPlaneTraining t) {
  return t == MultiPlaneTraining::PerPlane ? "per-plane" : "through-max";
}

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const Checkpoint& c) {
  std::filesystem::create_directories(dir);
  const auto& m = c.model;
  nlohmann::json j;
  j["format"] = "daal-checkpoint";
  j["version"] = 1;
  j["method"] = method_name(m.kind);
  j["dims"] = {{"feature_dim", m.dims.feature_dim}, {"query_dim", m.dims.query_dim},
               {"info_dim", m.dims.info_dim},       {"attn_dim", m.dims.attn_dim},
               {"hidden_dim", m.dims.hidden_dim}};
  j["multi_plane_training"] = training_name(m.multi_plane);
  j["seed"] = c.seed;
  j["risk_threshold"] = c.risk_threshold ? nlohmann::json(*c.risk_threshold) : nlohmann::json();
  j["parameter_blob"] = kBlobName;
  j["dtype"] = "f32-le";
  auto& blocks = j["blocks"] = nlohmann::json::array();
  io::ByteWriter blob;
  std::size_t offset = 0;
  for (const auto& b : m.blocks()) {
    blocks.push_back({{"name", b.name}, {"rows", b.rows}, {"cols", b.cols}, {"offset", offset}});
    offset += b.values.size();
    for (double v : b.values) blob.f32(static_cast<float>(v));
  }
  j["parameter_count"] = offset;
  io::write_text(dir / "manifest.json", j.dump(2) + "\n");
  io::write_file(dir / kBlobName, blob.bytes());
}

Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(dir / "manifest.json"));
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint manifest: " + std::string(e.what()));
  }
  try {
    if (j.at("format") != "daal-checkpoint" || j.at("version") != 1) {
      throw InputError("checkpoint: unsupported format");
    }
    ModelDims dims;
    const auto& d = j.at("dims");
    dims.feature_dim = d.at("feature_dim");
    dims.query_dim = d.at("query_dim");
    dims.info_dim = d.at("info_dim");
    dims.attn_dim = d.at("attn_dim");
    dims.hidden_dim = d.at("hidden_dim");

    Checkpoint c;
    c.seed = j.at("seed");
    if (!j.at("risk_threshold").is_null()) c.risk_threshold = j.at("risk_threshold").get<double>();
    c.model = Model::create(parse_method(j.at("method").get<std::string>()), dims, c.seed);
    c.model.multi_plane = j.at("multi_plane_training") == "per-plane"
                              ? MultiPlaneTraining::PerPlane
                              : MultiPlaneTraining::ThroughMax;

    const auto layout = c.model.blocks();
    const auto& stored = j.at("blocks");
    if (stored.size() != layout.size()) throw InputError("checkpoint: block layout mismatch");
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (stored[i].at("name") != layout[i].name || stored[i].at("rows") != layout[i].rows ||
          stored[i].at("cols") != layout[i].cols) {
        throw InputError("checkpoint: block " + layout[i].name + " does not match manifest");
      }
    }

    const auto bytes = io::read_file(dir / j.at("parameter_blob").get<std::string>());
    io::ByteReader r(bytes, (dir / kBlobName).string());
    const auto values = r.f32s(c.model.parameter_count());
    if (r.remaining() != 0) throw InputError("checkpoint: parameter blob has trailing bytes");
    c.model.assign(Vec(values.begin(), values.end()));
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw InputError("checkpoint manifest: " + std::string(e.what()));
  }
}

}  // namespace daal
