#include "sockweave/policy/config.hpp"

#include <json.hpp>

namespace sockweave::policy {

using nlohmann::json;

std::string to_string(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::no_dam: return "no_dam";
    case Variant::no_sknet: return "no_sknet";
    case Variant::no_hier: return "no_hier";
    case Variant::no_sam_dam: return "no_sam_dam";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  for (auto v : {Variant::full, Variant::no_dam, Variant::no_sknet, Variant::no_hier, Variant::no_sam_dam}) {
    if (to_string(v) == name) return v;
  }
  throw std::invalid_argument("unknown variant '" + name + "' (expected full, no_dam, no_sknet, no_hier, no_sam_dam)");
}

ModelConfig ModelConfig::toy(Variant v) {
  ModelConfig c;
  c.variant = v;
  c.image_size = 8;
  c.enc_c1 = 3;
  c.enc_c2 = 4;
  c.dec_hidden = 3;
  c.sk_channels = 3;
  c.sk_reduced = 2;
  c.hidden = 4;
  c.union_hidden = 6;
  c.flat_hidden = 8;
  c.sigma = 0.5;
  c.control_stride = 1;
  return c;
}

ModelConfig ModelConfig::for_variant(Variant v) {
  ModelConfig c;
  c.variant = v;
  return c;
}

std::string ModelConfig::to_json() const {
  json j;
  j["variant"] = policy::to_string(variant);
  j["image_size"] = image_size;
  j["enc_c1"] = enc_c1;
  j["enc_c2"] = enc_c2;
  j["keypoints"] = keypoints;
  j["dec_hidden"] = dec_hidden;
  j["tau"] = tau;
  j["sigma"] = sigma;
  j["sk_channels"] = sk_channels;
  j["sk_reduced"] = sk_reduced;
  j["hidden"] = hidden;
  j["union_hidden"] = union_hidden;
  j["flat_hidden"] = flat_hidden;
  j["angle_dims"] = angle_dims;
  j["torque_dims"] = torque_dims;
  j["tactile_dims"] = tactile_dims;
  j["point_loss_3d"] = point_loss_3d;
  j["control_stride"] = control_stride;
  j["residual_heads"] = residual_heads;
  j["weights"] = {{"img", weights.img},
                  {"pt", weights.pt},
                  {"angle", weights.angle},
                  {"torque", weights.torque},
                  {"tactile", weights.tactile}};
  return j.dump(2);
}

ModelConfig ModelConfig::from_json(const std::string& text) {
  const json j = json::parse(text);
  ModelConfig c;
  c.variant = parse_variant(j.at("variant").get<std::string>());
  c.image_size = j.at("image_size");
  c.enc_c1 = j.at("enc_c1");
  c.enc_c2 = j.at("enc_c2");
  c.keypoints = j.at("keypoints");
  c.dec_hidden = j.at("dec_hidden");
  c.tau = j.at("tau");
  c.sigma = j.at("sigma");
  c.sk_channels = j.at("sk_channels");
  c.sk_reduced = j.at("sk_reduced");
  c.hidden = j.at("hidden");
  c.union_hidden = j.at("union_hidden");
  c.flat_hidden = j.at("flat_hidden");
  c.angle_dims = j.at("angle_dims");
  c.torque_dims = j.at("torque_dims");
  c.tactile_dims = j.at("tactile_dims");
  c.point_loss_3d = j.at("point_loss_3d");
  c.control_stride = j.at("control_stride");
  c.residual_heads = j.at("residual_heads");
  if (c.control_stride < 1) throw std::invalid_argument("control_stride must be positive");
  const auto& w = j.at("weights");
  c.weights = {w.at("img"), w.at("pt"), w.at("angle"), w.at("torque"), w.at("tactile")};
  return c;
}

std::uint64_t ModelConfig::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : to_json()) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace sockweave::policy
