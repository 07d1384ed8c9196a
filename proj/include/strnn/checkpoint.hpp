#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "strnn/adjacency.hpp"
#include "strnn/mlp.hpp"

namespace strnn {

using Json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

namespace detail {

inline std::vector<double> flatten_row_major(const Matrix& m) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  }
  return v;
}

inline Matrix unflatten_row_major(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
  if (static_cast<std::size_t>(rows * cols) != v.size()) {
    throw Error(ErrorCode::ParseError, "checkpoint array has the wrong length");
  }
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(r * cols + c)];
  }
  return m;
}

inline Head parse_head(const std::string& s) {
  if (s == "binary") return Head::Binary;
  if (s == "gaussian") return Head::Gaussian;
  throw Error(ErrorCode::ParseError, "unknown head '" + s + "'");
}

}  // namespace detail

/// Dims, head, masks as plain-text matrix blocks and row-major parameters. Doubles are
/// written in shortest round-trip form, so loading reproduces outputs bitwise.
inline Json mlp_to_json(const MaskedMLP& net, const std::optional<AdjacencyMatrix>& adjacency = std::nullopt) {
  Json j;
  j["format"] = "strnn-mlp";
  j["version"] = kToolVersion;
  j["head"] = std::string(to_string(net.head()));
  std::vector<std::size_t> dims{net.input_dim()};
  for (const auto& l : net.layers()) dims.push_back(static_cast<std::size_t>(l.weight.rows()));
  j["dims"] = dims;
  Json masks = Json::array(), weights = Json::array(), biases = Json::array();
  for (const auto& l : net.layers()) {
    masks.push_back(format_matrix(l.mask.cast<std::int64_t>()));
    weights.push_back(detail::flatten_row_major(l.weight));
    biases.push_back(std::vector<double>(l.bias.data(), l.bias.data() + l.bias.size()));
  }
  j["masks"] = masks;
  j["weights"] = weights;
  j["biases"] = biases;
  if (net.standardized()) {
    j["loc"] = std::vector<double>(net.loc().data(), net.loc().data() + net.loc().size());
    j["scale"] = std::vector<double>(net.scale().data(), net.scale().data() + net.scale().size());
  }
  if (adjacency) j["adjacency"] = format_matrix(adjacency->entries());
  return j;
}

/// Parameters are taken as stored; masks are not re-applied, so a corrupted file is
/// visible to verification.
inline MaskedMLP mlp_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "strnn-mlp") {
      throw Error(ErrorCode::ParseError, "not a network checkpoint");
    }
    const auto dims = j.at("dims").get<std::vector<std::size_t>>();
    const auto& masks = j.at("masks");
    const auto& weights = j.at("weights");
    const auto& biases = j.at("biases");
    if (dims.size() < 2 || masks.size() != dims.size() - 1 || weights.size() != masks.size() ||
        biases.size() != masks.size()) {
      throw Error(ErrorCode::ParseError, "checkpoint layer count is inconsistent");
    }
    std::vector<MaskedLayer> layers;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
      const auto rows = static_cast<Eigen::Index>(dims[l + 1]);
      const auto cols = static_cast<Eigen::Index>(dims[l]);
      MaskedLayer layer;
      layer.mask = parse_matrix(masks[l].get<std::string>()).cast<double>();
      if (layer.mask.rows() != rows || layer.mask.cols() != cols) {
        throw Error(ErrorCode::ParseError, "mask " + std::to_string(l) + " has the wrong shape");
      }
      layer.weight = detail::unflatten_row_major(weights[l].get<std::vector<double>>(), rows, cols);
      const auto b = biases[l].get<std::vector<double>>();
      if (b.size() != dims[l + 1]) throw Error(ErrorCode::ParseError, "bias has the wrong length");
      layer.bias = Eigen::Map<const Vector>(b.data(), rows);
      layers.push_back(std::move(layer));
    }
    MaskedMLP net = MaskedMLP::from_layers(std::move(layers), detail::parse_head(j.at("head").get<std::string>()));
    if (j.contains("loc")) {
      const auto loc = j.at("loc").get<std::vector<double>>();
      const auto scale = j.at("scale").get<std::vector<double>>();
      if (loc.size() != scale.size()) throw Error(ErrorCode::ParseError, "loc and scale lengths differ");
      net.set_standardization(Eigen::Map<const Vector>(loc.data(), static_cast<Eigen::Index>(loc.size())),
                              Eigen::Map<const Vector>(scale.data(), static_cast<Eigen::Index>(scale.size())));
    }
    return net;
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed checkpoint: ") + e.what());
  }
}

inline std::optional<AdjacencyMatrix> stored_adjacency(const Json& j) {
  if (!j.contains("adjacency")) return std::nullopt;
  return parse_adjacency(j.at("adjacency").get<std::string>());
}

inline Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

inline void write_json_file(const std::filesystem::path& path, const Json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

inline void save_mlp(const std::filesystem::path& path, const MaskedMLP& net,
                     const std::optional<AdjacencyMatrix>& adjacency = std::nullopt) {
  write_json_file(path, mlp_to_json(net, adjacency));
}

inline MaskedMLP load_mlp(const std::filesystem::path& path) { return mlp_from_json(read_json_file(path)); }

}  // namespace strnn
