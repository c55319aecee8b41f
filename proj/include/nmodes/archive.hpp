#pragma once

#include <string>

#include <json.hpp>

#include "nmodes/continuation.hpp"
#include "nmodes/io.hpp"
#include "nmodes/types.hpp"

namespace nmodes {

namespace detail {

inline void json_escape_into(std::string& out, const std::string& s) {
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
}

inline void vector_into(std::string& out, const VectorXd& v) {
  out += '[';
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt17(v[i]);
  }
  out += ']';
}

}  // namespace detail

/**
 * Canonical archive serialization: fixed field order, fixed spacing, 17
 * significant digits. Load followed by re-serialization reproduces the
 * original bytes exactly.
 */
inline std::string to_json(const Eigenmanifold& mf) {
  std::string s;
  s.reserve(256 + mf.points.size() * (64 + 24 * mf.shape.size()));
  s += "{\n  \"format\": \"nmodes-manifold-v1\",\n";
  s += "  \"model_fingerprint\": \"";
  detail::json_escape_into(s, mf.model_fingerprint);
  s += "\",\n  \"model_label\": \"";
  detail::json_escape_into(s, mf.model_label);
  s += "\",\n  \"mode_index\": " + std::to_string(mf.mode_index) + ",\n";
  s += "  \"omega\": " + fmt17(mf.omega) + ",\n";
  s += "  \"eigvec\": ";
  detail::vector_into(s, mf.shape);
  s += ",\n  \"predictor\": \"jacobian-kernel\",\n";
  s += std::string("  \"truncated\": ") + (mf.truncated ? "true" : "false") + ",\n";
  s += "  \"diagnostic\": \"";
  detail::json_escape_into(s, mf.diagnostic);
  s += "\",\n  \"points\": [";
  for (std::size_t i = 0; i < mf.points.size(); ++i) {
    const GeneratorPoint& p = mf.points[i];
    s += i ? ",\n    " : "\n    ";
    s += "{\"q0\": ";
    detail::vector_into(s, p.q0);
    s += ", \"T\": " + fmt17(p.T);
    s += ", \"E\": " + fmt17(p.E);
    s += ", \"residual_norm\": " + fmt17(p.residual_norm);
    s += ", \"newton_iters\": " + std::to_string(p.newton_iters) + "}";
  }
  s += mf.points.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return s;
}

inline Eigenmanifold manifold_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw SpecError("archive: document is not an object");
  auto need = [&doc](const char* name) -> const nlohmann::json& {
    auto it = doc.find(name);
    if (it == doc.end())
      throw SpecError(std::string("archive: missing field '") + name + "'");
    return *it;
  };
  if (need("format").get<std::string>() != "nmodes-manifold-v1")
    throw SpecError("archive: unsupported format tag");

  Eigenmanifold mf;
  mf.model_fingerprint = need("model_fingerprint").get<std::string>();
  mf.model_label = need("model_label").get<std::string>();
  mf.mode_index = need("mode_index").get<int>();
  mf.omega = need("omega").get<double>();
  const nlohmann::json& vec = need("eigvec");
  if (!vec.is_array() || vec.empty()) throw SpecError("archive: eigvec must be a non-empty array");
  mf.shape.resize(static_cast<Eigen::Index>(vec.size()));
  for (std::size_t i = 0; i < vec.size(); ++i) mf.shape[static_cast<Eigen::Index>(i)] = vec[i].get<double>();
  mf.truncated = need("truncated").get<bool>();
  mf.diagnostic = need("diagnostic").get<std::string>();

  const nlohmann::json& pts = need("points");
  if (!pts.is_array()) throw SpecError("archive: points must be an array");
  mf.points.reserve(pts.size());
  for (const nlohmann::json& item : pts) {
    GeneratorPoint p;
    auto pneed = [&item](const char* name) -> const nlohmann::json& {
      auto it = item.find(name);
      if (it == item.end())
        throw SpecError(std::string("archive: point missing field '") + name + "'");
      return *it;
    };
    const nlohmann::json& q0 = pneed("q0");
    if (!q0.is_array() || q0.size() != vec.size())
      throw SpecError("archive: point q0 length does not match eigvec");
    p.q0.resize(mf.shape.size());
    for (std::size_t i = 0; i < q0.size(); ++i) p.q0[static_cast<Eigen::Index>(i)] = q0[i].get<double>();
    p.T = pneed("T").get<double>();
    p.E = pneed("E").get<double>();
    p.residual_norm = pneed("residual_norm").get<double>();
    p.newton_iters = pneed("newton_iters").get<int>();
    if (!(p.T > 0.0)) throw SpecError("archive: point has non-positive period");
    mf.points.push_back(std::move(p));
  }
  return mf;
}

inline void save_manifold(const Eigenmanifold& mf, const std::string& path) {
  write_file_atomic(path, to_json(mf));
}

inline Eigenmanifold load_manifold(const std::string& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SpecError("archive: parse error in '" + path + "': " + e.what());
  }
  return manifold_from_json(doc);
}

}  // namespace nmodes
