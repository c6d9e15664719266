#pragma once

// Config files: YAML (default) or JSON, converted to one Json document.

#include <yaml-cpp/yaml.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "finsler/app/commands.hpp"

namespace finsler::app {

inline Json yaml_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json a = Json::array();
      for (const auto& x : n) a.push_back(yaml_to_json(x));
      return a;
    }
    case YAML::NodeType::Map: {
      Json o = Json::object();
      for (const auto& kv : n) o[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return o;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~") return nullptr;
  if (s == "true" || s == "false") return s == "true";
  long long i;
  if (YAML::convert<long long>::decode(n, i)) return i;
  double d;
  if (YAML::convert<double>::decode(n, d)) return d;
  return s;
}

/// Parses YAML text (JSON is accepted too, being a YAML subset).
inline Json parse_yaml(const std::string& text) {
  try {
    return yaml_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("malformed YAML config: ") + e.what());
  }
}

inline Json load_config(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot open config " + p.string());
  const std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (p.extension() == ".json" || (first != std::string::npos && text[first] == '{')) {
    try {
      return Json::parse(text);
    } catch (const Json::parse_error& e) {
      throw ConfigError(std::string("malformed JSON config: ") + e.what());
    }
  }
  return parse_yaml(text);
}

}  // namespace finsler::app
