#pragma once

#include <map>
#include <string>
#include <variant>
#include <vector>

#include "selflabel/trainer.hpp"

namespace selflabel {

// Flat TOML subset: `key = value` lines with strings, numbers, booleans and
// numeric arrays; '#' comments. Section headers are rejected so every run
// config is a flat, greppable record.
using TomlValue = std::variant<std::string, double, bool, std::vector<double>>;
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);
TomlTable parse_toml_file(const std::string& path);

struct RunConfig {
  TrainConfig train;
  std::string data_path;       // CSV input; empty means synthetic blobs
  bool data_has_labels = true;
  // Synthetic fallback when data_path is empty.
  std::size_t blob_classes = 4;
  std::size_t blob_per_class = 500;
  std::size_t blob_dim = 32;
  double blob_spread = 0.5;
};

// Builds a RunConfig from a parsed table; unknown keys are an error so
// typos fail loudly. Keys mirror the CLI override flags.
RunConfig run_config_from_toml(const TomlTable& table);

// Serialises the fully resolved config back to TOML-style key/value text.
std::string run_config_to_string(const RunConfig& cfg);

}  // namespace selflabel
