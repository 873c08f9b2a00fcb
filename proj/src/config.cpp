#include "selflabel/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace selflabel {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

TomlValue parse_value(const std::string& raw, std::size_t line_no) {
  const std::string v = trim(raw);
  if (v.empty()) throw std::runtime_error("toml: empty value at line " + std::to_string(line_no));
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"')
      throw std::runtime_error("toml: unterminated string at line " + std::to_string(line_no));
    return v.substr(1, v.size() - 2);
  }
  if (v == "true") return true;
  if (v == "false") return false;
  if (v.front() == '[') {
    if (v.back() != ']')
      throw std::runtime_error("toml: unterminated array at line " + std::to_string(line_no));
    std::vector<double> arr;
    std::stringstream ss(v.substr(1, v.size() - 2));
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cell = trim(cell);
      if (cell.empty()) continue;
      arr.push_back(std::stod(cell));
    }
    return arr;
  }
  std::size_t pos = 0;
  const double d = std::stod(v, &pos);
  if (pos != v.size())
    throw std::runtime_error("toml: bad value '" + v + "' at line " + std::to_string(line_no));
  return d;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
  TomlTable table;
  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[')
      throw std::runtime_error("toml: section headers unsupported (line " +
                               std::to_string(line_no) + ")");
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("toml: missing '=' at line " + std::to_string(line_no));
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::runtime_error("toml: empty key at line " + std::to_string(line_no));
    table[key] = parse_value(line.substr(eq + 1), line_no);
  }
  return table;
}

TomlTable parse_toml_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("config: cannot open " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_toml(buf.str());
}

namespace {

std::size_t as_count(const TomlValue& v, const std::string& key) {
  if (const double* d = std::get_if<double>(&v)) {
    if (*d < 0 || *d != std::floor(*d))
      throw std::runtime_error("config: '" + key + "' must be a non-negative integer");
    return static_cast<std::size_t>(*d);
  }
  throw std::runtime_error("config: '" + key + "' must be a number");
}

double as_real(const TomlValue& v, const std::string& key) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw std::runtime_error("config: '" + key + "' must be a number");
}

std::string as_string(const TomlValue& v, const std::string& key) {
  if (const std::string* s = std::get_if<std::string>(&v)) return *s;
  throw std::runtime_error("config: '" + key + "' must be a string");
}

bool as_bool(const TomlValue& v, const std::string& key) {
  if (const bool* b = std::get_if<bool>(&v)) return *b;
  throw std::runtime_error("config: '" + key + "' must be a boolean");
}

std::vector<std::size_t> as_counts(const TomlValue& v, const std::string& key) {
  if (const auto* arr = std::get_if<std::vector<double>>(&v)) {
    std::vector<std::size_t> out;
    for (double d : *arr) {
      if (d <= 0 || d != std::floor(d))
        throw std::runtime_error("config: '" + key + "' entries must be positive integers");
      out.push_back(static_cast<std::size_t>(d));
    }
    return out;
  }
  throw std::runtime_error("config: '" + key + "' must be an array");
}

BnPlacement parse_bn(const std::string& s) {
  if (s == "none") return BnPlacement::kNone;
  if (s == "encoder") return BnPlacement::kEncoder;
  if (s == "classifier") return BnPlacement::kClassifier;
  if (s == "both") return BnPlacement::kBoth;
  throw std::runtime_error("config: bn_placement must be none|encoder|classifier|both");
}

std::string bn_to_string(BnPlacement p) {
  switch (p) {
    case BnPlacement::kNone: return "none";
    case BnPlacement::kEncoder: return "encoder";
    case BnPlacement::kClassifier: return "classifier";
    case BnPlacement::kBoth: return "both";
  }
  return "?";
}

}  // namespace

RunConfig run_config_from_toml(const TomlTable& table) {
  RunConfig cfg;
  for (const auto& [key, value] : table) {
    if (key == "batch_size") cfg.train.batch_size = as_count(value, key);
    else if (key == "output_dim") cfg.train.output_dim = as_count(value, key);
    else if (key == "embedding_dim") cfg.train.embedding_dim = as_count(value, key);
    else if (key == "encoder_hidden") cfg.train.encoder_hidden = as_counts(value, key);
    else if (key == "classifier_hidden") cfg.train.classifier_hidden = as_counts(value, key);
    else if (key == "epochs") cfg.train.epochs = as_count(value, key);
    else if (key == "lr_initial") cfg.train.lr_initial = as_real(value, key);
    else if (key == "lr_after_drop") cfg.train.lr_after_drop = as_real(value, key);
    else if (key == "lr_drop_epoch") cfg.train.lr_drop_epoch = as_count(value, key);
    else if (key == "seed") cfg.train.seed = as_count(value, key);
    else if (key == "xi") cfg.train.vat.xi = as_real(value, key);
    else if (key == "epsilon") cfg.train.vat.epsilon = as_real(value, key);
    else if (key == "epsilon_auto") cfg.train.epsilon_auto = as_bool(value, key);
    else if (key == "h_tol") cfg.train.h_tol = as_real(value, key);
    else if (key == "h_step") cfg.train.h_step = as_real(value, key);
    else if (key == "sinkhorn_iters") cfg.train.sinkhorn_iters = as_count(value, key);
    else if (key == "bn_placement") cfg.train.bn_placement = parse_bn(as_string(value, key));
    else if (key == "mode") cfg.train.mode = parse_perturb_mode(as_string(value, key));
    else if (key == "checkpoint_every") cfg.train.checkpoint_every = as_count(value, key);
    else if (key == "log_every") cfg.train.log_every = as_count(value, key);
    else if (key == "data_path") cfg.data_path = as_string(value, key);
    else if (key == "data_has_labels") cfg.data_has_labels = as_bool(value, key);
    else if (key == "blob_classes") cfg.blob_classes = as_count(value, key);
    else if (key == "blob_per_class") cfg.blob_per_class = as_count(value, key);
    else if (key == "blob_dim") cfg.blob_dim = as_count(value, key);
    else if (key == "blob_spread") cfg.blob_spread = as_real(value, key);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  return cfg;
}

std::string run_config_to_string(const RunConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  auto arr = [](const std::vector<std::size_t>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? ", " : "") + std::to_string(v[i]);
    return s + "]";
  };
  os << "batch_size = " << cfg.train.batch_size << "\n"
     << "output_dim = " << cfg.train.output_dim << "\n"
     << "embedding_dim = " << cfg.train.embedding_dim << "\n"
     << "encoder_hidden = " << arr(cfg.train.encoder_hidden) << "\n"
     << "classifier_hidden = " << arr(cfg.train.classifier_hidden) << "\n"
     << "epochs = " << cfg.train.epochs << "\n"
     << "lr_initial = " << cfg.train.lr_initial << "\n"
     << "lr_after_drop = " << cfg.train.lr_after_drop << "\n"
     << "lr_drop_epoch = " << cfg.train.lr_drop_epoch << "\n"
     << "seed = " << cfg.train.seed << "\n"
     << "xi = " << cfg.train.vat.xi << "\n"
     << "epsilon = " << cfg.train.vat.epsilon << "\n"
     << "epsilon_auto = " << (cfg.train.epsilon_auto ? "true" : "false") << "\n"
     << "h_tol = " << cfg.train.h_tol << "\n"
     << "h_step = " << cfg.train.h_step << "\n"
     << "sinkhorn_iters = " << cfg.train.sinkhorn_iters << "\n"
     << "bn_placement = \"" << bn_to_string(cfg.train.bn_placement) << "\"\n"
     << "mode = \"" << to_string(cfg.train.mode) << "\"\n"
     << "checkpoint_every = " << cfg.train.checkpoint_every << "\n"
     << "log_every = " << cfg.train.log_every << "\n"
     << "data_path = \"" << cfg.data_path << "\"\n"
     << "data_has_labels = " << (cfg.data_has_labels ? "true" : "false") << "\n"
     << "blob_classes = " << cfg.blob_classes << "\n"
     << "blob_per_class = " << cfg.blob_per_class << "\n"
     << "blob_dim = " << cfg.blob_dim << "\n"
     << "blob_spread = " << cfg.blob_spread << "\n";
  return os.str();
}

}  // namespace selflabel
