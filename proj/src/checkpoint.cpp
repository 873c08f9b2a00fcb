#include "selflabel/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace selflabel {

namespace {

constexpr char kMagic[8] = {'S', 'L', 'A', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::istream& is) {
  std::uint32_t v = 0;
  is.read(reinterpret_cast<char*>(&v), sizeof(v));
  return v;
}

void write_tensor(std::ostream& os, const double* data, std::uint32_t rows,
                  std::uint32_t cols) {
  write_u32(os, rows);
  write_u32(os, cols);
  os.write(reinterpret_cast<const char*>(data),
           static_cast<std::streamsize>(sizeof(double) * rows * cols));
}

void read_tensor(std::istream& is, double* data, std::uint32_t rows,
                 std::uint32_t cols) {
  if (read_u32(is) != rows || read_u32(is) != cols)
    throw std::runtime_error("checkpoint: tensor dims do not match layer spec");
  is.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(sizeof(double) * rows * cols));
}

void write_layer(std::ostream& os, const Layer& l) {
  write_u32(os, static_cast<std::uint32_t>(l.spec.in_dim));
  write_u32(os, static_cast<std::uint32_t>(l.spec.out_dim));
  os.put(l.spec.activation == Activation::kRelu ? 1 : 0);
  os.put(l.spec.batch_norm ? 1 : 0);
  write_tensor(os, l.w.data(), (std::uint32_t)l.spec.in_dim, (std::uint32_t)l.spec.out_dim);
  write_tensor(os, l.b.data(), 1, (std::uint32_t)l.spec.out_dim);
  if (l.spec.batch_norm) {
    write_tensor(os, l.bn_gamma.data(), 1, (std::uint32_t)l.spec.out_dim);
    write_tensor(os, l.bn_beta.data(), 1, (std::uint32_t)l.spec.out_dim);
    write_tensor(os, l.bn_run_mean.data(), 1, (std::uint32_t)l.spec.out_dim);
    write_tensor(os, l.bn_run_var.data(), 1, (std::uint32_t)l.spec.out_dim);
  }
}

Layer read_layer(std::istream& is) {
  Layer l;
  l.spec.in_dim = read_u32(is);
  l.spec.out_dim = read_u32(is);
  l.spec.activation = is.get() == 1 ? Activation::kRelu : Activation::kIdentity;
  l.spec.batch_norm = is.get() == 1;
  l.w = DenseMatrix(l.spec.in_dim, l.spec.out_dim);
  read_tensor(is, l.w.data(), (std::uint32_t)l.spec.in_dim, (std::uint32_t)l.spec.out_dim);
  l.b.assign(l.spec.out_dim, 0.0);
  read_tensor(is, l.b.data(), 1, (std::uint32_t)l.spec.out_dim);
  if (l.spec.batch_norm) {
    l.bn_gamma.assign(l.spec.out_dim, 0.0);
    l.bn_beta.assign(l.spec.out_dim, 0.0);
    l.bn_run_mean.assign(l.spec.out_dim, 0.0);
    l.bn_run_var.assign(l.spec.out_dim, 0.0);
    read_tensor(is, l.bn_gamma.data(), 1, (std::uint32_t)l.spec.out_dim);
    read_tensor(is, l.bn_beta.data(), 1, (std::uint32_t)l.spec.out_dim);
    read_tensor(is, l.bn_run_mean.data(), 1, (std::uint32_t)l.spec.out_dim);
    read_tensor(is, l.bn_run_var.data(), 1, (std::uint32_t)l.spec.out_dim);
  }
  return l;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp);
    os.write(kMagic, sizeof(kMagic));
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(params.encoder.size()));
    write_u32(os, static_cast<std::uint32_t>(params.classifier.size()));
    for (const auto& l : params.encoder) write_layer(os, l);
    for (const auto& l : params.classifier) write_layer(os, l);
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: rename failed for " + path);
}

ModelParams load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  if (read_u32(is) != kVersion)
    throw std::runtime_error("checkpoint: unsupported version in " + path);
  const std::uint32_t n_enc = read_u32(is);
  const std::uint32_t n_cls = read_u32(is);
  ModelParams params;
  for (std::uint32_t i = 0; i < n_enc; ++i) params.encoder.push_back(read_layer(is));
  for (std::uint32_t i = 0; i < n_cls; ++i) params.classifier.push_back(read_layer(is));
  if (!is) throw std::runtime_error("checkpoint: truncated file " + path);
  return params;
}

}  // namespace selflabel
