#include "boxrl/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace boxrl {

namespace {

constexpr const char* kMagic = "boxrl-checkpoint 1";

void write_array(std::ofstream& out, const char* name, const std::vector<double>& v) {
  out << "array " << name << ' ' << v.size() << '\n';
  char buf[64];
  for (double x : v) {
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out << buf << '\n';
  }
}

std::vector<double> read_array(std::ifstream& in, const std::string& name,
                               std::size_t expected) {
  std::string tag, got;
  std::size_t n = 0;
  if (!(in >> tag >> got >> n) || tag != "array" || got != name)
    throw std::runtime_error("checkpoint: expected array '" + name + "'");
  if (n != expected)
    throw std::runtime_error("checkpoint: array '" + name + "' has size " +
                             std::to_string(n) + ", expected " +
                             std::to_string(expected));
  std::vector<double> v(n);
  for (double& x : v)
    if (!(in >> x))
      throw std::runtime_error("checkpoint: truncated array '" + name + "'");
  return v;
}

void write_params(std::ofstream& out, const char* prefix, const PolicyParams& p) {
  write_array(out, (std::string(prefix) + ".embed").c_str(), p.embed);
  write_array(out, (std::string(prefix) + ".w_hid").c_str(), p.w_hid);
  write_array(out, (std::string(prefix) + ".b_hid").c_str(), p.b_hid);
  write_array(out, (std::string(prefix) + ".w_out").c_str(), p.w_out);
}

PolicyParams read_params(std::ifstream& in, const std::string& prefix,
                         const PolicyDims& dims) {
  PolicyParams p = PolicyParams::zeros(dims);
  p.embed = read_array(in, prefix + ".embed", p.embed.size());
  p.w_hid = read_array(in, prefix + ".w_hid", p.w_hid.size());
  p.b_hid = read_array(in, prefix + ".b_hid", p.b_hid.size());
  p.w_out = read_array(in, prefix + ".w_out", p.w_out.size());
  return p;
}

void write_grads(std::ofstream& out, const char* prefix, const GradientSet& g) {
  write_array(out, (std::string(prefix) + ".embed").c_str(), g.embed);
  write_array(out, (std::string(prefix) + ".w_hid").c_str(), g.w_hid);
  write_array(out, (std::string(prefix) + ".b_hid").c_str(), g.b_hid);
  write_array(out, (std::string(prefix) + ".w_out").c_str(), g.w_out);
}

GradientSet read_grads(std::ifstream& in, const std::string& prefix,
                       const PolicyParams& like) {
  GradientSet g = GradientSet::zeros_like(like);
  g.embed = read_array(in, prefix + ".embed", g.embed.size());
  g.w_hid = read_array(in, prefix + ".w_hid", g.w_hid.size());
  g.b_hid = read_array(in, prefix + ".b_hid", g.b_hid.size());
  g.w_out = read_array(in, prefix + ".w_out", g.w_out.size());
  return g;
}

}  // namespace

void save_checkpoint(const TrainerCheckpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  const PolicyDims& d = ckpt.current.dims;
  out << kMagic << '\n';
  out << "step " << ckpt.step << '\n';
  out << "seed " << ckpt.seed << '\n';
  out << "warmed_up " << (ckpt.warmed_up ? 1 : 0) << '\n';
  out << "dims " << d.vocab_size << ' ' << d.window << ' ' << d.d_emb << ' '
      << d.d_hid << ' ' << d.pad_id << '\n';
  out << "adam_t " << ckpt.opt.t << '\n';
  write_params(out, "current", ckpt.current);
  write_params(out, "reference", ckpt.reference);
  write_grads(out, "adam_m", ckpt.opt.m);
  write_grads(out, "adam_v", ckpt.opt.v);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for '" + path + "'");
}

TrainerCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  std::string magic;
  std::getline(in, magic);
  if (magic != kMagic)
    throw std::runtime_error("load_checkpoint: bad header in '" + path + "'");

  TrainerCheckpoint ckpt;
  std::string key;
  PolicyDims dims;
  int warmed = 0;
  if (!(in >> key >> ckpt.step) || key != "step")
    throw std::runtime_error("load_checkpoint: missing step");
  if (!(in >> key >> ckpt.seed) || key != "seed")
    throw std::runtime_error("load_checkpoint: missing seed");
  if (!(in >> key >> warmed) || key != "warmed_up")
    throw std::runtime_error("load_checkpoint: missing warmed_up");
  ckpt.warmed_up = warmed != 0;
  if (!(in >> key >> dims.vocab_size >> dims.window >> dims.d_emb >> dims.d_hid >>
        dims.pad_id) ||
      key != "dims")
    throw std::runtime_error("load_checkpoint: missing dims");
  if (!(in >> key >> ckpt.opt.t) || key != "adam_t")
    throw std::runtime_error("load_checkpoint: missing adam_t");

  ckpt.current = read_params(in, "current", dims);
  ckpt.reference = read_params(in, "reference", dims);
  ckpt.opt.m = read_grads(in, "adam_m", ckpt.current);
  ckpt.opt.v = read_grads(in, "adam_v", ckpt.current);
  return ckpt;
}

}  // namespace boxrl
