#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "artifact/nn/net.hpp"
#include "artifact/nn/tensor.hpp"
#include "artifact/taxonomy.hpp"
#include "artifact/version.hpp"

namespace artifact::nn {

// Flat named-tensor archive. Text header (config + taxonomy + tensor
// directory), then one raw little-endian f32 blob per tensor. The taxonomy
// stored is the dataset taxonomy; the head's class mapping follows from
// head_mode and num_classes (binary: {real, fake}; multi with one class
// fewer than the taxonomy: UF dropped, all other indices unchanged).

struct Checkpoint {
  ModelConfig cfg;
  ClassTaxonomy taxonomy;
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  const Tensor<float>* find(const std::string& name) const {
    for (const auto& [n, t] : tensors)
      if (n == name) return &t;
    return nullptr;
  }
};

namespace detail {

inline std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

inline std::vector<int> parse_ints(const std::string& s, const std::string& what) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      out.push_back(std::stoi(tok));
    } catch (const std::exception&) {
      throw std::runtime_error("checkpoint: bad integer list in " + what + ": " + s);
    }
  }
  if (out.empty()) throw std::runtime_error("checkpoint: empty integer list in " + what);
  return out;
}

inline void write_f32_blob(std::ostream& out, const float* data, std::size_t n) {
  static_assert(sizeof(float) == 4);
  // x86-64/aarch64 little-endian layout is the on-disk layout
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n * 4));
}

}  // namespace detail

template <typename S>
void save_checkpoint(const Net<S>& net, const ClassTaxonomy& taxonomy, std::ostream& out,
                     const std::vector<std::string>& header_comments = {}) {
  taxonomy.check();
  const ModelConfig& c = net.config();
  for (const auto& h : header_comments) out << "# " << h << "\n";
  out << "artifact-checkpoint\t" << kCheckpointFormatVersion << "\n";
  out << "config\tstem_kernel=" << c.stem_kernel << "\tstem_stride=" << c.stem_stride
      << "\tfsr=" << (c.fsr ? 1 : 0) << "\tdepths=" << detail::join_ints(c.stage_depths)
      << "\twidths=" << detail::join_ints(c.stage_widths) << "\thead=" << to_string(c.head_mode)
      << "\tclasses=" << c.num_classes << "\tinput=" << c.input_size << "\n";
  for (int i = 0; i < taxonomy.num_classes(); ++i) {
    const char* marker = i == taxonomy.real_index ? "REAL"
                         : i == taxonomy.uf_index ? "UF"
                                                  : "SEEN";
    out << "class\t" << i << "\t" << taxonomy.class_names[i] << "\t" << marker << "\n";
  }
  for (const auto& g : taxonomy.generators) {
    const auto it = taxonomy.seen_generator_map.find(g.id);
    out << "generator\t" << g.id << "\t" << to_string(g.family) << "\t"
        << to_string(g.manipulation) << "\t" << (g.seen ? "seen" : "unseen") << "\t";
    if (it != taxonomy.seen_generator_map.end())
      out << it->second;
    else
      out << "-";
    out << "\n";
  }
  out << "tensors\t" << net.params().size() << "\n";
  out << "end-header\n";
  std::vector<float> buf;
  for (const auto& prm : net.params()) {
    out << "tensor\t" << prm.name << "\t" << detail::join_ints(prm.value.dims) << "\t"
        << prm.value.numel() * 4 << "\n";
    buf.resize(prm.value.numel());
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = static_cast<float>(prm.value.ptr()[i]);
    detail::write_f32_blob(out, buf.data(), buf.size());
    out << "\n";
  }
  if (!out) throw std::runtime_error("save_checkpoint: stream write failed");
}

template <typename S>
void save_checkpoint(const Net<S>& net, const ClassTaxonomy& taxonomy, const std::string& path,
                     const std::vector<std::string>& header_comments = {}) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  save_checkpoint(net, taxonomy, out, header_comments);
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

inline Checkpoint load_checkpoint(std::istream& in, const std::string& what) {
  Checkpoint ck;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw std::runtime_error(what + ":" + std::to_string(line_no) + ": " + msg);
  };
  bool saw_magic = false, saw_config = false;
  long declared_tensors = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    {
      std::size_t start = 0;
      for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
          f.push_back(line.substr(start));
          break;
        }
        f.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
    }
    if (!saw_magic) {
      if (f.size() != 2 || f[0] != "artifact-checkpoint") fail("missing checkpoint magic");
      if (std::stoi(f[1]) != kCheckpointFormatVersion) fail("unsupported checkpoint version");
      saw_magic = true;
      continue;
    }
    if (f[0] == "config") {
      for (std::size_t i = 1; i < f.size(); ++i) {
        const std::size_t eq = f[i].find('=');
        if (eq == std::string::npos) fail("bad config field " + f[i]);
        const std::string key = f[i].substr(0, eq), val = f[i].substr(eq + 1);
        if (key == "stem_kernel") ck.cfg.stem_kernel = std::stoi(val);
        else if (key == "stem_stride") ck.cfg.stem_stride = std::stoi(val);
        else if (key == "fsr") ck.cfg.fsr = std::stoi(val) != 0;
        else if (key == "depths") ck.cfg.stage_depths = detail::parse_ints(val, "depths");
        else if (key == "widths") ck.cfg.stage_widths = detail::parse_ints(val, "widths");
        else if (key == "head") ck.cfg.head_mode = head_mode_from_string(val);
        else if (key == "classes") ck.cfg.num_classes = std::stoi(val);
        else if (key == "input") ck.cfg.input_size = std::stoi(val);
        else fail("unknown config key " + key);
      }
      saw_config = true;
      continue;
    }
    if (f[0] == "class") {
      if (f.size() != 4) fail("class line needs 4 fields");
      const int idx = std::stoi(f[1]);
      if (idx != static_cast<int>(ck.taxonomy.class_names.size()))
        fail("class indices must be dense and ordered");
      ck.taxonomy.class_names.push_back(f[2]);
      if (f[3] == "REAL") ck.taxonomy.real_index = idx;
      else if (f[3] == "UF") ck.taxonomy.uf_index = idx;
      else if (f[3] != "SEEN") fail("unknown class marker " + f[3]);
      continue;
    }
    if (f[0] == "generator") {
      if (f.size() != 6) fail("generator line needs 6 fields");
      GeneratorInfo g;
      g.id = f[1];
      g.family = family_from_string(f[2]);
      g.manipulation = manipulation_from_string(f[3]);
      g.seen = f[4] == "seen";
      if (f[5] != "-") ck.taxonomy.seen_generator_map[g.id] = std::stoi(f[5]);
      ck.taxonomy.generators.push_back(g);
      continue;
    }
    if (f[0] == "tensors") {
      declared_tensors = std::stol(f.at(1));
      continue;
    }
    if (f[0] == "end-header") break;
    fail("unknown header directive '" + f[0] + "'");
  }
  if (!saw_magic || !saw_config) fail("incomplete checkpoint header");
  if (declared_tensors < 0) fail("missing tensor count");
  ck.cfg.check();
  ck.taxonomy.check();
  for (long t = 0; t < declared_tensors; ++t) {
    if (!std::getline(in, line)) fail("unexpected end of file in tensor directory");
    ++line_no;
    std::vector<std::string> f;
    {
      std::size_t start = 0;
      for (;;) {
        const std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
          f.push_back(line.substr(start));
          break;
        }
        f.push_back(line.substr(start, tab - start));
        start = tab + 1;
      }
    }
    if (f.size() != 4 || f[0] != "tensor") fail("expected a tensor line");
    Tensor<float> ten;
    ten.resize(detail::parse_ints(f[2], "tensor dims"));
    const std::size_t nbytes = std::stoull(f[3]);
    if (nbytes != ten.numel() * 4) fail("tensor byte length mismatch for " + f[1]);
    in.read(reinterpret_cast<char*>(ten.ptr()), static_cast<std::streamsize>(nbytes));
    if (static_cast<std::size_t>(in.gcount()) != nbytes) fail("truncated tensor blob " + f[1]);
    char nl = 0;
    in.read(&nl, 1);
    if (nl != '\n') fail("missing blob terminator for " + f[1]);
    ck.tensors.emplace_back(f[1], std::move(ten));
  }
  return ck;
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  return load_checkpoint(in, path);
}

// Shape-checked weight transfer. Every model parameter must be present in
// the archive with matching dims; strides are not weight dimensions, so a
// baseline-stem archive loads into a stride-reduced model and vice versa.
template <typename S>
void load_into(Net<S>& net, const Checkpoint& ck) {
  for (auto& prm : net.params()) {
    const Tensor<float>* src = ck.find(prm.name);
    if (!src) throw std::runtime_error("load_into: checkpoint lacks tensor " + prm.name);
    if (src->dims != prm.value.dims)
      throw std::runtime_error("load_into: shape mismatch for " + prm.name + ": model " +
                               prm.value.shape_str() + " vs checkpoint " + src->shape_str());
    for (std::size_t i = 0; i < src->numel(); ++i)
      prm.value.ptr()[i] = static_cast<S>(src->ptr()[i]);
  }
}

}  // namespace artifact::nn
