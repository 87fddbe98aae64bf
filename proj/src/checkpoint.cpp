// SPDX-License-Identifier: Apache-2.0

#include "molgen/checkpoint.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>

#include "molgen/errors.hpp"
#include "molgen/rng.hpp"

namespace molgen {

namespace {

constexpr char kMagic[8] = {'M', 'G', 'C', 'K', 'P', 'T', '0', '\n'};
constexpr uint32_t kVersion = 1;

// Explicit little-endian writers keep the on-disk layout platform-independent.
void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double x) {
  uint64_t bits;
  std::memcpy(&bits, &x, 8);
  put_u64(out, bits);
}

struct Reader {
  const std::string& buf;
  size_t pos = 0;
  const std::string& path;

  void need(size_t n) const {
    if (pos + n > buf.size()) throw FormatError("truncated checkpoint: " + path);
  }
  uint32_t u32() {
    need(4);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  uint64_t u64() {
    need(8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<uint8_t>(buf[pos++])) << (8 * i);
    return v;
  }
  double f64() {
    const uint64_t bits = u64();
    double x;
    std::memcpy(&x, &bits, 8);
    return x;
  }
  std::string str(uint32_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

uint64_t config_hash(const KvConfig& cfg) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& [k, v] : cfg) {
    h = fnv1a64_str(k, h);
    h = fnv1a64("=", 1, h);
    h = fnv1a64_str(v, h);
    h = fnv1a64("\n", 1, h);
  }
  return h;
}

void write_config_file(const std::string& path, const KvConfig& cfg) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write config file: " + path);
  for (const auto& [k, v] : cfg) out << k << "=" << v << "\n";
  if (!out) throw IoError("write failed: " + path);
}

KvConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path);
  KvConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return cfg;
}

int config_int(const KvConfig& cfg, const std::string& key) {
  const std::string& s = config_str(cfg, key);
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw ConfigMismatch("bad integer for key " + key);
  return static_cast<int>(v);
}

double config_double(const KvConfig& cfg, const std::string& key) {
  const std::string& s = config_str(cfg, key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw ConfigMismatch("bad real for key " + key);
  return v;
}

const std::string& config_str(const KvConfig& cfg, const std::string& key) {
  auto it = cfg.find(key);
  if (it == cfg.end()) throw ConfigMismatch("missing config key " + key);
  return it->second;
}

int config_int_or(const KvConfig& cfg, const std::string& key, int fallback) {
  return cfg.count(key) ? config_int(cfg, key) : fallback;
}

double config_double_or(const KvConfig& cfg, const std::string& key, double fallback) {
  return cfg.count(key) ? config_double(cfg, key) : fallback;
}

const Checkpoint::Entry& Checkpoint::get(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return e;
  }
  throw FormatError("checkpoint has no parameter named " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& e : entries) {
    if (e.name == name) return true;
  }
  return false;
}

void save_checkpoint(const std::string& path, const std::vector<const Parameter*>& params,
                     uint64_t cfg_hash) {
  std::string buf;
  buf.append(kMagic, sizeof(kMagic));
  put_u32(buf, kVersion);
  put_u64(buf, cfg_hash);
  put_u32(buf, static_cast<uint32_t>(params.size()));
  for (const Parameter* p : params) {
    put_u32(buf, static_cast<uint32_t>(p->name.size()));
    buf.append(p->name);
    buf.push_back(p->frozen ? 1 : 0);
    put_u32(buf, static_cast<uint32_t>(p->value.rows));
    put_u32(buf, static_cast<uint32_t>(p->value.cols));
    for (double x : p->value.v) put_f64(buf, x);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  Reader r{buf, 0, path};
  r.need(sizeof(kMagic));
  if (std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint file: " + path);
  }
  r.pos = sizeof(kMagic);
  const uint32_t version = r.u32();
  if (version != kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + ": " + path);
  }
  Checkpoint ck;
  ck.cfg_hash = r.u64();
  const uint32_t count = r.u32();
  ck.entries.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    Checkpoint::Entry e;
    const uint32_t name_len = r.u32();
    e.name = r.str(name_len);
    r.need(1);
    e.frozen = buf[r.pos++] != 0;
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    e.value = Tensor(rows, cols);
    for (double& x : e.value.v) x = r.f64();
    ck.entries.push_back(std::move(e));
  }
  if (r.pos != buf.size()) throw FormatError("trailing bytes in checkpoint: " + path);
  return ck;
}

void restore_parameters(const Checkpoint& ck, const std::vector<Parameter*>& params) {
  for (Parameter* p : params) {
    const Checkpoint::Entry& e = ck.get(p->name);
    if (!e.value.same_shape(p->value)) {
      throw FormatError("checkpoint shape " + e.value.shape_str() + " does not match parameter " +
                        p->name + " " + p->value.shape_str());
    }
    p->value = e.value;
    p->frozen = e.frozen;
    p->zero_grad();
  }
}

}  // namespace molgen
