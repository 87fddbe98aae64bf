// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "molgen/tensor.hpp"

namespace molgen {

// Ordered key=value configuration; ordering makes serialization canonical.
using KvConfig = std::map<std::string, std::string>;

// FNV-1a over the canonical "key=value\n" serialization.
uint64_t config_hash(const KvConfig& cfg);

void write_config_file(const std::string& path, const KvConfig& cfg);
KvConfig read_config_file(const std::string& path);

// Typed accessors; throw ConfigMismatch when the key is missing or malformed.
int config_int(const KvConfig& cfg, const std::string& key);
double config_double(const KvConfig& cfg, const std::string& key);
const std::string& config_str(const KvConfig& cfg, const std::string& key);
int config_int_or(const KvConfig& cfg, const std::string& key, int fallback);
double config_double_or(const KvConfig& cfg, const std::string& key, double fallback);

// Versioned binary container: little-endian, magic + version + config hash,
// then (name, frozen flag, shape, f64 payload) per parameter. Byte layout is
// fixed so saved files are portable and reruns are byte-identical.
struct Checkpoint {
  uint64_t cfg_hash = 0;
  struct Entry {
    std::string name;
    bool frozen = false;
    Tensor value;
  };
  std::vector<Entry> entries;

  const Entry& get(const std::string& name) const;  // throws FormatError if absent
  bool has(const std::string& name) const;
};

void save_checkpoint(const std::string& path, const std::vector<const Parameter*>& params,
                     uint64_t cfg_hash);
Checkpoint load_checkpoint(const std::string& path);

// Copies value + frozen flag from the checkpoint into each parameter, matched
// by name. Throws FormatError when a parameter is missing or shaped wrong.
void restore_parameters(const Checkpoint& ck, const std::vector<Parameter*>& params);

}  // namespace molgen
