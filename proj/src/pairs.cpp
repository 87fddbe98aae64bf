// SPDX-License-Identifier: Apache-2.0

#include "molgen/pairs.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "molgen/errors.hpp"

namespace molgen {

namespace {

std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_hex(uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

double parse_real(const std::string& field, const std::string& path, int line_no) {
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0' || !std::isfinite(v)) {
    throw ParseError(path + ":" + std::to_string(line_no) + ": bad numeric field '" + field + "'");
  }
  return v;
}

}  // namespace

void write_pairs_tsv(const std::string& path, const std::vector<PairRow>& rows,
                     const PairFileMeta& meta, bool with_label) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open pair file for writing: " + path);
  out << "# config_hash=" << fmt_hex(meta.cfg_hash) << " seed=" << meta.seed << "\n";
  out << "# x_smiles\ty_smiles\tsimilarity\tpx1\tpx2\tpx3\tpy1\tpy2\tpy3";
  if (with_label) out << "\tlabel";
  out << "\n";
  for (const PairRow& r : rows) {
    out << r.x_smiles << '\t' << r.y_smiles << '\t' << fmt_double(r.similarity);
    for (int d = 0; d < kNumProperties; ++d) out << '\t' << fmt_double(r.px[d]);
    for (int d = 0; d < kNumProperties; ++d) out << '\t' << fmt_double(r.py[d]);
    if (with_label) {
      if (r.label != 0 && r.label != 1) {
        throw RangeError("pair label must be 0 or 1 when writing a labeled file");
      }
      out << '\t' << r.label;
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<PairRow> read_pairs_tsv(const std::string& path, PairFileMeta* meta) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open pair file: " + path);
  std::vector<PairRow> rows;
  std::string line;
  int line_no = 0;
  int expect_fields = 0;  // 0 until the first data row fixes the column count
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (meta) {
        std::stringstream ss(line.substr(1));
        std::string word;
        while (ss >> word) {
          if (word.rfind("config_hash=", 0) == 0) {
            meta->cfg_hash = std::strtoull(word.c_str() + 12, nullptr, 16);
          } else if (word.rfind("seed=", 0) == 0) {
            meta->seed = std::strtoull(word.c_str() + 5, nullptr, 10);
          }
        }
      }
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) fields.push_back(field);
    if (fields.size() != 9 && fields.size() != 10) {
      throw ParseError(path + ":" + std::to_string(line_no) +
                       ": expected 9 or 10 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    if (expect_fields == 0) expect_fields = static_cast<int>(fields.size());
    if (static_cast<int>(fields.size()) != expect_fields) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": inconsistent label column");
    }
    PairRow r;
    r.x_smiles = fields[0];
    r.y_smiles = fields[1];
    r.similarity = parse_real(fields[2], path, line_no);
    for (int d = 0; d < kNumProperties; ++d) r.px[d] = parse_real(fields[3 + d], path, line_no);
    for (int d = 0; d < kNumProperties; ++d) r.py[d] = parse_real(fields[6 + d], path, line_no);
    if (fields.size() == 10) {
      if (fields[9] != "0" && fields[9] != "1") {
        throw ParseError(path + ":" + std::to_string(line_no) + ": label must be 0 or 1, got '" +
                         fields[9] + "'");
      }
      r.label = fields[9] == "1" ? 1 : 0;
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace molgen
