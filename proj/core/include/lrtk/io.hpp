#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lrtk/bicharacteristic.hpp"
#include "lrtk/geodesic.hpp"
#include "lrtk/grid.hpp"
#include "lrtk/microlocal.hpp"
#include "lrtk/normal_operator.hpp"

namespace lrtk {

// Binary grid container, little-endian throughout:
//   magic "LRTK" | version u32 | dtype u32 (1 = f64, 2 = c128) |
//   axis count u32 | per axis { dim u64, origin f64, spacing f64 } |
//   row-major payload | 16-byte checksum.
// The checksum is two u64 words over every preceding byte b_i:
//   word0 = sum b_i, word1 = sum (i + 1) * b_i, both mod 2^64.
inline constexpr std::uint32_t kGridFormatVersion = 1;

// Reproducibility trailer for text outputs and binary sidecars.
struct OutputMeta {
  std::string config_hash;
  std::uint64_t seed = 0;
};

void write_grid(const GridField& field, const std::string& path,
                const OutputMeta* meta = nullptr);
GridField read_grid(const std::string& path);

void write_complex_grid(const GridGeometry& geom,
                        const std::vector<std::complex<double>>& values,
                        const std::string& path, const OutputMeta* meta = nullptr);
std::pair<GridGeometry, std::vector<std::complex<double>>> read_complex_grid(
    const std::string& path);

// Plain key = value configuration with dotted section keys and '#' comments.
struct RunConfig {
  std::map<std::string, std::string> kv;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_string(const std::string& text);

  bool has(const std::string& key) const { return kv.count(key) > 0; }
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  long get_long(const std::string& key, long fallback) const;
  std::vector<double> get_doubles(const std::string& key,
                                  const std::vector<double>& fallback) const;
  std::vector<std::size_t> get_sizes(const std::string& key,
                                     const std::vector<std::size_t>& fallback) const;

  std::uint64_t seed() const { return get_u64("seed", 1); }
  // FNV-1a over the canonical sorted "key=value" serialization.
  std::string hash() const;
  OutputMeta meta() const { return OutputMeta{hash(), seed()}; }
};

// CSV reports: a '#' comment line records toolkit version, config hash and
// seed, then a header row and the data rows.
void export_csv(const DecayReport& report, const std::string& path, const OutputMeta& meta);
void export_csv(const CrossValidationReport& report, const std::string& path,
                const OutputMeta& meta);
void export_csv(const std::vector<ConjugateRecord>& records, const std::string& path,
                const OutputMeta& meta);
void export_csv(const Bicharacteristic& path_data, const std::string& path,
                const OutputMeta& meta);

} // namespace lrtk
