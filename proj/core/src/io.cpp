#include "lrtk/io.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

#include "lrtk/errors.hpp"
#include "lrtk/version.hpp"

namespace lrtk {

namespace {

struct Checksum {
  std::uint64_t sum = 0;
  std::uint64_t weighted = 0;
  std::uint64_t index = 0;

  void feed(const void* data, std::size_t len) {
    const auto* b = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      sum += b[i];
      weighted += (index + 1) * static_cast<std::uint64_t>(b[i]);
      ++index;
    }
  }
};

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw format_error("cannot open for writing: " + path);
  }
  void put(const void* data, std::size_t len) {
    out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
    check_.feed(data, len);
  }
  template <typename T>
  void put_val(T v) {
    put(&v, sizeof(T));
  }
  void finish() {
    const std::uint64_t w0 = check_.sum, w1 = check_.weighted;
    out_.write(reinterpret_cast<const char*>(&w0), 8);
    out_.write(reinterpret_cast<const char*>(&w1), 8);
    out_.flush();
    if (!out_) throw format_error("write failed");
  }

 private:
  std::ofstream out_;
  Checksum check_;
};

class Reader {
 public:
  explicit Reader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw format_error("cannot open: " + path);
  }
  void get(void* data, std::size_t len) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(len));
    if (static_cast<std::size_t>(in_.gcount()) != len)
      throw format_error("truncated file");
    check_.feed(data, len);
  }
  template <typename T>
  T get_val() {
    T v;
    get(&v, sizeof(T));
    return v;
  }
  void verify_checksum() {
    const std::uint64_t expect0 = check_.sum, expect1 = check_.weighted;
    std::uint64_t w0 = 0, w1 = 0;
    in_.read(reinterpret_cast<char*>(&w0), 8);
    in_.read(reinterpret_cast<char*>(&w1), 8);
    if (in_.gcount() != 8) throw format_error("truncated checksum");
    if (w0 != expect0 || w1 != expect1) throw format_error("checksum mismatch");
  }

 private:
  std::ifstream in_;
  Checksum check_;
};

void write_header(Writer& w, std::uint32_t dtype, const GridGeometry& g) {
  w.put("LRTK", 4);
  w.put_val<std::uint32_t>(kGridFormatVersion);
  w.put_val<std::uint32_t>(dtype);
  w.put_val<std::uint32_t>(static_cast<std::uint32_t>(g.axes()));
  for (int a = 0; a < g.axes(); ++a) {
    w.put_val<std::uint64_t>(g.dims[static_cast<size_t>(a)]);
    w.put_val<double>(g.origin[static_cast<size_t>(a)]);
    w.put_val<double>(g.spacing[static_cast<size_t>(a)]);
  }
}

GridGeometry read_header(Reader& r, std::uint32_t expect_dtype) {
  char magic[4];
  r.get(magic, 4);
  if (std::memcmp(magic, "LRTK", 4) != 0) throw format_error("bad magic");
  const auto version = r.get_val<std::uint32_t>();
  if (version > kGridFormatVersion)
    throw format_error("unsupported format version " + std::to_string(version));
  const auto dtype = r.get_val<std::uint32_t>();
  if (dtype != expect_dtype)
    throw format_error("dtype mismatch: file holds " +
                       std::string(dtype == 1 ? "f64" : dtype == 2 ? "c128" : "unknown"));
  const auto axes = r.get_val<std::uint32_t>();
  if (axes < 2 || axes > 4) throw format_error("unsupported axis count");
  GridGeometry g;
  for (std::uint32_t a = 0; a < axes; ++a) {
    g.dims.push_back(r.get_val<std::uint64_t>());
    g.origin.push_back(r.get_val<double>());
    g.spacing.push_back(r.get_val<double>());
  }
  g.validate();
  return g;
}

void write_meta_sidecar(const std::string& path, const OutputMeta& meta) {
  std::ofstream out(path + ".meta");
  if (!out) throw format_error("cannot write sidecar for " + path);
  out << "toolkit_version=" << kVersion << "\n";
  out << "config_hash=" << meta.config_hash << "\n";
  out << "seed=" << meta.seed << "\n";
}

} // namespace

void write_grid(const GridField& field, const std::string& path, const OutputMeta* meta) {
  Writer w(path);
  write_header(w, 1, field.geom);
  w.put(field.values.data(), field.values.size() * sizeof(double));
  w.finish();
  if (meta) write_meta_sidecar(path, *meta);
}

GridField read_grid(const std::string& path) {
  Reader r(path);
  const GridGeometry g = read_header(r, 1);
  GridField field(g);
  r.get(field.values.data(), field.values.size() * sizeof(double));
  r.verify_checksum();
  return field;
}

void write_complex_grid(const GridGeometry& geom,
                        const std::vector<std::complex<double>>& values,
                        const std::string& path, const OutputMeta* meta) {
  if (values.size() != geom.size())
    throw invalid_input_error("write_complex_grid: size mismatch");
  Writer w(path);
  write_header(w, 2, geom);
  w.put(values.data(), values.size() * sizeof(std::complex<double>));
  w.finish();
  if (meta) write_meta_sidecar(path, *meta);
}

std::pair<GridGeometry, std::vector<std::complex<double>>> read_complex_grid(
    const std::string& path) {
  Reader r(path);
  const GridGeometry g = read_header(r, 2);
  std::vector<std::complex<double>> values(g.size());
  r.get(values.data(), values.size() * sizeof(std::complex<double>));
  r.verify_checksum();
  return {g, values};
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

} // namespace

RunConfig RunConfig::from_string(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw format_error("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw format_error("config line " + std::to_string(lineno) + ": empty key");
    cfg.kv[key] = val;
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw invalid_input_error("cannot open config: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_string(ss.str());
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

std::string RunConfig::require_string(const std::string& key) const {
  auto it = kv.find(key);
  if (it == kv.end()) throw invalid_input_error("config: missing required key " + key);
  return it->second;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stod(it->second);
  } catch (...) {
    throw invalid_input_error("config: bad number for " + key);
  }
}

std::uint64_t RunConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stoull(it->second);
  } catch (...) {
    throw invalid_input_error("config: bad integer for " + key);
  }
}

long RunConfig::get_long(const std::string& key, long fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  try {
    return std::stol(it->second);
  } catch (...) {
    throw invalid_input_error("config: bad integer for " + key);
  }
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<double> out;
  std::istringstream ss(it->second);
  double v;
  while (ss >> v) out.push_back(v);
  if (out.empty()) throw invalid_input_error("config: bad number list for " + key);
  return out;
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key,
                                              const std::vector<std::size_t>& fallback) const {
  auto it = kv.find(key);
  if (it == kv.end()) return fallback;
  std::vector<std::size_t> out;
  std::istringstream ss(it->second);
  long long v;
  while (ss >> v) {
    if (v <= 0) throw invalid_input_error("config: sizes must be positive for " + key);
    out.push_back(static_cast<std::size_t>(v));
  }
  if (out.empty()) throw invalid_input_error("config: bad size list for " + key);
  return out;
}

std::string RunConfig::hash() const {
  // FNV-1a 64 over the sorted canonical serialization (std::map iterates
  // in key order already).
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const auto& [k, v] : kv) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

namespace {

std::ofstream open_csv(const std::string& path, const OutputMeta& meta) {
  std::ofstream out(path);
  if (!out) throw format_error("cannot open for writing: " + path);
  out << "# lrtk " << kVersion << " config_hash=" << meta.config_hash
      << " seed=" << meta.seed << "\n";
  return out;
}

void finish_csv(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw format_error("write failed: " + path);
}

} // namespace

void export_csv(const DecayReport& report, const std::string& path, const OutputMeta& meta) {
  std::ofstream out = open_csv(path, meta);
  out << "band_center,band_energy,slope,confidence,smooth,window_width,cone_half_angle\n";
  for (std::size_t i = 0; i < report.band_centers.size(); ++i) {
    out << report.band_centers[i] << "," << report.band_energies[i] << "," << report.slope
        << "," << report.confidence << "," << (report.numerically_smooth ? 1 : 0) << ","
        << report.window_width << "," << report.cone_half_angle << "\n";
  }
  finish_csv(out, path);
}

void export_csv(const CrossValidationReport& report, const std::string& path,
                const OutputMeta& meta) {
  std::ofstream out = open_csv(path, meta);
  out << "# eps_cone=" << report.eps_cone << " rho=" << report.rho
      << " kernel_stride=" << report.kernel_stride
      << " interior_margin=" << report.interior_margin
      << " constant_ratio=" << report.measured_constant_ratio << "\n";
  out << "pair_a,pair_b,rel_l2,band_center,band_rel\n";
  for (const auto& pr : report.pairs) {
    if (pr.band_rel.empty()) {
      out << pr.a << "," << pr.b << "," << pr.rel_l2 << ",,\n";
    } else {
      for (std::size_t b = 0; b < pr.band_rel.size(); ++b)
        out << pr.a << "," << pr.b << "," << pr.rel_l2 << ","
            << report.band_centers[b] << "," << pr.band_rel[b] << "\n";
    }
  }
  finish_csv(out, path);
}

void export_csv(const std::vector<ConjugateRecord>& records, const std::string& path,
                const OutputMeta& meta) {
  std::ofstream out = open_csv(path, meta);
  out << "s_star,kernel_dim,fold,fold_deriv,base,theta\n";
  for (const auto& r : records) {
    out << r.s_star << "," << r.kernel_dim << "," << (r.fold ? 1 : 0) << "," << r.fold_deriv
        << ",";
    for (int a = 0; a < r.base.n; ++a) out << (a ? " " : "") << r.base[a];
    out << ",";
    for (int a = 0; a < r.theta.n; ++a) out << (a ? " " : "") << r.theta[a];
    out << "\n";
  }
  finish_csv(out, path);
}

void export_csv(const Bicharacteristic& path_data, const std::string& path,
                const OutputMeta& meta) {
  std::ofstream out = open_csv(path, meta);
  out << "# max_drift=" << path_data.max_drift
      << " exited_domain=" << (path_data.exited_domain ? 1 : 0) << "\n";
  out << "s,t,x,tau,xi\n";
  for (std::size_t i = 0; i < path_data.s.size(); ++i) {
    const PhasePoint& p = path_data.pts[i];
    out << path_data.s[i] << "," << p.t << ",";
    for (int a = 0; a < p.x.n; ++a) out << (a ? " " : "") << p.x[a];
    out << "," << p.tau << ",";
    for (int a = 0; a < p.xi.n; ++a) out << (a ? " " : "") << p.xi[a];
    out << "\n";
  }
  finish_csv(out, path);
}

} // namespace lrtk
