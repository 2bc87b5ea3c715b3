#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "lrtk/errors.hpp"
#include "lrtk/grid.hpp"
#include "lrtk/io.hpp"
#include "lrtk/probe_fields.hpp"
#include "lrtk/spectral.hpp"

using namespace lrtk;

namespace {

GridGeometry small_geom() {
  GridGeometry g;
  g.origin = {-1.0, -1.0, -1.0};
  g.spacing = {0.125, 0.125, 0.125};
  g.dims = {17, 17, 17};
  return g;
}

std::string temp_path(const char* tag) {
  return (std::filesystem::temp_directory_path() / tag).string();
}

} // namespace

TEST_CASE("multilinear sampling reproduces trilinear functions exactly") {
  GridField f(small_geom());
  std::size_t idx[4];
  for (std::size_t i = 0; i < f.size(); ++i) {
    unflatten(f.geom, i, idx);
    const double t = f.geom.coord(0, idx[0]);
    const double x = f.geom.coord(1, idx[1]);
    const double y = f.geom.coord(2, idx[2]);
    f.values[i] = 2.0 + t + 3.0 * x * y - t * x * y;
  }
  const double pt[3] = {0.3141, -0.2718, 0.5772};
  const double expect = 2.0 + pt[0] + 3.0 * pt[1] * pt[2] - pt[0] * pt[1] * pt[2];
  CHECK(f.sample(pt) == doctest::Approx(expect).epsilon(1e-13));

  const double outside[3] = {2.0, 0.0, 0.0};
  CHECK(f.sample(outside) == 0.0);
}

TEST_CASE("grid round trip is bit exact") {
  GridField f(small_geom());
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : f.values) v = u(rng);
  const std::string path = temp_path("lrtk_roundtrip.grid");
  write_grid(f, path);
  const GridField g = read_grid(path);
  REQUIRE(g.values.size() == f.values.size());
  for (std::size_t i = 0; i < f.size(); ++i) REQUIRE(g.values[i] == f.values[i]);
  CHECK(g.geom.same_shape(f.geom));
  std::remove(path.c_str());
}

TEST_CASE("complex grid round trip is bit exact") {
  GridGeometry g = small_geom();
  std::vector<std::complex<double>> v(g.size());
  std::mt19937_64 rng(43);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (auto& c : v) c = {u(rng), u(rng)};
  const std::string path = temp_path("lrtk_roundtrip_c.grid");
  write_complex_grid(g, v, path);
  const auto [g2, v2] = read_complex_grid(path);
  REQUIRE(v2.size() == v.size());
  for (std::size_t i = 0; i < v.size(); ++i) REQUIRE(v2[i] == v[i]);
  std::remove(path.c_str());
}

TEST_CASE("format errors: truncation, magic, version, dtype") {
  GridField f(small_geom());
  const std::string path = temp_path("lrtk_format.grid");
  write_grid(f, path);

  // Truncated payload.
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    std::ofstream out(path + ".trunc", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  }
  CHECK_THROWS_AS(read_grid(path + ".trunc"), format_error);

  // Bad magic.
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[0] = 'X';
    std::ofstream out(path + ".magic", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_grid(path + ".magic"), format_error);

  // Future version.
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[4] = 99;
    std::ofstream out(path + ".ver", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_grid(path + ".ver"), format_error);

  // Reading a real grid as complex.
  CHECK_THROWS_AS(read_complex_grid(path), format_error);

  // Flipping a payload byte breaks the checksum.
  {
    std::ifstream in(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), {});
    bytes[bytes.size() / 2] ^= 0x5a;
    std::ofstream out(path + ".sum", std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }
  CHECK_THROWS_AS(read_grid(path + ".sum"), format_error);

  for (const char* suffix : {"", ".trunc", ".magic", ".ver", ".sum"})
    std::remove((path + suffix).c_str());
}

TEST_CASE("config parsing, defaults, and hashing") {
  const RunConfig cfg = RunConfig::from_string(
      "# comment\n"
      "metric.name = static-bump,0.05,1.5\n"
      "grid.dims = 32 32 32\n"
      "grid.origin = -4 -4 -4\n"
      "tol.newton = 1e-9\n"
      "seed = 77\n");
  CHECK(cfg.require_string("metric.name") == "static-bump,0.05,1.5");
  CHECK(cfg.get_sizes("grid.dims", {})[1] == 32);
  CHECK(cfg.get_double("tol.newton", 0.0) == doctest::Approx(1e-9));
  CHECK(cfg.seed() == 77);
  CHECK(cfg.get_double("missing.key", 2.5) == 2.5);
  CHECK_THROWS_AS(cfg.require_string("missing.key"), invalid_input_error);

  // Hash is stable under reordering and comments.
  const RunConfig cfg2 = RunConfig::from_string(
      "seed = 77\n"
      "grid.origin = -4 -4 -4\n"
      "tol.newton = 1e-9\n"
      "grid.dims = 32 32 32\n"
      "metric.name = static-bump,0.05,1.5   # trailing\n");
  CHECK(cfg.hash() == cfg2.hash());
  CHECK(cfg.hash().size() == 16);

  CHECK_THROWS_AS(RunConfig::from_string("not a key value line\n"), format_error);
  CHECK_THROWS_AS(RunConfig::from_file("/nonexistent/lrtk.cfg"), invalid_input_error);
}

TEST_CASE("csv exports carry metadata and rows") {
  DecayReport rep;
  rep.band_centers = {2, 4, 8, 16, 32};
  rep.band_energies = {1.0, 0.5, 0.25, 0.125, 0.0625};
  rep.slope = -0.5;
  rep.confidence = 0.02;
  rep.numerically_smooth = false;
  const std::string path = temp_path("lrtk_decay.csv");
  OutputMeta meta{"deadbeefdeadbeef", 123};
  export_csv(rep, path, meta);

  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line.find("config_hash=deadbeefdeadbeef") != std::string::npos);
  CHECK(line.find("seed=123") != std::string::npos);
  std::getline(in, line);  // header
  CHECK(line.find("band_center") == 0);
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
  std::remove(path.c_str());

  // Empty conjugate list: header only.
  const std::string cpath = temp_path("lrtk_conj.csv");
  export_csv(std::vector<ConjugateRecord>{}, cpath, meta);
  std::ifstream cin_(cpath);
  int lines = 0;
  while (std::getline(cin_, line)) ++lines;
  CHECK(lines == 2);  // meta comment + header
  std::remove(cpath.c_str());

  CHECK_THROWS_AS(export_csv(rep, "/nonexistent_dir/report.csv", meta), format_error);
}

TEST_CASE("support margin bookkeeping") {
  GridField f(small_geom());
  f.support_margin = 3;
  f.values[f.size() / 2] = 1.0;  // center: fine
  CHECK_NOTHROW(f.check_support_margin());
  f.values[0] = 1.0;  // corner violates the margin
  CHECK_THROWS_AS(f.check_support_margin(), invalid_input_error);
}

TEST_CASE("fft round trip and band energies") {
  GridGeometry g = small_geom();
  GridField f(g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (double& v : f.values) v = u(rng);

  std::vector<std::size_t> pad = {5, 3, 7};
  const SpectralField sf = fft_forward(f, pad);
  const GridField back = crop_to(fft_inverse(sf), g);
  double err = 0.0, ref = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    err += (back.values[i] - f.values[i]) * (back.values[i] - f.values[i]);
    ref += f.values[i] * f.values[i];
  }
  CHECK(std::sqrt(err / ref) < 1e-12);

  // A pure spatial mode lands in exactly one dyadic shell.
  GridField mode(g);
  std::size_t idx[4];
  const double k0 = 2.0 * M_PI * 4.0 / (g.extent(1) + g.spacing[1]);
  for (std::size_t i = 0; i < mode.size(); ++i) {
    unflatten(g, i, idx);
    mode.values[i] = std::cos(k0 * g.coord(1, idx[1]));
  }
  const std::vector<double> bands = {k0 / 4.0, k0 / 2.0, k0, 2.0 * k0};
  const auto eb = band_energies(mode, bands);
  const double total = eb[0] + eb[1] + eb[2] + eb[3];
  CHECK(total > 0.0);
  CHECK(eb[2] / total > 0.98);
}
