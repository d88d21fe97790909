#ifndef POINTACL_DATAIO_HPP
#define POINTACL_DATAIO_HPP

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pointacl/model.hpp"
#include "pointacl/parallel.hpp"
#include "pointacl/point_cloud.hpp"
#include "pointacl/random.hpp"
#include "pointacl/shapes.hpp"

namespace pointacl {

/// Labeled clouds; sample labels index class_names (1-based).
struct Dataset {
  std::vector<PointCloud> samples;
  std::vector<std::string> class_names;
  std::string split;  // "train", "test" or empty

  std::size_t size() const noexcept { return samples.size(); }
  std::size_t classes() const noexcept { return class_names.size(); }
};

/// `per_class` clouds of `n_points` for each family, labels in list order.
/// Instances vary in proportions and get isotropic Gaussian noise of std `noise_sigma`.
inline Dataset generate_synthetic(const std::vector<std::string>& families, std::size_t per_class, std::size_t n_points,
                                  double noise_sigma, std::uint64_t seed) {
  if (families.empty()) throw InvalidInput("no shape families given");
  if (per_class < 1) throw InvalidInput("per_class must be >= 1");
  if (n_points < 1) throw InvalidInput("n_points must be >= 1");
  if (!(noise_sigma >= 0.0)) throw InvalidInput("noise must be >= 0");
  std::vector<Shape> shapes;
  Dataset ds;
  for (const auto& f : families) {
    shapes.push_back(parse_shape(f));
    ds.class_names.emplace_back(shape_name(shapes.back()));
  }
  ds.samples.resize(shapes.size() * per_class);
  parallel_for(ds.samples.size(), [&](std::size_t i) {
    const std::size_t c = i / per_class, j = i % per_class;
    std::mt19937_64 rng(derive_seed(seed, {0x5359ull, c, j}));
    const ShapeParams sp = random_shape_params(shapes[c], rng);
    std::vector<Point3> pts = sample_shape(sp, n_points, rng);
    if (noise_sigma > 0.0) {
      std::normal_distribution<double> g(0.0, noise_sigma);
      for (auto& p : pts) p += Point3(g(rng), g(rng), g(rng));
    }
    char id[64];
    std::snprintf(id, sizeof id, "%s-%04zu", ds.class_names[c].c_str(), j);
    ds.samples[i] = PointCloud(std::move(pts), static_cast<int>(c + 1), id);
  });
  return ds;
}

// ---- XYZ text files ----

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> fields(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    const std::size_t b = i;
    while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    if (i > b) out.push_back(s.substr(b, i - b));
  }
  return out;
}

inline bool parse_number(std::string_view s, double& out) {
  const auto r = std::from_chars(s.data(), s.data() + s.size(), out);
  return r.ec == std::errc() && r.ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses "x y z" lines and an optional "#label k" line. Blank lines and
/// other '#' comments are skipped.
inline PointCloud read_xyz(std::istream& in, std::string id = {}) {
  PointCloud cloud;
  cloud.id = std::move(id);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string_view t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '#') {
      const auto f = detail::fields(t.substr(1));
      if (!f.empty() && f[0] == "label") {
        int v = 0;
        if (f.size() != 2 || std::from_chars(f[1].data(), f[1].data() + f[1].size(), v).ec != std::errc() || v < 1)
          throw ParseError("malformed label line", lineno);
        cloud.label = v;
      }
      continue;
    }
    const auto f = detail::fields(t);
    if (f.size() != 3) throw ParseError("expected 3 coordinates, found " + std::to_string(f.size()), lineno);
    Point3 p;
    for (int k = 0; k < 3; ++k)
      if (!detail::parse_number(f[static_cast<std::size_t>(k)], p[k]) || !std::isfinite(p[k]))
        throw ParseError("bad coordinate '" + std::string(f[static_cast<std::size_t>(k)]) + "'", lineno);
    cloud.points.push_back(p);
  }
  if (cloud.empty()) throw InvalidInput("point file contains no points");
  return cloud;
}

inline void write_xyz(std::ostream& out, const PointCloud& cloud) {
  for (const auto& p : cloud.points)
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  if (cloud.label) out << "#label " << *cloud.label << '\n';
}

inline PointCloud load_xyz(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_xyz(in, path.stem().string());
}

inline void save_xyz(const PointCloud& cloud, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_xyz(out, cloud);
  if (!out) throw Error("write failed: " + path.string());
}

// ---- splits ----

struct SplitResult {
  Dataset train, test;
  std::size_t warnings = 0;  // classes too small to contribute a test sample
};

/// Stratified split: per class, round(test_fraction * n) samples (at least 1,
/// at most n - 1) go to test; a single-sample class goes wholly to train.
/// Both halves keep the source order.
inline SplitResult split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidInput("test_fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    if (!ds.samples[i].label) throw InvalidInput("split needs labeled samples");
    by_class[*ds.samples[i].label].push_back(i);
  }
  std::vector<char> to_test(ds.samples.size(), 0);
  SplitResult r;
  for (auto& [label, idx] : by_class) {
    if (idx.size() < 2) {
      ++r.warnings;
      continue;
    }
    std::mt19937_64 rng(derive_seed(seed, {0x5350ull, static_cast<std::uint64_t>(label)}));
    std::shuffle(idx.begin(), idx.end(), rng);
    auto take = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idx.size())));
    take = std::clamp<std::size_t>(take, 1, idx.size() - 1);
    for (std::size_t k = 0; k < take; ++k) to_test[idx[k]] = 1;
  }
  r.train.class_names = r.test.class_names = ds.class_names;
  r.train.split = "train";
  r.test.split = "test";
  for (std::size_t i = 0; i < ds.samples.size(); ++i) (to_test[i] ? r.test : r.train).samples.push_back(ds.samples[i]);
  return r;
}

// ---- dataset directories ----
//
// <dir>/classes.txt      one class name per line, line k = label k
// <dir>/manifest.csv     header "id,file,label", one row per sample
// <dir>/<file>           XYZ cloud

inline void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream cls(dir / "classes.txt");
    for (const auto& n : ds.class_names) cls << n << '\n';
    if (!cls) throw Error("cannot write " + (dir / "classes.txt").string());
  }
  std::ofstream man(dir / "manifest.csv");
  if (!man) throw Error("cannot write " + (dir / "manifest.csv").string());
  man << "id,file,label\n";
  for (std::size_t i = 0; i < ds.samples.size(); ++i) {
    const auto& s = ds.samples[i];
    const std::string id = s.id.empty() ? "sample-" + std::to_string(i) : s.id;
    const std::string file = id + ".xyz";
    save_xyz(s, dir / file);
    man << id << ',' << file << ',' << (s.label ? std::to_string(*s.label) : std::string()) << '\n';
  }
}

inline Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  {
    std::ifstream cls(dir / "classes.txt");
    std::string line;
    while (std::getline(cls, line))
      if (!detail::trim(line).empty()) ds.class_names.emplace_back(detail::trim(line));
  }
  std::ifstream man(dir / "manifest.csv");
  if (!man) throw Error("cannot open " + (dir / "manifest.csv").string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(man, line)) {
    ++lineno;
    if (lineno == 1 || detail::trim(line).empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.emplace_back(detail::trim(c));
    if (cols.size() == 2) cols.emplace_back();
    if (cols.size() != 3) throw ParseError("manifest row needs id,file,label", lineno);
    PointCloud c = load_xyz(dir / cols[1]);
    c.id = cols[0];
    if (!cols[2].empty()) {
      int v = 0;
      if (std::from_chars(cols[2].data(), cols[2].data() + cols[2].size(), v).ec != std::errc() || v < 1)
        throw ParseError("bad label '" + cols[2] + "'", lineno);
      c.label = v;
    }
    if (c.label && !ds.class_names.empty() && static_cast<std::size_t>(*c.label) > ds.class_names.size())
      throw ParseError("label exceeds class count", lineno);
    ds.samples.push_back(std::move(c));
  }
  if (ds.class_names.empty()) {
    int k = 0;
    for (const auto& s : ds.samples) k = std::max(k, s.label.value_or(0));
    for (int i = 1; i <= k; ++i) ds.class_names.push_back("class" + std::to_string(i));
  }
  return ds;
}

}  // namespace pointacl

#endif  // POINTACL_DATAIO_HPP
