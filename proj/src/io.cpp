#include "cbct/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>

#include "cbct/error.hpp"

namespace cbct {

namespace fs = std::filesystem;

static_assert(std::endian::native == std::endian::little, "raw payloads assume a little-endian host");

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) fail(ErrorKind::Format, "cannot format number");
  return std::string(buf, end);
}

namespace {

double parse_double(const std::string& text, const std::string& key) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) fail(ErrorKind::Format, "bad numeric value for '" + key + "': " + text);
  return value;
}

void write_payload(const fs::path& raw_path, std::span<const double> values) {
  std::vector<float> buf(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<float>(values[i]);
  fs::path tmp = raw_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * sizeof(float)));
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, raw_path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + raw_path.string() + ": " + ec.message());
}

std::vector<double> read_payload(const fs::path& raw_path, std::size_t count) {
  std::ifstream in(raw_path, std::ios::binary | std::ios::ate);
  if (!in) fail(ErrorKind::Io, "cannot open " + raw_path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  if (size != count * sizeof(float))
    fail(ErrorKind::Format, raw_path.string() + ": payload has " + std::to_string(size) + " bytes, metadata implies " +
                                std::to_string(count * sizeof(float)));
  in.seekg(0);
  std::vector<float> buf(count);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(size));
  if (!in) fail(ErrorKind::Io, "read failed for " + raw_path.string());
  return {buf.begin(), buf.end()};
}

fs::path with_ext(const fs::path& stem, const char* ext) {
  fs::path p = stem;
  p += ext;
  return p;
}

void ensure_parent(const fs::path& path) {
  const fs::path parent = path.parent_path();
  if (parent.empty()) return;
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory " + parent.string() + ": " + ec.message());
}

}  // namespace

void Metadata::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries_) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Metadata::set(const std::string& key, double value) { set(key, format_double(value)); }
void Metadata::set(const std::string& key, int value) { set(key, std::to_string(value)); }

void Metadata::set(const std::string& key, const std::vector<double>& values) {
  std::string text;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text += ',';
    text += format_double(values[i]);
  }
  set(key, text);
}

bool Metadata::has(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return true;
  return false;
}

const std::string& Metadata::get(const std::string& key) const {
  for (const auto& [k, v] : entries_)
    if (k == key) return v;
  fail(ErrorKind::Format, "metadata key '" + key + "' missing");
}

double Metadata::get_double(const std::string& key) const { return parse_double(get(key), key); }

int Metadata::get_int(const std::string& key) const {
  const double v = get_double(key);
  if (v != std::floor(v) || std::abs(v) > 2e9) fail(ErrorKind::Format, "metadata key '" + key + "' is not an integer");
  return static_cast<int>(v);
}

std::vector<double> Metadata::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(item, key));
  return out;
}

fs::path file_stem(const fs::path& path) {
  const auto ext = path.extension();
  if (ext == ".raw" || ext == ".meta") {
    fs::path p = path;
    p.replace_extension();
    return p;
  }
  return path;
}

Metadata read_metadata(const fs::path& meta_path) {
  std::ifstream in(meta_path);
  if (!in) fail(ErrorKind::Format, "metadata sidecar " + meta_path.string() + " missing");
  Metadata meta;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0)
      fail(ErrorKind::Format, meta_path.string() + ":" + std::to_string(lineno) + ": expected key=value");
    meta.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return meta;
}

void write_metadata_atomic(const fs::path& meta_path, const Metadata& meta) {
  ensure_parent(meta_path);
  fs::path tmp = meta_path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot open " + tmp.string() + " for writing");
    for (const auto& [k, v] : meta.entries()) out << k << '=' << v << '\n';
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, meta_path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

void write_volume(const Volume3D& vol, const fs::path& path, const Metadata& extra) {
  const fs::path stem = file_stem(path);
  ensure_parent(stem);
  const GridShape& g = vol.shape();
  Metadata meta;
  meta.set("nx", g.nx);
  meta.set("ny", g.ny);
  meta.set("nz", g.nz);
  meta.set("sx", g.spacing.x);
  meta.set("sy", g.spacing.y);
  meta.set("sz", g.spacing.z);
  meta.set("ox", g.origin.x);
  meta.set("oy", g.origin.y);
  meta.set("oz", g.origin.z);
  for (const auto& [k, v] : extra.entries()) meta.set(k, v);
  write_payload(with_ext(stem, ".raw"), vol.data());
  write_metadata_atomic(with_ext(stem, ".meta"), meta);
}

std::pair<Volume3D, Metadata> read_volume_with_metadata(const fs::path& path) {
  const fs::path stem = file_stem(path);
  Metadata meta = read_metadata(with_ext(stem, ".meta"));
  GridShape g;
  g.nx = meta.get_int("nx");
  g.ny = meta.get_int("ny");
  g.nz = meta.get_int("nz");
  g.spacing = {meta.get_double("sx"), meta.get_double("sy"), meta.get_double("sz")};
  g.origin = {meta.get_double("ox"), meta.get_double("oy"), meta.get_double("oz")};
  try {
    g.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, stem.string() + ".meta: " + e.what());
  }
  auto data = read_payload(with_ext(stem, ".raw"), g.voxel_count());
  return {Volume3D(g, std::move(data)), std::move(meta)};
}

Volume3D read_volume(const fs::path& path) { return read_volume_with_metadata(path).first; }

void write_projections(const ProjectionSet& proj, const fs::path& path, const Metadata& extra) {
  const fs::path stem = file_stem(path);
  ensure_parent(stem);
  Metadata meta;
  meta.set("nu", proj.nu());
  meta.set("nv", proj.nv());
  meta.set("nviews", proj.n_views());
  meta.set("pitch", proj.pitch());
  meta.set("lambdas", proj.lambdas());
  for (const auto& [k, v] : extra.entries()) meta.set(k, v);
  write_payload(with_ext(stem, ".raw"), proj.data());
  write_metadata_atomic(with_ext(stem, ".meta"), meta);
}

ProjectionSet read_projections(const fs::path& path) {
  const fs::path stem = file_stem(path);
  Metadata meta = read_metadata(with_ext(stem, ".meta"));
  const int nu = meta.get_int("nu");
  const int nv = meta.get_int("nv");
  const int nviews = meta.get_int("nviews");
  const double pitch = meta.get_double("pitch");
  auto lambdas = meta.get_list("lambdas");
  if (nu <= 0 || nv <= 0 || nviews <= 0 || pitch <= 0)
    fail(ErrorKind::Format, stem.string() + ".meta: invalid detector layout");
  if (static_cast<int>(lambdas.size()) != nviews)
    fail(ErrorKind::Format, stem.string() + ".meta: lambdas list length does not match nviews");
  ProjectionSet proj(nu, nv, pitch, std::move(lambdas));
  auto data = read_payload(with_ext(stem, ".raw"), proj.values().size());
  proj.values() = std::move(data);
  return proj;
}

void write_image(const SliceImage& img, const fs::path& path, const Metadata& extra) {
  const fs::path stem = file_stem(path);
  ensure_parent(stem);
  Metadata meta;
  meta.set("rows", img.rows);
  meta.set("cols", img.cols);
  meta.set("row_spacing", img.row_spacing);
  meta.set("col_spacing", img.col_spacing);
  for (const auto& [k, v] : extra.entries()) meta.set(k, v);
  write_payload(with_ext(stem, ".raw"), img.data);
  write_metadata_atomic(with_ext(stem, ".meta"), meta);
}

SliceImage read_image(const fs::path& path) {
  const fs::path stem = file_stem(path);
  Metadata meta = read_metadata(with_ext(stem, ".meta"));
  SliceImage img;
  img.rows = meta.get_int("rows");
  img.cols = meta.get_int("cols");
  img.row_spacing = meta.has("row_spacing") ? meta.get_double("row_spacing") : 1.0;
  img.col_spacing = meta.has("col_spacing") ? meta.get_double("col_spacing") : 1.0;
  if (img.rows <= 0 || img.cols <= 0) fail(ErrorKind::Format, stem.string() + ".meta: invalid image shape");
  img.data = read_payload(with_ext(stem, ".raw"), static_cast<std::size_t>(img.rows) * img.cols);
  return img;
}

void write_pgm16(const SliceImage& img, const fs::path& path, const DisplayWindow& window) {
  require(window.width_hu > 0, ErrorKind::Config, "window width must be positive");
  ensure_parent(path);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "P5\n" << img.cols << ' ' << img.rows << "\n65535\n";
  const double lo = window.level_hu - 0.5 * window.width_hu;
  std::vector<unsigned char> row(static_cast<std::size_t>(img.cols) * 2);
  for (int r = 0; r < img.rows; ++r) {
    for (int c = 0; c < img.cols; ++c) {
      const double hu = window.hu_at_zero + img(r, c) * (window.hu_at_one - window.hu_at_zero);
      const double t = std::clamp((hu - lo) / window.width_hu, 0.0, 1.0);
      const auto v = static_cast<std::uint16_t>(std::lround(t * 65535.0));
      row[2 * c] = static_cast<unsigned char>(v >> 8);  // PGM is big-endian
      row[2 * c + 1] = static_cast<unsigned char>(v & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) fail(ErrorKind::Io, "write failed for " + path.string());
}

}  // namespace cbct
