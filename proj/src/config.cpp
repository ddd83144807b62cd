#include "cbct/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "cbct/error.hpp"
#include "cbct/io.hpp"

namespace cbct {

namespace {

namespace pt = boost::property_tree;

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorKind::Config,
          "'" + key + "' expects a number, got '" + v + "'");
  return out;
}

long long to_int(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorKind::Config,
          "'" + key + "' expects an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorKind::Config, "'" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::string> split(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& s : split(v)) out.push_back(to_double(key, s));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : ",") + format_double(x);
  return s;
}

const char* phantom_name(PhantomKind k) {
  switch (k) {
    case PhantomKind::Disks: return "disks";
    case PhantomKind::Sphere: return "sphere";
    case PhantomKind::Zero: return "zero";
  }
  return "disks";
}

}  // namespace

void PipelineConfig::validate() const {
  geometry.validate();
  grid().validate();
  require(volume_n >= 4, ErrorKind::Config, "volume.n must be at least 4");
  require(voxel_mm > 0, ErrorKind::Config, "volume.spacing must be positive");
  if (phantom.kind == PhantomKind::Disks) phantom.disks.validate();
  if (phantom.kind == PhantomKind::Sphere)
    require(phantom.sphere_radius > 0, ErrorKind::Config, "phantom.sphere_radius must be positive");
  require(!arcs.empty() && arcs.size() <= 2, ErrorKind::Config, "arcs.use lists one or two arcs");
  for (ArcKind a : arcs) require(a != ArcKind::Full, ErrorKind::Config, "arcs.use accepts short and complement only");
  if (arcs.size() == 2) require(arcs[0] != arcs[1], ErrorKind::Config, "arcs.use lists the same arc twice");
  fdk.validate();
  deconv.validate();
  require(support_threshold >= 0 && support_threshold < 1, ErrorKind::Config,
          "deconv.support_threshold must lie in [0, 1)");
  require(transition_deg >= 0 && transition_deg < 45, ErrorKind::Config, "blend.transition_deg must lie in [0, 45)");
  noise.validate();
  const double max_deg = geometry.half_cone_angle() * 180.0 / 3.141592653589793;
  for (double a : sweep_angles_deg)
    require(a > 0 && a <= max_deg + 1e-9, ErrorKind::Config,
            "sweep angle " + format_double(a) + " deg exceeds the detector's half cone angle " + format_double(max_deg));
  for (double i0 : sweep_i0) require(i0 > 0, ErrorKind::Config, "sweep intensities must be positive");
  require(sweep_realizations >= 1, ErrorKind::Config, "sweep.realizations must be at least 1");
  require(workers >= 1, ErrorKind::Config, "run.workers must be at least 1");
  const double half_extent = 0.5 * (volume_n - 1) * voxel_mm;
  require(half_extent < geometry.source_radius, ErrorKind::Config, "volume reaches the source trajectory");
}

PipelineConfig parse_pipeline_config(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    fail(ErrorKind::Config, std::string("config syntax: ") + e.what());
  }
  PipelineConfig c;
  // The geometry preset goes first so explicit keys override it.
  if (auto g = tree.get_child_optional("geometry"))
    if (auto p = g->get_optional<std::string>("preset")) {
      c.preset = *p;
      c.geometry = geometry_preset(*p);
    }
  std::optional<char> table;
  for (const auto& [section, body] : tree) {
    require(body.data().empty() || !body.empty(), ErrorKind::Config, "config key '" + section + "' outside a section");
    for (const auto& [key, node] : body) {
      const std::string v = node.data();
      const std::string name = section + "." + key;
      if (section == "geometry") {
        if (key == "preset") continue;
        if (key == "source_radius") c.geometry.source_radius = to_double(name, v);
        else if (key == "source_detector") c.geometry.source_detector = to_double(name, v);
        else if (key == "nu") c.geometry.nu = static_cast<int>(to_int(name, v));
        else if (key == "nv") c.geometry.nv = static_cast<int>(to_int(name, v));
        else if (key == "pitch") c.geometry.pitch = to_double(name, v);
        else if (key == "views") c.geometry.n_views = static_cast<int>(to_int(name, v));
        else if (key == "cone_deg") c.geometry.declared_cone_deg = to_double(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "volume") {
        if (key == "n") c.volume_n = static_cast<int>(to_int(name, v));
        else if (key == "spacing") c.voxel_mm = to_double(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "phantom") {
        if (key == "type") {
          if (v == "disks") c.phantom.kind = PhantomKind::Disks;
          else if (v == "sphere") c.phantom.kind = PhantomKind::Sphere;
          else if (v == "zero") c.phantom.kind = PhantomKind::Zero;
          else fail(ErrorKind::Config, "unknown phantom type '" + v + "'");
        } else if (key == "table") {
          require(v.size() == 1, ErrorKind::Config, "phantom.table is one of a, b, c, d");
          table = v[0];
        } else if (key == "disk_radius_mm") c.phantom.disks.disk_radius = to_double(name, v);
        else if (key == "thickness_mm") c.phantom.disks.thickness = to_double(name, v);
        else if (key == "spacing_mm") c.phantom.disks.spacing = to_double(name, v);
        else if (key == "n_disks") c.phantom.disks.n_disks = static_cast<int>(to_int(name, v));
        else if (key == "inside") c.phantom.disks.inside_value = to_double(name, v);
        else if (key == "outside") c.phantom.disks.outside_value = to_double(name, v);
        else if (key == "sphere_radius") c.phantom.sphere_radius = to_double(name, v);
        else if (key == "sphere_value") c.phantom.sphere_value = to_double(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "arcs") {
        if (key == "use") {
          c.arcs.clear();
          for (const std::string& s : split(v)) c.arcs.push_back(parse_arc_kind(s));
        } else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "fdk") {
        if (key == "filter") c.fdk.filter = parse_ramp_window(v);
        else if (key == "cutoff") c.fdk.cutoff = to_double(name, v);
        else if (key == "short_scan") c.fdk.short_scan = to_bool(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "deconv") {
        if (key == "regularizer") c.deconv.regularizer = parse_regularizer(v);
        else if (key == "reg_weight") c.deconv.reg_weight = to_double(name, v);
        else if (key == "max_iter") c.deconv.max_iter = static_cast<int>(to_int(name, v));
        else if (key == "cg_tol") c.deconv.cg_tol = to_double(name, v);
        else if (key == "tv_inner") c.deconv.tv_inner = static_cast<int>(to_int(name, v));
        else if (key == "operator_cmd") c.operator_cmd = v;
        else if (key == "support_threshold") c.support_threshold = to_double(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "blend") {
        if (key == "transition_deg") c.transition_deg = to_double(name, v);
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "noise") {
        if (key == "enabled") c.noise_enabled = to_bool(name, v);
        else if (key == "i0") c.noise.i0 = to_double(name, v);
        else if (key == "realizations") c.noise.realizations = static_cast<int>(to_int(name, v));
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "sweep") {
        if (key == "angles_deg") c.sweep_angles_deg = to_list(name, v);
        else if (key == "i0") c.sweep_i0 = to_list(name, v);
        else if (key == "realizations") c.sweep_realizations = static_cast<int>(to_int(name, v));
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "output") {
        if (key == "dir") c.output_dir = v;
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else if (section == "run") {
        if (key == "seed") c.seed = static_cast<std::uint64_t>(to_int(name, v));
        else if (key == "workers") c.workers = static_cast<int>(to_int(name, v));
        else fail(ErrorKind::Config, "unknown config key '" + name + "'");
      } else {
        fail(ErrorKind::Config, "unknown config section '" + section + "'");
      }
    }
  }
  if (table) {
    const DiskPhantomSpec t = DiskPhantomSpec::table(*table);
    // Explicit disk keys override the table column.
    const pt::ptree* ph = tree.get_child_optional("phantom").get_ptr();
    DiskPhantomSpec d = t;
    if (ph->count("disk_radius_mm")) d.disk_radius = c.phantom.disks.disk_radius;
    if (ph->count("thickness_mm")) d.thickness = c.phantom.disks.thickness;
    if (ph->count("spacing_mm")) d.spacing = c.phantom.disks.spacing;
    if (ph->count("n_disks")) d.n_disks = c.phantom.disks.n_disks;
    if (ph->count("inside")) d.inside_value = c.phantom.disks.inside_value;
    if (ph->count("outside")) d.outside_value = c.phantom.disks.outside_value;
    c.phantom.disks = d;
  }
  c.noise.seed = c.seed;
  return c;
}

PipelineConfig load_pipeline_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

std::string format_pipeline_config(const PipelineConfig& c) {
  std::ostringstream os;
  const ScanGeometry& g = c.geometry;
  os << "[geometry]\npreset = " << c.preset << "\n";
  os << "source_radius = " << format_double(g.source_radius) << "\nsource_detector = " << format_double(g.source_detector)
     << "\nnu = " << g.nu << "\nnv = " << g.nv << "\npitch = " << format_double(g.pitch) << "\nviews = " << g.n_views
     << "\n";
  if (g.declared_cone_deg) os << "cone_deg = " << format_double(*g.declared_cone_deg) << "\n";
  os << "\n[volume]\nn = " << c.volume_n << "\nspacing = " << format_double(c.voxel_mm) << "\n";
  const DiskPhantomSpec& d = c.phantom.disks;
  os << "\n[phantom]\ntype = " << phantom_name(c.phantom.kind) << "\ndisk_radius_mm = " << format_double(d.disk_radius)
     << "\nthickness_mm = " << format_double(d.thickness) << "\nspacing_mm = " << format_double(d.spacing)
     << "\nn_disks = " << d.n_disks << "\ninside = " << format_double(d.inside_value)
     << "\noutside = " << format_double(d.outside_value) << "\nsphere_radius = " << format_double(c.phantom.sphere_radius)
     << "\nsphere_value = " << format_double(c.phantom.sphere_value) << "\n";
  os << "\n[arcs]\nuse = ";
  for (std::size_t i = 0; i < c.arcs.size(); ++i) os << (i ? "," : "") << to_string(c.arcs[i]);
  os << "\n\n[fdk]\nfilter = " << (c.fdk.filter == RampWindow::RamLak ? "ram-lak" : "shepp-logan")
     << "\ncutoff = " << format_double(c.fdk.cutoff) << "\nshort_scan = " << (c.fdk.short_scan ? "true" : "false") << "\n";
  os << "\n[deconv]\nregularizer = " << to_string(c.deconv.regularizer)
     << "\nreg_weight = " << format_double(c.deconv.reg_weight) << "\nmax_iter = " << c.deconv.max_iter
     << "\ncg_tol = " << format_double(c.deconv.cg_tol) << "\ntv_inner = " << c.deconv.tv_inner
     << "\nsupport_threshold = " << format_double(c.support_threshold) << "\n";
  if (!c.operator_cmd.empty()) os << "operator_cmd = " << c.operator_cmd << "\n";
  os << "\n[blend]\ntransition_deg = " << format_double(c.transition_deg) << "\n";
  os << "\n[noise]\nenabled = " << (c.noise_enabled ? "true" : "false") << "\ni0 = " << format_double(c.noise.i0)
     << "\nrealizations = " << c.noise.realizations << "\n";
  os << "\n[sweep]\n";
  if (!c.sweep_angles_deg.empty()) os << "angles_deg = " << join(c.sweep_angles_deg) << "\n";
  if (!c.sweep_i0.empty()) os << "i0 = " << join(c.sweep_i0) << "\n";
  os << "realizations = " << c.sweep_realizations << "\n";
  os << "\n[output]\ndir = " << c.output_dir.string() << "\n\n[run]\nseed = " << c.seed << "\nworkers = " << c.workers
     << "\n";
  return os.str();
}

}  // namespace cbct
