#include "tot/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "tot/export.hpp"
#include "tot/image.hpp"

namespace tot {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

template <typename T>
T get_as(const json& j, const std::string& key) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    config_error("config key '" + key + "' has the wrong type");
  }
}

double get_number(const json& j, const std::string& key) {
  if (!j.is_number()) config_error("config key '" + key + "' must be a number");
  return j.get<double>();
}

int get_int(const json& j, const std::string& key) {
  if (!j.is_number_integer()) config_error("config key '" + key + "' must be an integer");
  return j.get<int>();
}

bool get_bool(const json& j, const std::string& key) {
  if (!j.is_boolean()) config_error("config key '" + key + "' must be a boolean");
  return j.get<bool>();
}

std::string get_string(const json& j, const std::string& key) {
  if (!j.is_string()) config_error("config key '" + key + "' must be a string");
  return j.get<std::string>();
}

void require_object(const json& j, const std::string& key) {
  if (!j.is_object()) config_error("config key '" + key + "' must be an object");
}

void apply_roi(MeasureConfig& m, const json& j) {
  require_object(j, "measure.rois[]");
  std::string type = j.contains("type") ? get_string(j.at("type"), "type") : "circle";
  if (type == "circle") {
    RoiCircle c;
    for (const auto& [key, v] : j.items()) {
      if (key == "type") continue;
      else if (key == "cx") c.cx = get_number(v, key);
      else if (key == "cy") c.cy = get_number(v, key);
      else if (key == "r") c.r = get_number(v, key);
      else if (key == "k") c.k = get_number(v, key);
      else config_error("unknown ROI circle key '" + key + "'");
    }
    m.rois.circles.push_back(c);
  } else if (type == "box") {
    RoiBox b;
    for (const auto& [key, v] : j.items()) {
      if (key == "type") continue;
      else if (key == "xmin") b.xmin = get_number(v, key);
      else if (key == "xmax") b.xmax = get_number(v, key);
      else if (key == "ymin") b.ymin = get_number(v, key);
      else if (key == "ymax") b.ymax = get_number(v, key);
      else if (key == "k") b.k = get_number(v, key);
      else config_error("unknown ROI box key '" + key + "'");
    }
    m.rois.boxes.push_back(b);
  } else {
    config_error("unknown ROI type '" + type + "'");
  }
}

void apply_measure(MeasureConfig& m, const json& j) {
  require_object(j, "measure");
  for (const auto& [key, v] : j.items()) {
    if (key == "strategy") m.strategy = parse_measure_strategy(get_string(v, key));
    else if (key == "k") m.k = get_number(v, key);
    else if (key == "delta") m.delta = get_number(v, key);
    else if (key == "rois") {
      if (!v.is_array()) config_error("config key 'measure.rois' must be an array");
      m.rois = {};
      for (const json& r : v) apply_roi(m, r);
    } else config_error("unknown config key 'measure." + key + "'");
  }
}

void apply_exports(ExportOptions& e, const json& j) {
  require_object(j, "export");
  for (const auto& [key, v] : j.items()) {
    if (key == "svg") e.svg = get_bool(v, key);
    else if (key == "csv") e.csv = get_bool(v, key);
    else if (key == "frames") e.frames = get_bool(v, key);
    else if (key == "quad") e.quad = get_bool(v, key);
    else config_error("unknown config key 'export." + key + "'");
  }
}

void apply_powerdiagram(PowerDiagramInput& p, const json& j) {
  require_object(j, "powerdiagram");
  for (const auto& [key, v] : j.items()) {
    if (key == "sites") p.sites = get_string(v, key);
    else if (key == "heights") p.heights = fs::path(get_string(v, key));
    else if (key == "rect") {
      auto r = get_as<std::vector<double>>(v, key);
      if (r.size() != 4) config_error("powerdiagram.rect needs [xmin, xmax, ymin, ymax]");
      p.rect = Rect{r[0], r[1], r[2], r[3]};
    } else config_error("unknown config key 'powerdiagram." + key + "'");
  }
}

std::vector<double> split_numbers(const std::string& text, std::size_t expected, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      config_error(std::string("malformed ") + what + " '" + text + "'");
    }
  }
  if (out.size() != expected) config_error(std::string("malformed ") + what + " '" + text + "'");
  return out;
}

bool is_image_path(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error(ErrorCode::Io, "cannot write " + p.string());
  return f;
}

class Emitter {
 public:
  Emitter(const RunConfig& cfg, CommandReport& report) : report_(report) {
    dir_ = cfg.output_dir;
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorCode::Io, "cannot create " + dir_.string() + ": " + ec.message());
    stem_ = cfg.input.stem().string();
    if (stem_.empty()) stem_ = "out";
  }

  fs::path path(const std::string& suffix) {
    fs::path p = dir_ / (stem_ + suffix);
    report_.files.push_back(p);
    return p;
  }

  template <typename F>
  void text(const std::string& suffix, F&& write) {
    fs::path p = path(suffix);
    std::ofstream f = open_out(p);
    write(f);
    if (!f) throw Error(ErrorCode::Io, "write failed: " + p.string());
  }

 private:
  CommandReport& report_;
  fs::path dir_;
  std::string stem_;
};

void report_result(const TotResult& r, CommandReport& report) {
  const auto& st = r.transport.state;
  std::ostringstream msg;
  msg << "iterations " << st.iter << ", |grad E| " << std::scientific << std::setprecision(3)
      << st.grad_norm << ", rho_max " << r.density.rho_max << ", max|mu| "
      << std::defaultfloat << r.mu_final.max_vertex_magnitude() << ", flips " << r.flips_raw << " -> "
      << r.flips_final;
  report.messages.push_back(msg.str());
  if (r.qc)
    report.messages.push_back("quasiconformal correction: " + std::to_string(r.qc->patches.size()) +
                              " patches, " + std::to_string(r.qc->count(PatchOutcome::Unresolved)) +
                              " unresolved");
  const std::size_t shown = std::min<std::size_t>(r.warnings.size(), 5);
  for (std::size_t i = 0; i < shown; ++i) report.messages.push_back("warning: " + r.warnings[i]);
  if (r.warnings.size() > shown)
    report.messages.push_back("warning: " + std::to_string(r.warnings.size() - shown) + " more");
  report.exit_code = exit_code_for(r);
}

void emit_result(const RunConfig& cfg, const TotResult& r, Emitter& out) {
  save_mesh(r.mhat, out.path("_tot.obj"));
  save_mesh(r.m0, out.path("_m0.obj"));
  if (cfg.exports.csv) {
    out.text("_mu.csv", [&](std::ostream& f) { write_beltrami_csv(r.mu_final, f); });
    out.text("_density.csv", [&](std::ostream& f) {
      write_density_csv(r.transport.nu, r.transport.omega, r.density, f);
    });
    out.text("_convergence.csv", [&](std::ostream& f) { write_convergence_csv(r.transport.log, f); });
  }
  if (cfg.exports.svg) {
    out.text("_m0.svg", [&](std::ostream& f) { write_mesh_svg(r.m0, f); });
    out.text("_tot.svg", [&](std::ostream& f) { write_mesh_svg(r.mhat, f); });
    out.text("_power.svg", [&](std::ostream& f) { write_power_diagram_svg(r.transport.diagram, f); });
  }
}

struct LoadedInput {
  TriMesh mesh;
  std::optional<GrayImage> image;
};

LoadedInput load_input(const RunConfig& cfg) {
  if (cfg.input.empty()) config_error("no input file given");
  LoadedInput in;
  if (is_image_path(cfg.input)) {
    in.image = load_image(cfg.input);
    in.mesh = image_to_mesh(*in.image, cfg.resolution);
  } else {
    in.mesh = load_mesh(cfg.input);
  }
  return in;
}

}  // namespace

void apply_config_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("invalid JSON: ") + e.what());
  }
  require_object(j, "<root>");
  for (const auto& [key, v] : j.items()) {
    TotConfig& t = cfg.tot;
    if (key == "input") cfg.input = get_string(v, key);
    else if (key == "output") cfg.output_dir = get_string(v, key);
    else if (key == "resolution") cfg.resolution = get_int(v, key);
    else if (key == "eps_tol") t.eps_tol = get_number(v, key);
    else if (key == "eps_distortion") t.eps_distortion = get_number(v, key);
    else if (key == "gamma") t.gamma = get_int(v, key);
    else if (key == "lambda0") t.lambda0 = get_number(v, key);
    else if (key == "omega_scale") t.omega_scale = get_number(v, key);
    else if (key == "max_iter") t.max_iter = get_int(v, key);
    else if (key == "domain") t.domain = parse_domain_shape(get_string(v, key));
    else if (key == "clamp_weights") t.clamp_weights = get_bool(v, key);
    else if (key == "measure") {
      apply_measure(t.measure, v);
      if (v.contains("strategy")) cfg.measure_set = true;
    }
    else if (key == "export") apply_exports(cfg.exports, v);
    else if (key == "powerdiagram") apply_powerdiagram(cfg.powerdiagram, v);
    else config_error("unknown config key '" + key + "'");
  }
}

void apply_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  apply_config_json(cfg, ss.str());
}

RoiCircle parse_roi_circle(const std::string& text) {
  auto v = split_numbers(text, 4, "ROI circle");
  return RoiCircle{v[0], v[1], v[2], v[3]};
}

RoiBox parse_roi_box(const std::string& text) {
  auto v = split_numbers(text, 5, "ROI box");
  return RoiBox{v[0], v[1], v[2], v[3], v[4]};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Config:
    case ErrorCode::InvalidArgument:
      return kExitConfig;
    case ErrorCode::Parse:
    case ErrorCode::Io:
      return kExitIo;
    case ErrorCode::NonManifold:
    case ErrorCode::Topology:
    case ErrorCode::Degenerate:
    case ErrorCode::DuplicateSites:
    case ErrorCode::Flipped:
      return kExitMesh;
    case ErrorCode::SolverFailure:
      return kExitOther;
  }
  return kExitOther;
}

int exit_code_for(const TotResult& r) {
  if (r.stalled()) return kExitStalled;
  if (!r.converged()) return kExitNotConverged;
  if (r.skipped_patches() || r.flips_final > 0) return kExitUnresolved;
  return kExitOk;
}

std::vector<Vec2> load_sites(const fs::path& path) {
  std::vector<double> v = load_values(path);
  if (v.size() % 2 != 0) throw Error(ErrorCode::Parse, "odd number of coordinates in " + path.string());
  std::vector<Vec2> out;
  for (std::size_t i = 0; i < v.size(); i += 2) out.emplace_back(v[i], v[i + 1]);
  return out;
}

std::vector<double> load_values(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::vector<double> out;
  std::string tok;
  while (f >> tok) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, "bad number '" + tok + "' in " + path.string());
    }
  }
  return out;
}

CommandReport cmd_param(const RunConfig& cfg) {
  cfg.tot.validate();
  CommandReport report;
  LoadedInput in = load_input(cfg);
  TotResult r = t_ot(in.mesh, cfg.tot);
  Emitter out(cfg, report);
  emit_result(cfg, r, out);
  report_result(r, report);
  return report;
}

TotConfig effective_tot(const RunConfig& cfg, bool image_input) {
  TotConfig t = cfg.tot;
  if (image_input && !cfg.measure_set)
    t.measure.strategy = t.measure.rois.empty() ? MeasureStrategy::Image : MeasureStrategy::Roi;
  return t;
}

CommandReport cmd_image(const RunConfig& cfg) {
  cfg.tot.validate();
  if (!is_image_path(cfg.input)) config_error("image command needs a PNG/PGM/PPM input");
  CommandReport report;
  LoadedInput in = load_input(cfg);
  TotResult r = t_ot(in.mesh, effective_tot(cfg, true));
  Emitter out(cfg, report);
  emit_result(cfg, r, out);
  Rect view = mesh_bounds(r.mhat);
  int longest = std::max(in.image->width, in.image->height);
  double w = view.xmax - view.xmin, h = view.ymax - view.ymin;
  int width = w >= h ? longest : std::max(1, static_cast<int>(std::lround(longest * w / h)));
  int height = h >= w ? longest : std::max(1, static_cast<int>(std::lround(longest * h / w)));
  save_png(warp_image(*in.image, r.m0, r.mhat, view, width, height), out.path("_warped.png"));
  if (cfg.exports.quad) save_quad_obj(r.mhat, out.path("_quad.obj"));
  report_result(r, report);
  return report;
}

CommandReport cmd_temporal(const RunConfig& cfg) {
  cfg.tot.validate();
  CommandReport report;
  LoadedInput in = load_input(cfg);
  TemporalSequence seq = tt_ot(in.mesh, effective_tot(cfg, in.image.has_value()));
  Emitter out(cfg, report);
  emit_result(cfg, seq.result, out);
  if (cfg.exports.frames)
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      std::ostringstream suffix;
      suffix << "_frame_" << std::setw(4) << std::setfill('0') << k << ".obj";
      save_mesh(seq.frames[k].mesh, out.path(suffix.str()));
    }
  out.text("_trajectories.svg", [&](std::ostream& f) {
    write_trajectory_svg(seq.trajectories(), seq.frames.back().mesh, f);
  });
  out.text("_frames.csv", [&](std::ostream& f) {
    f << "frame,iter,t,grad_norm,rho_max,flips_raw,flips,corrected\n" << std::setprecision(12);
    for (std::size_t k = 0; k < seq.frames.size(); ++k) {
      const TemporalFrame& fr = seq.frames[k];
      f << k << ',' << fr.iter << ',' << fr.t << ',' << fr.grad_norm << ',' << fr.rho_max << ',' << fr.flips_raw << ','
        << fr.flips << ',' << (fr.corrected ? 1 : 0) << '\n';
    }
  });
  out.text("_psi.csv", [&](std::ostream& f) {
    f << "frame,t,vertex,psi\n" << std::setprecision(12);
    for (std::size_t k = 0; k < seq.frames.size(); ++k)
      for (std::size_t i = 0; i < seq.frames[k].psi.size(); ++i) {
        f << k << ',' << seq.frames[k].t << ',' << i << ',';
        if (!std::isnan(seq.frames[k].psi[i])) f << seq.frames[k].psi[i];
        f << '\n';
      }
  });
  report_result(seq.result, report);
  std::size_t bad = 0;
  for (const TemporalFrame& fr : seq.frames) bad += fr.flips > 0;
  if (bad) {
    report.messages.push_back("warning: " + std::to_string(bad) + " frames contain flipped faces");
    if (report.exit_code == kExitOk) report.exit_code = kExitUnresolved;
  }
  report.messages.push_back(std::to_string(seq.frames.size()) + " frames");
  return report;
}

CommandReport cmd_powerdiagram(const RunConfig& cfg) {
  const PowerDiagramInput& in = cfg.powerdiagram;
  if (in.sites.empty()) config_error("powerdiagram needs a sites file");
  std::vector<Vec2> sites = load_sites(in.sites);
  std::vector<double> h = in.heights ? load_values(*in.heights) : init_heights(sites);
  if (h.size() != sites.size()) config_error("heights and sites differ in count");
  Rect rect = Rect::make(in.rect.xmin, in.rect.xmax, in.rect.ymin, in.rect.ymax);
  PowerDiagram pd = power_diagram(sites, h, rect);
  CommandReport report;
  RunConfig named = cfg;
  named.input = in.sites;
  Emitter out(named, report);
  out.text("_power.svg", [&](std::ostream& f) { write_power_diagram_svg(pd, f); });
  report.messages.push_back(std::to_string(sites.size()) + " sites, " +
                            std::to_string(pd.empty_cell_count()) + " empty cells");
  return report;
}

}  // namespace tot
