#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tot/commands.hpp"

namespace {

struct Flags {
  std::string input;
  std::optional<std::string> output;
  std::optional<std::string> config;
  std::optional<std::string> measure;
  std::optional<double> k;
  std::optional<double> delta;
  std::optional<double> eps_tol;
  std::optional<double> eps_distortion;
  std::optional<int> gamma;
  std::optional<double> lambda0;
  std::optional<double> omega_scale;
  std::optional<int> max_iter;
  std::optional<std::string> domain;
  std::optional<int> resolution;
  std::vector<std::string> roi_circles;
  std::vector<std::string> roi_boxes;
  std::optional<bool> svg;
  std::optional<bool> csv;
  std::optional<bool> frames;
  std::optional<bool> quad;
  std::optional<bool> clamp_weights;
  std::optional<std::string> heights;
  std::vector<double> rect;
};

void add_run_options(CLI::App* cmd, Flags& f) {
  cmd->add_option("input", f.input, "input mesh (OBJ/OFF) or image (PNG/PGM/PPM)");
  cmd->add_option("-o,--output", f.output, "output directory");
  cmd->add_option("--config", f.config, "JSON config; flags override its values");
  cmd->add_option("--measure", f.measure, "area | uniform | roi | image");
  cmd->add_option("--k", f.k, "image measure scale");
  cmd->add_option("--delta", f.delta, "image measure offset");
  cmd->add_option("--eps-tol", f.eps_tol, "gradient tolerance");
  cmd->add_option("--eps-distortion", f.eps_distortion, "|mu| threshold for correction");
  cmd->add_option("--gamma", f.gamma, "initial patch ring size");
  cmd->add_option("--lambda0", f.lambda0, "initial Newton damping");
  cmd->add_option("--omega-scale", f.omega_scale, "transport domain scale");
  cmd->add_option("--max-iter", f.max_iter, "Newton iteration cap");
  cmd->add_option("--domain", f.domain, "disk | square");
  cmd->add_option("--resolution", f.resolution, "image grid vertices per side");
  cmd->add_option("--roi", f.roi_circles, "circle region cx,cy,r,k (repeatable)");
  cmd->add_option("--roi-box", f.roi_boxes, "box region xmin,xmax,ymin,ymax,k (repeatable)");
  cmd->add_flag("--svg,!--no-svg", f.svg, "write SVG drawings");
  cmd->add_flag("--csv,!--no-csv", f.csv, "write CSV diagnostics");
  cmd->add_flag("--frames,!--no-frames", f.frames, "write per-iteration OBJ frames");
  cmd->add_flag("--quad,!--no-quad", f.quad, "write the quad mesh");
  cmd->add_flag("--clamp-weights", f.clamp_weights, "floor negative cotangent weights");
}

tot::RunConfig resolve(const Flags& f) {
  tot::RunConfig cfg;
  if (f.config) tot::apply_config_file(cfg, *f.config);
  auto& t = cfg.tot;
  if (!f.input.empty()) cfg.input = f.input;
  if (f.output) cfg.output_dir = *f.output;
  if (f.measure) {
    t.measure.strategy = tot::parse_measure_strategy(*f.measure);
    cfg.measure_set = true;
  }
  if (f.k) t.measure.k = *f.k;
  if (f.delta) t.measure.delta = *f.delta;
  if (f.eps_tol) t.eps_tol = *f.eps_tol;
  if (f.eps_distortion) t.eps_distortion = *f.eps_distortion;
  if (f.gamma) t.gamma = *f.gamma;
  if (f.lambda0) t.lambda0 = *f.lambda0;
  if (f.omega_scale) t.omega_scale = *f.omega_scale;
  if (f.max_iter) t.max_iter = *f.max_iter;
  if (f.domain) t.domain = tot::parse_domain_shape(*f.domain);
  if (f.resolution) cfg.resolution = *f.resolution;
  if (!f.roi_circles.empty() || !f.roi_boxes.empty()) {
    t.measure.rois = {};
    for (const auto& s : f.roi_circles) t.measure.rois.circles.push_back(tot::parse_roi_circle(s));
    for (const auto& s : f.roi_boxes) t.measure.rois.boxes.push_back(tot::parse_roi_box(s));
  }
  if (f.svg) cfg.exports.svg = *f.svg;
  if (f.csv) cfg.exports.csv = *f.csv;
  if (f.frames) cfg.exports.frames = *f.frames;
  if (f.quad) cfg.exports.quad = *f.quad;
  if (f.clamp_weights) t.clamp_weights = *f.clamp_weights;
  if (f.heights) cfg.powerdiagram.heights = *f.heights;
  if (!f.input.empty()) cfg.powerdiagram.sites = f.input;
  if (!f.rect.empty()) {
    if (f.rect.size() != 4) throw tot::Error(tot::ErrorCode::Config, "--rect needs 4 values");
    cfg.powerdiagram.rect = tot::Rect{f.rect[0], f.rect[1], f.rect[2], f.rect[3]};
  }
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Topology-preserving optimal transport meshing"};
  app.require_subcommand(1);

  Flags f;
  CLI::App* param = app.add_subcommand("param", "parameterize a disk-topology surface or planar mesh");
  CLI::App* image = app.add_subcommand("image", "image-driven mesh deformation and warping");
  CLI::App* temporal = app.add_subcommand("temporal", "per-iteration frames of the transport");
  CLI::App* pd = app.add_subcommand("powerdiagram", "draw the power diagram of sites and heights");
  for (CLI::App* cmd : {param, image, temporal}) add_run_options(cmd, f);
  pd->add_option("sites", f.input, "sites file, whitespace-separated x y pairs")->required();
  pd->add_option("--heights", f.heights, "heights file, one value per site");
  pd->add_option("--rect", f.rect, "xmin xmax ymin ymax")->expected(4);
  pd->add_option("-o,--output", f.output, "output directory");
  pd->add_option("--config", f.config, "JSON config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : tot::kExitConfig;
  }

  try {
    tot::RunConfig cfg = resolve(f);
    tot::CommandReport report;
    if (param->parsed()) report = tot::cmd_param(cfg);
    else if (image->parsed()) report = tot::cmd_image(cfg);
    else if (temporal->parsed()) report = tot::cmd_temporal(cfg);
    else report = tot::cmd_powerdiagram(cfg);
    for (const auto& m : report.messages) std::cerr << m << '\n';
    for (const auto& p : report.files) std::cout << p.string() << '\n';
    return report.exit_code;
  } catch (const tot::Error& e) {
    std::cerr << "error (" << tot::to_string(e.code()) << "): " << e.what() << '\n';
    return tot::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return tot::kExitOther;
  }
}
