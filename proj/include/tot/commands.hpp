#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tot/error.hpp"
#include "tot/pipeline.hpp"

namespace tot {

struct ExportOptions {
  bool svg = false;
  bool csv = true;
  bool frames = true;
  bool quad = false;
};

struct PowerDiagramInput {
  std::filesystem::path sites;
  std::optional<std::filesystem::path> heights;  // Voronoi heights when absent
  Rect rect;
};

struct RunConfig {
  TotConfig tot;
  std::filesystem::path input;
  std::filesystem::path output_dir = "out";
  int resolution = 64;  // image grid vertices per side
  bool measure_set = false;  // strategy chosen by flag or config file
  ExportOptions exports;
  PowerDiagramInput powerdiagram;
};

/// Transport settings for a run. Image inputs without an explicit strategy
/// use the ROI measure when regions are given and the image measure otherwise.
TotConfig effective_tot(const RunConfig& cfg, bool image_input);

/// Overlays a JSON document onto cfg. Unknown keys and wrong types throw
/// ErrorCode::Config.
void apply_config_json(RunConfig& cfg, const std::string& json_text);
void apply_config_file(RunConfig& cfg, const std::filesystem::path& path);

/// "cx,cy,r,k" and "xmin,xmax,ymin,ymax,k".
RoiCircle parse_roi_circle(const std::string& text);
RoiBox parse_roi_box(const std::string& text);

enum ExitCode : int {
  kExitOk = 0,
  kExitOther = 1,
  kExitConfig = 2,
  kExitIo = 3,
  kExitMesh = 4,
  kExitNotConverged = 5,
  kExitStalled = 6,
  kExitUnresolved = 7,
};

int exit_code_for(ErrorCode code);
int exit_code_for(const TotResult& result);

struct CommandReport {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;
  std::vector<std::string> messages;
};

CommandReport cmd_param(const RunConfig& cfg);
CommandReport cmd_image(const RunConfig& cfg);
CommandReport cmd_temporal(const RunConfig& cfg);
CommandReport cmd_powerdiagram(const RunConfig& cfg);

/// Whitespace-separated "x y" pairs and one value per entry.
std::vector<Vec2> load_sites(const std::filesystem::path& path);
std::vector<double> load_values(const std::filesystem::path& path);

}  // namespace tot
