#include "semgraph/cli.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "semgraph/config.hpp"
#include "semgraph/io.hpp"
#include "semgraph/log.hpp"
#include "semgraph/replay.hpp"
#include "semgraph/sim.hpp"

namespace semgraph {

namespace {

namespace fs = std::filesystem;

// Raised for anything the user must fix in their inputs or flags (exit 2).
struct ConfigFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PipelineFlags {
  std::string config_path;
  std::uint64_t seed = 0;
  double lambda_iou = 0;
  double rel_threshold = 0;
  double max_distance = 0;
  int particles = 0;
  bool no_filter = false;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* lambda_opt = nullptr;
  CLI::Option* rel_opt = nullptr;
  CLI::Option* dist_opt = nullptr;
  CLI::Option* particles_opt = nullptr;

  void attach(CLI::App* app) {
    app->add_option("--config", config_path, "JSON config with flat dotted keys");
    seed_opt = app->add_option("--seed", seed, "Filter RNG seed");
    lambda_opt = app->add_option("--lambda-iou", lambda_iou, "Association IoU threshold");
    rel_opt = app->add_option("--rel-threshold", rel_threshold, "Relation probability threshold");
    dist_opt = app->add_option("--max-distance", max_distance, "Distance gate, metres");
    particles_opt = app->add_option("--particles", particles, "Particles per object");
    app->add_flag("--no-filter", no_filter, "Use raw centroids instead of the particle filter");
  }

  // Defaults, then the config file, then flags.
  PipelineConfig resolve() const {
    PipelineConfig cfg;
    try {
      if (!config_path.empty()) cfg = load_config(config_path);
      if (*seed_opt) cfg.seed = seed;
      if (*lambda_opt) cfg.lambda_iou = lambda_iou;
      if (*rel_opt) cfg.rel_threshold = rel_threshold;
      if (*dist_opt) cfg.max_distance = max_distance;
      if (*particles_opt) cfg.filter.n_particles = particles;
      if (no_filter) cfg.use_filter = false;
      cfg.validate();
    } catch (const Error& e) {
      throw ConfigFailure(e.what());
    }
    return cfg;
  }
};

SemanticMap rooms_for(const std::string& rooms_path, const fs::path& log_path) {
  const fs::path p = rooms_path.empty() ? log_path.parent_path() / "rooms.json" : fs::path(rooms_path);
  try {
    return load_rooms(p);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
}

ReplayResult run_log(const fs::path& log_path, SemanticMap rooms, const PipelineConfig& cfg) {
  FrameLogReader reader(log_path);
  Pipeline pipeline(std::move(rooms), cfg);
  ReplayResult r = replay(pipeline, [&reader] { return reader.next(); });
  spdlog::info("replayed {} frames from {}", r.scenes.size(), log_path.string());
  return r;
}

struct ReplayArgs {
  std::string log;
  std::string rooms;
  std::string out_dir = ".";
  PipelineFlags flags;
};

int cmd_replay(const ReplayArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.flags.resolve();
  SemanticMap rooms = rooms_for(a.rooms, a.log);

  FrameLogReader reader(a.log);
  Pipeline pipeline(std::move(rooms), cfg);
  std::string scenes;
  ReplayResult r = replay(pipeline, [&reader] { return reader.next(); });
  for (const auto& s : r.scenes) {
    scenes += scene_to_json(s).dump() + "\n";
    spdlog::debug("frame {}: {} objects, revision {}", s.frame_id, s.objects.size(), s.revision);
  }

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);
  write_text_file(dir / "map.json", export_json(pipeline.map()));
  write_text_file(dir / "map.dot", export_dot(pipeline.map()));
  write_text_file(dir / "scenes.jsonl", scenes);

  double mean = 0.0;
  double max = 0.0;
  if (!r.frame_ms.empty()) {
    mean = std::accumulate(r.frame_ms.begin(), r.frame_ms.end(), 0.0) / r.frame_ms.size();
    max = *std::max_element(r.frame_ms.begin(), r.frame_ms.end());
  }
  json summary = {{"frames", r.scenes.size()},
                  {"objects", pipeline.map().objects().size()},
                  {"relations", pipeline.map().relations().size()},
                  {"revision", pipeline.map().revision()},
                  {"timing_ms", {{"mean", mean}, {"max", max}}}};
  out << summary.dump() << "\n";
  return kOk;
}

struct EvalArgs {
  std::string log;
  std::string truth;
  std::string rooms;
  std::string out_file;
  bool json_output = false;
  PipelineFlags flags;
};

void print_rows(std::ostream& out, const std::string& title, const EvalReport& r) {
  auto row = [&out](const char* name, const Eigen::Vector3d& v) {
    out << fmt::format("  {:<22}{:>9.3f}{:>9.3f}{:>9.3f}\n", name, v.x(), v.y(), v.z());
  };
  out << title << "\n";
  row("Mean position", r.mean_position);
  row("Mean of absolute error", r.mae);
  row("Error std. deviation", r.error_std);
  out << fmt::format("  {:<22}{:>9}  duplicates {}  missed {}\n", "Samples", r.samples,
                     r.duplicates, r.missed);
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const PipelineConfig cfg = a.flags.resolve();
  SemanticMap rooms = rooms_for(a.rooms, a.log);
  GroundTruth truth;
  try {
    truth = truth_from_json(json::parse(read_text_file(a.truth)));
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  } catch (const json::exception& e) {
    throw ConfigFailure(a.truth + ": " + e.what());
  }

  PipelineConfig raw_cfg = cfg;
  raw_cfg.use_filter = false;
  const EvalReport raw = evaluate(run_log(a.log, rooms, raw_cfg).estimates, truth);
  std::optional<EvalReport> pf;
  if (cfg.use_filter) pf = evaluate(run_log(a.log, rooms, cfg).estimates, truth);

  std::optional<Eigen::Vector3d> real;
  if (truth.labels.size() == 1 && !truth.frames.empty()) {
    const auto& first = truth.frames.begin()->second;
    if (!first.empty()) real = first.begin()->second.position;
  }

  json report = {{"no_filter", eval_report_to_json(raw)}};
  if (pf) report["particle_filter"] = eval_report_to_json(*pf);
  if (real) report["real_position"] = json::array({real->x(), real->y(), real->z()});
  if (!a.out_file.empty()) write_text_file(a.out_file, report.dump(2) + "\n");

  if (a.json_output) {
    out << report.dump(2) << "\n";
    return kOk;
  }
  out << fmt::format("{:<24}{:>9}{:>9}{:>9}\n", "", "x", "y", "z");
  if (real) {
    out << fmt::format("{:<24}{:>9.3f}{:>9.3f}{:>9.3f}\n", "Real position", real->x(), real->y(),
                       real->z());
  }
  print_rows(out, "No particle filter", raw);
  if (pf) print_rows(out, "Particle filter", *pf);
  return kOk;
}

struct SimulateArgs {
  std::string spec;
  std::string out_dir;
  std::uint64_t seed = 0;
};

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  SceneSpec spec;
  try {
    spec = load_scene_spec(a.spec);
  } catch (const Error& e) {
    throw ConfigFailure(e.what());
  }
  generate_log(spec, a.seed, a.out_dir);
  out << json{{"frames", spec.trajectory.size()},
              {"objects", spec.objects.size()},
              {"seed", a.seed},
              {"out_dir", a.out_dir}}
             .dump()
      << "\n";
  return kOk;
}

struct QueryArgs {
  std::string map;
  std::vector<std::string> words;
};

int cmd_query(const QueryArgs& a, std::ostream& out, std::ostream& err) {
  const SemanticMap map = SemanticMap::from_export(read_text_file(a.map));
  const auto& w = a.words;
  auto usage = [&] {
    throw ConfigFailure("query must be one of: objects-in-room <room>, find <label>, path <a> <b>");
  };
  if (w.empty()) usage();
  json result;
  if (w[0] == "objects-in-room" && w.size() == 2) {
    if (!map.has_room(w[1])) {
      err << "unknown room " << w[1] << "\n";
      return kNotFound;
    }
    result = map.objects_in_room(w[1]);
  } else if (w[0] == "find" && w.size() == 2) {
    const auto ids = map.find_objects(w[1]);
    if (ids.empty()) {
      err << "no object labelled " << w[1] << "\n";
      return kNotFound;
    }
    result = ids;
  } else if (w[0] == "path" && w.size() == 3) {
    try {
      result = map.room_path(w[1], w[2]);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::UnknownRoom && e.code() != ErrorCode::NoPath) throw;
      err << e.what() << "\n";
      return kNotFound;
    }
  } else {
    usage();
  }
  out << result.dump() << "\n";
  return kOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  if (!init_logging()) err << "warning: SEMGRAPH_LOG must be off, info or debug\n";

  CLI::App app{"Semantic scene-graph mapping engine"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Render a scene spec into a frame log");
  simulate->add_option("spec", sim.spec, "Scene spec JSON")->required();
  simulate->add_option("out_dir", sim.out_dir, "Output directory")->required();
  simulate->add_option("--seed", sim.seed, "Noise seed");

  ReplayArgs rep;
  auto* replay_cmd = app.add_subcommand("replay", "Run a frame log through the pipeline");
  replay_cmd->add_option("log", rep.log, "Frame log (JSONL)")->required();
  replay_cmd->add_option("--rooms", rep.rooms, "Room file (default: rooms.json beside the log)");
  replay_cmd->add_option("--out", rep.out_dir, "Output directory");
  rep.flags.attach(replay_cmd);

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Compare filtered and raw estimates with ground truth");
  eval->add_option("log", ev.log, "Frame log (JSONL)")->required();
  eval->add_option("--truth", ev.truth, "Ground-truth JSON")->required();
  eval->add_option("--rooms", ev.rooms, "Room file (default: rooms.json beside the log)");
  eval->add_option("--out", ev.out_file, "Also write the report as JSON");
  eval->add_flag("--json", ev.json_output, "Print JSON instead of the table");
  ev.flags.attach(eval);

  QueryArgs q;
  auto* query = app.add_subcommand("query", "Query an exported map");
  query->add_option("map", q.map, "Map JSON from replay")->required();
  query->add_option("query", q.words, "objects-in-room <room> | find <label> | path <a> <b>")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return cmd_simulate(sim, out);
    if (*replay_cmd) return cmd_replay(rep, out);
    if (*eval) return cmd_eval(ev, out);
    if (*query) return cmd_query(q, out, err);
  } catch (const ConfigFailure& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kConfigError;
}

}  // namespace semgraph
