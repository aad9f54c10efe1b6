// momentsearch command-line front end.
//
//   momentsearch ingest <manifest>
//   momentsearch search <query> [--mode auto|manual] [--weights v,o,a] [--top-k N] [--no-rerank]
//   momentsearch temporal "<e1> -> <e2> ..." [--alpha A] [--beam B]
//   momentsearch serve [--addr host:port] [--static dir]
//   momentsearch gen-corpus [--seed S] [--videos N] [--events K] [--out dir]
//   momentsearch eval [--seed S] [--videos N] [--events K]
//
// Global: --config <file> (else $MOMENTSEARCH_CONFIG), --json.
// Exit codes: 0 ok, 2 usage, 3 corpus error, 4 not found, 5 internal.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "momentsearch/momentsearch.hpp"

namespace fs = std::filesystem;
using namespace momentsearch;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 2, kCorpus = 3, kNotFound = 4, kInternal = 5 };

struct CliError {
  int code;
  std::string kind;
  std::string message;
};

bool g_json = false;

int report(const CliError& e) {
  if (g_json) {
    std::cerr << serialize::error_body(e.kind, e.message).dump() << '\n';
  } else {
    std::cerr << "error: " << e.message << '\n';
  }
  return e.code;
}

// The active corpus is remembered between invocations as a manifest path.
fs::path state_file() {
  if (const char* home = std::getenv("MOMENTSEARCH_HOME"); home && *home) {
    return fs::path(home) / "active_manifest";
  }
  return fs::path(".momentsearch") / "active_manifest";
}

std::optional<fs::path> active_manifest() {
  std::ifstream in(state_file());
  std::string line;
  if (!in || !std::getline(in, line) || line.empty()) {
    return std::nullopt;
  }
  return fs::path(line);
}

void load_active(Engine& engine) {
  const auto manifest = active_manifest();
  if (!manifest) {
    throw EngineError(EngineError::Kind::NoCorpus, "no corpus ingested; run `momentsearch ingest <manifest>` first");
  }
  engine.load(ingest_manifest(*manifest));
}

FusionWeights parse_weights(const std::string& s) {
  FusionWeights w;
  std::istringstream in(s);
  std::string part;
  std::vector<double> v;
  while (std::getline(in, part, ',')) {
    try {
      v.push_back(std::stod(part));
    } catch (const std::exception&) {
      throw CLI::ValidationError("--weights", "expected three numbers vis,ocr,asr");
    }
  }
  if (v.size() != 3) {
    throw CLI::ValidationError("--weights", "expected three numbers vis,ocr,asr");
  }
  w.vis = v[0];
  w.ocr = v[1];
  w.asr = v[2];
  if (!w.valid()) {
    throw CLI::ValidationError("--weights", "weights must lie in [0, 1]");
  }
  return w;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(4);
  os << v;
  return os.str();
}

void print_search(const SearchResponse& r) {
  const auto& w = r.plan.weights;
  std::cout << "plan: vis=" << fmt(w.vis) << " ocr=" << fmt(w.ocr) << " asr=" << fmt(w.asr);
  if (!r.plan.rationale.empty()) {
    std::cout << "  (" << r.plan.rationale << ")";
  }
  std::cout << '\n';
  if (r.degraded) {
    std::cout << "degraded:";
    for (const auto& m : r.warnings) {
      std::cout << ' ' << m << ';';
    }
    std::cout << '\n';
  }
  for (std::size_t i = 0; i < r.results.size(); ++i) {
    const auto& row = r.results[i];
    std::cout << (i + 1) << '\t' << fmt(row.candidate.fused) << '\t' << row.keyframe.keyframe_id << '\t'
              << fmt(row.keyframe.timestamp_s) << "s\t" << row.keyframe.caption.value_or("") << '\n';
  }
}

void print_temporal(const TemporalResponse& r) {
  if (r.degraded) {
    std::cout << "degraded\n";
  }
  for (std::size_t i = 0; i < r.sequences.size(); ++i) {
    const auto& s = r.sequences[i];
    std::cout << (i + 1) << '\t' << s.video_id << "\ttotal=" << fmt(s.total_final) << "\tspan=" << fmt(s.duration_s)
              << "s\n";
    for (const auto& e : s.events) {
      std::cout << "\t" << e.candidate.keyframe_id << " t=" << fmt(e.candidate.t) << " s=" << fmt(e.candidate.s)
                << " lambda=" << fmt(e.lambda) << " b=" << fmt(e.b) << '\n';
    }
  }
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multimodal video moment retrieval"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  app.add_option("--config", config_path, "JSON config file (default: $MOMENTSEARCH_CONFIG)");
  app.add_flag("--json", g_json, "Machine-readable output");

  auto* ingest = app.add_subcommand("ingest", "Validate a manifest and make it the active corpus");
  std::string manifest;
  ingest->add_option("manifest", manifest, "Path to manifest.jsonl")->required();

  auto* search = app.add_subcommand("search", "Single-moment search");
  std::string query;
  std::string mode = "auto";
  std::optional<std::string> weights;
  std::size_t top_k = 20;
  bool no_rerank = false;
  search->add_option("query", query, "Query text")->required();
  search->add_option("--mode", mode, "auto or manual")->check(CLI::IsMember({"auto", "manual"}));
  search->add_option("--weights", weights, "Manual weights vis,ocr,asr");
  search->add_option("--top-k", top_k, "Results to return")->check(CLI::PositiveNumber);
  search->add_flag("--no-rerank", no_rerank, "Skip the cross-scorer stage");

  auto* temporal = app.add_subcommand("temporal", "Ordered multi-event search");
  std::string tquery;
  std::optional<double> alpha;
  std::optional<std::size_t> beam;
  std::optional<std::size_t> top_m;
  std::optional<std::size_t> max_seq;
  temporal->add_option("query", tquery, "Events separated by ->")->required();
  temporal->add_option("--alpha", alpha, "Decay rate per second")->check(CLI::NonNegativeNumber);
  temporal->add_option("--beam", beam, "Beam width")->check(CLI::PositiveNumber);
  temporal->add_option("--top-m", top_m, "Candidates per event")->check(CLI::PositiveNumber);
  temporal->add_option("--max-sequences", max_seq, "Sequences to return")->check(CLI::PositiveNumber);
  temporal->add_flag("--no-rerank", no_rerank, "Skip the cross-scorer stage");

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string addr = "127.0.0.1:8080";
  std::optional<std::string> static_dir;
  serve->add_option("--addr", addr, "host:port to listen on");
  serve->add_option("--static", static_dir, "Directory of UI assets served under /");

  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus with ground truth");
  std::uint64_t seed = 42;
  std::size_t videos = 50;
  std::size_t events = 3;
  std::string out_dir = "out";
  gen->add_option("--seed", seed, "RNG seed");
  gen->add_option("--videos", videos, "Number of videos")->check(CLI::PositiveNumber);
  gen->add_option("--events", events, "Planted events per video");
  gen->add_option("--out", out_dir, "Output directory");

  auto* eval = app.add_subcommand("eval", "Run the synthetic benchmark and print metrics JSON");
  eval->add_option("--seed", seed, "RNG seed");
  eval->add_option("--videos", videos, "Number of videos")->check(CLI::PositiveNumber);
  eval->add_option("--events", events, "Planted events per video");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    if (g_json) {
      return report({kUsage, "Usage", e.what()});
    }
    app.exit(e);
    return kUsage;
  }

  try {
    EngineConfig cfg;
    try {
      cfg = resolve_config(config_path ? std::optional<fs::path>(*config_path) : std::nullopt);
      if (alpha) cfg.temporal.alpha = *alpha;
      if (beam) cfg.temporal.beam_width = *beam;
      if (top_m) cfg.temporal.per_event_top_m = *top_m;
      if (max_seq) cfg.temporal.max_sequences = *max_seq;
      validate(cfg);
    } catch (const ConfigError& e) {
      return report({kUsage, "Config", e.what()});
    }

    if (*ingest) {
      const fs::path path = fs::absolute(manifest);
      auto store = ingest_manifest(path);
      fs::create_directories(state_file().parent_path());
      std::ofstream(state_file(), std::ios::trunc) << path.string() << '\n';
      const json summary{{"manifest", path.string()},
                         {"videos", store->videos().size()},
                         {"shots", store->shots().size()},
                         {"keyframes", store->keyframes().size()},
                         {"ocr", store->ocr_docs().size()},
                         {"asr", store->asr_segments().size()}};
      if (g_json) {
        emit(summary);
      } else {
        std::cout << "ingested " << summary["keyframes"] << " keyframes from " << summary["videos"] << " videos\n";
      }
      return kOk;
    }

    if (*gen) {
      const auto gc = gen_corpus(seed, videos, events);
      const auto path = write_generated(gc, out_dir);
      if (g_json) {
        emit({{"manifest", path.string()}, {"keyframes", gc.data.keyframes.size()}, {"targets", gc.truth.targets.size()}});
      } else {
        std::cout << "wrote " << path.string() << " (" << gc.data.keyframes.size() << " keyframes)\n";
      }
      return kOk;
    }

    Engine engine(cfg);

    if (*search) {
      SearchRequest req;
      req.query = query;
      req.mode = mode == "manual" ? SearchMode::Manual : SearchMode::Auto;
      if (weights) {
        req.manual_weights = parse_weights(*weights);
      }
      if (req.mode == SearchMode::Manual && !req.manual_weights) {
        return report({kUsage, "Usage", "--mode manual requires --weights"});
      }
      req.top_k = top_k;
      req.rerank = !no_rerank;
      load_active(engine);
      const auto resp = engine.search(req);
      g_json ? emit(serialize::to_json(resp)) : print_search(resp);
      return kOk;
    }

    if (*temporal) {
      TemporalRequest req;
      req.query = tquery;
      req.rerank = !no_rerank;
      load_active(engine);
      const auto resp = engine.temporal(req);
      g_json ? emit(serialize::to_json(resp)) : print_temporal(resp);
      return kOk;
    }

    if (*serve) {
      const auto colon = addr.rfind(':');
      if (colon == std::string::npos) {
        return report({kUsage, "Usage", "--addr must be host:port"});
      }
      const std::string host = addr.substr(0, colon);
      int port = 0;
      try {
        port = std::stoi(addr.substr(colon + 1));
      } catch (const std::exception&) {
        return report({kUsage, "Usage", "--addr must be host:port"});
      }
      if (active_manifest()) {
        load_active(engine);
      }
      Service service(engine, static_dir ? std::optional<fs::path>(*static_dir) : std::nullopt);
      const int bound = service.bind(host, port);
      std::cerr << "listening on " << host << ':' << bound << '\n';
      service.run();
      return kOk;
    }

    if (*eval) {
      const auto gc = gen_corpus(seed, videos, events);
      engine.load(CorpusStore::build(gc.data));
      const auto rep = run_eval(engine, gc.truth);
      emit(to_json(rep));
      return kOk;
    }
  } catch (const CLI::ValidationError& e) {
    return report({kUsage, "Usage", e.what()});
  } catch (const CorpusError& e) {
    return report({kCorpus, std::string(CorpusError::kind_name(e.kind())), e.what()});
  } catch (const EngineError& e) {
    switch (e.kind()) {
      case EngineError::Kind::NoCorpus:
        return report({kCorpus, "NoCorpus", e.what()});
      case EngineError::Kind::NotFound:
        return report({kNotFound, "NotFound", e.what()});
      case EngineError::Kind::InvalidRequest:
        return report({kUsage, "InvalidRequest", e.what()});
      case EngineError::Kind::Upstream:
        return report({kInternal, "Upstream", e.what()});
    }
  } catch (const std::exception& e) {
    return report({kInternal, "Internal", e.what()});
  }
  return kInternal;
}
