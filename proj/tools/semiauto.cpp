// Command-line front end: serve, replay, simulate, analyze, client, config.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "semiauto/analytics.hpp"
#include "semiauto/client.hpp"
#include "semiauto/config.hpp"
#include "semiauto/error.hpp"
#include "semiauto/metrics.hpp"
#include "semiauto/oracle.hpp"
#include "semiauto/server.hpp"
#include "semiauto/session.hpp"
#include "semiauto/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace semiauto;

namespace {

server::SessionServer* g_server = nullptr;

void handle_signal(int) {
  if (g_server) g_server->stop();
}

semiauto::Config config_or_default(const std::string& path) {
  return path.empty() ? semiauto::Config{} : load_config(path);
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::vector<fs::path> log_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

int run_serve(const std::string& config_path, std::uint16_t port, const std::string& address,
              const std::string& log_dir) {
  server::ServerOptions options;
  options.config = config_or_default(config_path);
  options.port = port;
  options.address = address;
  options.log_dir = log_dir;
  server::SessionServer srv(std::move(options));
  srv.start();
  g_server = &srv;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  std::cout << "listening on " << address << ":" << srv.port() << std::endl;
  srv.run();
  g_server = nullptr;
  return 0;
}

int run_replay(const std::string& log_path, bool verify) {
  const auto log = read_log_file(log_path);
  ordered_json out;
  out["session_id"] = log.session_id;
  out["events"] = log.events.size();
  if (verify) {
    const auto result = append_and_replay(log);
    const bool byte_exact = serialize_log(result.log) == serialize_log(log);
    const auto oracle = sim::oracle_scan(log, log.config_snapshot.detector);
    const bool oracle_agrees = oracle == sim::recorded_prompts(log);
    out["final_mode"] = to_string(result.state.mode);
    out["byte_exact"] = byte_exact;
    out["oracle_agrees"] = oracle_agrees;
    out["metrics"] = sim::to_json(sim::compute_metrics(result.log));
    std::cout << out.dump(2) << std::endl;
    return byte_exact && oracle_agrees ? 0 : 1;
  }
  check_log_integrity(log);
  out["metrics"] = sim::to_json(sim::compute_metrics(log));
  std::cout << out.dump(2) << std::endl;
  return 0;
}

int run_simulate(const std::string& script_path, const std::string& config_path,
                 const std::string& out_path, std::size_t fuzz, std::uint64_t seed) {
  const auto config = config_or_default(config_path);
  if (fuzz == 0) {
    if (script_path.empty()) throw std::runtime_error("--script or --fuzz is required");
    const auto log = sim::run_script(sim::read_script_file(script_path), config);
    if (out_path.empty()) {
      std::cout << serialize_log(log);
    } else {
      write_log_file(out_path, log);
    }
    return 0;
  }
  if (out_path.empty()) throw std::runtime_error("--out names a directory in fuzz mode");
  const fs::path dir = out_path;
  fs::create_directories(dir);
  ordered_json manifest = ordered_json::array();
  for (std::size_t i = 0; i < fuzz; ++i) {
    auto script = sim::generate_script(seed + i);
    const auto log = sim::run_script(script, config);
    write_log_file(dir / (log.session_id + ".jsonl"), log);
    manifest.push_back({{"session_id", log.session_id}, {"seed", seed + i}});
  }
  write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  std::cout << "wrote " << fuzz << " sessions to " << dir.string() << std::endl;
  return 0;
}

int run_analyze(const std::string& logs_dir, const std::string& ratings_path,
                const std::string& schema_path, const std::string& out_path) {
  std::vector<SessionLog> logs;
  std::vector<sim::SessionMetrics> metrics;
  for (const auto& file : log_files(logs_dir)) {
    logs.push_back(read_log_file(file));
    metrics.push_back(sim::compute_metrics(logs.back()));
  }
  ordered_json out;
  out["summary"] = sim::to_json(sim::summarize(metrics));
  out["sessions"] = ordered_json::array();
  for (const auto& m : metrics) out["sessions"].push_back(sim::to_json(m));
  if (!ratings_path.empty()) {
    const auto schema =
        schema_path.empty() ? analytics::default_schema() : analytics::load_schema(schema_path);
    const auto ratings = analytics::load_ratings_csv(ratings_path);
    const auto report = analytics::takeover_correlation_report(logs, ratings, schema);
    out["correlations"] = analytics::report_to_json(report);
    std::cout << analytics::report_to_text(report);
  }
  if (out_path.empty()) {
    std::cout << out.dump(2) << std::endl;
  } else {
    write_text(out_path, out.dump(2) + "\n");
  }
  return 0;
}

// Frames typed on stdin, one per line: either a whole frame or
// "<type> <json body>". Incoming frames are printed as they arrive.
int run_client(const std::string& host, std::uint16_t port, const std::string& session,
               const std::string& endpoint_name, int linger_ms) {
  const auto endpoint =
      endpoint_name == "operator" ? wire::Endpoint::kOperator : wire::Endpoint::kUser;
  client::WireClient c(host, port, session, endpoint);
  auto drain = [&](int ms) {
    while (auto m = c.receive(std::chrono::milliseconds(ms))) {
      std::cout << wire::encode(*m) << std::endl;
    }
  };
  drain(100);
  std::string line;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    if (line.front() == '{') {
      auto m = wire::decode(line);
      m.session_id = session;
      c.send(m);
    } else {
      const auto space = line.find(' ');
      const std::string type = line.substr(0, space);
      auto body = space == std::string::npos ? ordered_json::object()
                                             : ordered_json::parse(line.substr(space + 1));
      c.send(type, body);
    }
    drain(100);
  }
  drain(linger_ms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Semi-autonomous attentive listening sessions"};
  app.require_subcommand(1);

  std::string config_path, log_dir = "logs", address = "127.0.0.1";
  std::uint16_t port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the WebSocket session server");
  serve->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  serve->add_option("--port", port, "TCP port (0 picks one)");
  serve->add_option("--address", address, "Listen address");
  serve->add_option("--log-dir", log_dir, "Directory for session logs");

  std::string log_path;
  bool verify = false;
  auto* replay = app.add_subcommand("replay", "Replay a session log");
  replay->add_option("--log", log_path, "Session log")->required()->check(CLI::ExistingFile);
  replay->add_flag("--verify", verify, "Regenerate every output and compare");

  std::string script_path, out_path;
  std::size_t fuzz = 0;
  std::uint64_t seed = 1;
  auto* simulate = app.add_subcommand("simulate", "Run a script under a virtual clock");
  simulate->add_option("--script", script_path, "Script JSONL")->check(CLI::ExistingFile);
  simulate->add_option("--config", config_path, "Config JSON")->check(CLI::ExistingFile);
  simulate->add_option("--out", out_path, "Log file, or directory with --fuzz");
  simulate->add_option("--fuzz", fuzz, "Generate this many random sessions");
  simulate->add_option("--seed", seed, "First fuzz seed");

  std::string logs_dir, ratings_path, schema_path;
  auto* analyze = app.add_subcommand("analyze", "Corpus metrics and correlations");
  analyze->add_option("--logs", logs_dir, "Directory of session logs")
      ->required()
      ->check(CLI::ExistingDirectory);
  analyze->add_option("--ratings", ratings_path, "Ratings CSV")->check(CLI::ExistingFile);
  analyze->add_option("--schema", schema_path, "Measure schema JSON")->check(CLI::ExistingFile);
  analyze->add_option("--out", out_path, "Report JSON");

  std::string host = "127.0.0.1", session, endpoint = "user";
  int linger_ms = 500;
  auto* cli = app.add_subcommand("client", "Line-oriented WebSocket client");
  cli->add_option("--host", host);
  cli->add_option("--port", port)->required();
  cli->add_option("--session", session)->required();
  cli->add_option("--endpoint", endpoint)->check(CLI::IsMember({"user", "operator"}));
  cli->add_option("--linger-ms", linger_ms, "Time to keep reading after stdin ends");

  auto* config_cmd = app.add_subcommand("config", "Print the defaults, or validate a config");
  config_cmd->add_option("--check", config_path, "Config JSON to validate and normalize")
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*serve) return run_serve(config_path, port, address, log_dir);
    if (*replay) return run_replay(log_path, verify);
    if (*simulate) return run_simulate(script_path, config_path, out_path, fuzz, seed);
    if (*analyze) return run_analyze(logs_dir, ratings_path, schema_path, out_path);
    if (*cli) return run_client(host, port, session, endpoint, linger_ms);
    if (*config_cmd) {
      std::cout << config_to_json(config_or_default(config_path)).dump(2) << std::endl;
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_code_name(e.code()) << "]: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
