// simtutor: population simulator and HTTP tutor service.
//
//   simtutor run     --kb data/sample_kb.json --policy adaptive --learners 500 --seed 7
//   simtutor compare --kb data/sample_kb.json --learners 500 --seed 7 [--bonus 0]
//   simtutor serve   --kb data/sample_kb.json --port 8080
//
// Exit codes: 0 ok, 1 runtime failure, 2 bad configuration or input.

#include <simtutor/http.hpp>
#include <simtutor/simtutor.hpp>

#include <CLI11.hpp>

#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace simtutor;

constexpr int kExitConfig = 2;

std::shared_ptr<const KnowledgeBase> load_kb(const std::string& path) {
  return std::make_shared<const KnowledgeBase>(load_knowledge_base_file(path));
}

void emit(const json& doc, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << doc.dump(2) << '\n';
    return;
  }
  std::ofstream f(out);
  if (!f) throw Error(ErrorCode::Config, "cannot write " + out);
  f << doc.dump(2) << '\n';
}

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : std::move(fallback);
}

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive tutoring engine: simulator and HTTP service"};
  app.require_subcommand(1);

  std::string kb_path = "data/sample_kb.json";
  std::string config_path;
  std::string out_path;
  std::size_t learners = 500;
  std::uint64_t seed = 20121;
  std::optional<double> bonus;
  std::optional<unsigned> threads;

  auto add_sim_options = [&](CLI::App* cmd) {
    cmd->add_option("--kb", kb_path, "knowledge base JSON")->capture_default_str();
    cmd->add_option("--config", config_path, "simulator config JSON");
    cmd->add_option("--learners,-n", learners, "population size")->capture_default_str();
    cmd->add_option("--seed", seed, "population seed")->capture_default_str();
    cmd->add_option("--bonus", bonus, "override method_match_bonus");
    cmd->add_option("--threads", threads, "worker threads (0: all cores)");
    cmd->add_option("--out,-o", out_path, "report path (default stdout)");
  };

  auto* run = app.add_subcommand("run", "simulate one policy over a synthetic population");
  std::string policy_name = "adaptive";
  add_sim_options(run);
  run->add_option("--policy", policy_name, "adaptive | static")
      ->check(CLI::IsMember({"adaptive", "static"}))
      ->capture_default_str();

  auto* compare = app.add_subcommand("compare", "paired adaptive vs static comparison");
  add_sim_options(compare);

  auto* serve = app.add_subcommand("serve", "run the HTTP tutor service");
  std::string bind = env_or("SIMTUTOR_BIND", "127.0.0.1");
  int port = std::stoi(env_or("SIMTUTOR_PORT", "8080"));
  std::string serve_kb = env_or("SIMTUTOR_KB", "data/sample_kb.json");
  std::string pedagogy_path = env_or("SIMTUTOR_PEDAGOGY", "");
  std::string questionnaire_path = env_or("SIMTUTOR_QUESTIONNAIRE", "data/questionnaire.json");
  std::string data_dir = env_or("SIMTUTOR_DATA", "var/learners");
  std::int64_t ttl = std::stoll(env_or("SIMTUTOR_TOKEN_TTL", "3600"));
  bool static_policy = false;
  serve->add_option("--bind", bind)->capture_default_str();
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--kb", serve_kb)->capture_default_str();
  serve->add_option("--pedagogy", pedagogy_path, "pedagogy config JSON (default: built-in)");
  serve->add_option("--questionnaire", questionnaire_path)->capture_default_str();
  serve->add_option("--data", data_dir, "learner record directory")->capture_default_str();
  serve->add_option("--token-ttl", ttl, "token lifetime in seconds")->capture_default_str();
  serve->add_flag("--static", static_policy, "serve the non-adaptive baseline");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run || *compare) {
      auto kb = load_kb(kb_path);
      SimConfig cfg = config_path.empty() ? SimConfig{} : load_sim_config_file(config_path);
      if (bonus) cfg.method_match_bonus = *bonus;
      if (threads) cfg.threads = *threads;
      if (*run) {
        auto report = simulate_population(kb, learners, seed, *parse_policy(policy_name), cfg);
        emit(to_json(report), out_path);
      } else {
        emit(to_json(compare_policies(kb, learners, seed, cfg)), out_path);
      }
      return 0;
    }

    auto kb = load_kb(serve_kb);
    PedagogyConfig pedagogy =
        pedagogy_path.empty() ? PedagogyConfig{} : load_pedagogy_config_file(pedagogy_path);
    if (static_policy) pedagogy.fixed_presentation = EducationMethod::Text;
    auto questionnaire = load_questionnaire_file(questionnaire_path);
    TutorService service(kb, pedagogy, questionnaire, ServiceConfig{data_dir, ttl});
    httplib::Server server;
    mount_api(server, service);
    g_server = &server;
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::cerr << "listening on http://" << bind << ':' << port << '\n';
    if (!server.listen(bind, port)) {
      std::cerr << "error: cannot listen on " << bind << ':' << port << '\n';
      return 1;
    }
    return 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    for (const auto& v : e.violations()) std::cerr << "  " << v.path << ": " << v.message << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << '\n';
    switch (e.code()) {
      case ErrorCode::Config:
      case ErrorCode::Parse:
      case ErrorCode::Validation:
      case ErrorCode::NotFound:
        return kExitConfig;
      default:
        return 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
